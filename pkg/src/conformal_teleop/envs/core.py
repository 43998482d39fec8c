"""Desk-scale environments and trajectory datasets.

Two environment families: a 25x25 gridworld with obstacle masks, and a
3-link planar arm whose joint angles integrate per-step deltas. States are
rescaled into network units by ``features`` so the tanh bottleneck never sees
raw grid coordinates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..regressor import LabeledTriple

GRID_SIZE = 25
GRID_MAX = GRID_SIZE - 1


@dataclass(frozen=True)
class GridEnv:
    name: str
    n_u: int
    obstacles: frozenset
    goal: tuple[int, int]
    start: tuple[int, int]

    n_s = 2
    n_a = 2
    state_scale = float(GRID_MAX)
    input_step_ref = 1.0
    kind = "grid"

    def step(self, state, action) -> np.ndarray:
        """Clipped move; a step landing on an obstacle cell is rejected.

        Accepts continuous actions so a live session can drive with raw
        controller outputs; generated datasets stay on the integer lattice.
        """
        state = np.asarray(state, dtype=float)
        proposed = np.clip(state + np.asarray(action, dtype=float), 0.0, float(GRID_MAX))
        cell = (int(round(proposed[0])), int(round(proposed[1])))
        if cell in self.obstacles:
            return state.copy()
        return proposed

    def norm_state(self, state) -> np.ndarray:
        """Grid coordinates are rescaled into [0, 1]^2 for the network."""
        return np.asarray(state, dtype=float) / self.state_scale

    def features(self, state, low_input) -> np.ndarray:
        return np.concatenate([self.norm_state(state),
                               np.atleast_1d(np.asarray(low_input, dtype=float))])

    def start_state(self, seed: int = 0) -> np.ndarray:
        return np.asarray(self.start, dtype=float)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n_s": self.n_s,
            "n_u": self.n_u,
            "n_a": self.n_a,
            "grid_size": GRID_SIZE,
            "goal": list(self.goal),
            "start": list(self.start),
            "obstacles": sorted(list(c) for c in self.obstacles),
        }


def wrap_angles(theta: np.ndarray) -> np.ndarray:
    """Wrap to [-pi, pi); values already in range pass through bit-identically."""
    theta = np.array(theta, dtype=float, copy=True)
    out = (theta < -math.pi) | (theta >= math.pi)
    if np.any(out):
        theta[out] = (theta[out] + math.pi) % (2.0 * math.pi) - math.pi
    return theta


@dataclass(frozen=True)
class ArmEnv:
    name: str
    link_lengths: tuple[float, float, float]
    goals: dict
    home: tuple[float, float, float]

    n_s = 3
    n_u = 2
    n_a = 3
    state_scale = 1.0
    input_step_ref = 0.08
    kind = "arm"

    def step(self, state, action) -> np.ndarray:
        return wrap_angles(np.asarray(state, dtype=float) + np.asarray(action, dtype=float))

    def norm_state(self, state) -> np.ndarray:
        return np.asarray(state, dtype=float)

    def features(self, state, low_input) -> np.ndarray:
        return np.concatenate([self.norm_state(state),
                               np.atleast_1d(np.asarray(low_input, dtype=float))])

    def start_state(self, seed: int = 0) -> np.ndarray:
        return np.asarray(self.home, dtype=float)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n_s": self.n_s,
            "n_u": self.n_u,
            "n_a": self.n_a,
            "link_lengths": list(self.link_lengths),
            "goals": {k: list(v) for k, v in self.goals.items()},
            "home": list(self.home),
        }


@dataclass
class Trajectory:
    """states[t+1] = env.step(states[t], actions[t]); inputs align with actions."""

    states: np.ndarray
    inputs: np.ndarray
    actions: np.ndarray

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.inputs = np.asarray(self.inputs, dtype=float)
        self.actions = np.asarray(self.actions, dtype=float)
        if len(self.states) != len(self.actions) + 1:
            raise ValueError("need one more state than actions")
        if len(self.inputs) != len(self.actions):
            raise ValueError("inputs must align one-to-one with actions")

    def __len__(self) -> int:
        return len(self.actions)

    def triples(self):
        for t in range(len(self.actions)):
            yield LabeledTriple(self.states[t], self.inputs[t], self.actions[t])


@dataclass
class ScenarioDataset:
    env: object
    scenario: str
    profile: str
    scheme: str
    seed: int
    trajectories: list[Trajectory] = field(default_factory=list)

    def n_steps(self) -> int:
        return sum(len(tr) for tr in self.trajectories)

    def triples(self):
        for tr in self.trajectories:
            yield from tr.triples()

    def to_training_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Stack (features, action) rows across all trajectories."""
        xs, ys = [], []
        for tr in self.trajectories:
            for t in range(len(tr)):
                xs.append(self.env.features(tr.states[t], tr.inputs[t]))
                ys.append(tr.actions[t])
        return np.asarray(xs), np.asarray(ys)

    def replay_ok(self) -> bool:
        """Re-run every action through the dynamics and compare states exactly."""
        for tr in self.trajectories:
            s = tr.states[0].copy()
            for t in range(len(tr)):
                s = self.env.step(s, tr.actions[t])
                if not np.array_equal(s, tr.states[t + 1]):
                    return False
        return True


def save_jsonl(dataset: ScenarioDataset, path) -> None:
    """One trajectory per line; floats keep round-trip precision."""
    with open(path, "w") as fh:
        for tr in dataset.trajectories:
            line = {
                "env": dataset.env.name,
                "scenario": dataset.scenario,
                "profile": dataset.profile,
                "scheme": dataset.scheme,
                "seed": dataset.seed,
                "states": tr.states.tolist(),
                "inputs": tr.inputs.tolist(),
                "actions": tr.actions.tolist(),
            }
            fh.write(json.dumps(line, sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def load_jsonl(path, env_resolver) -> ScenarioDataset:
    """Read a trajectory file back; ``env_resolver`` maps env name -> env."""
    trajectories = []
    header = None
    with open(path) as fh:
        for raw in fh:
            raw = raw.strip()
            if not raw:
                continue
            line = json.loads(raw)
            if header is None:
                header = line
            trajectories.append(Trajectory(
                states=np.asarray(line["states"], dtype=float),
                inputs=np.asarray(line["inputs"], dtype=float),
                actions=np.asarray(line["actions"], dtype=float),
            ))
    if header is None:
        raise ValueError(f"{path} contains no trajectories")
    return ScenarioDataset(
        env=env_resolver(header["env"]),
        scenario=header["scenario"],
        profile=header["profile"],
        scheme=header["scheme"],
        seed=int(header["seed"]),
        trajectories=trajectories,
    )

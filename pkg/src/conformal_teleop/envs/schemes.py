"""Low-dimensional input labeling schemes.

A scheme turns per-step displacement of the controlled point (end effector
for the arm, the cell itself for the grid) into the 2-D "joystick" label a
user would have given: optionally rotated, gain-scaled, and noised. The
heuristic_xy scheme with unit gain and no rotation/noise is the in-distribution
labeling the controllers are trained on; the others form an increasingly
out-of-distribution ladder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Xoshiro256
from .arm import arm_fk
from .core import ArmEnv, Trajectory


@dataclass(frozen=True)
class InputScheme:
    name: str
    rotation_deg: float = 0.0
    noise_sigma: float = 0.0
    gain: float = 1.0


SCHEMES = {
    "heuristic_xy": InputScheme("heuristic_xy"),
    # Planar stand-in for labeling with an alternative displacement heuristic:
    # deterministic, mildly rotated extraction axes.
    "heuristic_zy_analog": InputScheme("heuristic_zy_analog", rotation_deg=10.0),
    "noisy_human_1": InputScheme("noisy_human_1", rotation_deg=15.0, noise_sigma=0.02, gain=1.0),
    "noisy_human_2": InputScheme("noisy_human_2", rotation_deg=35.0, noise_sigma=0.05, gain=0.8),
    "noisy_human_3": InputScheme("noisy_human_3", rotation_deg=60.0, noise_sigma=0.1, gain=1.3),
}

# H* -> H4: the simulated analog of an increasingly OOD population of users.
SCHEME_LADDER = ["heuristic_xy", "heuristic_zy_analog",
                 "noisy_human_1", "noisy_human_2", "noisy_human_3"]


def noisy_human(k: int) -> InputScheme:
    """k-th simulated human (1-based); larger k is more out-of-distribution."""
    return SCHEMES[f"noisy_human_{k}"]


def scheme_by_name(name: str) -> InputScheme:
    if name not in SCHEMES:
        raise KeyError(f"unknown input scheme '{name}'")
    return SCHEMES[name]


def _rotation(deg: float) -> np.ndarray:
    rad = math.radians(deg)
    c, s = math.cos(rad), math.sin(rad)
    return np.array([[c, -s], [s, c]])


def _displacements(trajectory: Trajectory, env) -> np.ndarray:
    """Per-step (dx, dy) of the controlled point, in env step-reference units."""
    states = trajectory.states
    if isinstance(env, ArmEnv):
        points = np.asarray([arm_fk(s, env.link_lengths) for s in states])
    else:
        points = states
    return (points[1:] - points[:-1]) / env.input_step_ref


def label_lowdim(trajectory: Trajectory, scheme: InputScheme, seed: int, env) -> np.ndarray:
    """Labels for every step of a trajectory under one scheme; seeded noise."""
    if len(trajectory.states) < 2:
        raise ValueError("trajectory must contain at least one step")
    base = _displacements(trajectory, env)
    rot = _rotation(scheme.rotation_deg)
    labels = (rot @ base.T).T * scheme.gain
    if scheme.noise_sigma > 0.0:
        rng = Xoshiro256(seed)
        noise = np.array([[rng.normal(0.0, scheme.noise_sigma) for _ in range(2)]
                          for _ in range(len(labels))])
        labels = labels + noise
    return labels


def relabel_dataset(dataset, scheme: InputScheme, seed: int):
    """Copy of a dataset with every trajectory's inputs replaced by scheme labels."""
    from .core import ScenarioDataset  # local import avoids a cycle at module load

    relabeled = []
    for i, tr in enumerate(dataset.trajectories):
        labels = label_lowdim(tr, scheme, seed + i, dataset.env)
        relabeled.append(Trajectory(states=tr.states.copy(), inputs=labels,
                                    actions=tr.actions.copy()))
    return ScenarioDataset(env=dataset.env, scenario=dataset.scenario,
                           profile=dataset.profile, scheme=scheme.name,
                           seed=seed, trajectories=relabeled)

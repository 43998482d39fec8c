"""Scenario catalog: the declared layouts, sizes, and monitor thresholds.

Every runnable scenario is declared here rather than scattered through the
pipeline: which generator builds the training set, which calibration profiles
exist for it, and the default uncertainty threshold for its monitor. Seeds
passed in are split so train and calibration draws never share a stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import arm, grid, schemes
from .core import ScenarioDataset, load_jsonl


@dataclass(frozen=True)
class ScenarioEntry:
    scenario_id: str
    description: str
    default_beta: float
    env_factory: object
    train: object              # callable(seed) -> ScenarioDataset
    calib: dict = field(default_factory=dict)  # profile -> callable(seed)

    def calib_profiles(self) -> list[str]:
        return list(self.calib)

    def gen_train(self, seed: int) -> ScenarioDataset:
        return self.train(seed)

    def gen_calib(self, profile: str, seed: int) -> ScenarioDataset:
        if profile not in self.calib:
            raise KeyError(f"scenario '{self.scenario_id}' has no calibration profile '{profile}'")
        # Disjoint trajectory-level split: calibration draws come from a
        # separate stream derived from the same seed.
        return self.calib[profile](seed * 7919 + 1)


def _arm_goal_scheme_calib(scheme_name: str):
    def gen(seed: int) -> ScenarioDataset:
        base = arm.gen_arm_goal(6, goals=("blue",), profile="near_expert", seed=seed)
        return schemes.relabel_dataset(base, schemes.scheme_by_name(scheme_name), seed)
    return gen


def _arm_goal_profile_calib(profile: str):
    def gen(seed: int) -> ScenarioDataset:
        base = arm.gen_arm_goal(6, goals=("blue", "red"), profile=profile, seed=seed)
        return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)
    return gen


def _arm_goal_train(seed: int) -> ScenarioDataset:
    base = arm.gen_arm_goal(60, goals=("blue", "red"), profile="expert_direct", seed=seed)
    return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)


def _arm_grasp_train(seed: int) -> ScenarioDataset:
    base = arm.gen_arm_grasp(7, modes=("handle", "lip"), seed=seed)
    return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)


def _arm_grasp_calib(seed: int) -> ScenarioDataset:
    base = arm.gen_arm_grasp(3, modes=("lip",), seed=seed)
    return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)


def _arm_grasp_precision_train(seed: int) -> ScenarioDataset:
    base = arm.gen_arm_grasp(7, modes=("handle",), seed=seed, profile="low_precision")
    return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)


def _arm_grasp_precision_calib(seed: int) -> ScenarioDataset:
    base = arm.gen_arm_grasp(3, modes=("handle",), seed=seed, profile="low_precision")
    return schemes.relabel_dataset(base, schemes.SCHEMES["heuristic_xy"], seed)


GRID_PRECISION_SIGMA = 0.55

_LADDER_CALIB = {f"scheme:{name}": _arm_goal_scheme_calib(name)
                 for name in schemes.SCHEME_LADDER}

SCENARIOS = {
    "grid-preference": ScenarioEntry(
        scenario_id="grid-preference",
        description="25x25 grid, hallway then obstacle passed above or below; constant input",
        default_beta=1.5,
        env_factory=grid.preference_env,
        train=lambda seed: grid.gen_grid_preference(24, seed),
        calib={
            "alice-up": lambda seed: grid.gen_grid_preference(18, seed, modes=("up",)),
            "bob-down": lambda seed: grid.gen_grid_preference(18, seed, modes=("down",)),
        },
    ),
    "grid-precision": ScenarioEntry(
        scenario_id="grid-precision",
        description="25x25 grid, noisy open approach into a deterministic tunnel",
        default_beta=1.0,
        env_factory=grid.precision_env,
        train=lambda seed: grid.gen_grid_precision(60, GRID_PRECISION_SIGMA, seed),
        calib={
            "standard": lambda seed: grid.gen_grid_precision(36, GRID_PRECISION_SIGMA, seed),
            "indirect": lambda seed: grid.gen_grid_precision(
                36, GRID_PRECISION_SIGMA, seed, noise_scale=2.2, flip_prob=0.25),
        },
    ),
    "arm-goal": ScenarioEntry(
        scenario_id="arm-goal",
        description="3-link planar arm reaching one of two goals; end-effector xy labels",
        default_beta=0.05,
        env_factory=arm.make_env,
        train=_arm_goal_train,
        calib={
            "alice": _arm_goal_profile_calib("near_expert"),
            "bob": _arm_goal_profile_calib("indirect"),
            **_LADDER_CALIB,
        },
    ),
    "arm-grasp": ScenarioEntry(
        scenario_id="arm-grasp",
        description="3-link arm grasping a cup at the handle or the lip",
        default_beta=0.15,
        env_factory=arm.make_env,
        train=_arm_grasp_train,
        calib={"alice-lip": _arm_grasp_calib},
    ),
    "arm-grasp-precision": ScenarioEntry(
        scenario_id="arm-grasp-precision",
        description="single-user handle grasps, precise near the handle only",
        default_beta=0.12,
        env_factory=arm.make_env,
        train=_arm_grasp_precision_train,
        calib={"same-user": _arm_grasp_precision_calib},
    ),
}

# Monitor threshold used for the simulated-human ladder (raised for noisy inputs).
BETA_GOAL_HUMAN = 0.2


def get_scenario(scenario_id: str) -> ScenarioEntry:
    if scenario_id not in SCENARIOS:
        raise KeyError(f"unknown scenario '{scenario_id}'; known: {sorted(SCENARIOS)}")
    return SCENARIOS[scenario_id]


def make_env(env_name: str):
    for entry in SCENARIOS.values():
        env = entry.env_factory()
        if env.name == env_name:
            return env
    raise KeyError(f"no environment named '{env_name}'")


def load_dataset(path) -> ScenarioDataset:
    return load_jsonl(path, make_env)


def describe_catalog() -> list[dict]:
    out = []
    for entry in SCENARIOS.values():
        env = entry.env_factory()
        out.append({
            "id": entry.scenario_id,
            "description": entry.description,
            "default_beta": entry.default_beta,
            "env": env.describe(),
            "calib_profiles": entry.calib_profiles(),
        })
    return out

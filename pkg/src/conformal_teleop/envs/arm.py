"""Planar 3-link arm scenarios.

Joint-space trajectories are produced by damped-least-squares steps of the
end effector toward a target point, with profile-specific detours and jitter.
Actions are per-step joint deltas, so states replay exactly by accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Xoshiro256
from .core import ArmEnv, ScenarioDataset, Trajectory

LINK_LENGTHS = (1.0, 0.8, 0.6)
GOALS = {"red": (1.5, 0.9), "blue": (1.5, -0.9)}
GRASP_TARGETS = {"handle": (1.45, -0.25), "lip": (1.55, 0.3)}
# Characteristic approach configurations; the redundant direction settles here.
GRASP_POSTURES = {
    "handle": (-1.028, 1.053, 1.325),
    "lip": (-0.655, 1.051, 1.145),
}
HOME = (0.5, 0.8, 0.6)

EE_STEP = 0.08
GOAL_TOL = 0.045
MAX_STEPS = 160
DLS_DAMPING = 0.1


class GenerationError(RuntimeError):
    """A requested trajectory could not be produced (e.g. unreachable goal)."""


@dataclass
class UserProfile:
    """Path-generation style: jitter, detours, and optional goal preference."""

    name: str
    action_noise: float = 0.0
    detour_amplitude: float = 0.0
    distance_scaled_noise: bool = False
    goal_preference: str | None = None


PROFILES = {
    "expert_direct": UserProfile("expert_direct"),
    # Live users re-demonstrating a task are close to expert but not exact.
    "near_expert": UserProfile("near_expert", action_noise=0.01),
    "indirect": UserProfile("indirect", action_noise=0.015, detour_amplitude=0.12),
    "low_precision": UserProfile("low_precision", action_noise=0.06, distance_scaled_noise=True),
}


def make_env(name: str = "arm3") -> ArmEnv:
    return ArmEnv(name=name, link_lengths=LINK_LENGTHS, goals=dict(GOALS), home=HOME)


def arm_fk(joint_angles, link_lengths=LINK_LENGTHS) -> tuple[float, float]:
    """End-effector position of the cumulative-angle planar chain."""
    theta = np.asarray(joint_angles, dtype=float)
    if theta.shape != (len(link_lengths),):
        raise ValueError(f"expected {len(link_lengths)} joint angles, got shape {theta.shape}")
    angles = np.cumsum(theta)
    x = float(np.sum(link_lengths * np.cos(angles)))
    y = float(np.sum(link_lengths * np.sin(angles)))
    return x, y


def arm_jacobian(joint_angles, link_lengths=LINK_LENGTHS) -> np.ndarray:
    theta = np.asarray(joint_angles, dtype=float)
    angles = np.cumsum(theta)
    sins = link_lengths * np.sin(angles)
    coss = link_lengths * np.cos(angles)
    jac = np.empty((2, len(link_lengths)))
    for j in range(len(link_lengths)):
        jac[0, j] = -np.sum(sins[j:])
        jac[1, j] = np.sum(coss[j:])
    return jac


def dls_joint_step(theta: np.ndarray, target, ee_step: float = EE_STEP,
                   posture: np.ndarray | None = None, posture_gain: float = 0.2) -> np.ndarray:
    """Damped-least-squares joint delta moving the end effector toward target.

    With a ``posture`` reference, the redundant direction is biased toward it
    through the null-space projector, so trajectories settle into a
    characteristic final configuration instead of an arbitrary one.
    """
    px, py = arm_fk(theta)
    err = np.asarray(target, dtype=float) - np.array([px, py])
    dist = float(np.linalg.norm(err))
    if dist > ee_step:
        err = err * (ee_step / dist)
    jac = arm_jacobian(theta)
    jjt = jac @ jac.T + (DLS_DAMPING ** 2) * np.eye(2)
    pinv = jac.T @ np.linalg.inv(jjt)
    delta = pinv @ err
    if posture is not None:
        null_proj = np.eye(3) - pinv @ jac
        delta = delta + posture_gain * (null_proj @ (np.asarray(posture) - theta))
    return delta


def jitter_sigma(profile: UserProfile, dist_to_target: float) -> float:
    """Per-step joint jitter scale; the precision profile decays it near the target."""
    if not profile.distance_scaled_noise:
        return profile.action_noise
    return profile.action_noise * min(1.0, dist_to_target / 0.8)


def _reach_target(theta: np.ndarray, target, rng: Xoshiro256, profile: UserProfile,
                  tol: float = GOAL_TOL, budget: int = MAX_STEPS,
                  posture: np.ndarray | None = None):
    """DLS walk to one end-effector target; yields joint actions."""
    actions = []
    for _ in range(budget):
        px, py = arm_fk(theta)
        dist = math.hypot(target[0] - px, target[1] - py)
        if dist <= tol:
            return theta, actions
        delta = dls_joint_step(theta, target, posture=posture)
        sigma = jitter_sigma(profile, dist)
        if sigma > 0.0:
            delta = delta + np.array([rng.normal(0.0, sigma) for _ in range(3)])
        theta = theta + delta
        actions.append(delta)
    raise GenerationError(f"end effector did not reach {tuple(target)} within {budget} steps")


def _check_reachable(target) -> None:
    reach = sum(LINK_LENGTHS)
    if math.hypot(*target) > reach - GOAL_TOL:
        raise GenerationError(f"goal {tuple(target)} outside the arm's reach ({reach:.2f})")


def _random_home(rng: Xoshiro256) -> np.ndarray:
    return np.asarray(HOME, dtype=float) + np.array([rng.uniform(-0.3, 0.3) for _ in range(3)])


def _clamp_reachable(point: np.ndarray, margin: float = 0.15) -> np.ndarray:
    reach = sum(LINK_LENGTHS) - margin
    norm = float(np.linalg.norm(point))
    if norm > reach:
        return point * (reach / norm)
    return point


def _trajectory_to(theta0: np.ndarray, target, rng: Xoshiro256,
                   profile: UserProfile, posture: np.ndarray | None = None) -> Trajectory:
    _check_reachable(target)
    theta = theta0.copy()
    all_actions = []
    if profile.detour_amplitude > 0.0:
        # Indirect users first back away from the goal before committing. The
        # detour leg itself is jitter-free so the excursion is a deliberate
        # full-size move away from the goal.
        px, py = arm_fk(theta)
        away = np.array([px, py]) - np.asarray(target, dtype=float)
        away = away / (np.linalg.norm(away) + 1e-12)
        side = np.array([-away[1], away[0]]) * (0.3 * rng.uniform(-1.0, 1.0))
        detour = _clamp_reachable(np.array([px, py]) + profile.detour_amplitude * (away + side))
        theta, actions = _reach_target(theta, detour, rng, PROFILES["expert_direct"], tol=0.03)
        all_actions.extend(actions)
    theta, actions = _reach_target(theta, target, rng, profile, posture=posture)
    all_actions.extend(actions)
    if not all_actions:
        # Degenerate start already at the goal: emit one explicit null step.
        all_actions = [np.zeros(3)]
    states = [theta0.copy()]
    for a in all_actions:
        states.append(states[-1] + a)
    return Trajectory(states=np.asarray(states), inputs=np.zeros((len(all_actions), 2)),
                      actions=np.asarray(all_actions))


def gen_arm_goal(n_per_goal: int, goals=("blue", "red"), profile: str = "expert_direct",
                 seed: int = 0) -> ScenarioDataset:
    """Goal-reaching demonstrations split across the requested goals.

    Inputs are left zeroed; the labeling schemes attach them afterwards.
    """
    if n_per_goal < 1:
        raise ValueError("n_per_goal must be >= 1")
    prof = PROFILES[profile]
    env = make_env()
    rng = Xoshiro256(seed)
    trajectories = []
    for goal_name in goals:
        target = GOALS[goal_name]
        for _ in range(n_per_goal):
            theta0 = _random_home(rng)
            trajectories.append(_trajectory_to(theta0, target, rng, prof))
    return ScenarioDataset(env=env, scenario="arm-goal", profile=profile,
                           scheme="unlabeled", seed=seed, trajectories=trajectories)


def gen_arm_grasp(n_per_mode: int, modes=("handle", "lip"), seed: int = 0,
                  profile: str = "expert_direct") -> ScenarioDataset:
    """Cup-grasp demonstrations approaching one object at two distinct poses."""
    if n_per_mode < 1:
        raise ValueError("n_per_mode must be >= 1")
    prof = PROFILES[profile]
    env = make_env()
    rng = Xoshiro256(seed)
    trajectories = []
    for mode in modes:
        target = GRASP_TARGETS[mode]
        posture = np.asarray(GRASP_POSTURES[mode])
        for _ in range(n_per_mode):
            theta0 = _random_home(rng)
            trajectories.append(_trajectory_to(theta0, target, rng, prof, posture=posture))
    return ScenarioDataset(env=env, scenario="arm-grasp", profile=profile,
                           scheme="unlabeled", seed=seed, trajectories=trajectories)

"""GridWorld scenario generators.

Two stylized navigation tasks on a 25x25 lattice. Both feed the controller a
constant scalar input (the salient "keep going" direction), so whatever
per-cell action variance the generator injects becomes genuine conditional
uncertainty for the learned mapping.

preference: a narrow hallway, then a large block obstacle passed either above
or below. Trajectories are noiseless; the two modes disagree only at the
branch cell where the detour starts.

precision: an open region approached with noisy steps, then a one-cell-wide
tunnel traversed deterministically.
"""

from __future__ import annotations

import numpy as np

from ..rng import Xoshiro256
from .core import GRID_MAX, GridEnv, ScenarioDataset, Trajectory

# preference layout
PREF_HALLWAY_X = range(1, 8)
PREF_HALLWAY_Y = 12
PREF_OBSTACLE = [(x, y) for x in range(10, 17) for y in range(9, 16)]
PREF_BRANCH = (8, 12)
PREF_GOAL = (24, 12)
PREF_START = (0, 12)
PREF_UP_Y = 17
PREF_DOWN_Y = 7
PREF_REJOIN_X = 18

# precision layout
PREC_TUNNEL_XS = range(14, 22)
PREC_TUNNEL_Y = 12
PREC_ENTRANCE = (14, 12)
PREC_GOAL = (24, 12)
PREC_NOISY_X_MAX = 12  # noise only while strictly left of this column
PREC_START_XS = (0, 9)
PREC_START_YS = (2, 22)


def preference_env() -> GridEnv:
    obstacles = {(x, PREF_HALLWAY_Y - 1) for x in PREF_HALLWAY_X}
    obstacles |= {(x, PREF_HALLWAY_Y + 1) for x in PREF_HALLWAY_X}
    obstacles |= set(PREF_OBSTACLE)
    return GridEnv(name="grid25-preference", n_u=1, obstacles=frozenset(obstacles),
                   goal=PREF_GOAL, start=PREF_START)


def precision_env() -> GridEnv:
    obstacles = {(x, PREC_TUNNEL_Y - 1) for x in PREC_TUNNEL_XS}
    obstacles |= {(x, PREC_TUNNEL_Y + 1) for x in PREC_TUNNEL_XS}
    return GridEnv(name="grid25-precision", n_u=1, obstacles=frozenset(obstacles),
                   goal=PREC_GOAL, start=(2, 6))


def in_tunnel(cell) -> bool:
    return int(cell[1]) == PREC_TUNNEL_Y and int(cell[0]) in PREC_TUNNEL_XS


def _walk(moves) -> Trajectory:
    states = [np.asarray(moves[0], dtype=float)]
    actions = []
    for a in moves[1]:
        actions.append(np.asarray(a, dtype=float))
        states.append(states[-1] + actions[-1])
    inputs = np.ones((len(actions), 1))
    return Trajectory(states=np.asarray(states), inputs=inputs, actions=np.asarray(actions))


def _preference_moves(mode: str) -> list:
    detour_y = PREF_UP_Y if mode == "up" else PREF_DOWN_Y
    dy = 1 if mode == "up" else -1
    moves = []
    moves += [(1, 0)] * (PREF_BRANCH[0] - PREF_START[0])        # hallway
    moves += [(0, dy)] * abs(detour_y - PREF_HALLWAY_Y)         # branch detour
    moves += [(1, 0)] * (PREF_REJOIN_X - PREF_BRANCH[0])        # pass the obstacle
    moves += [(0, -dy)] * abs(detour_y - PREF_HALLWAY_Y)        # rejoin the goal row
    moves += [(1, 0)] * (PREF_GOAL[0] - PREF_REJOIN_X)          # run to the goal
    return moves


def gen_grid_preference(n_per_mode: int, seed: int, modes=("up", "down")) -> ScenarioDataset:
    """Balanced noiseless up/down demonstrations with constant input h=1."""
    if n_per_mode < 1:
        raise ValueError("n_per_mode must be >= 1")
    env = preference_env()
    trajectories = []
    for mode in modes:
        moves = _preference_moves(mode)
        for _ in range(n_per_mode):
            trajectories.append(_walk((PREF_START, moves)))
    return ScenarioDataset(env=env, scenario="grid-preference", profile=f"modes:{'+'.join(modes)}",
                           scheme="constant", seed=seed, trajectories=trajectories)


def _funnel_direction(x: int, y: int) -> tuple[int, int]:
    """Diagonal-first shortest approach to the tunnel entrance, wall-safe."""
    dy = int(np.sign(PREC_TUNNEL_Y - y))
    dx = 1 if (PREC_ENTRANCE[0] - x) >= abs(PREC_TUNNEL_Y - y) else 0
    return dx, dy


def _quantize(v: float, lo: int, hi: int) -> int:
    return int(min(hi, max(lo, round(v))))


def gen_grid_precision(n: int, noise_sigma: float, seed: int,
                       noise_scale: float = 1.0, flip_prob: float = 0.0) -> ScenarioDataset:
    """Noisy open-region approach, deterministic tunnel traversal.

    ``noise_scale``/``flip_prob`` exaggerate the open-region wandering and are
    used to model out-of-distribution (indirect) calibration users.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    env = precision_env()
    rng = Xoshiro256(seed)
    sigma = noise_sigma * noise_scale
    trajectories = []
    for _ in range(n):
        x = rng.randint_below(PREC_START_XS[1] - PREC_START_XS[0] + 1) + PREC_START_XS[0]
        y = rng.randint_below(PREC_START_YS[1] - PREC_START_YS[0] + 1) + PREC_START_YS[0]
        states = [np.array([float(x), float(y)])]
        actions = []
        guard = 0
        while (x, y) != PREC_GOAL:
            guard += 1
            fx, fy = _funnel_direction(x, y)
            if x < PREC_NOISY_X_MAX and sigma > 0.0 and guard <= 300:
                if flip_prob > 0.0 and rng.random() < flip_prob:
                    fy = -fy
                ax = _quantize(fx + rng.normal(0.0, sigma), 0, 1)
                ay = _quantize(fy + rng.normal(0.0, sigma), -1, 1)
            elif (x, y) == PREC_ENTRANCE or in_tunnel((x, y)) or x >= PREC_ENTRANCE[0]:
                ax, ay = 1, 0  # tunnel and exit row: fully deterministic
            else:
                ax, ay = fx, fy
            nx = min(GRID_MAX, max(0, x + ax))
            ny = min(GRID_MAX, max(0, y + ay))
            if (nx, ny) in env.obstacles:
                nx, ny = x, y
            a = np.array([float(nx - x), float(ny - y)])
            if not a.any():
                continue  # rejected or null move; draw again
            actions.append(a)
            x, y = nx, ny
            states.append(np.array([float(x), float(y)]))
        trajectories.append(Trajectory(states=np.asarray(states),
                                       inputs=np.ones((len(actions), 1)),
                                       actions=np.asarray(actions)))
    profile = "standard" if (noise_scale == 1.0 and flip_prob == 0.0) else "indirect"
    return ScenarioDataset(env=env, scenario="grid-precision", profile=profile,
                           scheme="constant", seed=seed, trajectories=trajectories)

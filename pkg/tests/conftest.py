"""Shared trained artifacts; the expensive models train once per session."""

from __future__ import annotations

import numpy as np
import pytest

from conformal_teleop import netcore
from conformal_teleop.envs import catalog
from conformal_teleop.experiment import train_qr_model
from conformal_teleop.rng import Xoshiro256

GRID_PRECISION_SEED = 11
GRID_PREFERENCE_SEED = 5
ARM_GOAL_SEED = 7
SYNTH_SEED = 42
SYNTH_SIGMA = 0.3


@pytest.fixture(scope="session")
def grid_precision_bundle():
    entry = catalog.get_scenario("grid-precision")
    train_ds = entry.gen_train(GRID_PRECISION_SEED)
    model = train_qr_model(train_ds, GRID_PRECISION_SEED, 0.1)
    return {"entry": entry, "train": train_ds, "model": model, "seed": GRID_PRECISION_SEED}


@pytest.fixture(scope="session")
def grid_preference_bundle():
    entry = catalog.get_scenario("grid-preference")
    train_ds = entry.gen_train(GRID_PREFERENCE_SEED)
    model = train_qr_model(train_ds, GRID_PREFERENCE_SEED, 0.1)
    return {"entry": entry, "train": train_ds, "model": model, "seed": GRID_PREFERENCE_SEED}


@pytest.fixture(scope="session")
def arm_goal_bundle():
    entry = catalog.get_scenario("arm-goal")
    train_ds = entry.gen_train(ARM_GOAL_SEED)
    model = train_qr_model(train_ds, ARM_GOAL_SEED, 0.1)
    return {"entry": entry, "train": train_ds, "model": model, "seed": ARM_GOAL_SEED}


def make_synthetic_linear(seed: int, n: int, sigma: float):
    rng = Xoshiro256(seed)
    x = np.array([[rng.uniform(-1.0, 1.0)] for _ in range(n)])
    y = x + np.array([[rng.normal(0.0, sigma)] for _ in range(n)])
    return x, y


@pytest.fixture(scope="session")
def synthetic_quantile_bundle():
    x, y = make_synthetic_linear(SYNTH_SEED, 1500, SYNTH_SIGMA)
    model = netcore.initialize([1, 64, 64, 6, 3], n_a=1, seed=5)
    cfg = netcore.TrainConfig(epochs=300, seed=5)
    trained, curve = netcore.train(model, (x, y), cfg)
    return {"model": trained, "curve": curve, "sigma": SYNTH_SIGMA}

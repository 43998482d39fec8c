"""Assistive controller surfaces over the dense kernel.

The quantile controller consumes (state, low-DoF input) feature vectors and
emits per-dimension mean/lower/upper heads. The ensemble baseline trains five
Gaussian-head networks and aggregates them as an equal-weight mixture via
moment matching.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from . import netcore
from .conformal import PredictionInterval

ENSEMBLE_SIZE = 5
LOG_VAR_CLAMP = 10.0


@dataclass
class LabeledTriple:
    """One (state, low-DoF input, desired high-DoF action) sample."""

    state: np.ndarray
    low_input: np.ndarray
    action: np.ndarray

    def __post_init__(self):
        self.state = np.atleast_1d(np.asarray(self.state, dtype=float))
        self.low_input = np.atleast_1d(np.asarray(self.low_input, dtype=float))
        self.action = np.atleast_1d(np.asarray(self.action, dtype=float))
        for part in (self.state, self.low_input, self.action):
            if not np.all(np.isfinite(part)):
                raise ValueError("labeled triple contains non-finite entries")


@dataclass
class QuantilePrediction:
    a_hat: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray

    def spread(self) -> np.ndarray:
        return self.q_hi - self.q_lo


def qr_predict(model: netcore.Mlp, state, low_input) -> QuantilePrediction:
    """Run the quantile controller on a (state, input) pair.

    ``state`` must already be in network units (environments that rescale do
    so before this call).
    """
    x = np.concatenate([np.atleast_1d(np.asarray(state, dtype=float)),
                        np.atleast_1d(np.asarray(low_input, dtype=float))])
    a_hat, q_lo, q_hi = netcore.forward(model, x)
    return QuantilePrediction(a_hat=a_hat, q_lo=q_lo, q_hi=q_hi)


class GaussianNllObjective:
    """Per-sample NLL 0.5*(log var + (y-mu)^2/var) summed over dims.

    The log-variance head is clamped to [-LOG_VAR_CLAMP, LOG_VAR_CLAMP] before
    exponentiation; the clamp gates its gradient.
    """

    def __call__(self, outputs: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
        b, n_a = targets.shape
        mu = outputs[:, :n_a]
        log_var_raw = outputs[:, n_a:]
        log_var = np.clip(log_var_raw, -LOG_VAR_CLAMP, LOG_VAR_CLAMP)
        var = np.exp(log_var)
        sq = (targets - mu) ** 2
        total = float(np.mean(np.sum(0.5 * (log_var + sq / var), axis=1)))

        d_out = np.empty_like(outputs)
        d_out[:, :n_a] = -(targets - mu) / var / b
        inside = (log_var_raw > -LOG_VAR_CLAMP) & (log_var_raw < LOG_VAR_CLAMP)
        d_out[:, n_a:] = 0.5 * (1.0 - sq / var) * inside / b
        return total, d_out


@dataclass
class EnsembleModel:
    members: list[netcore.Mlp]

    def __post_init__(self):
        if len(self.members) != ENSEMBLE_SIZE:
            raise ValueError(f"ensemble requires exactly {ENSEMBLE_SIZE} members")
        first = self.members[0]
        for m in self.members:
            if m.n_a != first.n_a or m.n_in != first.n_in:
                raise ValueError("ensemble members must share dimensions")
            if m.n_heads != 2:
                raise ValueError("ensemble members must have (mean, log_variance) heads")

    @property
    def n_a(self) -> int:
        return self.members[0].n_a

    @property
    def n_in(self) -> int:
        return self.members[0].n_in


def ensemble_train(dataset: tuple[np.ndarray, np.ndarray], config: netcore.TrainConfig,
                   layer_dims: list[int] | None = None) -> EnsembleModel:
    """Train the 5-member Gaussian-head ensemble.

    Member k gets seed ``config.seed + k`` for both its weight init and its
    epoch shuffles, so inits and data orders differ across members but the
    whole ensemble is reproducible.
    """
    inputs = np.asarray(dataset[0], dtype=float)
    targets = np.asarray(dataset[1], dtype=float)
    if len(inputs) == 0:
        raise ValueError("dataset must be non-empty")
    n_in, n_a = inputs.shape[1], targets.shape[1]
    if layer_dims is None:
        layer_dims = netcore.default_layer_dims(n_in, n_a, n_heads=2)
    objective = GaussianNllObjective()
    members = []
    for k in range(ENSEMBLE_SIZE):
        seed_k = config.seed + k
        member = netcore.initialize(layer_dims, n_a, seed=seed_k, alpha=config.alpha)
        member_cfg = netcore.TrainConfig(
            learning_rate=config.learning_rate,
            epochs=config.epochs,
            batch_size=config.batch_size,
            seed=seed_k,
            alpha=config.alpha,
        )
        trained, _ = netcore.train(member, (inputs, targets), member_cfg, objective=objective)
        members.append(trained)
    return EnsembleModel(members=members)


def member_heads(member: netcore.Mlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(mu, sigma^2) for one Gaussian-head member on one input vector."""
    out = netcore.forward_batch(member, x[None, :])[0]
    n = member.n_a
    mu = out[:n]
    log_var = np.clip(out[n:], -LOG_VAR_CLAMP, LOG_VAR_CLAMP)
    return mu, np.exp(log_var)


def mixture_moments(mus: np.ndarray, variances: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Moment-matched mean/std of an equal-weight Gaussian mixture, per dim.

    var = mean(sigma_k^2 + mu_k^2) - mu^2; numerical negatives are floored at 0.
    """
    mus = np.asarray(mus, dtype=float)
    variances = np.asarray(variances, dtype=float)
    mu = mus.mean(axis=0)
    var = (variances + mus ** 2).mean(axis=0) - mu ** 2
    return mu, np.sqrt(np.maximum(var, 0.0))


def ensemble_predict(ens: EnsembleModel, state, low_input) -> tuple[np.ndarray, np.ndarray]:
    """Mixture (mu, sigma) across the members, elementwise."""
    x = np.concatenate([np.atleast_1d(np.asarray(state, dtype=float)),
                        np.atleast_1d(np.asarray(low_input, dtype=float))])
    if x.shape[0] != ens.n_in:
        raise netcore.InputDimensionError(f"expected input of length {ens.n_in}")
    mus = np.empty((len(ens.members), ens.n_a))
    variances = np.empty_like(mus)
    for k, member in enumerate(ens.members):
        mus[k], variances[k] = member_heads(member, x)
    return mixture_moments(mus, variances)


def ensemble_interval(ens: EnsembleModel, state, low_input) -> PredictionInterval:
    """One-standard-deviation band around the mixture mean."""
    mu, sigma = ensemble_predict(ens, state, low_input)
    return PredictionInterval(lower=mu - sigma, upper=mu + sigma, lam=1.0)


def save_ensemble(ens: EnsembleModel, dirpath: str) -> None:
    os.makedirs(dirpath, exist_ok=True)
    files = []
    for k, member in enumerate(ens.members):
        name = f"member_{k}.json"
        netcore.save_model(member, os.path.join(dirpath, name), kind="ensemble_member")
        files.append(name)
    manifest = {"kind": "ensemble", "members": files, "n_a": ens.n_a}
    with open(os.path.join(dirpath, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, separators=(",", ":"))


def load_ensemble(dirpath: str) -> EnsembleModel:
    with open(os.path.join(dirpath, "manifest.json")) as fh:
        manifest = json.load(fh)
    members = []
    for name in manifest["members"]:
        model, kind = netcore.load_model(os.path.join(dirpath, name))
        if kind != "ensemble_member":
            raise ValueError(f"{name} is not an ensemble member file")
        members.append(model)
    return EnsembleModel(members=members)

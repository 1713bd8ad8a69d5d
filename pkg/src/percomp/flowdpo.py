"""Rectified-flow sample construction, the noise/velocity loss identity, and
the preference (DPO) loss on velocity predictions, plus a toy full-batch
optimizer for a linear velocity predictor.

Interpolation convention: x_t = (1 - t) x0 + t xi with true velocity
nu* = xi - x0, so the predicted noise is xi_pred = x_t + (1 - t) nu_pred and

    || xi* - xi_pred ||^2 = (1 - t)^2 || nu* - nu_pred ||^2

holds exactly. The preference loss weights timesteps by beta_t = beta (1-t)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError


class FlowError(DataError):
    pass


class DimMismatchError(FlowError):
    pass


class BadTimeError(FlowError):
    pass


@dataclass(frozen=True)
class FlowSample:
    x0: np.ndarray
    xi: np.ndarray
    t: float
    x_t: np.ndarray
    nu_star: np.ndarray


def make_flow_sample(x0: np.ndarray, xi: np.ndarray, t: float) -> FlowSample:
    x0 = np.asarray(x0, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if x0.shape != xi.shape:
        raise DimMismatchError(f"x0 {x0.shape} vs xi {xi.shape}")
    if not (0.0 < t < 1.0):
        raise BadTimeError(f"t must be in (0, 1), got {t!r}")
    nu_star = xi - x0
    # algebraically (1-t) x0 + t xi, written so the noise reconstruction
    # x_t + (1-t) nu_star == xi cancels bit-exactly
    x_t = xi - (1.0 - t) * nu_star
    return FlowSample(x0=x0, xi=xi, t=float(t), x_t=x_t, nu_star=nu_star)


def noise_velocity_identity(
    sample: FlowSample, nu_pred: np.ndarray
) -> tuple[float, float]:
    """Both sides of the noise/velocity identity for a prediction nu_pred:
    lhs = ||xi - xi_pred||^2 with xi_pred = x_t + (1-t) nu_pred,
    rhs = (1-t)^2 ||nu* - nu_pred||^2."""
    nu_pred = np.asarray(nu_pred, dtype=np.float64)
    if nu_pred.shape != sample.nu_star.shape:
        raise DimMismatchError(
            f"nu_pred {nu_pred.shape} vs sample dim {sample.nu_star.shape}"
        )
    xi_pred = sample.x_t + (1.0 - sample.t) * nu_pred
    lhs = float(np.sum((sample.xi - xi_pred) ** 2))
    rhs = float((1.0 - sample.t) ** 2 * np.sum((sample.nu_star - nu_pred) ** 2))
    return lhs, rhs


@dataclass
class DPOConfig:
    beta: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.beta) or self.beta < 0:
            raise FlowError(f"beta must be finite and >= 0, got {self.beta}")

    def beta_t(self, t):
        return self.beta * (1.0 - np.asarray(t, dtype=np.float64)) ** 2


@dataclass
class PairBatch:
    """Winner/loser true velocities with model and reference predictions, one
    row per preference pair, all of shape (n, d); t has shape (n,)."""

    nu_h_star: np.ndarray
    nu_l_star: np.ndarray
    nu_theta_h: np.ndarray
    nu_theta_l: np.ndarray
    nu_ref_h: np.ndarray
    nu_ref_l: np.ndarray
    t: np.ndarray

    def __post_init__(self) -> None:
        arrays = [
            self.nu_h_star,
            self.nu_l_star,
            self.nu_theta_h,
            self.nu_theta_l,
            self.nu_ref_h,
            self.nu_ref_l,
        ]
        shapes = {np.asarray(a).shape for a in arrays}
        if len(shapes) != 1:
            raise DimMismatchError(f"inconsistent velocity shapes: {shapes}")
        n = np.asarray(self.nu_h_star).shape[0]
        t = np.asarray(self.t, dtype=np.float64).reshape(-1)
        if t.shape[0] != n:
            raise DimMismatchError("t must have one entry per pair")
        if np.any(t <= 0.0) or np.any(t >= 1.0):
            raise BadTimeError("t entries must lie in (0, 1)")
        self.t = t


def _sq_err(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sum((np.asarray(a) - np.asarray(b)) ** 2, axis=1)


def preference_margins(batch: PairBatch, config: DPOConfig) -> np.ndarray:
    """Inner sigmoid arguments z per pair; positive z means the model improved
    on the winner (relative to the reference) more than on the loser."""
    improve_h = _sq_err(batch.nu_h_star, batch.nu_theta_h) - _sq_err(
        batch.nu_h_star, batch.nu_ref_h
    )
    improve_l = _sq_err(batch.nu_l_star, batch.nu_theta_l) - _sq_err(
        batch.nu_l_star, batch.nu_ref_l
    )
    return -(config.beta_t(batch.t) / 2.0) * (improve_h - improve_l)


def _softplus(x: np.ndarray) -> np.ndarray:
    # log(1 + e^x), overflow-safe
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def flow_dpo_loss(batch: PairBatch, config: DPOConfig) -> float:
    """Mean -log sigmoid(z) over the batch. Equals ln 2 when the model and
    reference predictions coincide or when beta = 0."""
    z = preference_margins(batch, config)
    return float(np.mean(_softplus(-z)))


# ---------------------------------------------------------------------------
# toy preference-tuning demo on a linear velocity predictor


@dataclass
class LinearVelocityModel:
    weight: np.ndarray  # (d, d)
    bias: np.ndarray  # (d,)

    def predict(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.weight.T + self.bias

    def copy(self) -> "LinearVelocityModel":
        return LinearVelocityModel(self.weight.copy(), self.bias.copy())

    @classmethod
    def zeros(cls, d: int) -> "LinearVelocityModel":
        return cls(np.zeros((d, d)), np.zeros(d))


@dataclass
class TrainPairs:
    """Inputs for the toy optimizer: interpolants, targets, and frozen
    reference predictions for winner and loser sides."""

    x_h: np.ndarray
    x_l: np.ndarray
    nu_h_star: np.ndarray
    nu_l_star: np.ndarray
    nu_ref_h: np.ndarray
    nu_ref_l: np.ndarray
    t: np.ndarray


def batch_from_model(train: TrainPairs, model: LinearVelocityModel) -> PairBatch:
    return PairBatch(
        nu_h_star=train.nu_h_star,
        nu_l_star=train.nu_l_star,
        nu_theta_h=model.predict(train.x_h),
        nu_theta_l=model.predict(train.x_l),
        nu_ref_h=train.nu_ref_h,
        nu_ref_l=train.nu_ref_l,
        t=train.t,
    )


def toy_dpo_optimize(
    train: TrainPairs,
    model: LinearVelocityModel,
    config: DPOConfig,
    steps: int,
    initial_step: float = 1e-2,
) -> tuple[LinearVelocityModel, list[float]]:
    """Full-batch gradient descent on the preference loss with a backtracking
    line search (loss trace is non-increasing). Returns the fitted model and
    the trace [loss_0, ..., loss_steps]."""
    model = model.copy()
    n = train.x_h.shape[0]
    loss = flow_dpo_loss(batch_from_model(train, model), config)
    trace = [loss]
    step = initial_step
    for _ in range(steps):
        batch = batch_from_model(train, model)
        z = preference_margins(batch, config)
        dz = -_sigmoid(-z) / n  # d(mean softplus(-z))/dz
        bt = config.beta_t(train.t)
        # dz/d nu_theta_h = beta_t (nu_h* - nu_theta_h); loser side negated
        gh = (dz * bt)[:, None] * (train.nu_h_star - batch.nu_theta_h)
        gl = -(dz * bt)[:, None] * (train.nu_l_star - batch.nu_theta_l)
        gW = gh.T @ train.x_h + gl.T @ train.x_l
        gb = gh.sum(axis=0) + gl.sum(axis=0)
        gsq = float(np.sum(gW * gW) + np.sum(gb * gb))
        if gsq < 1e-30:
            trace.append(loss)
            continue
        s = step
        while True:
            cand = LinearVelocityModel(model.weight - s * gW, model.bias - s * gb)
            cand_loss = flow_dpo_loss(batch_from_model(train, cand), config)
            if cand_loss <= loss - 1e-4 * s * gsq or s < 1e-18:
                break
            s *= 0.5
        if cand_loss <= loss:
            model, loss = cand, cand_loss
        step = min(s * 2.0, 1e3)
        trace.append(loss)
    return model, trace


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def make_synthetic_pairs(
    n: int,
    d: int,
    rng: np.random.Generator,
    winner_noise: float = 0.05,
    loser_noise: float = 0.1,
    t_low: float = 0.05,
    t_high: float = 0.95,
) -> TrainPairs:
    """Separable synthetic preference pairs: winner velocities follow one
    planted linear field and loser velocities a different one, with the frozen
    reference halfway between. Moving toward the winner field then improves
    winner predictions and worsens loser predictions relative to the
    reference, so preference margins become positive. Timesteps are uniform on
    (t_low, t_high)."""
    W_good = rng.normal(scale=0.5, size=(d, d))
    b_good = rng.normal(scale=0.2, size=d)
    W_bad = rng.normal(scale=0.5, size=(d, d))
    b_bad = rng.normal(scale=0.2, size=d)
    ref = LinearVelocityModel(0.5 * (W_good + W_bad), 0.5 * (b_good + b_bad))
    x_h = rng.normal(size=(n, d))
    x_l = rng.normal(size=(n, d))
    nu_h = x_h @ W_good.T + b_good + rng.normal(scale=winner_noise, size=(n, d))
    nu_l = x_l @ W_bad.T + b_bad + rng.normal(scale=loser_noise, size=(n, d))
    t = rng.uniform(t_low, t_high, size=n)
    return TrainPairs(
        x_h=x_h,
        x_l=x_l,
        nu_h_star=nu_h,
        nu_l_star=nu_l,
        nu_ref_h=ref.predict(x_h),
        nu_ref_l=ref.predict(x_l),
        t=t,
    )

"""Pairwise preference reward model with ties (Rao-Kupper form).

Win/tie probabilities for rewards r_a, r_b and tie parameter theta > 1:

    p_a   = e^{r_a} / (e^{r_a} + theta e^{r_b})
    p_b   = e^{r_b} / (theta e^{r_a} + e^{r_b})
    p_tie = (theta^2 - 1) e^{r_a} e^{r_b} /
            ((e^{r_a} + theta e^{r_b}) (theta e^{r_a} + e^{r_b}))

The three sum to one exactly and depend only on r_a - r_b, so fitted rankings
are gauge-independent; the fitted rewards are re-centered to mean zero per
dimension. Fitting is full-batch gradient descent on the negative
log-likelihood with analytic gradients and a backtracking line search; the
NLL is convex in the rewards, which makes this sufficient at this scale.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import DataError

DEFAULT_THETA = 5.0
DEFAULT_TIE_MARGIN = 0.1


class PreferenceError(DataError):
    pass


class InvalidThetaError(PreferenceError):
    pass


class UnknownItemError(PreferenceError):
    pass


class InsufficientLowItemsError(PreferenceError):
    pass


class NotConvergedWarning(UserWarning):
    pass


class Dimension(str, Enum):
    VQ = "VQ"
    MQ = "MQ"
    CA = "CA"


class Outcome(str, Enum):
    A_WINS = "A_WINS"
    B_WINS = "B_WINS"
    TIE = "TIE"


@dataclass(frozen=True)
class Judgment:
    pair_id: str
    item_a: str
    item_b: str
    dimension: Dimension
    outcome: Outcome
    annotator_id: str
    timestamp: float  # UTC seconds

    def __post_init__(self) -> None:
        if self.item_a == self.item_b:
            raise PreferenceError("item_a and item_b must differ")
        object.__setattr__(self, "dimension", Dimension(self.dimension))
        object.__setattr__(self, "outcome", Outcome(self.outcome))

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "item_a": self.item_a,
            "item_b": self.item_b,
            "dimension": self.dimension.value,
            "outcome": self.outcome.value,
            "annotator_id": self.annotator_id,
            "timestamp": self.timestamp,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Judgment":
        return cls(
            pair_id=d["pair_id"],
            item_a=d["item_a"],
            item_b=d["item_b"],
            dimension=Dimension(d["dimension"]),
            outcome=Outcome(d["outcome"]),
            annotator_id=d["annotator_id"],
            timestamp=float(d["timestamp"]),
        )


def save_judgments_jsonl(judgments: list[Judgment], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for j in judgments:
            f.write(json.dumps(j.to_dict()) + "\n")


def load_judgments_jsonl(path: str | Path) -> list[Judgment]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line:
                out.append(Judgment.from_dict(json.loads(line)))
    return out


@dataclass
class BTTConfig:
    theta: float = DEFAULT_THETA
    learning_rate: float = 1.0  # initial line-search step
    max_iters: int = 1000
    tol: float = 1e-6
    l2: float = 1e-4

    def __post_init__(self) -> None:
        if not self.theta > 1.0:
            raise InvalidThetaError(f"theta must be > 1, got {self.theta}")
        if self.l2 < 0:
            raise PreferenceError("l2 must be >= 0")


class RewardParams:
    """Per-item, per-dimension fitted rewards, mean-centered per dimension."""

    def __init__(self, rewards: dict[str, dict[Dimension, float]], diagnostics=None):
        self.rewards = {
            item: {Dimension(d): float(v) for d, v in dims.items()}
            for item, dims in rewards.items()
        }
        self.diagnostics = diagnostics or {}
        for dim in Dimension:
            vals = [dims[dim] for dims in self.rewards.values() if dim in dims]
            if vals and abs(float(np.mean(vals))) > 1e-9:
                raise PreferenceError(
                    f"rewards for {dim.value} are not mean-centered"
                )

    @classmethod
    def centered(cls, raw: dict[str, dict[Dimension, float]]) -> "RewardParams":
        """Build params from arbitrary rewards by re-centering each dimension."""
        means: dict[Dimension, float] = {}
        counts: dict[Dimension, int] = {}
        for dims in raw.values():
            for d, v in dims.items():
                d = Dimension(d)
                means[d] = means.get(d, 0.0) + v
                counts[d] = counts.get(d, 0) + 1
        centered = {
            item: {
                Dimension(d): v - means[Dimension(d)] / counts[Dimension(d)]
                for d, v in dims.items()
            }
            for item, dims in raw.items()
        }
        return cls(centered)

    def get(self, item: str, dimension: Dimension) -> float:
        try:
            return self.rewards[item][Dimension(dimension)]
        except KeyError:
            raise UnknownItemError(f"no reward for item {item!r} on {dimension}")

    def items_for(self, dimension: Dimension) -> list[str]:
        d = Dimension(dimension)
        return sorted(i for i, dims in self.rewards.items() if d in dims)

    def to_json(self) -> str:
        obj = {
            item: {d.value: v for d, v in sorted(dims.items(), key=lambda kv: kv[0].value)}
            for item, dims in sorted(self.rewards.items())
        }
        return json.dumps(obj, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "RewardParams":
        data = json.loads(text)
        return cls({item: {Dimension(d): v for d, v in dims.items()} for item, dims in data.items()})


# ---------------------------------------------------------------------------
# probabilities and likelihood


def btt_probabilities(r_a, r_b, theta: float = DEFAULT_THETA):
    """(p_a_wins, p_tie, p_b_wins) for scalar or array rewards.

    Computed from the reward difference in shifted exponential space, so any
    finite rewards are overflow-safe and the three probabilities sum to one.
    """
    if not theta > 1.0:
        raise InvalidThetaError(f"theta must be > 1, got {theta}")
    d = np.asarray(r_a, dtype=np.float64) - np.asarray(r_b, dtype=np.float64)
    e = np.exp(-np.abs(d))
    near = 1.0 / (1.0 + theta * e)  # win prob of the higher-reward side
    far = e / (theta + e)  # win prob of the lower-reward side
    p_tie = (theta * theta - 1.0) * e / ((1.0 + theta * e) * (theta + e))
    p_a = np.where(d >= 0, near, far)
    p_b = np.where(d >= 0, far, near)
    if np.isscalar(r_a) and np.isscalar(r_b):
        return float(p_a), float(p_tie), float(p_b)
    return p_a, p_tie, p_b


def _log_probs(d: np.ndarray, theta: float):
    """(log p_a, log p_tie, log p_b) from reward differences; finite for any d."""
    ad = np.abs(d)
    e = np.exp(-ad)
    log_near = -np.log1p(theta * e)
    log_far = -ad - np.log(theta + e)
    lp_tie = math.log(theta * theta - 1.0) - ad - np.log1p(theta * e) - np.log(theta + e)
    lp_a = np.where(d >= 0, log_near, log_far)
    lp_b = np.where(d >= 0, log_far, log_near)
    return lp_a, lp_tie, lp_b


_OUTCOME_CODE = {Outcome.A_WINS: 0, Outcome.TIE: 1, Outcome.B_WINS: 2}


def _index_judgments(judgments, items: list[str]):
    pos = {it: i for i, it in enumerate(items)}
    ia = np.array([pos[j.item_a] for j in judgments], dtype=np.intp)
    ib = np.array([pos[j.item_b] for j in judgments], dtype=np.intp)
    code = np.array([_OUTCOME_CODE[j.outcome] for j in judgments], dtype=np.intp)
    return ia, ib, code


def _nll_vector(r: np.ndarray, ia, ib, code, theta: float, l2: float) -> float:
    lp_a, lp_tie, lp_b = _log_probs(r[ia] - r[ib], theta)
    picked = np.choose(code, [lp_a, lp_tie, lp_b])
    return float(-np.sum(picked) + l2 * np.sum(r * r))


def _grad_vector(r: np.ndarray, ia, ib, code, theta: float, l2: float) -> np.ndarray:
    d = r[ia] - r[ib]
    e = np.exp(-np.abs(d))
    w_near = theta * e / (1.0 + theta * e)  # theta*loser/(winner + theta*loser), higher side winning
    w_far = theta / (theta + e)
    w_a = np.where(d >= 0, w_near, w_far)  # theta e^{r_b} / (e^{r_a} + theta e^{r_b})
    w_b = np.where(d >= 0, w_far, w_near)  # theta e^{r_a} / (theta e^{r_a} + e^{r_b})
    ga = np.choose(code, [-w_a, w_b - w_a, w_b])
    gb = -ga
    g = np.zeros_like(r)
    np.add.at(g, ia, ga)
    np.add.at(g, ib, gb)
    return g + 2.0 * l2 * r


def btt_nll(
    judgments: list[Judgment],
    rewards: RewardParams,
    theta: float = DEFAULT_THETA,
    l2: float = 0.0,
) -> float:
    """Negative log-likelihood of the judgments plus l2 * ||r||^2 over all
    reward entries. Finite for theta > 1."""
    if not theta > 1.0:
        raise InvalidThetaError(f"theta must be > 1, got {theta}")
    total = 0.0
    if judgments:
        d = np.array(
            [
                rewards.get(j.item_a, j.dimension) - rewards.get(j.item_b, j.dimension)
                for j in judgments
            ]
        )
        code = np.array([_OUTCOME_CODE[j.outcome] for j in judgments], dtype=np.intp)
        lp_a, lp_tie, lp_b = _log_probs(d, theta)
        total = float(-np.sum(np.choose(code, [lp_a, lp_tie, lp_b])))
    reg = sum(v * v for dims in rewards.rewards.values() for v in dims.values())
    return total + l2 * reg


def fit_rewards(
    judgments: list[Judgment],
    config: BTTConfig | None = None,
    rng: np.random.Generator | None = None,
) -> RewardParams:
    """Maximum-likelihood rewards per dimension.

    Full-batch gradient descent with backtracking line search; stops when the
    max-abs gradient falls below config.tol per judgment or after
    config.max_iters steps, warning with NotConvergedWarning in the latter
    case (the result is still returned). Rewards are re-centered to mean zero
    per dimension.
    """
    config = config or BTTConfig()
    by_dim: dict[Dimension, list[Judgment]] = {}
    for j in judgments:
        by_dim.setdefault(j.dimension, []).append(j)

    rewards: dict[str, dict[Dimension, float]] = {}
    diagnostics: dict[str, dict] = {}
    for dim, js in sorted(by_dim.items(), key=lambda kv: kv[0].value):
        items = sorted({j.item_a for j in js} | {j.item_b for j in js})
        ia, ib, code = _index_judgments(js, items)
        r = np.zeros(len(items))
        if rng is not None:
            r += rng.normal(scale=1e-6, size=len(items))

        step = config.learning_rate
        nll = _nll_vector(r, ia, ib, code, config.theta, config.l2)
        converged = False
        iters = 0
        grad_norm = math.inf
        stop_at = config.tol * max(1.0, float(len(js)))
        for iters in range(1, config.max_iters + 1):
            g = _grad_vector(r, ia, ib, code, config.theta, config.l2)
            grad_norm = float(np.max(np.abs(g)))
            if grad_norm < stop_at:
                converged = True
                break
            gsq = float(np.dot(g, g))
            s = step
            while True:
                trial = r - s * g
                trial_nll = _nll_vector(trial, ia, ib, code, config.theta, config.l2)
                if trial_nll <= nll - 1e-4 * s * gsq or s < 1e-18:
                    break
                s *= 0.5
            r, nll = trial, trial_nll
            step = min(s * 2.0, 1e6)
        if not converged:
            warnings.warn(
                f"BTT fit for {dim.value} stopped at max_iters with "
                f"grad norm {grad_norm:.3e}",
                NotConvergedWarning,
            )
        r = r - r.mean()  # identifiability gauge
        for it, v in zip(items, r):
            rewards.setdefault(it, {})[dim] = float(v)
        diagnostics[dim.value] = {
            "converged": converged,
            "iters": iters,
            "grad_norm": grad_norm,
            "nll": nll,
        }
    return RewardParams(rewards, diagnostics)


# ---------------------------------------------------------------------------
# dataset expansion and evaluation


def expand_stage_one(
    high: list[str],
    low: list[str],
    k: int,
    rng: np.random.Generator,
    dimension: Dimension = Dimension.VQ,
) -> list[Judgment]:
    """Pair each high-quality item with k distinct low-quality items, emitting
    one HIGH-beats-LOW judgment per pairing (|high| * k judgments total)."""
    if k > len(low):
        raise InsufficientLowItemsError(
            f"k={k} exceeds the {len(low)} available low-quality items"
        )
    out = []
    idx = 0
    for h in high:
        partners = rng.choice(len(low), size=k, replace=False)
        for p in partners:
            out.append(
                Judgment(
                    pair_id=f"stage1-{idx:06d}",
                    item_a=h,
                    item_b=low[int(p)],
                    dimension=dimension,
                    outcome=Outcome.A_WINS,
                    annotator_id="stage1-auto",
                    timestamp=0.0,
                )
            )
            idx += 1
    return out


def predict_accuracy(
    test_judgments: list[Judgment],
    rewards: RewardParams,
    theta: float = DEFAULT_THETA,
    tie_margin: float = DEFAULT_TIE_MARGIN,
) -> dict[Dimension, float]:
    """Per-dimension accuracy of margin-rule predictions: TIE when
    |r_a - r_b| < tie_margin, otherwise the higher-reward side wins."""
    matched: dict[Dimension, int] = {}
    totals: dict[Dimension, int] = {}
    for j in test_judgments:
        d = rewards.get(j.item_a, j.dimension) - rewards.get(j.item_b, j.dimension)
        if abs(d) < tie_margin:
            pred = Outcome.TIE
        elif d > 0:
            pred = Outcome.A_WINS
        else:
            pred = Outcome.B_WINS
        totals[j.dimension] = totals.get(j.dimension, 0) + 1
        if pred == j.outcome:
            matched[j.dimension] = matched.get(j.dimension, 0) + 1
    return {d: matched.get(d, 0) / n for d, n in totals.items()}

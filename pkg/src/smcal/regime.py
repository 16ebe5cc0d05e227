"""Fitted decision rules: threshold estimation, prediction, and value.

A regime is the linear rule ``treat iff beta^T x > c``.  The threshold is
chosen in a second stage maximizing (1/n) * sum_i w_i * 1(beta^T x_i > c),
whose optimum lies at a midpoint between consecutive distinct scores.  Regime
value is estimated by inverse-probability weighting, with percentile
bootstrap confidence intervals.
"""

import json
from dataclasses import dataclass

import numpy as np

from .data import ContrastWeights, Dataset, Propensity
from .exceptions import DegenerateProblemError, OverlapError, ValidationError


@dataclass(frozen=True)
class Regime:
    """Decision rule 1(beta^T x > c) plus the tuning it was fitted with."""

    beta: np.ndarray
    c: float
    alpha: float | None = None
    lam: float | None = None

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or not np.all(np.isfinite(beta)):
            raise ValidationError("beta must be a finite vector")
        if not np.isfinite(self.c):
            raise ValidationError("threshold c must be finite")
        beta.flags.writeable = False
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "c", float(self.c))

    def to_dict(self):
        return {
            "beta": [float(b) for b in self.beta],
            "c": self.c,
            "alpha": None if self.alpha is None else float(self.alpha),
            "lambda": None if self.lam is None else float(self.lam),
        }

    @classmethod
    def from_dict(cls, payload):
        try:
            return cls(
                beta=np.asarray(payload["beta"], dtype=float),
                c=float(payload["c"]),
                alpha=payload.get("alpha"),
                lam=payload.get("lambda"),
            )
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed regime payload: {exc}") from None

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class ValueEstimate:
    """Point value with percentile bootstrap bounds."""

    value: float
    ci_low: float
    ci_high: float
    n_boot: int
    boot_size: int

    def __post_init__(self):
        if self.ci_low > self.ci_high:
            raise ValidationError("ci_low must not exceed ci_high")

    def to_dict(self):
        return {
            "value": self.value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "n_boot": self.n_boot,
            "boot_size": self.boot_size,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _weights_vector(w):
    return w.w if isinstance(w, ContrastWeights) else np.asarray(w, dtype=float)


def threshold_candidates(scores) -> np.ndarray:
    """Sentinels outside the score range plus midpoints of distinct scores."""
    u = np.unique(scores)
    mids = (u[:-1] + u[1:]) / 2.0
    return np.concatenate([[u[0] - 1.0], mids, [u[-1] + 1.0]])


def fit_threshold(data: Dataset, w, beta) -> float:
    """Threshold maximizing (1/n) sum_i w_i 1(beta^T x_i > c).

    The objective is piecewise constant in c, so scanning the midpoint
    candidates is exhaustive.  Ties break toward the smallest candidate,
    i.e. toward treating more subjects.
    """
    wv = _weights_vector(w)
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (data.d,):
        raise ValidationError(f"beta must have length {data.d}")
    if wv.shape != (data.n,):
        raise ValidationError(f"w must have length {data.n}")
    scores = data.x @ beta
    candidates = threshold_candidates(scores)
    objective = (wv[None, :] * (scores[None, :] > candidates[:, None])).sum(axis=1)
    return float(candidates[int(np.argmax(objective))])


def decide(regime: Regime, x):
    """Apply 1(beta^T x > c); scalar for a single covariate vector, array
    for a matrix of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != regime.beta.shape[0]:
        raise ValidationError(
            f"covariates have {x.shape[-1] if x.ndim else 0} columns, "
            f"regime expects {regime.beta.shape[0]}"
        )
    dec = (x @ regime.beta > regime.c).astype(int)
    return int(dec[0]) if single else dec


def _ipw(y, a, x, pi, regime):
    dec = (x @ regime.beta > regime.c).astype(float)
    keep = (a == dec).astype(float)
    denom = a * pi + (1.0 - a) * (1.0 - pi)
    return float(np.mean(y * keep / denom))


def ipw_value(data: Dataset, prop: Propensity, regime: Regime) -> float:
    """Inverse-probability-weighted mean outcome under ``regime``."""
    pi = prop.scores(data)
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise OverlapError("propensity scores must lie strictly inside (0, 1)")
    return _ipw(data.y, data.a, data.x, pi, regime)


def _bootstrap(data, prop, statistic, n_boot, boot_size, seed):
    if n_boot < 2:
        raise ValidationError("n_boot must be >= 2")
    pi = prop.scores(data)
    if np.any(pi <= 0.0) or np.any(pi >= 1.0):
        raise OverlapError("propensity scores must lie strictly inside (0, 1)")
    boot_size = data.n if boot_size is None else int(boot_size)
    draws = np.empty(n_boot)
    ok = np.zeros(n_boot, dtype=bool)
    for b in range(n_boot):
        for attempt in range(10):
            rng = np.random.default_rng([seed, b, attempt])
            idx = rng.integers(0, data.n, size=boot_size)
            try:
                draws[b] = statistic(
                    data.y[idx], data.a[idx], data.x[idx], pi[idx]
                )
                ok[b] = True
                break
            except (OverlapError, ZeroDivisionError):
                continue
    draws = draws[ok]
    if draws.size < 2:
        raise DegenerateProblemError("all bootstrap draws were degenerate")
    lo, hi = np.percentile(draws, [2.5, 97.5])
    return ValueEstimate(
        value=float(np.mean(draws)),
        ci_low=float(lo),
        ci_high=float(hi),
        n_boot=n_boot,
        boot_size=boot_size,
    )


def bootstrap_value(data, prop, regime, n_boot=1000, boot_size=None, seed=0) -> ValueEstimate:
    """Percentile bootstrap of the IPW value of one regime.

    Each draw resamples ``boot_size`` subjects with replacement using an RNG
    stream derived from (seed, draw index), so results do not depend on
    evaluation order.
    """

    def statistic(y, a, x, pi):
        return _ipw(y, a, x, pi, regime)

    return _bootstrap(data, prop, statistic, n_boot, boot_size, seed)


def bootstrap_value_diff(
    data, prop, regime_a, regime_b, n_boot=1000, boot_size=None, seed=0
) -> ValueEstimate:
    """Percentile bootstrap of the IPW value difference (regime_a - regime_b)."""

    def statistic(y, a, x, pi):
        return _ipw(y, a, x, pi, regime_a) - _ipw(y, a, x, pi, regime_b)

    return _bootstrap(data, prop, statistic, n_boot, boot_size, seed)

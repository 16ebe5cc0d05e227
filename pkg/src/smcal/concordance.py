"""Pairwise concordance objectives.

All objectives run over the ordered subject pairs (i, j) with w_i > w_j;
ties contribute nothing and are dropped when the pair set is built.  With
P = n(n-1) and margins m_p = beta^T (x_i - x_j):

    smoothed concordance  C(beta) = (1/P) * sum_p dw_p * (2 F(alpha m_p) - 1)
    penalized loss        l(beta) = -(2/P) * sum_p dw_p * F(alpha m_p) + lambda ||beta||_1
    hinge baseline            (2/P) * sum_p dw_p * (1 - m_p)_+ + lambda ||beta||_1

The concordance form above is the all-ordered-pairs double sum folded with
F(m) + F(-m) = 1, so it is exact, not an approximation.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    DegenerateProblemError,
    InvalidCoordinateError,
    ValidationError,
)
from .smoothing import SmoothingKernel


@dataclass(frozen=True)
class _PairSet:
    """Precomputed pair structure shared between problems with different tuning."""

    dxt: np.ndarray  # (d, P) covariate differences, one row per coordinate
    dw: np.ndarray  # (P,) positive weight differences w_i - w_j
    norm: float  # n * (n - 1)


def _build_pairs(x, w):
    n, d = x.shape
    iu, ju = np.triu_indices(n, k=1)
    gt = w[iu] > w[ju]
    lt = w[iu] < w[ju]
    hi = np.concatenate([iu[gt], ju[lt]])
    lo = np.concatenate([ju[gt], iu[lt]])
    dxt = np.ascontiguousarray((x[hi] - x[lo]).T)
    dw = w[hi] - w[lo]
    dxt.flags.writeable = False
    dw.flags.writeable = False
    return _PairSet(dxt=dxt, dw=dw, norm=float(n * (n - 1)))


@dataclass(frozen=True)
class PairwiseProblem:
    """Covariates, contrast weights and tuning for one pairwise fit.

    ``anchor`` is the zero-based coordinate held fixed at +/-1 during
    optimization; it is excluded from gradient updates but its |beta| does
    count toward the L1 penalty (a constant lambda offset).
    """

    x: np.ndarray
    w: np.ndarray
    kernel: SmoothingKernel | None = None
    lam: float = 0.0
    anchor: int = 0
    pairs: _PairSet = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        w = np.asarray(self.w, dtype=float)
        if x.ndim != 2 or w.ndim != 1 or w.shape[0] != x.shape[0]:
            raise ValidationError("expected x (n, d) and w (n,) with matching n")
        if x.shape[0] < 2:
            raise DegenerateProblemError("need at least 2 subjects to form pairs")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(w))):
            raise ValidationError("x and w must be finite")
        if not (np.isfinite(self.lam) and self.lam >= 0.0):
            raise ValidationError(f"lambda must be >= 0, got {self.lam!r}")
        if not 0 <= self.anchor < x.shape[1]:
            raise ValidationError(f"anchor {self.anchor} outside [0, {x.shape[1]})")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "w", w)
        if self.pairs is None:
            object.__setattr__(self, "pairs", _build_pairs(x, w))

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]

    @property
    def n_pairs(self):
        return self.pairs.dw.shape[0]

    def with_params(self, kernel=None, lam=None):
        """Copy with different tuning, sharing the precomputed pair arrays."""
        return PairwiseProblem(
            x=self.x,
            w=self.w,
            kernel=self.kernel if kernel is None else kernel,
            lam=self.lam if lam is None else lam,
            anchor=self.anchor,
            pairs=self.pairs,
        )

    def _require_kernel(self):
        if self.kernel is None:
            raise ValidationError("this operation needs a smoothing kernel")
        return self.kernel


def _check_beta(prob, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (prob.d,):
        raise ValidationError(f"beta must have length {prob.d}, got shape {beta.shape}")
    if not np.all(np.isfinite(beta)):
        raise ValidationError("beta must be finite")
    return beta


def margins(prob: PairwiseProblem, beta) -> np.ndarray:
    """Pairwise margins beta^T (x_i - x_j) over the stored pairs."""
    return _check_beta(prob, beta) @ prob.pairs.dxt


def smoothed_concordance(prob: PairwiseProblem, beta) -> float:
    """Sample smoothed concordance over all ordered pairs i != j."""
    kernel = prob._require_kernel()
    m = margins(prob, beta)
    return float(prob.pairs.dw @ (2.0 * kernel.f(m) - 1.0) / prob.pairs.norm)


def loss(prob: PairwiseProblem, beta) -> float:
    """Penalized loss -(2/P) sum dw F(alpha m) + lambda ||beta||_1."""
    kernel = prob._require_kernel()
    beta = _check_beta(prob, beta)
    m = beta @ prob.pairs.dxt
    smooth = -2.0 * float(prob.pairs.dw @ kernel.f(m)) / prob.pairs.norm
    return smooth + prob.lam * float(np.abs(beta).sum())


def loss_gradient(prob: PairwiseProblem, beta) -> np.ndarray:
    """Gradient of the smooth loss part for every coordinate (anchor included)."""
    kernel = prob._require_kernel()
    m = margins(prob, beta)
    c = prob.pairs.dw * kernel.f_prime(m)
    return -2.0 / prob.pairs.norm * (prob.pairs.dxt @ c)


def loss_gradient_coord(prob: PairwiseProblem, beta, k: int) -> float:
    """Smooth-part gradient for coordinate ``k``; the anchor is not updatable."""
    if k == prob.anchor:
        raise InvalidCoordinateError(f"coordinate {k} is the anchor and is never updated")
    if not 0 <= k < prob.d:
        raise ValidationError(f"coordinate {k} outside [0, {prob.d})")
    kernel = prob._require_kernel()
    m = margins(prob, beta)
    c = prob.pairs.dw * kernel.f_prime(m)
    return float(-2.0 / prob.pairs.norm * (prob.pairs.dxt[k] @ c))


def indicator_concordance(prob: PairwiseProblem, beta) -> float:
    """Exact concordance with the strict indicator; pair ties contribute 0."""
    m = margins(prob, beta)
    return float(prob.pairs.dw @ np.sign(m) / prob.pairs.norm)


def scal_hinge_loss(prob: PairwiseProblem, beta) -> float:
    """Hinge-surrogate baseline loss (no smoothing scale)."""
    beta = _check_beta(prob, beta)
    m = beta @ prob.pairs.dxt
    hinge = np.maximum(1.0 - m, 0.0)
    return float(2.0 / prob.pairs.norm * (prob.pairs.dw @ hinge)) + prob.lam * float(
        np.abs(beta).sum()
    )

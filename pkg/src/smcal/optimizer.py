"""Proximal coordinate descent over the free coordinates with a fixed anchor.

The anchor coordinate stays at +1 or -1 (one run per sign with ``init="both"``,
keeping the lower final loss); every other coordinate k cycles in ascending
order through the update

    beta_k <- S_{t * lambda}(beta_k - t * g_k)

with S the soft-thresholding operator and g_k the smooth-part gradient.  The
default step comes from a per-coordinate curvature bound, which makes the
penalized objective non-increasing at every update.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .concordance import PairwiseProblem, loss, scal_hinge_loss
from .exceptions import DegenerateProblemError, DivergenceError, ValidationError

INIT_BRANCHES = {"plus": (1.0,), "minus": (-1.0,), "both": (1.0, -1.0)}


@dataclass(frozen=True)
class FitConfig:
    """Optimizer controls; deterministic given identical inputs."""

    step: float | str = "auto"
    max_sweeps: int = 500
    tol: float = 1e-6
    init: str = "both"

    def __post_init__(self):
        if self.step != "auto":
            if not (np.isfinite(self.step) and self.step > 0):
                raise ValidationError(f"step must be positive or 'auto', got {self.step!r}")
        if self.max_sweeps < 1:
            raise ValidationError("max_sweeps must be >= 1")
        if not (np.isfinite(self.tol) and self.tol > 0):
            raise ValidationError("tol must be positive")
        if self.init not in INIT_BRANCHES:
            raise ValidationError(f"init must be one of {tuple(INIT_BRANCHES)}")


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    final_loss: float
    sweeps: int
    converged: bool
    init_branch: str


def soft_threshold(x, threshold):
    """S_t(x): x - t above t, 0 inside [-t, t], x + t below -t."""
    if np.any(np.asarray(threshold) < 0):
        raise ValidationError("threshold must be non-negative")
    return np.sign(x) * np.maximum(np.abs(x) - threshold, 0.0)


def auto_step(prob: PairwiseProblem) -> float:
    """Step t = 1 / max_k L_k from the curvature bound of the smooth part.

    L_k = (2/P) * sum_p dw_p * dx_{p,k}^2 * sup|F''|, maximized over the free
    coordinates; any t <= 1/L_k makes each coordinate update a descent step.
    """
    kernel = prob._require_kernel()
    curv = 2.0 / prob.pairs.norm * kernel.f_second_bound() * (prob.pairs.dxt**2 @ prob.pairs.dw)
    curv[prob.anchor] = 0.0
    l_max = float(curv.max()) if curv.size else 0.0
    if l_max <= 0.0:
        raise DegenerateProblemError(
            "zero curvature: no covariate varies across the positive-difference pairs"
        )
    return 1.0 / l_max


def _branch_name(sign):
    return "plus" if sign > 0 else "minus"


def _fit_branch_reference(prob, sign, step, cfg, callback):
    """Pure-NumPy mirror of the jit kernel; recomputes margins at every
    update (no incremental cache) and reports each coordinate visit."""
    kernel = prob.kernel
    dxt, dw, norm = prob.pairs.dxt, prob.pairs.dw, prob.pairs.norm
    beta = np.zeros(prob.d)
    beta[prob.anchor] = sign
    converged = False
    sweeps = 0
    for sweep in range(1, cfg.max_sweeps + 1):
        sweeps = sweep
        max_delta = 0.0
        for k in range(prob.d):
            if k == prob.anchor:
                continue
            m = beta @ dxt
            g = -2.0 / norm * float(dxt[k] @ (dw * kernel.f_prime(m)))
            nb = float(soft_threshold(beta[k] - step * g, step * prob.lam))
            max_delta = max(max_delta, abs(nb - beta[k]))
            beta[k] = nb
            if callback is not None:
                callback(sweep, k, beta.copy())
        if not np.all(np.isfinite(beta)):
            raise DivergenceError(f"non-finite iterate at sweep {sweep}")
        if max_delta < cfg.tol:
            converged = True
            break
    return beta, sweeps, converged


def fit_beta(prob: PairwiseProblem, cfg: FitConfig = FitConfig(), callback=None) -> FitResult:
    """Fit the smoothed pairwise loss by proximal coordinate descent.

    With ``init="both"`` the +1 and -1 anchor branches both run and the lower
    final loss wins (ties go to the plus branch).  ``callback(sweep, k, beta)``
    switches to the instrumented reference path, which is slow but reports
    every coordinate visit.
    """
    if prob.n_pairs == 0:
        raise DegenerateProblemError("no pair with w_i > w_j; nothing to fit")
    step = auto_step(prob) if cfg.step == "auto" else float(cfg.step)
    best = None
    for sign in INIT_BRANCHES[cfg.init]:
        if callback is None:
            beta, sweeps, converged, diverged = _kernels.cd_fit_smoothed(
                prob.pairs.dxt,
                prob.pairs.dw,
                prob.pairs.norm,
                prob.anchor,
                sign,
                prob.kernel.alpha,
                prob.lam,
                step,
                cfg.max_sweeps,
                cfg.tol,
            )
            if diverged:
                raise DivergenceError(f"non-finite iterate at sweep {diverged}")
        else:
            beta, sweeps, converged = _fit_branch_reference(prob, sign, step, cfg, callback)
        result = FitResult(
            beta=beta,
            final_loss=loss(prob, beta),
            sweeps=sweeps,
            converged=converged,
            init_branch=_branch_name(sign),
        )
        if best is None or result.final_loss < best.final_loss:
            best = result
    return best


def fit_beta_hinge(prob: PairwiseProblem, cfg: FitConfig = FitConfig()) -> FitResult:
    """Baseline fit of the hinge loss by cyclic exact coordinate minimization.

    The hinge objective is convex but not smooth, so Algorithm-style gradient
    steps do not apply; each coordinate is minimized exactly instead.  No step
    size is involved and the kernel of ``prob`` is ignored.
    """
    if prob.n_pairs == 0:
        raise DegenerateProblemError("no pair with w_i > w_j; nothing to fit")
    best = None
    for sign in INIT_BRANCHES[cfg.init]:
        beta, sweeps, converged, diverged = _kernels.cd_fit_hinge(
            prob.pairs.dxt,
            prob.pairs.dw,
            prob.pairs.norm,
            prob.anchor,
            sign,
            prob.lam,
            cfg.max_sweeps,
            cfg.tol,
        )
        if diverged:
            raise DivergenceError(f"non-finite iterate at sweep {diverged}")
        result = FitResult(
            beta=beta,
            final_loss=scal_hinge_loss(prob, beta),
            sweeps=sweeps,
            converged=converged,
            init_branch=_branch_name(sign),
        )
        if best is None or result.final_loss < best.final_loss:
            best = result
    return best

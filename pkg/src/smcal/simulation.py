"""Benchmark scenario generators, regime-quality metrics, and the
replication runner.

Every scenario draws treatment A ~ Bernoulli(1/2) independent of X, so the
propensity is the known constant 1/2.  The contrast D(x) = E[Y|A=1,x] -
E[Y|A=0,x] is a monotone function of beta_star^T x in each design:

* ``linear-uniform``   X_j ~ U(-1, 1) iid, d = 50;
                       Y ~ N(Q0, 1) with Q0 = 1 + 2 x1 + x2 + 0.5 x3
                       + 0.442 (1 - x1 - x2)(2A - 1), so
                       D(x) = 0.884 (1 - x1 - x2).
* ``linear-discrete``  same, with X_j uniform on {-0.9, -0.7, ..., 0.9}.
* ``nonlinear-exp``    X ~ N(0, I), d = 50; Y = 1 + x1 - x2 + x3 + x4
                       + A (exp(1 + x1 + x2 - x3 + x4) - e) + N(0, 0.5);
                       D(x) = exp(1 + x1 + x2 - x3 + x4) - e.
* ``model1..model6``   X ~ N(0, I), d = 500, noise N(0, 1); treatment term
                       (X b) A or (X b)^3 A with linear, quadratic or sine
                       baselines (see the builders below).
"""

import csv
import json
import multiprocessing
from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, Propensity, contrast_weights
from .concordance import PairwiseProblem
from .exceptions import (
    DegenerateBaselineError,
    DegenerateProblemError,
    DivergenceError,
    OverlapError,
    ValidationError,
)
from .optimizer import FitConfig, fit_beta, fit_beta_hinge
from .regime import Regime, decide, fit_threshold
from .smoothing import SmoothingKernel
from .tuning import CV_MAX_SWEEPS, TuningSpec, cross_validate

SCENARIO_IDS = (
    "linear-uniform",
    "linear-discrete",
    "nonlinear-exp",
    "model1",
    "model2",
    "model3",
    "model4",
    "model5",
    "model6",
)

DISCRETE_LEVELS = (2.0 * np.arange(10) - 9.0) / 10.0  # -0.9, -0.7, ..., 0.9

METRICS = ("mse", "incorrect_zeros", "correct_zeros", "pcd", "estimated_value")


@dataclass(frozen=True)
class ScenarioSpec:
    """Scenario id plus size; ``d=None`` takes the scenario default
    (50 for the low-dimensional designs, 500 for model1..model6)."""

    id: str
    n: int
    d: int | None = None
    seed: object = 0

    def __post_init__(self):
        if self.id not in SCENARIO_IDS:
            raise ValidationError(f"unknown scenario {self.id!r}; expected one of {SCENARIO_IDS}")
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        default_d = 500 if self.id.startswith("model") else 50
        d = default_d if self.d is None else int(self.d)
        if d < self._min_d():
            raise ValidationError(f"scenario {self.id} needs d >= {self._min_d()}")
        object.__setattr__(self, "d", d)

    def _min_d(self):
        return {"linear-uniform": 3, "linear-discrete": 3, "nonlinear-exp": 4}.get(self.id, 6)


@dataclass(frozen=True)
class TruthOracle:
    """Ground truth of a scenario: index direction, contrast, baseline,
    the X-law sampler, and the optimal threshold on the beta_star scale."""

    beta_star: np.ndarray
    contrast: object  # D(x) for a batch of covariate rows
    baseline: object  # E[Y | A=0, x] for a batch
    sample_x: object  # (n, rng) -> fresh covariate rows
    c_star: float = 0.0
    propensity: float = 0.5

    def optimal_decision(self, x):
        return (self.contrast(np.asarray(x, dtype=float)) > 0).astype(int)


def _vec(d, entries):
    v = np.zeros(d)
    for idx, val in entries:
        v[idx] = val
    return v


def _build_linear(spec, discrete):
    d = spec.d

    def sample_x(n, rng):
        if discrete:
            return rng.choice(DISCRETE_LEVELS, size=(n, d))
        return rng.uniform(-1.0, 1.0, size=(n, d))

    def contrast(x):
        return 0.884 * (1.0 - x[:, 0] - x[:, 1])

    def baseline(x):
        return 1.0 + 2.0 * x[:, 0] + x[:, 1] + 0.5 * x[:, 2] - 0.442 * (1.0 - x[:, 0] - x[:, 1])

    def draw_y(x, a, rng):
        q0 = baseline(x) + contrast(x) * a
        return q0 + rng.standard_normal(x.shape[0])

    beta_star = _vec(d, [(0, -1.0), (1, -1.0)])
    # D(x) = 0.884 (1 + beta_star^T x): optimal threshold at beta_star^T x = -1
    return TruthOracle(beta_star, contrast, baseline, sample_x, c_star=-1.0), draw_y


def _build_nonlinear_exp(spec):
    d = spec.d

    def sample_x(n, rng):
        return rng.standard_normal((n, d))

    def contrast(x):
        return np.exp(1.0 + x[:, 0] + x[:, 1] - x[:, 2] + x[:, 3]) - np.e

    def baseline(x):
        return 1.0 + x[:, 0] - x[:, 1] + x[:, 2] + x[:, 3]

    def draw_y(x, a, rng):
        return baseline(x) + contrast(x) * a + np.sqrt(0.5) * rng.standard_normal(x.shape[0])

    beta_star = _vec(d, [(0, 1.0), (1, 1.0), (2, -1.0), (3, 1.0)])
    return TruthOracle(beta_star, contrast, baseline, sample_x), draw_y


def _build_model(spec):
    d = spec.d
    k = int(spec.id[-1])
    cubic = k >= 4
    beta_star = _vec(d, [(0, 1.0), (1, 0.9), (5, -0.8)]) if cubic else _vec(
        d, [(0, 2.0), (1, 1.8), (5, -1.6)]
    )
    if k in (1, 4):
        g1 = _vec(d, [(0, -1.0), (1, 1.0)])

        def baseline(x):
            return 3.0 + x @ g1

    elif k in (2, 5):
        g1 = _vec(d, [(0, 1.0), (1, 0.5)])
        g2 = _vec(d, [(1, 1.0)])

        def baseline(x):
            return 3.0 - 0.5 * (x @ g1) ** 2 + 0.625 * (x @ g2) ** 2

    else:
        g1 = _vec(d, [(0, 1.0)])
        g2 = _vec(d, [(1, 1.0)])

        def baseline(x):
            return 1.0 - np.sin(x @ g1) + np.sin(x @ g2)

    def contrast(x):
        u = x @ beta_star
        return u**3 if cubic else u

    def sample_x(n, rng):
        return rng.standard_normal((n, d))

    def draw_y(x, a, rng):
        return baseline(x) + contrast(x) * a + rng.standard_normal(x.shape[0])

    return TruthOracle(beta_star, contrast, baseline, sample_x), draw_y


def _build_scenario(spec):
    if spec.id in ("linear-uniform", "linear-discrete"):
        return _build_linear(spec, discrete=spec.id == "linear-discrete")
    if spec.id == "nonlinear-exp":
        return _build_nonlinear_exp(spec)
    return _build_model(spec)


def generate(spec: ScenarioSpec):
    """Draw one dataset from the scenario law; returns (Dataset, TruthOracle)."""
    oracle, draw_y = _build_scenario(spec)
    rng = np.random.default_rng(spec.seed)
    x = oracle.sample_x(spec.n, rng)
    a = rng.binomial(1, oracle.propensity, size=spec.n).astype(float)
    y = draw_y(x, a, rng)
    return Dataset(y=y, a=a, x=x), oracle


def mse_normalized(beta_hat, beta_star) -> float:
    """Squared L2 distance between unit-normalized, sign-aligned vectors."""
    bh = np.asarray(beta_hat, dtype=float)
    bs = np.asarray(beta_star, dtype=float)
    if bh.shape != bs.shape:
        raise ValidationError("vectors must share a length")
    nh, ns = np.linalg.norm(bh), np.linalg.norm(bs)
    if nh == 0.0 or ns == 0.0:
        raise ValidationError("cannot normalize a zero vector")
    u, v = bh / nh, bs / ns
    if float(u @ v) < 0.0:
        u = -u
    return float(np.sum((u - v) ** 2))


def selection_counts(beta_hat, beta_star):
    """(incorrect_zeros, correct_zeros) against the exact zeros of beta_star."""
    bh = np.asarray(beta_hat, dtype=float)
    bs = np.asarray(beta_star, dtype=float)
    if bh.shape != bs.shape:
        raise ValidationError("vectors must share a length")
    true_zero = bs == 0.0
    incorrect = int(np.sum(true_zero & (bh != 0.0)))
    correct = int(np.sum(true_zero & (bh == 0.0)))
    return incorrect, correct


def pcd(regime: Regime, oracle: TruthOracle, n_eval: int = 1000, seed=0) -> float:
    """Share of fresh subjects whose decision matches 1(D(x) > 0)."""
    if n_eval < 1:
        raise ValidationError("n_eval must be >= 1")
    x = oracle.sample_x(n_eval, np.random.default_rng(seed))
    return float(np.mean(decide(regime, x) == oracle.optimal_decision(x)))


def estimated_value(regime: Regime, oracle: TruthOracle, n_eval: int = 1000, seed=0) -> float:
    """Mean conditional outcome baseline(x) + D(x) * decision over fresh draws."""
    if n_eval < 1:
        raise ValidationError("n_eval must be >= 1")
    x = oracle.sample_x(n_eval, np.random.default_rng(seed))
    return float(np.mean(oracle.baseline(x) + oracle.contrast(x) * decide(regime, x)))


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    status: str  # "ok" or "failed"
    mse: float = float("nan")
    incorrect_zeros: float = float("nan")
    correct_zeros: float = float("nan")
    pcd: float = float("nan")
    estimated_value: float = float("nan")
    lam: float = float("nan")
    alpha: float = float("nan")
    c: float = float("nan")
    sweeps: int = 0
    converged: bool = False
    init_branch: str = ""
    error: str = ""
    beta: tuple = ()  # fitted coefficients (kept off the CSV)


@dataclass(frozen=True)
class SimulationReport:
    """Per-replicate rows plus mean / standard-error aggregates."""

    scenario: str
    method: str
    n: int
    d: int
    seed: int
    rows: tuple

    @property
    def n_ok(self):
        return sum(1 for r in self.rows if r.status == "ok")

    @property
    def n_fail(self):
        return len(self.rows) - self.n_ok

    def metric(self, name):
        return np.array([getattr(r, name) for r in self.rows if r.status == "ok"])

    def aggregate(self):
        out = {}
        for name in METRICS:
            vals = self.metric(name)
            if vals.size:
                mean = float(np.mean(vals))
                se = float(np.std(vals, ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
            else:
                mean, se = float("nan"), float("nan")
            out[name] = {"mean": mean, "se": se, "n_ok": self.n_ok, "n_fail": self.n_fail}
        return out

    def to_csv(self, path):
        cols = (
            ["replicate", "status"]
            + list(METRICS)
            + ["lambda", "alpha", "c", "sweeps", "converged", "init_branch", "error"]
        )
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for r in self.rows:
                writer.writerow(
                    [r.replicate, r.status]
                    + [repr(float(getattr(r, m))) for m in METRICS]
                    + [repr(float(r.lam)), repr(float(r.alpha)), repr(float(r.c)),
                       r.sweeps, int(r.converged), r.init_branch, r.error]
                )

    def to_json(self, path):
        payload = {
            "scenario": self.scenario,
            "method": self.method,
            "n": self.n,
            "d": self.d,
            "seed": self.seed,
            "reps": len(self.rows),
            "n_ok": self.n_ok,
            "n_fail": self.n_fail,
            "metrics": self.aggregate(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")

    def summary_table(self):
        agg = self.aggregate()
        lines = [
            f"scenario={self.scenario} method={self.method} n={self.n} d={self.d} "
            f"ok={self.n_ok} failed={self.n_fail}",
            f"{'metric':<18}{'mean':>12}{'se':>12}",
        ]
        for name in METRICS:
            lines.append(f"{name:<18}{agg[name]['mean']:>12.4f}{agg[name]['se']:>12.4f}")
        return "\n".join(lines)


_FIT_ERRORS = (
    DegenerateProblemError,
    DegenerateBaselineError,
    DivergenceError,
    OverlapError,
    ValidationError,
)


def run_single_replicate(
    spec, method, tuning, seed, r, fit_config=FitConfig(), n_eval=1000
) -> ReplicateRow:
    """Generate, tune, fit, and score one replicate (seed streams derived
    from (seed, replicate index, stage)).

    Grid-search fold fits run under the reduced CV_MAX_SWEEPS budget; the
    final refit uses ``fit_config`` unchanged.
    """
    try:
        data, oracle = generate(replace(spec, seed=[seed, r, 0]))
        prop = Propensity.constant(oracle.propensity)
        w = contrast_weights(data, prop, baseline="control-mean")
        single_cell = (
            tuning.lambda_grid is not None
            and len(tuning.lambda_grid) == 1
            and (method == "scal" or (tuning.alpha_grid is not None and len(tuning.alpha_grid) == 1))
        )
        if single_cell:
            lam = tuning.lambda_grid[0]
            alpha = float("nan") if method == "scal" else tuning.alpha_grid[0]
        else:
            cv_config = FitConfig(
                step=fit_config.step,
                max_sweeps=min(fit_config.max_sweeps, CV_MAX_SWEEPS),
                tol=fit_config.tol,
                init=fit_config.init,
            )
            lam, alpha, _ = cross_validate(
                data, w, tuning, seed=[seed, r, 1], method=method, prop=prop,
                fit_config=cv_config,
            )
        kernel = None if method == "scal" else SmoothingKernel(alpha)
        prob = PairwiseProblem(x=data.x, w=w.w, kernel=kernel, lam=lam)
        fit = fit_beta(prob, fit_config) if method == "smcal" else fit_beta_hinge(prob, fit_config)
        c = fit_threshold(data, w, fit.beta)
        regime = Regime(
            beta=fit.beta, c=c, alpha=None if method == "scal" else alpha, lam=lam
        )
        inc, corr = selection_counts(fit.beta, oracle.beta_star)
        return ReplicateRow(
            replicate=r,
            status="ok",
            mse=mse_normalized(fit.beta, oracle.beta_star),
            incorrect_zeros=float(inc),
            correct_zeros=float(corr),
            pcd=pcd(regime, oracle, n_eval, seed=[seed, r, 2]),
            estimated_value=estimated_value(regime, oracle, n_eval, seed=[seed, r, 3]),
            lam=lam,
            alpha=alpha,
            c=c,
            sweeps=fit.sweeps,
            converged=fit.converged,
            init_branch=fit.init_branch,
            beta=tuple(float(b) for b in fit.beta),
        )
    except _FIT_ERRORS as exc:
        return ReplicateRow(replicate=r, status="failed", error=f"{type(exc).__name__}: {exc}")


def _replicate_star(args):
    return run_single_replicate(*args)


def run_replications(
    spec: ScenarioSpec,
    method: str = "smcal",
    reps: int = 100,
    tuning: TuningSpec = TuningSpec(),
    seed: int = 0,
    threads: int = 1,
    fit_config: FitConfig = FitConfig(),
    n_eval: int = 1000,
) -> SimulationReport:
    """Run seeded replicates (in parallel when ``threads > 1``) and aggregate.

    Results are keyed by replicate index, so reports are identical for any
    thread count.  Failed replicates are recorded, not retried.
    """
    if reps < 1:
        raise ValidationError("reps must be >= 1")
    if method not in ("smcal", "scal"):
        raise ValidationError(f"method must be 'smcal' or 'scal', got {method!r}")
    tasks = [(spec, method, tuning, seed, r, fit_config, n_eval) for r in range(reps)]
    if threads > 1 and reps > 1:
        with multiprocessing.get_context("fork").Pool(threads) as pool:
            rows = pool.map(_replicate_star, tasks)
    else:
        rows = [_replicate_star(t) for t in tasks]
    rows.sort(key=lambda row: row.replicate)
    return SimulationReport(
        scenario=spec.id,
        method=method,
        n=spec.n,
        d=spec.d,
        seed=seed,
        rows=tuple(rows),
    )

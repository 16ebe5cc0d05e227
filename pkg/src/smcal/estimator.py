"""Scikit-learn style estimators wrapping the two-step fit.

``SMCAL`` fits the smoothed pairwise loss; ``SCAL`` is the hinge baseline.
Both learn a coefficient vector (one coordinate anchored at +/-1) and a
treatment threshold, and predict binary decisions::

    model = SMCAL().fit(X, y, treatment=a)
    model.predict(X_new)            # 0/1 decisions
    model.decision_function(X_new)  # beta^T x - c

When ``lambda_``/``alpha`` are not given they are selected by K-fold
cross-validation on held-out concordance (or held-out IPW value).
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .concordance import PairwiseProblem
from .data import Dataset, Propensity, contrast_weights
from .exceptions import ValidationError
from .optimizer import FitConfig, fit_beta, fit_beta_hinge
from .regime import Regime, fit_threshold
from .smoothing import SmoothingKernel
from .tuning import CV_MAX_SWEEPS, TuningSpec, cross_validate


def _resolve_propensity(spec):
    if isinstance(spec, Propensity):
        return spec
    if isinstance(spec, str):
        if spec == "empirical":
            return Propensity.empirical()
        raise ValidationError(f"unknown propensity spec {spec!r}")
    if np.isscalar(spec):
        return Propensity.constant(spec)
    return Propensity.vector(np.asarray(spec, dtype=float))


class SMCAL(BaseEstimator):
    """Individualized treatment regime via smoothed pairwise concordance.

    Parameters mirror the underlying pipeline: ``lambda_`` and ``alpha`` fix
    the penalty and smoothing scale (``None`` selects them by CV over
    ``lambda_grid`` x ``alpha_grid`` with ``folds`` folds and ``criterion``
    scoring); ``propensity`` is a constant, a per-subject vector, or
    ``"empirical"``; ``baseline`` is ``"zero"``, ``"control-mean"`` or a
    vector.  Fold fits during CV run under the reduced ``CV_MAX_SWEEPS``
    budget; the final refit uses ``max_sweeps``.  The fit is deterministic
    given ``random_state``.
    """

    def __init__(
        self,
        lambda_=None,
        alpha=None,
        propensity="empirical",
        baseline="control-mean",
        anchor=0,
        init="both",
        step="auto",
        max_sweeps=500,
        tol=1e-6,
        folds=5,
        criterion="concordance",
        lambda_grid=None,
        alpha_grid=None,
        random_state=0,
    ):
        self.lambda_ = lambda_
        self.alpha = alpha
        self.propensity = propensity
        self.baseline = baseline
        self.anchor = anchor
        self.init = init
        self.step = step
        self.max_sweeps = max_sweeps
        self.tol = tol
        self.folds = folds
        self.criterion = criterion
        self.lambda_grid = lambda_grid
        self.alpha_grid = alpha_grid
        self.random_state = random_state

    _method = "smcal"

    def _tuning_spec(self):
        lam_grid = (self.lambda_,) if self.lambda_ is not None else self.lambda_grid
        alpha_grid = (self.alpha,) if self.alpha is not None else self.alpha_grid
        return TuningSpec(
            lambda_grid=lam_grid,
            alpha_grid=alpha_grid,
            folds=self.folds,
            criterion=self.criterion,
        )

    def _fit_config(self):
        return FitConfig(step=self.step, max_sweeps=self.max_sweeps, tol=self.tol, init=self.init)

    def _fit_problem(self, prob, cfg):
        return fit_beta(prob, cfg)

    def fit(self, X, y, treatment=None, propensity=None):
        """Fit coefficients and threshold from (X, y, treatment)."""
        if treatment is None:
            raise ValidationError("fit requires the treatment indicator: fit(X, y, treatment=a)")
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=float).ravel()
        a = np.asarray(treatment, dtype=float).ravel()
        data = Dataset(y=y, a=a, x=X)
        prop = _resolve_propensity(self.propensity if propensity is None else propensity)
        w = contrast_weights(data, prop, baseline=self.baseline)
        cfg = self._fit_config()

        if self.lambda_ is not None and (self._method == "scal" or self.alpha is not None):
            lam = float(self.lambda_)
            alpha = None if self._method == "scal" else float(self.alpha)
            self.cv_table_ = None
        else:
            cv_cfg = FitConfig(
                step=self.step,
                max_sweeps=min(self.max_sweeps, CV_MAX_SWEEPS),
                tol=self.tol,
                init=self.init,
            )
            lam, alpha, table = cross_validate(
                data,
                w,
                self._tuning_spec(),
                seed=self.random_state,
                method=self._method,
                prop=prop,
                fit_config=cv_cfg,
                anchor=self.anchor,
            )
            self.cv_table_ = table
            if self._method == "scal":
                alpha = None

        kernel = None if alpha is None else SmoothingKernel(alpha)
        prob = PairwiseProblem(x=data.x, w=w.w, kernel=kernel, lam=lam, anchor=self.anchor)
        result = self._fit_problem(prob, cfg)
        c = fit_threshold(data, w, result.beta)

        self.lambda_selected_ = lam
        self.alpha_selected_ = alpha
        self.beta_ = result.beta
        self.c_ = c
        self.fit_result_ = result
        self.weights_ = w
        self.regime_ = Regime(beta=result.beta, c=c, alpha=alpha, lam=lam)
        self.n_features_in_ = data.d
        return self

    def decision_function(self, X):
        check_is_fitted(self, "beta_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValidationError(
                f"X has {X.shape[1]} features, estimator was fitted with {self.n_features_in_}"
            )
        return X @ self.beta_ - self.c_

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(int)


class SCAL(SMCAL):
    """Hinge-surrogate baseline with the same two-step interface as SMCAL."""

    _method = "scal"

    def __init__(
        self,
        lambda_=None,
        propensity="empirical",
        baseline="control-mean",
        anchor=0,
        init="both",
        max_sweeps=500,
        tol=1e-6,
        folds=5,
        criterion="concordance",
        lambda_grid=None,
        random_state=0,
    ):
        super().__init__(
            lambda_=lambda_,
            alpha=None,
            propensity=propensity,
            baseline=baseline,
            anchor=anchor,
            init=init,
            step="auto",
            max_sweeps=max_sweeps,
            tol=tol,
            folds=folds,
            criterion=criterion,
            lambda_grid=lambda_grid,
            alpha_grid=None,
            random_state=random_state,
        )

    def _fit_problem(self, prob, cfg):
        return fit_beta_hinge(prob, cfg)

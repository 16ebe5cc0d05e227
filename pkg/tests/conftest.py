import os

os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import numpy as np
import pytest

from smcal.concordance import PairwiseProblem
from smcal.smoothing import SmoothingKernel


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_problem(seed=0, n=10, d=5, alpha=2.0, lam=0.0, anchor=0, x_scale=1.0):
    """Seeded pairwise problem with a planted concordant direction."""
    rng = np.random.default_rng(seed)
    x = x_scale * rng.uniform(-1.0, 1.0, size=(n, d))
    beta_star = np.zeros(d)
    beta_star[0] = -1.0
    beta_star[min(1, d - 1)] = -0.8
    w = x @ beta_star + 0.5 * rng.standard_normal(n)
    return PairwiseProblem(x=x, w=w, kernel=SmoothingKernel(alpha), lam=lam, anchor=anchor)


@pytest.fixture
def problem():
    return make_problem()

"""Sigmoid smoothing of the pairwise-comparison indicator.

The kernel evaluates F(alpha * x) = 1 / (1 + exp(-alpha * x)) together with
its first derivative and a uniform bound on its second derivative.  Large
``alpha`` sharpens F toward the step function 1(x > 0).
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

# sup over x of |d^2/dx^2 logistic(x)| = 1 / (6 * sqrt(3)), attained where
# logistic(x) = (3 - sqrt(3)) / 6
LOGISTIC_SECOND_DERIV_SUP = 1.0 / (6.0 * np.sqrt(3.0))


def _split_scalar(x):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    return arr, np.ndim(x) == 0


@dataclass(frozen=True)
class SmoothingKernel:
    """Logistic smoother at scale ``alpha > 0``."""

    alpha: float

    def __post_init__(self):
        if not (np.isfinite(self.alpha) and self.alpha > 0):
            raise ValidationError(f"alpha must be positive and finite, got {self.alpha!r}")

    def f(self, x):
        """F(alpha * x), saturating to 0/1 without overflow.

        The exponential argument is kept <= 0 on both branches, so the result
        is bit-stable even for very large |alpha * x|.
        """
        z, scalar = _split_scalar(x)
        z = z * self.alpha
        e = np.exp(-np.abs(z))
        out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
        return float(out[0]) if scalar else out

    def f_prime(self, x):
        """d/dx F(alpha * x) = alpha * F'(alpha * x), an even function of x.

        Includes the chain-rule ``alpha`` factor: this is the derivative with
        respect to the raw margin x.  Computed as alpha * e / (1 + e)^2 with
        e = exp(-|alpha * x|) so symmetry holds exactly.
        """
        z, scalar = _split_scalar(x)
        e = np.exp(-np.abs(z * self.alpha))
        out = self.alpha * e / (1.0 + e) ** 2
        return float(out[0]) if scalar else out

    def f_second_bound(self):
        """Uniform bound on |d^2/dx^2 F(alpha * x)| = alpha^2 / (6 * sqrt(3))."""
        return self.alpha**2 * LOGISTIC_SECOND_DERIV_SUP

"""Periodization maps: smooth-or-piecewise changes of variables onto [0, 1).

Each map phi: [0, 1] -> [alpha, beta] satisfies phi(0) = alpha, phi(1/2) = beta
and the reflection symmetry phi(1/2 - x) = phi(1/2 + x), so that g(phi(x)) is a
continuous 1-periodic function of x for any continuous g on [alpha, beta].
Three families are provided:

- ``tent``:    piecewise linear, phi(x) = beta - |2 (beta - alpha) (1/2 - x)|
- ``spline4``: piecewise cubic with matching first and second derivatives at
               the fold, vanishing derivative at 0 and 1/2
- ``cosine``:  phi(x) = (alpha - beta)/2 * cos(2 pi x) + (alpha + beta)/2

Inverses map [alpha, beta] back into the left half-interval [0, 1/2].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatchError

__all__ = ["PeriodizationMap", "ProductPeriodization", "KINDS", "fold_half"]

KINDS = ("tent", "spline4", "cosine")

_INV_TOL = 1e-14


def fold_half(x: np.ndarray) -> np.ndarray:
    """Reduce points of [0, 1) to the left half [0, 1/2] by the reflection x -> 1 - x."""
    y = np.asarray(x, dtype=np.float64) % 1.0
    return np.where(y <= 0.5, y, 1.0 - y)


@dataclass(frozen=True)
class PeriodizationMap:
    """One periodizing change of variables on an interval [alpha, beta].

    Attributes
    ----------
    kind : str
        One of ``"tent"``, ``"spline4"``, ``"cosine"``.
    alpha, beta : float
        Interval endpoints, alpha < beta.
    """

    kind: str
    alpha: float
    beta: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown periodization kind {self.kind!r}")
        if not self.beta > self.alpha:
            raise ValueError("beta must exceed alpha")

    # -- forward ---------------------------------------------------------

    def forward(self, x) -> np.ndarray:
        """phi(x), extended 1-periodically; accepts any real x."""
        x = np.asarray(x, dtype=np.float64) % 1.0
        c = self.beta - self.alpha
        if self.kind == "tent":
            return self.beta - np.abs(2.0 * c * (0.5 - x))
        if self.kind == "spline4":
            left = c * x * x * (12.0 - 16.0 * x) + self.alpha
            right = (
                16.0 * c * x**3 - 36.0 * c * x**2 + 24.0 * c * x
                + 5.0 * self.alpha - 4.0 * self.beta
            )
            return np.where(x <= 0.5, left, right)
        # cosine
        return 0.5 * (self.alpha - self.beta) * np.cos(2.0 * np.pi * x) + 0.5 * (
            self.alpha + self.beta
        )

    def derivative(self, x) -> np.ndarray:
        """phi'(x) under the same periodic extension.

        The tent map is not differentiable at the fold points; there the
        value of the adjacent right branch is returned (+2(beta-alpha) on
        [0, 1/2), -2(beta-alpha) on [1/2, 1)).
        """
        x = np.asarray(x, dtype=np.float64) % 1.0
        c = self.beta - self.alpha
        if self.kind == "tent":
            return np.where(x < 0.5, 2.0 * c, -2.0 * c)
        if self.kind == "spline4":
            left = 24.0 * c * x * (1.0 - 2.0 * x)
            right = 48.0 * c * x**2 - 72.0 * c * x + 24.0 * c
            return np.where(x <= 0.5, left, right)
        return np.pi * c * np.sin(2.0 * np.pi * x)

    # -- inverse ---------------------------------------------------------

    def inverse(self, t) -> np.ndarray:
        """The left-branch inverse: phi^{-1}: [alpha, beta] -> [0, 1/2]."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < self.alpha - 1e-12) or np.any(t > self.beta + 1e-12):
            raise ValueError("inverse argument outside [alpha, beta]")
        c = self.beta - self.alpha
        t = np.clip(t, self.alpha, self.beta)
        if self.kind == "tent":
            return (t - self.alpha) / (2.0 * c)
        if self.kind == "cosine":
            arg = np.clip((2.0 * t - self.alpha - self.beta) / (self.alpha - self.beta), -1.0, 1.0)
            return np.arccos(arg) / (2.0 * np.pi)
        return self._spline_inverse(t)

    def _spline_inverse(self, t: np.ndarray) -> np.ndarray:
        """Solve -16 c x^3 + 12 c x^2 + alpha = t on [0, 1/2] by safeguarded Newton.

        With u = (t - alpha)/c the equation reads 12 x^2 - 16 x^3 = u, and in
        the distance h = 1/2 - x it is 12 h^2 - 16 h^3 = 1 - u.  Evaluating
        the residual in the x form near x = 1/2 cancels catastrophically
        (both terms are ~1 while phi' vanishes), so targets in the upper half
        are solved in the h form, whose right-hand side (beta - t)/c is exact.
        Either way the unknown lies in [0, 1/4] where the polynomial is
        increasing and convex; Newton steps leaving the maintained bisection
        bracket fall back to its midpoint.
        """
        c = self.beta - self.alpha
        scalar = t.ndim == 0
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        u = np.clip((t - self.alpha) / c, 0.0, 1.0)
        upper = u > 0.5
        w = np.where(upper, (self.beta - t) / c, u)
        v = np.sqrt(w / 12.0)  # quadratic-term initial guess, exact at w = 0
        lo = np.zeros_like(w)
        hi = np.full_like(w, 0.25)  # 12 v^2 - 16 v^3 = 1/2 exactly at v = 1/4
        for _ in range(80):
            val = v * v * (12.0 - 16.0 * v) - w
            lo = np.where(val < 0.0, np.maximum(lo, v), lo)
            hi = np.where(val > 0.0, np.minimum(hi, v), hi)
            deriv = 24.0 * v * (1.0 - 2.0 * v)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(deriv > 0.0, val / np.where(deriv > 0.0, deriv, 1.0), 0.0)
            vn = v - step
            bad = ((vn < lo) | (vn > hi) | (deriv <= 0.0)) & (val != 0.0)
            vn = np.where(bad, 0.5 * (lo + hi), np.where(val == 0.0, v, vn))
            if np.all(np.abs(vn - v) <= _INV_TOL * (1.0 + v)):
                v = vn
                break
            v = vn
        x = np.where(upper, 0.5 - v, v)
        return float(x[0]) if scalar else x


@dataclass(frozen=True)
class ProductPeriodization:
    """Componentwise periodization of a box, one map per coordinate."""

    maps: tuple[PeriodizationMap, ...]

    @classmethod
    def from_bounds(cls, kinds: Iterable[str] | str, bounds: Sequence) -> "ProductPeriodization":
        bounds = np.asarray(bounds, dtype=np.float64).reshape(-1, 2)
        if isinstance(kinds, str):
            kinds = [kinds] * len(bounds)
        kinds = list(kinds)
        if len(kinds) != len(bounds):
            raise DimensionMismatchError("one periodization kind per interval required")
        return cls(tuple(PeriodizationMap(k, a, b) for k, (a, b) in zip(kinds, bounds)))

    @property
    def dim(self) -> int:
        return len(self.maps)

    def forward(self, ys: np.ndarray) -> np.ndarray:
        ys = np.asarray(ys, dtype=np.float64)
        out = np.empty_like(ys)
        for j, m in enumerate(self.maps):
            out[..., j] = m.forward(ys[..., j])
        return out

    def inverse(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        out = np.empty_like(ts)
        for j, m in enumerate(self.maps):
            out[..., j] = m.inverse(ts[..., j])
        return out

    def jacobian_abs(self, ys: np.ndarray) -> np.ndarray:
        """prod_j |phi_j'(y_j)| along the last axis."""
        ys = np.asarray(ys, dtype=np.float64)
        out = np.ones(ys.shape[:-1], dtype=np.float64)
        for j, m in enumerate(self.maps):
            out *= np.abs(m.derivative(ys[..., j]))
        return out

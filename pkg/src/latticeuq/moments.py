"""Moments of the solution over the random parameters.

The n-th moment  M_n(t) = int u(t, xi)^n rho(xi) d xi  is computed by one more
sparse FFT: the integrand

    w_n(x, y) = u-hat(phi_1(x), phi_xi(y))^n * rho(phi_xi(y)) * prod_j |phi_j'(y_j)|

is periodic on [0, 1)^{1 + d_xi}, and integrating its expansion over y keeps
exactly the frequencies (k, 0).  Each periodization traverses its interval
twice, so the retained coefficients are scaled by 2^{-d_xi}.  The result is a
univariate trigonometric polynomial in the folded spatial variable.

For the uniform density composed with tent maps the weight factor is exactly
the constant 2^{d_xi}; that case skips the pointwise weight evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError
from .lattice import Rank1Lattice
from .periodize import PeriodizationMap, fold_half
from .sfft import BlackBoxFn, SfftConfig, sfft
from .solver import SolutionRep, _SolutionIntegrand
from .trig import SparseTrigPoly, symmetrize_reflections

__all__ = ["MomentRep", "moment", "evaluate_moment", "uniform_density"]


def uniform_density(bounds) -> Callable[[np.ndarray], np.ndarray]:
    """The uniform probability density on a box, vectorized over rows."""
    bounds = np.asarray(bounds, dtype=np.float64).reshape(-1, 2)
    value = float(1.0 / np.prod(bounds[:, 1] - bounds[:, 0]))

    def rho(xi: np.ndarray) -> np.ndarray:
        xi = np.asarray(xi, dtype=np.float64)
        return np.full(xi.shape[:-1], value)

    rho.is_uniform = True  # type: ignore[attr-defined]
    return rho


@dataclass
class MomentRep:
    """A detected moment curve: univariate spectrum in the folded spatial variable."""

    order: int
    poly: SparseTrigPoly
    spatial_map: PeriodizationMap
    total_samples: int


class _MomentIntegrand:
    """w_n at periodized points; reuses the solution integrand's lattice path."""

    def __init__(self, rep: SolutionRep, order: int, rho: Callable, constant_weight: float | None):
        self.base = rep.integrand()
        self.rep = rep
        self.order = order
        self.rho = rho
        self.constant_weight = constant_weight
        if getattr(self.base, "on_lattice", None) is None:
            self.on_lattice = None

    @property
    def dim(self) -> int:
        return 1 + self.rep.d_xi

    def _weight_points(self, ys: np.ndarray) -> np.ndarray:
        if self.constant_weight is not None:
            return np.full(len(ys), self.constant_weight)
        maps = self.rep.random_maps
        xi = maps.forward(ys)
        return np.asarray(self.rho(xi), dtype=np.float64) * maps.jacobian_abs(ys)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        vals = self.base(pts) ** self.order
        return vals * self._weight_points(pts[:, 1:])

    def on_lattice(self, lat: Rank1Lattice, anchor: np.ndarray) -> np.ndarray:
        vals = self.base.on_lattice(lat, anchor) ** self.order
        if self.constant_weight is not None:
            return vals * self.constant_weight
        M, z = lat.M, lat.z
        d_xi = self.rep.d_xi
        j = np.arange(M, dtype=np.int64)
        ys = np.empty((M, d_xi), dtype=np.float64)
        t_lat = lat.dim
        anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
        for col in range(d_xi):
            if col + 1 < t_lat:
                ys[:, col] = ((j * z[col + 1]) % M) / float(M)
            else:
                ys[:, col] = anchor[col + 1 - t_lat]
        return vals * self._weight_points(ys)


def moment(
    rep: SolutionRep,
    order: int,
    density: Callable[[np.ndarray], np.ndarray] | None,
    cfg: SfftConfig,
    symmetrize: bool = True,
) -> MomentRep:
    """Detect the order-th moment of the solution surrogate over the parameters.

    ``density`` is a vectorized probability density on the parameter box, or
    None for the uniform one.  The returned spectrum is already scaled by
    2^{-d_xi} and restricted to the spatial line.
    """
    if order < 1:
        raise ValueError("moment order must be a positive integer")
    rho = density if density is not None else uniform_density(rep.bounds[1:])
    constant_weight = None
    if getattr(rho, "is_uniform", False) and all(
        m.kind == "tent" for m in rep.random_maps.maps
    ):
        constant_weight = float(2.0 ** rep.d_xi * rho(rep.bounds[1:, 0][None, :])[0] * np.prod(
            rep.bounds[1:, 1] - rep.bounds[1:, 0]
        ))
    integrand = _MomentIntegrand(rep, order, rho, constant_weight)
    res = sfft(BlackBoxFn(integrand.dim, integrand), cfg)
    poly = res.poly
    if symmetrize and len(poly):
        poly = symmetrize_reflections(poly, [1] * (1 + rep.d_xi))
    keep = np.all(poly.freqs[:, 1:] == 0, axis=1)
    line = SparseTrigPoly(
        1,
        poly.freqs[keep][:, :1],
        poly.coeffs[keep] * 2.0 ** (-rep.d_xi),
    ) if np.any(keep) else SparseTrigPoly(1, np.empty((0, 1), dtype=np.int64), [])
    return MomentRep(order, line, rep.spatial_map, res.total_samples)


def evaluate_moment(mrep: MomentRep, ts: np.ndarray) -> np.ndarray:
    """The moment curve at spatial points ts in [alpha_1, beta_1]."""
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    w = np.asarray(mrep.spatial_map.inverse(ts), dtype=np.float64)
    if len(mrep.poly) == 0:
        return np.zeros(len(ts))
    return mrep.poly.evaluate_batch(w[:, None]).real

"""Sparse trigonometric surrogate for a random-coefficient two-point BVP.

Approximates the full parametric solution u(eta, xi) of

    -d/d_eta ( a(eta, xi) du/d_eta ) = f(eta),
    u(alpha_1, xi) = u(beta_1, xi) = 0,

for eta in [alpha_1, beta_1] and a vector xi of random parameters in a box.
The formal solution is u = u_1 + c_1(xi) u_2 with

    u_1(t, xi) = int_alpha^t Fb(eta) / a(eta, xi) d eta,
    u_2(t, xi) = int_alpha^t     1 / a(eta, xi) d eta,
    c_1(xi)    = -u_1(beta_1, xi) / u_2(beta_1, xi),

where Fb(eta) = -int_alpha^eta f(tau) d tau.  Each integrand is composed with
periodizing maps in every variable, approximated by a sparse FFT, and then
antidifferentiated in closed form; the resulting coefficient families evaluate
u-hat anywhere via the left-branch inverse maps.

The sampled integrands are symmetric under the reflection x -> 1 - x of every
periodized variable (even in the random variables and in eta for the tent map,
odd in eta for the smooth maps, whose derivative flips sign).  Detected
spectra are projected onto that symmetry, which both denoises them and makes
all downstream integrands (the boundary ratio c_1, moments, and the solution
itself) evaluable on lattice nodes by plain FFTs with at most a sign flip.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CoefficientPositivityError,
    DegenerateBoundaryError,
    DimensionMismatchError,
)
from .lattice import Rank1Lattice
from .periodize import PeriodizationMap, ProductPeriodization, fold_half
from .sfft import BlackBoxFn, SfftConfig, SfftResult, sfft
from .trig import SparseTrigPoly, dump_coefficients, load_coefficients, symmetrize_reflections

__all__ = [
    "OdeProblem",
    "RhsAntiderivative",
    "approximate_rhs_antiderivative",
    "DeperiodizedFamily",
    "antiderivative_and_deperiodize",
    "approximate_v1",
    "approximate_v2",
    "approximate_c1",
    "SolutionRep",
    "solve",
    "evaluate_solution",
    "evaluate_solution_batch",
    "save_solution",
    "load_solution",
]

_DIV_GUARD = 1e-14


@dataclass(frozen=True)
class OdeProblem:
    """Problem data for the boundary value problem.

    Attributes
    ----------
    f : vectorized right-hand side, eta-array -> array.
    a : vectorized diffusion coefficient, (eta (n,), xi (n, d_xi)) -> (n,).
        Must be strictly positive on its domain; the solver checks every
        sampled value.
    bounds : array (1 + d_xi, 2); row 0 is the spatial interval, the rest are
        the ranges of the random variables.
    d_xi : number of random variables.
    f_antideriv : optional closed-form antiderivative of f vanishing at
        alpha_1 (used by reference solvers; the surrogate never needs it).
    """

    f: Callable[[np.ndarray], np.ndarray]
    a: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bounds: np.ndarray
    d_xi: int
    f_antideriv: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        bounds = np.asarray(self.bounds, dtype=np.float64).reshape(-1, 2)
        if len(bounds) != 1 + self.d_xi:
            raise DimensionMismatchError("bounds must have 1 + d_xi rows")
        if np.any(bounds[:, 1] <= bounds[:, 0]):
            raise ValueError("each bounds row must be increasing")
        object.__setattr__(self, "bounds", bounds)

    @property
    def spatial_bounds(self) -> tuple[float, float]:
        return float(self.bounds[0, 0]), float(self.bounds[0, 1])


# ---------------------------------------------------------------------------
# right-hand side antiderivative


@dataclass(frozen=True)
class RhsAntiderivative:
    """Closed-form antiderivative Fb(eta) = -int_alpha^eta f of the periodized RHS.

    Built from the Fourier coefficients a_hat of the periodized right-hand
    side:  Fb(eta) = -mean * w - sum_k osc_c[k] (e^{2 pi i k w} - 1)  with
    w = phi^{-1}(eta) in [0, 1/2].  For the tent map the coefficients carry
    the constant factor 2 (beta - alpha) in place of the (discontinuous)
    sign-flipping phi'; for the smooth maps phi' enters the sampled values.
    """

    spatial_map: PeriodizationMap
    mean: complex
    osc_k: np.ndarray
    osc_c: np.ndarray

    def evaluate(self, eta) -> np.ndarray:
        w = np.asarray(self.spatial_map.inverse(eta), dtype=np.float64)
        out = -self.mean * w.astype(np.complex128)
        if len(self.osc_k):
            phases = np.exp(2j * np.pi * np.multiply.outer(w, self.osc_k.astype(np.float64)))
            out = out - (phases - 1.0) @ self.osc_c
        return out

    def grid_fold_values(self, M: int) -> np.ndarray:
        """Fb at the folded grid points w_m = min(m, M-m)/M, m = 0..M-1."""
        m = np.arange(M, dtype=np.int64)
        w = np.minimum(m, M - m) / float(M)
        out = -self.mean * w.astype(np.complex128)
        if len(self.osc_k) == 0:
            return out
        if M > 2 * int(np.abs(self.osc_k).max()):
            buf = np.zeros(M, dtype=np.complex128)
            np.add.at(buf, self.osc_k % M, self.osc_c)
            g = np.fft.ifft(buf) * M
            gfold = g[np.minimum(m, M - m)]
        else:
            gfold = np.exp(2j * np.pi * np.multiply.outer(w, self.osc_k.astype(np.float64))) @ self.osc_c
        return out - (gfold - self.osc_c.sum())


def approximate_rhs_antiderivative(
    f: Callable[[np.ndarray], np.ndarray], spatial_map: PeriodizationMap, n: int
) -> RhsAntiderivative:
    """Detect the periodized RHS on a dense 1-D grid and antidifferentiate it.

    Samples the periodized right-hand side at 2n+1 equispaced points, takes
    the DFT, and forms the antiderivative coefficients a_hat_k / (2 pi i k).
    """
    n_grid = 2 * n + 1
    grid = np.arange(n_grid, dtype=np.float64) / n_grid
    eta = spatial_map.forward(grid)
    if spatial_map.kind == "tent":
        factor = 2.0 * (spatial_map.beta - spatial_map.alpha)
        samples = np.asarray(f(eta), dtype=np.complex128)
    else:
        factor = 1.0
        samples = np.asarray(f(eta), dtype=np.complex128) * spatial_map.derivative(grid)
    ahat = np.fft.fft(samples) / n_grid
    ks = np.concatenate([np.arange(0, n + 1), np.arange(-n, 0)])
    keep = np.abs(ahat) >= np.finfo(np.float64).eps * 100 * max(np.abs(ahat).max(), 1.0)
    keep[0] = True
    osc = keep & (ks != 0)
    order = np.argsort(ks[osc])
    osc_k = ks[osc][order].astype(np.int64)
    osc_c = (factor * ahat[osc] / (2j * np.pi * ks[osc]))[order]
    return RhsAntiderivative(spatial_map, complex(factor * ahat[0]), osc_k, osc_c)


# ---------------------------------------------------------------------------
# deperiodized coefficient families


class DeperiodizedFamily:
    """Closed-form antiderivative of a periodized integrand, in folded coordinates.

    Holds one coefficient per frequency (k, l) of the detected integrand.  In
    the left-branch coordinates w = (w_x, w_y) with w_x = phi_1^{-1}(t) and
    w_y = phi_xi^{-1}(xi), the represented function is

        sum_{k != 0} coeff(k, l) (e^{2 pi i k w_x} - 1) e^{2 pi i <l, w_y>}
        + w_x * sum_{l} coeff(0, l) e^{2 pi i <l, w_y>},

    i.e. rows with k = 0 hold the linear part.  ``x_parity`` (+1 even,
    -1 odd, 0 unknown) and ``y_symmetric`` record reflection symmetries of the
    coefficients; the lattice fast paths require them.
    """

    def __init__(
        self,
        dim: int,
        freqs: np.ndarray,
        coeffs: np.ndarray,
        x_parity: int = 0,
        y_symmetric: bool = False,
    ):
        if dim < 2:
            raise DimensionMismatchError("a family needs the spatial dim plus at least one xi")
        poly = SparseTrigPoly(dim, freqs, coeffs)  # canonical order + validation
        self.dim = dim
        self.freqs = poly.freqs
        self.coeffs = poly.coeffs
        self.x_parity = int(x_parity)
        self.y_symmetric = bool(y_symmetric)
        osc = self.freqs[:, 0] != 0
        self._osc = SparseTrigPoly(dim, self.freqs[osc], self.coeffs[osc]) if np.any(osc) else None
        lin_rows = self.freqs[~osc][:, 1:]
        lin_coeffs = self.coeffs[~osc]
        self._lin = _tail_poly(dim - 1, lin_rows, lin_coeffs)
        self._correction = self._build_correction()

    def _build_correction(self) -> SparseTrigPoly | None:
        """The y-polynomial sum_k coeff(k, l) subtracted by the '-1' terms."""
        if self._osc is None:
            return None
        tails, inv = np.unique(self._osc.freqs[:, 1:], axis=0, return_inverse=True)
        sums = np.zeros(len(tails), dtype=np.complex128)
        np.add.at(sums, inv, self._osc.coeffs)
        keep = np.abs(sums) > 0.0
        if not np.any(keep):
            return None
        return _tail_poly(self.dim - 1, tails[keep], sums[keep])

    @property
    def n_terms(self) -> int:
        return len(self.coeffs)

    def evaluate_batch(self, w: np.ndarray) -> np.ndarray:
        """Evaluate at folded points w in [0, 1/2]^dim (rows)."""
        w = np.asarray(w, dtype=np.float64)
        if w.ndim != 2 or w.shape[1] != self.dim:
            raise DimensionMismatchError("points do not match family dim")
        out = np.zeros(len(w), dtype=np.complex128)
        if self._osc is not None:
            out += self._osc.evaluate_batch(w)
        if self._correction is not None:
            out -= self._correction.evaluate_batch(w[:, 1:])
        if self._lin is not None:
            out += w[:, 0] * self._lin.evaluate_batch(w[:, 1:])
        return out

    def boundary_poly(self) -> SparseTrigPoly | None:
        """The y-polynomial t -> value at w_x = 1/2 (i.e. at eta = beta_1)."""
        terms: dict = {}
        if self._osc is not None:
            k = self._osc.freqs[:, 0]
            fac = np.where(k % 2 == 0, 0.0, -2.0)  # e^{pi i k} - 1
            tails, inv = np.unique(self._osc.freqs[:, 1:], axis=0, return_inverse=True)
            sums = np.zeros(len(tails), dtype=np.complex128)
            np.add.at(sums, inv, self._osc.coeffs * fac)
            for row, v in zip(tails, sums):
                terms[tuple(int(x) for x in row)] = v
        if self._lin is not None:
            for row, v in zip(self._lin.freqs, self._lin.coeffs):
                key = tuple(int(x) for x in row)
                terms[key] = terms.get(key, 0.0) + 0.5 * v
        terms = {k: v for k, v in terms.items() if v != 0}
        if not terms:
            return None
        return SparseTrigPoly.from_terms(self.dim - 1, terms)

    # -- lattice fast path -------------------------------------------------

    def on_lattice(self, lat: Rank1Lattice, anchor_fold: np.ndarray) -> np.ndarray:
        """Values at lattice nodes (x = dim 0 on the lattice), trailing dims anchored.

        ``anchor_fold`` holds already-folded anchor coordinates in [0, 1/2].
        Requires the symmetry flags: even/odd x-coefficients and even
        y-coefficients make evaluation at folded nodes equal plain lattice
        evaluation up to a per-node sign.
        """
        if self.x_parity == 0 or not self.y_symmetric:
            raise ValueError("lattice fast path requires known reflection symmetries")
        M, z = lat.M, lat.z
        j = np.arange(M, dtype=np.int64)
        jx = (j * z[0]) % M
        out = np.zeros(M, dtype=np.complex128)
        if self._osc is not None:
            vals = _poly_on_lattice_offset(self._osc, lat, anchor_fold, offset=0)
            if self.x_parity < 0:
                vals = np.where(jx * 2 <= M, vals, -vals)
            out += vals
        if self._correction is not None:
            out -= _poly_on_lattice_offset(self._correction, lat, anchor_fold, offset=1)
        if self._lin is not None:
            wx = np.minimum(jx, M - jx) / float(M)
            out += wx * _poly_on_lattice_offset(self._lin, lat, anchor_fold, offset=1)
        return out


def _tail_poly(dim: int, rows: np.ndarray, coeffs: np.ndarray) -> SparseTrigPoly | None:
    if len(coeffs) == 0:
        return None
    return SparseTrigPoly(dim, rows, coeffs)


def _poly_on_lattice_offset(
    p: SparseTrigPoly, lat: Rank1Lattice, anchor: np.ndarray, offset: int
) -> np.ndarray:
    """Lattice values of p when p spans ambient dims [offset, offset + p.dim).

    Lattice dims cover ambient [0, lat.dim); the remaining ambient dims are
    fixed at ``anchor`` (values already in final coordinates).
    """
    if offset == 1 and lat.dim == 1:
        # pure-anchor evaluation: constant across nodes
        val = p.evaluate(np.asarray(anchor, dtype=np.float64))
        return np.full(lat.M, val, dtype=np.complex128)
    n_act = lat.dim - offset
    coeffs = p.coeffs
    if p.dim > n_act:
        anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
        coeffs = coeffs * np.exp(2j * np.pi * (p.freqs[:, n_act:] @ anchor[: p.dim - n_act]))
    res = (p.freqs[:, :n_act] @ lat.z[offset:]) % lat.M
    buf = np.bincount(res, weights=coeffs.real, minlength=lat.M).astype(np.complex128)
    buf += 1j * np.bincount(res, weights=coeffs.imag, minlength=lat.M)
    return np.fft.ifft(buf) * lat.M


def antiderivative_and_deperiodize(
    vhat: SparseTrigPoly, x_parity: int = 0, y_symmetric: bool = False
) -> DeperiodizedFamily:
    """Antidifferentiate a detected integrand along x and switch to folded coordinates.

    Oscillatory coefficients become vhat(k, l) / (2 pi i k); the k = 0 rows
    are kept as the linear part.  Evaluation composes with the left-branch
    inverse maps, see :class:`DeperiodizedFamily`.
    """
    k = vhat.freqs[:, 0]
    coeffs = vhat.coeffs.copy()
    nz = k != 0
    coeffs[nz] = coeffs[nz] / (2j * np.pi * k[nz])
    return DeperiodizedFamily(vhat.dim, vhat.freqs, coeffs, x_parity, y_symmetric)


# ---------------------------------------------------------------------------
# sampled integrands

_NODE_CHUNK = 1 << 19


class _CoeffNodeEval:
    """Evaluates a(eta, xi) at lattice nodes, one chunk of node indices at a time."""

    def __init__(self, problem: OdeProblem, random_maps: ProductPeriodization):
        self.problem = problem
        self.random_maps = random_maps

    def chunk(
        self,
        eta: np.ndarray,
        j: np.ndarray,
        z: np.ndarray,
        M: int,
        anchor: np.ndarray,
    ) -> np.ndarray:
        d_xi = self.problem.d_xi
        t_lat = len(z)  # ambient dims on the lattice (incl. x)
        xi = np.empty((len(j), d_xi), dtype=np.float64)
        for col in range(d_xi):
            if col + 1 < t_lat:
                y = ((j * z[col + 1]) % M) / float(M)
                xi[:, col] = self.random_maps.maps[col].forward(y)
            else:
                xi[:, col] = self.random_maps.maps[col].forward(anchor[col + 1 - t_lat])
        return _checked_a(self.problem, eta, xi)


class _SeparableCoeffNodeEval(_CoeffNodeEval):
    """Fast path for a(eta, xi) = a0 + sum_c [xi_{2c-1} cos(c pi eta) + xi_{2c} sin(c pi eta)] / c^gamma.

    Uses the angle-sum recursion cos/sin(c pi eta) from cos/sin(pi eta), so one
    trig evaluation pair per node covers every harmonic.
    """

    def __init__(self, problem, random_maps, a0: float, gamma: float):
        super().__init__(problem, random_maps)
        self.a0 = float(a0)
        self.gamma = float(gamma)

    def chunk(self, eta, j, z, M, anchor):
        d_xi = self.problem.d_xi
        t_lat = len(z)
        acc = np.full(len(j), self.a0, dtype=np.float64)
        ang = np.pi * eta
        cos_b, sin_b = np.cos(ang), np.sin(ang)
        cos_c, sin_c = cos_b.copy(), sin_b.copy()
        for c in range(1, d_xi // 2 + 1):
            if c > 1:
                cos_c, sin_c = cos_c * cos_b - sin_c * sin_b, sin_c * cos_b + cos_c * sin_b
            invc = float(c) ** -self.gamma
            for which, table in ((2 * c - 2, cos_c), (2 * c - 1, sin_c)):
                if which + 1 < t_lat:
                    y = ((j * z[which + 1]) % M) / float(M)
                    xi_col = self.random_maps.maps[which].forward(y)
                    acc += (invc * xi_col) * table
                else:
                    xi_val = float(self.random_maps.maps[which].forward(anchor[which + 1 - t_lat]))
                    acc += (invc * xi_val) * table
        if np.any(acc <= 0.0):
            raise CoefficientPositivityError(
                "diffusion coefficient must be strictly positive at every sample"
            )
        return acc


def _checked_a(problem: OdeProblem, eta: np.ndarray, xi: np.ndarray) -> np.ndarray:
    vals = np.asarray(problem.a(eta, xi), dtype=np.float64)
    if np.any(vals <= 0.0):
        raise CoefficientPositivityError(
            "diffusion coefficient must be strictly positive at every sample"
        )
    return vals


def _make_coeff_eval(problem: OdeProblem, random_maps: ProductPeriodization) -> _CoeffNodeEval:
    profile = getattr(problem.a, "cosine_sine_profile", None)
    if profile is not None and problem.d_xi % 2 == 0:
        a0, gamma = profile()
        return _SeparableCoeffNodeEval(problem, random_maps, a0, gamma)
    return _CoeffNodeEval(problem, random_maps)


class _VIntegrand:
    """Periodized integrand of u_1 (with Fb) or u_2 (without), lattice-aware."""

    def __init__(
        self,
        problem: OdeProblem,
        spatial_map: PeriodizationMap,
        random_maps: ProductPeriodization,
        fbreve: RhsAntiderivative | None,
    ):
        self.problem = problem
        self.spatial_map = spatial_map
        self.random_maps = random_maps
        self.fbreve = fbreve
        self.coeff_eval = _make_coeff_eval(problem, random_maps)
        self.tent = spatial_map.kind == "tent"
        self.tent_factor = 2.0 * (spatial_map.beta - spatial_map.alpha)
        self._fgrid_memo: dict[int, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return 1 + self.problem.d_xi

    def _factor(self, x: np.ndarray) -> np.ndarray | float:
        if self.tent:
            return self.tent_factor
        return self.spatial_map.derivative(x)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        x = pts[:, 0]
        eta = self.spatial_map.forward(x)
        xi = self.random_maps.forward(pts[:, 1:])
        aval = _checked_a(self.problem, eta, xi)
        num = self._factor(x)
        if self.fbreve is not None:
            num = num * self.fbreve.evaluate(eta)
        return num / aval

    def on_lattice(self, lat: Rank1Lattice, anchor: np.ndarray) -> np.ndarray:
        M, z = lat.M, lat.z
        fgrid = None
        if self.fbreve is not None:
            fgrid = self._fgrid_memo.get(M)
            if fgrid is None:
                if len(self._fgrid_memo) >= 24:  # anchors revisit each plan lattice
                    self._fgrid_memo.pop(next(iter(self._fgrid_memo)))
                fgrid = self.fbreve.grid_fold_values(M)
                self._fgrid_memo[M] = fgrid
        out = np.empty(M, dtype=np.complex128)
        for lo in range(0, M, _NODE_CHUNK):
            j = np.arange(lo, min(M, lo + _NODE_CHUNK), dtype=np.int64)
            jx = (j * z[0]) % M
            x = jx / float(M)
            eta = self.spatial_map.forward(x)
            aval = self.coeff_eval.chunk(eta, j, z, M, np.asarray(anchor, dtype=np.float64))
            num = self._factor(x)
            if fgrid is not None:
                num = num * fgrid[np.minimum(jx, M - jx)]
            out[lo : lo + len(j)] = num / aval
        return out


class _SolutionIntegrand:
    """u-hat composed with the periodizations, evaluated from its families.

    Used by the boundary-coefficient stage (as a ratio at w_x = 1/2), by the
    moment stage (raised to a power and weighted), and by re-approximation of
    the solution itself.  Requires symmetrized families.
    """

    def __init__(
        self,
        u1: DeperiodizedFamily,
        u2: DeperiodizedFamily,
        c1: SparseTrigPoly,
        random_maps: ProductPeriodization,
    ):
        self.u1 = u1
        self.u2 = u2
        self.c1 = c1
        self.random_maps = random_maps
        if u1.x_parity == 0 or u2.x_parity == 0 or not (u1.y_symmetric and u2.y_symmetric):
            self.on_lattice = None  # fall back to pointwise sampling

    @property
    def dim(self) -> int:
        return 1 + self.c1.dim

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        w = fold_half(np.asarray(pts, dtype=np.float64))
        vals = self.u1.evaluate_batch(w)
        c1v = self.c1.evaluate_batch(w[:, 1:])
        vals += c1v * self.u2.evaluate_batch(w)
        return vals

    def on_lattice(self, lat: Rank1Lattice, anchor: np.ndarray) -> np.ndarray:
        anchor_fold = fold_half(np.asarray(anchor, dtype=np.float64))
        vals = self.u1.on_lattice(lat, anchor_fold)
        c1v = _poly_on_lattice_offset(self.c1, lat, anchor_fold, offset=1)
        vals += c1v * self.u2.on_lattice(lat, anchor_fold)
        return vals


class _BoundaryRatioIntegrand:
    """-u_1(beta_1, .) / u_2(beta_1, .), the integrand detecting c_1(xi)."""

    def __init__(
        self,
        u1: DeperiodizedFamily,
        u2: DeperiodizedFamily,
        random_maps: ProductPeriodization,
    ):
        num = u1.boundary_poly()
        den = u2.boundary_poly()
        if den is None:
            raise DegenerateBoundaryError("u_2 vanishes identically at the right endpoint")
        self.num = num
        self.den = den
        self.symmetric = u1.y_symmetric and u2.y_symmetric
        if not self.symmetric:
            self.on_lattice = None  # fall back to pointwise sampling
        self.d_xi = random_maps.dim

    @property
    def dim(self) -> int:
        return self.d_xi

    def _ratio(self, numv: np.ndarray, denv: np.ndarray) -> np.ndarray:
        if np.any(np.abs(denv) < _DIV_GUARD):
            raise DegenerateBoundaryError(
                "u_2 at the right endpoint fell below the division guard"
            )
        return -numv / denv

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        w = fold_half(np.asarray(pts, dtype=np.float64))
        numv = self.num.evaluate_batch(w) if self.num is not None else np.zeros(len(w))
        denv = self.den.evaluate_batch(w)
        return self._ratio(numv, denv)

    def on_lattice(self, lat: Rank1Lattice, anchor: np.ndarray) -> np.ndarray:
        anchor_fold = fold_half(np.asarray(anchor, dtype=np.float64))
        if self.num is not None:
            numv = _poly_on_lattice_offset(self.num, lat, anchor_fold, offset=0)
        else:
            numv = np.zeros(lat.M, dtype=np.complex128)
        denv = _poly_on_lattice_offset(self.den, lat, anchor_fold, offset=0)
        return self._ratio(numv, denv)


# ---------------------------------------------------------------------------
# solve stages


def _v_parity(spatial_map: PeriodizationMap) -> int:
    # tent sampling replaces phi' by a constant: even in x; the smooth maps
    # keep the sign-flipping phi': odd in x
    return 1 if spatial_map.kind == "tent" else -1


def approximate_v1(
    problem: OdeProblem,
    fbreve: RhsAntiderivative,
    spatial_map: PeriodizationMap,
    random_maps: ProductPeriodization,
    cfg: SfftConfig,
) -> SfftResult:
    """Sparse FFT of the periodized integrand Fb(eta)/a along all variables."""
    integrand = _VIntegrand(problem, spatial_map, random_maps, fbreve)
    return sfft(BlackBoxFn(integrand.dim, integrand), cfg)


def approximate_v2(
    problem: OdeProblem,
    spatial_map: PeriodizationMap,
    random_maps: ProductPeriodization,
    cfg: SfftConfig,
) -> SfftResult:
    """Sparse FFT of the periodized integrand 1/a along all variables."""
    integrand = _VIntegrand(problem, spatial_map, random_maps, None)
    return sfft(BlackBoxFn(integrand.dim, integrand), cfg)


def approximate_c1(
    u1: DeperiodizedFamily,
    u2: DeperiodizedFamily,
    random_maps: ProductPeriodization,
    cfg: SfftConfig,
) -> SfftResult:
    """Sparse FFT of the boundary ratio -u_1(beta_1, .)/u_2(beta_1, .) over xi."""
    integrand = _BoundaryRatioIntegrand(u1, u2, random_maps)
    return sfft(BlackBoxFn(integrand.dim, integrand), cfg)


@dataclass
class SolutionRep:
    """The assembled surrogate u-hat = u_1 + c_1 u_2 plus its maps and diagnostics."""

    u1: DeperiodizedFamily
    u2: DeperiodizedFamily
    c1: SparseTrigPoly
    spatial_map: PeriodizationMap
    random_maps: ProductPeriodization
    bounds: np.ndarray
    d_xi: int
    samples: dict = field(default_factory=dict)

    def integrand(self) -> _SolutionIntegrand:
        return _SolutionIntegrand(self.u1, self.u2, self.c1, self.random_maps)


def solve(
    problem: OdeProblem,
    spatial_map: PeriodizationMap,
    random_maps: ProductPeriodization,
    cfg: SfftConfig,
    rhs_n: int | None = None,
    cfg_v2: SfftConfig | None = None,
    cfg_c1: SfftConfig | None = None,
    symmetrize: bool = True,
) -> SolutionRep:
    """Run the full pipeline and assemble the solution surrogate.

    Stages: detect the periodized RHS antiderivative on a dense 1-D grid;
    sparse-FFT the integrands of u_1 and u_2 over (eta, xi); antidifferentiate
    in closed form; sparse-FFT the boundary ratio over xi; assemble
    u-hat = u_1 + c_1 u_2.  Each stage records its sample count.
    """
    _check_maps(problem, spatial_map, random_maps)
    cfg_v2 = cfg_v2 or cfg
    cfg_c1 = cfg_c1 or cfg
    parity = _v_parity(spatial_map)
    samples: dict = {}

    fbreve = approximate_rhs_antiderivative(problem.f, spatial_map, rhs_n or cfg.N)
    samples["rhs"] = 2 * (rhs_n or cfg.N) + 1

    res1 = approximate_v1(problem, fbreve, spatial_map, random_maps, cfg)
    samples["v1"] = res1.total_samples
    res2 = approximate_v2(problem, spatial_map, random_maps, cfg_v2)
    samples["v2"] = res2.total_samples

    p1, p2 = res1.poly, res2.poly
    if symmetrize:
        par_vec = [parity] + [1] * problem.d_xi
        p1 = symmetrize_reflections(p1, par_vec)
        p2 = symmetrize_reflections(p2, par_vec)
    fam_parity = -parity  # division by 2 pi i k flips the x-parity
    u1 = antiderivative_and_deperiodize(p1, fam_parity, symmetrize)
    u2 = antiderivative_and_deperiodize(p2, fam_parity, symmetrize)

    res3 = approximate_c1(u1, u2, random_maps, cfg_c1)
    samples["c1"] = res3.total_samples
    c1 = res3.poly
    if symmetrize and len(c1):
        c1 = symmetrize_reflections(c1, [1] * problem.d_xi)

    return SolutionRep(
        u1,
        u2,
        c1,
        spatial_map,
        random_maps,
        problem.bounds,
        problem.d_xi,
        samples,
    )


def _check_maps(
    problem: OdeProblem,
    spatial_map: PeriodizationMap,
    random_maps: ProductPeriodization,
) -> None:
    a1, b1 = problem.spatial_bounds
    if abs(spatial_map.alpha - a1) > 1e-12 or abs(spatial_map.beta - b1) > 1e-12:
        raise DimensionMismatchError("spatial map does not match the problem interval")
    if random_maps.dim != problem.d_xi:
        raise DimensionMismatchError("one random-variable map per xi component required")
    for m, (a, b) in zip(random_maps.maps, problem.bounds[1:]):
        if abs(m.alpha - a) > 1e-12 or abs(m.beta - b) > 1e-12:
            raise DimensionMismatchError("random-variable map does not match its bounds")


# ---------------------------------------------------------------------------
# evaluation


def evaluate_solution(rep: SolutionRep, t: float, xi: np.ndarray) -> float:
    """u-hat at a single spatial point t and parameter vector xi."""
    vals = evaluate_solution_batch(rep, np.asarray([t], dtype=np.float64), np.asarray(xi, dtype=np.float64).reshape(1, -1))
    return float(vals[0, 0])


def evaluate_solution_batch(
    rep: SolutionRep, ts: np.ndarray, xis: np.ndarray
) -> np.ndarray:
    """u-hat on a grid of spatial points for a batch of parameter vectors.

    Parameters
    ----------
    ts : (m,) spatial points in [alpha_1, beta_1].
    xis : (n, d_xi) parameter vectors within the bounds.

    Returns
    -------
    (n, m) array of real solution values.
    """
    ts = np.asarray(ts, dtype=np.float64).reshape(-1)
    xis = np.asarray(xis, dtype=np.float64)
    if xis.ndim != 2 or xis.shape[1] != rep.d_xi:
        raise DimensionMismatchError("parameter batch does not match d_xi")
    lo = rep.bounds[1:, 0]
    hi = rep.bounds[1:, 1]
    if np.any(xis < lo - 1e-12) or np.any(xis > hi + 1e-12):
        raise ValueError("parameter vector outside its bounds")
    wx = np.asarray(rep.spatial_map.inverse(ts), dtype=np.float64)
    wy = rep.random_maps.inverse(np.clip(xis, lo, hi))

    out = np.zeros((len(xis), len(ts)), dtype=np.complex128)
    c1v = rep.c1.evaluate_batch(wy) if len(rep.c1) else np.zeros(len(xis), dtype=np.complex128)
    for fam, weight in ((rep.u1, None), (rep.u2, c1v)):
        vals = _family_grid_eval(fam, wx, wy)
        out += vals if weight is None else weight[:, None] * vals
    if __debug__:
        resid = float(np.abs(out.imag).max(initial=0.0))
        assert resid < 1e-3, f"imaginary residual {resid} suggests a broken spectrum"
    return out.real


def _family_grid_eval(
    fam: DeperiodizedFamily, wx: np.ndarray, wy: np.ndarray
) -> np.ndarray:
    """Dense family evaluation on a (parameter batch) x (spatial grid) product."""
    n, m = len(wy), len(wx)
    out = np.zeros((n, m), dtype=np.complex128)
    step = max(1, (1 << 22) // max(fam.n_terms, 1))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        if fam._osc is not None:
            ay = np.exp(2j * np.pi * (wy[lo:hi] @ fam._osc.freqs[:, 1:].T.astype(np.float64)))
            bx = np.exp(2j * np.pi * np.multiply.outer(fam._osc.freqs[:, 0].astype(np.float64), wx))
            bx -= 1.0  # the (e^{2 pi i k w} - 1) form; exactly zero at w = 0
            out[lo:hi] += (ay * fam._osc.coeffs) @ bx
        if fam._lin is not None:
            out[lo:hi] += np.multiply.outer(fam._lin.evaluate_batch(wy[lo:hi]), wx)
    return out


# ---------------------------------------------------------------------------
# serialization


def save_solution(rep: SolutionRep, path: str) -> None:
    """Write the surrogate: one JSON header line, then three coefficient dumps.

    Blocks appear in the order u_1, u_2, c_1, each in the standard coefficient
    dump format.
    """
    header = {
        "bounds": rep.bounds.tolist(),
        "spatial_map": rep.spatial_map.kind,
        "random_maps": [m.kind for m in rep.random_maps.maps],
        "d_xi": rep.d_xi,
        "samples": rep.samples,
        "x_parity": {"u1": rep.u1.x_parity, "u2": rep.u2.x_parity},
        "y_symmetric": {
            "u1": rep.u1.y_symmetric,
            "u2": rep.u2.y_symmetric,
            "c1": True,
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for fam in (rep.u1, rep.u2):
            dump_coefficients(SparseTrigPoly(fam.dim, fam.freqs, fam.coeffs), fh)
        dump_coefficients(rep.c1, fh)


def load_solution(path: str) -> SolutionRep:
    """Read a surrogate written by :func:`save_solution`."""
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        blocks = [load_coefficients(fh) for _ in range(3)]
    bounds = np.asarray(header["bounds"], dtype=np.float64)
    spatial_map = PeriodizationMap(header["spatial_map"], bounds[0, 0], bounds[0, 1])
    random_maps = ProductPeriodization.from_bounds(header["random_maps"], bounds[1:])
    u1 = DeperiodizedFamily(
        blocks[0].dim,
        blocks[0].freqs,
        blocks[0].coeffs,
        header["x_parity"]["u1"],
        header["y_symmetric"]["u1"],
    )
    u2 = DeperiodizedFamily(
        blocks[1].dim,
        blocks[1].freqs,
        blocks[1].coeffs,
        header["x_parity"]["u2"],
        header["y_symmetric"]["u2"],
    )
    return SolutionRep(
        u1,
        u2,
        blocks[2],
        spatial_map,
        random_maps,
        bounds,
        int(header["d_xi"]),
        dict(header.get("samples", {})),
    )

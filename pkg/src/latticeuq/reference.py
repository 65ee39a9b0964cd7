"""Deterministic reference solutions and Monte-Carlo moment references.

For a fixed parameter vector xi the two-point problem reduces to quadrature:

    u_1(t) = int_alpha^t -F(eta) / a(eta, xi) d eta,   F(eta) = int_alpha^eta f,
    u_2(t) = int_alpha^t       1 / a(eta, xi) d eta,
    u = u_1 + c_1 u_2,   c_1 = -u_1(beta_1) / u_2(beta_1).

Both integrals are evaluated with adaptive Gauss-Kronrod (7/15) panels, one
panel per cell of the uniform 101-point grid, sharing the a-evaluations
between the two integrands and accumulating cumulatively across the grid.
These grid functions are the oracles for every error study; the Monte-Carlo
moment references average their powers over seeded uniform draws.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CoefficientPositivityError
from .solver import OdeProblem

__all__ = ["GridFunction", "solve_fixed_xi", "mc_moment", "GRID_POINTS"]

GRID_POINTS = 101

# 15-point Kronrod extension of 7-point Gauss (positive half, descending).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full symmetric node/weight vectors on [-1, 1]
KRONROD_NODES = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:7], _WGK[7:8], _WGK[6::-1]])
# Gauss-7 weights aligned to the Kronrod node ordering (Gauss nodes sit at
# the odd positions 1, 3, ..., 13)
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:14:2] = np.concatenate([_WG[:3], _WG[3:4], _WG[2::-1]])


@dataclass(frozen=True)
class GridFunction:
    """A real function tabulated on the uniform 101-point spatial grid."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if grid.shape != values.shape or grid.ndim != 1:
            raise ValueError("grid and values must be equal-length vectors")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def to_csv(self, path: str) -> None:
        """Write 'eta,value' rows, one line per grid point."""
        with open(path, "w", encoding="utf-8") as fh:
            for e, v in zip(self.grid, self.values):
                fh.write(f"{float(e)!r},{float(v)!r}\n")

    @classmethod
    def from_csv(cls, path: str) -> "GridFunction":
        data = np.loadtxt(path, delimiter=",", dtype=np.float64).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1])


def _antiderivative_of_f(problem: OdeProblem, grid: np.ndarray):
    """F(eta) = int_alpha^eta f, exact if supplied, else nested quadrature.

    Returns a vectorized callable.  The fallback accumulates one adaptive
    panel integral of f per grid cell and finishes each query point with a
    single non-adaptive 15-point rule from its cell anchor, which at cell
    width 1/100 is far below any downstream tolerance for smooth f.
    """
    alpha = grid[0]
    if problem.f_antideriv is not None:
        f_anti = problem.f_antideriv
        base = float(np.asarray(f_anti(np.array([alpha]))).reshape(-1)[0])
        return lambda eta: np.asarray(f_anti(eta), dtype=np.float64) - base

    # cumulative panel integrals of f on the grid
    increments = np.zeros(len(grid) - 1)
    for k in range(len(grid) - 1):
        increments[k] = _adaptive_panel_1d(problem.f, grid[k], grid[k + 1], 1e-13)
    cumulative = np.concatenate([[0.0], np.cumsum(increments)])

    def F(eta: np.ndarray) -> np.ndarray:
        eta = np.asarray(eta, dtype=np.float64)
        idx = np.clip(np.searchsorted(grid, eta, side="right") - 1, 0, len(grid) - 2)
        lo = grid[idx]
        half = (eta - lo) / 2.0
        nodes = lo[..., None] + half[..., None] * (KRONROD_NODES + 1.0)
        vals = np.asarray(problem.f(nodes.reshape(-1)), dtype=np.float64).reshape(nodes.shape)
        return cumulative[idx] + half * (vals @ KRONROD_WEIGHTS)

    return F


def _adaptive_panel_1d(f, lo: float, hi: float, tol: float, max_depth: int = 48) -> float:
    """Adaptive GK 7/15 integral of a scalar function over one interval."""
    total = 0.0
    stack = [(lo, hi, 0)]
    while stack:
        a, b, depth = stack.pop()
        half = (b - a) / 2.0
        nodes = (a + b) / 2.0 + half * KRONROD_NODES
        vals = np.asarray(f(nodes), dtype=np.float64)
        k15 = half * float(vals @ KRONROD_WEIGHTS)
        g7 = half * float(vals @ GAUSS_WEIGHTS)
        if abs(k15 - g7) <= tol * max(1.0, abs(k15)) * (b - a) / (hi - lo) or depth >= max_depth:
            total += k15
            continue
        mid = (a + b) / 2.0
        stack.append((a, mid, depth + 1))
        stack.append((mid, b, depth + 1))
    return total


def solve_fixed_xi(problem: OdeProblem, xi: np.ndarray, tol: float = 1e-10) -> GridFunction:
    """Reference solution for one parameter vector on the uniform grid.

    Each grid cell is one adaptive panel; both integrands share the a-values
    at the Kronrod nodes, and active subintervals across all panels are
    evaluated in batched calls.  ``tol`` is the error target per panel.
    """
    xi = np.asarray(xi, dtype=np.float64).reshape(-1)
    if len(xi) != problem.d_xi:
        raise ValueError("xi length must equal d_xi")
    alpha, beta = problem.spatial_bounds
    grid = np.linspace(alpha, beta, GRID_POINTS)
    F = _antiderivative_of_f(problem, grid)

    panel_w = grid[1] - grid[0]
    # worklist of subintervals: (lo, hi, panel index)
    los = grid[:-1].copy()
    his = grid[1:].copy()
    panels = np.arange(GRID_POINTS - 1)
    depth = np.zeros(GRID_POINTS - 1, dtype=np.int64)
    sum1 = np.zeros(GRID_POINTS - 1)
    sum2 = np.zeros(GRID_POINTS - 1)
    while len(los):
        half = (his - los) / 2.0
        mid = (los + his) / 2.0
        nodes = mid[:, None] + half[:, None] * KRONROD_NODES
        flat = nodes.reshape(-1)
        avals = np.asarray(
            problem.a(flat, np.tile(xi, (len(flat), 1))), dtype=np.float64
        ).reshape(nodes.shape)
        if np.any(avals <= 0.0):
            raise CoefficientPositivityError(
                "diffusion coefficient must be strictly positive at every sample"
            )
        g1 = -F(nodes) / avals
        g2 = 1.0 / avals
        k1 = half * (g1 @ KRONROD_WEIGHTS)
        k2 = half * (g2 @ KRONROD_WEIGHTS)
        e1 = np.abs(k1 - half * (g1 @ GAUSS_WEIGHTS))
        e2 = np.abs(k2 - half * (g2 @ GAUSS_WEIGHTS))
        budget = tol * (his - los) / panel_w
        done = ((e1 <= budget) & (e2 <= budget)) | (depth >= 48)
        np.add.at(sum1, panels[done], k1[done])
        np.add.at(sum2, panels[done], k2[done])
        keep = ~done
        los, his, panels, depth = los[keep], his[keep], panels[keep], depth[keep]
        if len(los):
            mid = (los + his) / 2.0
            los = np.concatenate([los, mid])
            his = np.concatenate([mid, his])
            panels = np.concatenate([panels, panels])
            depth = np.concatenate([depth, depth]) + 1

    u1 = np.concatenate([[0.0], np.cumsum(sum1)])
    u2 = np.concatenate([[0.0], np.cumsum(sum2)])
    c1 = -u1[-1] / u2[-1]
    values = u1 + c1 * u2
    values[0] = 0.0
    values[-1] = 0.0  # c_1 solves the right boundary condition algebraically
    return GridFunction(grid, values)


def mc_moment(
    problem: OdeProblem, n: int, n_test: int, seed: int, tol: float = 1e-10
) -> GridFunction:
    """Monte-Carlo moment reference: average of solve_fixed_xi powers.

    Draws ``n_test`` iid uniform parameter vectors from the problem's box.
    Each draw uses its own spawned generator, so the result is independent of
    any execution order; the accumulation order is fixed by draw index.
    """
    if n < 1 or n_test < 1:
        raise ValueError("moment order and draw count must be positive")
    lo = problem.bounds[1:, 0]
    hi = problem.bounds[1:, 1]
    streams = np.random.SeedSequence(seed).spawn(n_test)
    alpha, beta = problem.spatial_bounds
    grid = np.linspace(alpha, beta, GRID_POINTS)
    acc = np.zeros(GRID_POINTS)
    for ss in streams:
        rng = np.random.default_rng(ss)
        xi = lo + (hi - lo) * rng.random(problem.d_xi)
        acc += solve_fixed_xi(problem, xi, tol).values ** n
    return GridFunction(grid, acc / n_test)

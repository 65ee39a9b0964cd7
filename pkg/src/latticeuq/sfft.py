"""Dimension-incremental sparse FFT driven by (multiple) rank-1 lattice sampling.

The algorithm recovers a sparse trigonometric polynomial approximation of a
black-box function f on [0, 1)^d in three phases:

A. For every coordinate, locate active 1-D frequencies in [-N, N] by sampling
   f along that axis on 2N+1 equispaced points (the other coordinates frozen
   at random anchors) and running a dense DFT; repeated with r anchors.

B. Dimension-incrementally combine: candidates for the first t coordinates
   are the cartesian product (detected (t-1)-dim set) x (1-D candidates of
   coordinate t).  Projected coefficients are reconstructed from samples on a
   lattice that reconstructs the candidate set, with the remaining
   coordinates anchored; frequencies passing the relative threshold in any of
   r repetitions survive, capped at sparsity s by descending magnitude.

C. A final reconstruction with a fresh plan (no anchor) recomputes the
   coefficients on the detected d-dimensional set.

Thresholds are relative to the largest magnitude seen in the current step,
with an absolute floor of 100 * machine epsilon, so the zero function yields
an empty polynomial instead of noise.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CandidateExplosionError,
    DimensionMismatchError,
    SampleBudgetError,
)
from .lattice import (
    ExplicitFreqs,
    ProductFreqs,
    Rank1Lattice,
    ReconstructionPlan,
    plan_multiple,
    plan_single,
)
from .trig import SparseTrigPoly

__all__ = ["BlackBoxFn", "SfftConfig", "SfftResult", "StepRecord", "sfft", "projected_coefficients"]

BACKENDS = ("single", "multiple")

# Resolution of the anchor grid: anchors are drawn from {0, 1, ..., 2^32-1} / 2^32.
_ANCHOR_DENOM = float(2**32)

# Points materialized per chunk when a black box has no lattice fast path.
_POINT_CHUNK = 1 << 19


class BlackBoxFn:
    """Sampleable function on [0, 1)^d.

    Wraps a vectorized callable mapping an (n, dim) array of points to an
    (n,) array of (complex) values.  If the callable additionally provides an
    ``on_lattice(lattice, anchor)`` method, lattice sampling is delegated to
    it: the lattice covers the leading ``lattice.dim`` coordinates and
    ``anchor`` freezes the trailing ones.  Black boxes must be deterministic;
    reproducibility of the sparse FFT relies on it.
    """

    def __init__(self, dim: int, fn: Callable[[np.ndarray], np.ndarray], thread_safe: bool = True):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.fn = fn
        self.thread_safe = bool(thread_safe)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"points of shape {pts.shape} do not match dim={self.dim}"
            )
        vals = np.asarray(self.fn(pts), dtype=np.complex128).reshape(-1)
        if len(vals) != len(pts):
            raise DimensionMismatchError("black box returned wrong number of values")
        return vals

    def on_lattice(self, lattice: Rank1Lattice, anchor: np.ndarray) -> np.ndarray:
        """Values at all lattice nodes extended by the anchor coordinates."""
        hook = getattr(self.fn, "on_lattice", None)
        if hook is not None:
            vals = np.asarray(hook(lattice, anchor), dtype=np.complex128)
            if vals.shape != (lattice.M,):
                raise DimensionMismatchError("on_lattice returned wrong number of values")
            return vals
        t = lattice.dim
        anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
        if t + len(anchor) != self.dim:
            raise DimensionMismatchError("lattice dim + anchor dim must equal dim")
        M = lattice.M
        out = np.empty(M, dtype=np.complex128)
        step = max(1, _POINT_CHUNK // max(self.dim, 1))
        for lo in range(0, M, step):
            j = np.arange(lo, min(M, lo + step), dtype=np.int64)
            pts = np.empty((len(j), self.dim), dtype=np.float64)
            pts[:, :t] = ((j[:, None] * lattice.z[None, :]) % M) / float(M)
            pts[:, t:] = anchor
            out[lo : lo + len(j)] = self(pts)
        return out


@dataclass(frozen=True)
class SfftConfig:
    """Configuration of the dimension-incremental sparse FFT.

    Parameters
    ----------
    N : search-box extent; candidate frequencies live in [-N, N]^d.
    s : global sparsity: at most s frequencies survive each incremental step.
    s_local : per-detection sparsity for the 1-D phases (defaults to s).
        Must not exceed s unless ``allow_s_local_gt_s`` is set.
    r : number of detection repetitions (random anchors) per step.
    theta : relative coefficient threshold within each step.
    backend : ``"single"`` (one component-by-component lattice per plan) or
        ``"multiple"`` (several random lattices per plan).
    b, c : restart cap and oversampling factor of the multiple-lattice draw.
    seed : master seed; anchors and lattice draws derive from it.
    threshold_mode : ``"per_iteration"`` applies the threshold within every
        detection repetition and keeps frequencies passing in any of them;
        ``"post_union"`` thresholds the per-frequency maxima once at the end
        of the step.
    candidate_cap : hard cap on a step's candidate-set size.
    max_samples : optional hard cap on total drawn samples.
    m_cap : largest admissible single-lattice size.
    verbose : emit one diagnostic line per step to stderr.
    """

    N: int
    s: int
    s_local: int | None = None
    r: int = 1
    theta: float = 1e-12
    backend: str = "single"
    b: int = 5
    c: float = 2.0
    seed: int = 0
    threshold_mode: str = "per_iteration"
    candidate_cap: int = 10_000_000
    max_samples: int | None = None
    m_cap: int = 2**26
    allow_s_local_gt_s: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.N < 1 or self.s < 1 or self.r < 1 or self.b < 0:
            raise ValueError("N, s, r must be positive and b nonnegative")
        if self.theta <= 0:
            raise ValueError("theta must be positive")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}")
        if self.threshold_mode not in ("per_iteration", "post_union"):
            raise ValueError("threshold_mode must be 'per_iteration' or 'post_union'")
        if self.c <= 1.0:
            raise ValueError("oversampling factor c must exceed 1")
        sl = self.effective_s_local
        if sl < 1:
            raise ValueError("s_local must be positive")
        if sl > self.s and not self.allow_s_local_gt_s:
            raise ValueError("s_local > s requires allow_s_local_gt_s")

    @property
    def effective_s_local(self) -> int:
        return self.s if self.s_local is None else self.s_local


@dataclass
class StepRecord:
    """Per-step diagnostics: candidate count, survivors, samples drawn."""

    t: int
    n_candidates: int
    n_kept: int
    samples: int


@dataclass
class SfftResult:
    """Detected polynomial plus sampling diagnostics."""

    poly: SparseTrigPoly
    total_samples: int
    steps: list[StepRecord] = field(default_factory=list)


class _Counter:
    def __init__(self, cap: int | None):
        self.total = 0
        self.cap = cap

    def add(self, n: int) -> None:
        self.total += int(n)
        if self.cap is not None and self.total > self.cap:
            raise SampleBudgetError(
                f"sample budget exceeded: {self.total} > {self.cap}"
            )


def _anchor(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.integers(0, 2**32, size=size).astype(np.float64) / _ANCHOR_DENOM


def _floor_abs() -> float:
    return float(np.finfo(np.float64).eps) * 100.0


def _build_plan(source, cfg: SfftConfig, rng: np.random.Generator) -> ReconstructionPlan:
    if cfg.backend == "single":
        return plan_single(source, m_cap=cfg.m_cap)
    return plan_multiple(source, c=cfg.c, b=cfg.b, seed=rng)


def _sample_plan(
    f: BlackBoxFn, plan: ReconstructionPlan, anchor: np.ndarray, counter: _Counter
) -> list[np.ndarray]:
    out = []
    for lat in plan.lattices:
        counter.add(lat.M)
        out.append(f.on_lattice(lat, anchor))
    return out


def projected_coefficients(
    f: BlackBoxFn, plan: ReconstructionPlan, anchor: np.ndarray
) -> np.ndarray:
    """Coefficients of x -> f(x, anchor) on the plan's frequency set.

    The plan's lattices cover the leading ``plan.dim`` coordinates; the
    remaining coordinates of f are frozen at ``anchor``.
    """
    counter = _Counter(None)
    return plan.reconstruct(_sample_plan(f, plan, anchor, counter))


def _detect_1d(
    f: BlackBoxFn, axis: int, cfg: SfftConfig, rng: np.random.Generator, counter: _Counter
) -> tuple[np.ndarray, np.ndarray]:
    """1-D candidate frequencies and their peak magnitudes along one axis."""
    d = f.dim
    n_grid = 2 * cfg.N + 1
    grid = np.arange(n_grid, dtype=np.float64) / n_grid
    ks = np.concatenate([np.arange(0, cfg.N + 1), np.arange(-cfg.N, 0)])  # FFT bin order
    floor = _floor_abs()
    iters = cfg.r if d > 1 else 1
    best = np.zeros(n_grid)
    eligible = np.zeros(n_grid, dtype=bool)
    s_local = cfg.effective_s_local
    for _ in range(iters):
        anchor = _anchor(rng, d - 1)
        pts = np.empty((n_grid, d), dtype=np.float64)
        pts[:, :axis] = anchor[:axis]
        pts[:, axis] = grid
        pts[:, axis + 1 :] = anchor[axis:]
        counter.add(n_grid)
        vals = f(pts)
        mags = np.abs(np.fft.fft(vals) / n_grid)
        if cfg.threshold_mode == "per_iteration":
            thr = max(cfg.theta * mags.max(initial=0.0), floor)
            pidx = np.nonzero(mags >= thr)[0]
            if len(pidx) > s_local:
                order = np.lexsort((ks[pidx], -mags[pidx]))
                pidx = pidx[order[:s_local]]
            eligible[pidx] = True
            best[pidx] = np.maximum(best[pidx], mags[pidx])
        else:
            np.maximum(best, mags, out=best)
    if cfg.threshold_mode == "post_union":
        thr = max(cfg.theta * best.max(initial=0.0), floor)
        eligible = best >= thr
    idx = np.nonzero(eligible)[0]
    cap = cfg.r * s_local
    if len(idx) > cap:
        order = np.lexsort((ks[idx], -best[idx]))
        idx = idx[order[:cap]]
    korder = np.argsort(ks[idx])
    return ks[idx][korder].astype(np.int64), best[idx][korder]


def _cap_by_magnitude(
    mags: np.ndarray, eligible: np.ndarray, s: int
) -> np.ndarray:
    """Indices of surviving candidates: eligible, top-s by (magnitude desc, position asc)."""
    idx = np.nonzero(eligible)[0]
    if len(idx) > s:
        order = np.lexsort((idx, -mags[idx]))
        idx = idx[order[:s]]
        idx.sort()
    return idx


def sfft(f: BlackBoxFn, cfg: SfftConfig) -> SfftResult:
    """Detect a sparse trigonometric approximation of the black box f.

    Returns the polynomial together with the total number of samples drawn
    and per-step diagnostics.  Given identical configuration (including the
    seed) and a deterministic black box, the output is identical run to run.
    """
    d = f.dim
    ss = np.random.SeedSequence(cfg.seed)
    # one child stream per 1-D axis, then (plan, anchors) pairs per step B/C
    children = ss.spawn(d + 2 * (d - 1) + 1)
    rngs = [np.random.default_rng(c) for c in children]
    counter = _Counter(cfg.max_samples)
    steps: list[StepRecord] = []
    floor = _floor_abs()

    # -- phase A: per-axis 1-D detections
    cand_k: list[np.ndarray] = []
    cand_mag: list[np.ndarray] = []
    for axis in range(d):
        before = counter.total
        ks, mags = _detect_1d(f, axis, cfg, rngs[axis], counter)
        cand_k.append(ks)
        cand_mag.append(mags)
        steps.append(StepRecord(1, 2 * cfg.N + 1, len(ks), counter.total - before))
        if cfg.verbose:
            print(
                f"[sfft] axis {axis}: kept {len(ks)} of {2 * cfg.N + 1} "
                f"1-D candidates ({counter.total - before} samples)",
                file=sys.stderr,
            )

    if any(len(ks) == 0 for ks in cand_k):
        return SfftResult(_empty(d), counter.total, steps)

    keep_idx = _cap_by_magnitude(cand_mag[0], np.ones(len(cand_k[0]), dtype=bool), cfg.s)
    current = cand_k[0][keep_idx].reshape(-1, 1)
    cur_mags = cand_mag[0][keep_idx]

    # -- phase B: dimension-incremental coupling
    for t in range(2, d + 1):
        source = ProductFreqs(prefix=current, last=cand_k[t - 1])
        if source.count > cfg.candidate_cap:
            raise CandidateExplosionError(
                f"candidate set of size {source.count} exceeds cap {cfg.candidate_cap}"
            )
        plan_rng = rngs[d + 2 * (t - 2)]
        anchor_rng = rngs[d + 2 * (t - 2) + 1]
        plan = _build_plan(source, cfg, plan_rng)
        before = counter.total
        iters = cfg.r if t < d else 1
        best = np.zeros(source.count)
        eligible = np.zeros(source.count, dtype=bool)
        for _ in range(iters):
            anchor = _anchor(anchor_rng, d - t)
            coeffs = plan.reconstruct(_sample_plan(f, plan, anchor, counter))
            mags = np.abs(coeffs)
            if cfg.threshold_mode == "per_iteration":
                thr = max(cfg.theta * mags.max(initial=0.0), floor)
                passing = mags >= thr
                eligible |= passing
                np.maximum(best, np.where(passing, mags, 0.0), out=best)
            else:
                np.maximum(best, mags, out=best)
        if cfg.threshold_mode == "post_union":
            thr = max(cfg.theta * best.max(initial=0.0), floor)
            eligible = best >= thr
        # row-major order of the product source is lexicographic, so position
        # indices double as the deterministic tie-break
        idx = _cap_by_magnitude(best, eligible, cfg.s)
        steps.append(StepRecord(t, source.count, len(idx), counter.total - before))
        if cfg.verbose:
            print(
                f"[sfft] step t={t}: kept {len(idx)} of {source.count} candidates "
                f"({counter.total - before} samples on {len(plan.lattices)} lattice(s))",
                file=sys.stderr,
            )
        if len(idx) == 0:
            return SfftResult(_empty(d), counter.total, steps)
        current = source.gather(idx)
        cur_mags = best[idx]

    # -- phase C: final reconstruction with a fresh plan, no anchor
    before = counter.total
    plan = _build_plan(ExplicitFreqs(current), cfg, rngs[-1])
    coeffs = plan.reconstruct(_sample_plan(f, plan, np.zeros(0), counter))
    mags = np.abs(coeffs)
    thr = max(cfg.theta * mags.max(initial=0.0), floor)
    keep = mags >= thr
    steps.append(StepRecord(d, len(current), int(np.count_nonzero(keep)), counter.total - before))
    if cfg.verbose:
        print(
            f"[sfft] final pass: kept {int(np.count_nonzero(keep))} of {len(current)} "
            f"({counter.total - before} samples)",
            file=sys.stderr,
        )
    if not np.any(keep):
        return SfftResult(_empty(d), counter.total, steps)
    poly = SparseTrigPoly(d, current[keep], coeffs[keep])
    return SfftResult(poly, counter.total, steps)


def _empty(dim: int) -> SparseTrigPoly:
    return SparseTrigPoly(dim, np.zeros((0, dim), dtype=np.int64), np.zeros(0))

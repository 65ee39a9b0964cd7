"""Rank-1 lattices and reconstruction plans for sparse trigonometric polynomials.

A rank-1 lattice with generating vector z and size M is the point set

    Lambda(z, M) = { (j / M) * z mod 1 : j = 0, ..., M - 1 }  in [0, 1)^d.

Evaluating a sparse trig polynomial on all lattice nodes reduces to a single
length-M FFT after folding each frequency k to its residue <k, z> mod M, and
when the residue map is injective on a frequency set I (the lattice
"reconstructs" I), the coefficients of any polynomial supported on I can be
recovered from one FFT of its lattice samples.

Two constructions are provided:

- a deterministic component-by-component search over prime lattice sizes that
  yields a single reconstructing lattice, and
- a randomized construction that draws several smaller lattices of prime size
  in [c |I|, 2 c |I|] and assigns every frequency to the first lattice on
  which it does not collide with any other member of I.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatchError, LatticeConstructionError
from .trig import SparseTrigPoly

__all__ = [
    "Rank1Lattice",
    "MultipleRank1Lattices",
    "ReconstructionPlan",
    "ExplicitFreqs",
    "ProductFreqs",
    "lattice_nodes",
    "lattice_evaluate",
    "lattice_reconstruct",
    "poly_on_lattice",
    "is_reconstructing",
    "is_prime",
    "next_prime",
    "cbc_reconstructing_lattice",
    "build_multiple_lattices",
    "plan_single",
    "plan_multiple",
]


# ---------------------------------------------------------------------------
# primes


_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for 64-bit integers."""
    n = int(n)
    if n < 2:
        return False
    for p in _MR_WITNESSES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n: int) -> int:
    """Smallest prime >= n."""
    n = max(2, int(n))
    if n > 2 and n % 2 == 0:
        n += 1
    while not is_prime(n):
        n += 1 if n == 2 else 2
    return n


def _random_prime(lo: int, hi: int, rng: np.random.Generator) -> int:
    """Uniform-ish random prime in [lo, hi] via rejection sampling."""
    lo = max(2, int(lo))
    hi = int(hi)
    if next_prime(lo) > hi:
        raise LatticeConstructionError(f"no prime in [{lo}, {hi}]")
    while True:
        m = int(rng.integers(lo, hi + 1))
        if is_prime(m):
            return m


# ---------------------------------------------------------------------------
# lattices


@dataclass(frozen=True)
class Rank1Lattice:
    """A rank-1 lattice with generating vector ``z`` (canonical mod M) and size ``M``."""

    z: np.ndarray
    M: int

    def __post_init__(self):
        z = np.asarray(self.z, dtype=np.int64).reshape(-1) % max(self.M, 1)
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "M", int(self.M))
        if self.M < 1:
            raise ValueError("lattice size must be positive")

    @property
    def dim(self) -> int:
        return len(self.z)

    def nodes(self) -> np.ndarray:
        """All lattice nodes, shape (M, dim), in order of j."""
        j = np.arange(self.M, dtype=np.int64)
        return ((j[:, None] * self.z[None, :]) % self.M) / float(self.M)

    def residues(self, freqs: np.ndarray) -> np.ndarray:
        """<k, z> mod M for each frequency row."""
        freqs = np.asarray(freqs, dtype=np.int64)
        if freqs.ndim != 2 or freqs.shape[1] != self.dim:
            raise DimensionMismatchError("frequency rows do not match lattice dim")
        return (freqs @ self.z) % self.M

    def describe(self) -> str:
        """Debug-dump line: size, then the generating vector ("M; z_1 ... z_d")."""
        return f"{self.M}; " + " ".join(str(int(c)) for c in self.z)


def lattice_from_description(line: str) -> Rank1Lattice:
    """Parse a ``describe()`` line back into a lattice."""
    head, sep, tail = line.partition(";")
    parts = tail.split()
    if not sep or not head.strip().isdigit() or not parts:
        raise ValueError(f"not a lattice description: {line!r}")
    return Rank1Lattice(z=np.array([int(c) for c in parts], dtype=np.int64), M=int(head))


def lattice_nodes(lattice: Rank1Lattice) -> np.ndarray:
    return lattice.nodes()


def _spread(values: np.ndarray, residues: np.ndarray, M: int) -> np.ndarray:
    """Accumulate complex values into a length-M buffer at the given residues."""
    buf = np.bincount(residues, weights=values.real, minlength=M).astype(np.complex128)
    buf += 1j * np.bincount(residues, weights=values.imag, minlength=M)
    return buf


def lattice_evaluate(p: SparseTrigPoly, lattice: Rank1Lattice) -> np.ndarray:
    """Values of p at all lattice nodes via residue folding and one FFT."""
    res = lattice.residues(p.freqs)
    buf = _spread(p.coeffs, res, lattice.M)
    return np.fft.ifft(buf) * lattice.M


def poly_on_lattice(
    p: SparseTrigPoly, lattice: Rank1Lattice, anchor: np.ndarray | None = None
) -> np.ndarray:
    """Values of p on a lattice covering its leading dims, trailing dims anchored.

    The lattice spans the first ``lattice.dim`` variables of ``p``; the
    remaining variables are fixed at ``anchor``, which contributes a constant
    phase per term.
    """
    t = lattice.dim
    if t > p.dim:
        raise DimensionMismatchError("lattice dim exceeds polynomial dim")
    coeffs = p.coeffs
    if t < p.dim:
        anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
        if anchor.shape != (p.dim - t,):
            raise DimensionMismatchError("anchor does not cover the trailing dims")
        coeffs = coeffs * np.exp(2j * np.pi * (p.freqs[:, t:] @ anchor))
    res = (p.freqs[:, :t] @ lattice.z) % lattice.M
    buf = _spread(coeffs, res, lattice.M)
    return np.fft.ifft(buf) * lattice.M


def lattice_reconstruct(
    freqs: np.ndarray, lattice: Rank1Lattice, samples: np.ndarray
) -> np.ndarray:
    """Coefficients on ``freqs`` from samples on a reconstructing lattice."""
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.shape != (lattice.M,):
        raise DimensionMismatchError("sample vector does not match lattice size")
    fhat = np.fft.fft(samples) / lattice.M
    return fhat[lattice.residues(np.asarray(freqs, dtype=np.int64))]


def is_reconstructing(lattice: Rank1Lattice, freqs: np.ndarray) -> bool:
    """Whether k -> <k, z> mod M is injective on the given frequency set."""
    res = lattice.residues(np.asarray(freqs, dtype=np.int64))
    return len(np.unique(res)) == len(res)


# ---------------------------------------------------------------------------
# frequency sources

# Frequency sets passed to the constructors are either explicit integer row
# arrays or implicit cartesian products (detected set) x (1-D candidates);
# the product form avoids materializing huge candidate grids.


@dataclass(frozen=True)
class ExplicitFreqs:
    rows: np.ndarray  # (n, d) int64

    @property
    def count(self) -> int:
        return len(self.rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def residues(self, z: np.ndarray, M: int) -> np.ndarray:
        return (self.rows @ np.asarray(z, dtype=np.int64)) % M

    def gather(self, idx: np.ndarray) -> np.ndarray:
        return self.rows[idx]


@dataclass(frozen=True)
class ProductFreqs:
    """The candidate grid ``{(p, c) : p in prefix rows, c in last}`` in row-major order."""

    prefix: np.ndarray  # (n, d-1) int64, distinct rows
    last: np.ndarray  # (m,) int64, distinct values

    @property
    def count(self) -> int:
        return len(self.prefix) * len(self.last)

    @property
    def dim(self) -> int:
        return self.prefix.shape[1] + 1

    def residues(self, z: np.ndarray, M: int) -> np.ndarray:
        z = np.asarray(z, dtype=np.int64)
        pres = (self.prefix @ z[:-1]) % M
        lres = (self.last * z[-1]) % M
        return ((pres[:, None] + lres[None, :]) % M).reshape(-1)

    def gather(self, idx: np.ndarray) -> np.ndarray:
        m = len(self.last)
        rows = np.empty((len(idx), self.dim), dtype=np.int64)
        rows[:, :-1] = self.prefix[idx // m]
        rows[:, -1] = self.last[idx % m]
        return rows


def _as_source(freqs) -> ExplicitFreqs | ProductFreqs:
    if isinstance(freqs, (ExplicitFreqs, ProductFreqs)):
        return freqs
    rows = np.asarray(freqs, dtype=np.int64)
    if rows.ndim != 2:
        raise DimensionMismatchError("frequency set must be a 2-D integer array")
    return ExplicitFreqs(rows)


# ---------------------------------------------------------------------------
# component-by-component construction

# The per-component scan is exact.  Two frequencies whose current-column
# values differ alias each other for exactly one generating value,
# z = (psi_i - psi_j) / (c_j - c_i) mod M, so every aliasing value can be
# scatter-marked in a boolean table of size M and the smallest unmarked value
# is provably collision-free.  Pairs with equal column values alias
# independently of z; the running construction keeps their residues distinct,
# which is checked defensively.
_PAIR_CHUNK = 1 << 22


def _component_good_z(psi: np.ndarray, col: np.ndarray, M: int) -> int | None:
    """Smallest z in 1..M-1 making (psi + col * z) mod M injective, else None."""
    order = np.argsort(col, kind="stable")
    cvals, starts, counts = np.unique(col[order], return_index=True, return_counts=True)
    groups = np.split(order, starts[1:])
    for g in groups:
        if len(np.unique(psi[g])) != len(g):
            return None
    if len(cvals) != len(np.unique(cvals % M)):
        return None
    bad = np.zeros(M, dtype=bool)
    bad[0] = True
    span = int(cvals[-1] - cvals[0]) if len(cvals) > 1 else 0
    if np.all(counts == 1) and 0 < span <= 1 << 15:
        # One row per column value (typical for near-1-D frequency sets).
        # Iterating over the column-difference delta processes every group
        # pair sharing that difference in a single vector operation.
        psis = psi[order]
        pos = np.full(span + 1, -1, dtype=np.int64)
        pos[cvals - cvals[0]] = np.arange(len(cvals))
        rel = cvals - cvals[0]
        for delta in range(1, span + 1):
            shifted = rel + delta
            valid = np.flatnonzero(shifted <= span)
            ib = pos[shifted[valid]]
            ia = valid[ib >= 0]
            if len(ia) == 0:
                continue
            inv = pow(delta % M, M - 2, M)
            d = (psis[ia] - psis[pos[rel[ia] + delta]]) % M
            bad[(d * inv) % M] = True
    else:
        for ia in range(len(groups)):
            pa = psi[groups[ia]]
            for ib in range(ia + 1, len(groups)):
                pb = psi[groups[ib]]
                delta = int((cvals[ib] - cvals[ia]) % M)
                inv = pow(delta, M - 2, M)
                step = max(1, _PAIR_CHUNK // max(len(pb), 1))
                for lo in range(0, len(pa), step):
                    d = (pa[lo : lo + step, None] - pb[None, :]) % M
                    bad[(d * inv) % M] = True
    good = np.flatnonzero(~bad)
    return int(good[0]) if len(good) else None


def _product_good_z(psi: np.ndarray, last: np.ndarray, M: int) -> int | None:
    """Exact scan for the trailing product component.

    Every value of the last column pairs with the same residue vector ``psi``,
    so a single table of residue differences serves all column pairs.
    """
    if len(np.unique(psi)) != len(psi):
        return None
    lred = last % M
    if len(np.unique(lred)) != len(np.unique(last)):
        return None
    present = np.zeros(M, dtype=bool)
    step = max(1, _PAIR_CHUNK // max(len(psi), 1))
    for lo in range(0, len(psi), step):
        present[(psi[lo : lo + step, None] - psi[None, :]) % M] = True
    diffs = np.flatnonzero(present)
    bad = np.zeros(M, dtype=bool)
    bad[0] = True
    deltas = np.unique((lred[:, None] - lred[None, :]) % M)
    for delta in deltas[deltas > 0]:
        inv = pow(int(delta), M - 2, M)
        bad[(diffs * inv) % M] = True
    good = np.flatnonzero(~bad)
    return int(good[0]) if len(good) else None


def _group_ids(gid: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Refine group ids by a new integer column (equal pairs -> equal new id)."""
    key = gid.astype(np.int64) * (col.max() - col.min() + 1) + (col - col.min())
    _, new = np.unique(key, return_inverse=True)
    return new


def _cbc_at(source, M: int) -> np.ndarray | None:
    """One component-by-component pass at fixed prime M; None on failure."""
    product = isinstance(source, ProductFreqs)
    rows = source.prefix if product else source.rows
    d_expl = rows.shape[1]
    n = len(rows)
    z = np.zeros(source.dim, dtype=np.int64)
    psi = np.zeros(n, dtype=np.int64)
    gid = np.zeros(n, dtype=np.int64)
    for j in range(d_expl):
        col = rows[:, j]
        gid = _group_ids(gid, col)
        reps = np.unique(gid, return_index=True)[1]
        zj = _component_good_z(psi[reps], col[reps], M)
        if zj is None:
            return None
        z[j] = zj
        psi = (psi + col % M * zj) % M
    if product:
        zj = _product_good_z(psi, source.last, M)
        if zj is None:
            return None
        z[-1] = zj
    return z


def cbc_reconstructing_lattice(freqs, m_cap: int = 2**26) -> Rank1Lattice:
    """Deterministic reconstructing lattice via component-by-component search.

    Lattice sizes run through primes starting at the first prime >= |I| and
    growing geometrically; for each size, generating-vector components are
    scanned in ascending order and the first collision-free value is kept.
    Raises :class:`LatticeConstructionError` if no size below ``m_cap`` works.
    """
    source = _as_source(freqs)
    if source.count == 0:
        raise ValueError("cannot build a lattice for an empty frequency set")
    if source.count == 1:
        return Rank1Lattice(np.zeros(source.dim, dtype=np.int64), 1)
    M = next_prime(source.count)
    while M <= m_cap:
        z = _cbc_at(source, M)
        if z is not None:
            return Rank1Lattice(z, M)
        M = next_prime(max(M + 1, int(M * 1.3)))
    raise LatticeConstructionError(
        f"no reconstructing lattice found for |I|={source.count} below M={m_cap}"
    )


# ---------------------------------------------------------------------------
# multiple rank-1 lattices


@dataclass(frozen=True)
class MultipleRank1Lattices:
    """Several lattices plus an assignment of each frequency to one of them."""

    lattices: tuple[Rank1Lattice, ...]
    assignment: np.ndarray  # (n,) int64: index into lattices per frequency

    @property
    def total_samples(self) -> int:
        return sum(lat.M for lat in self.lattices)


def build_multiple_lattices(
    freqs, c: float = 2.0, b: int = 5, seed: int | np.random.Generator = 0
) -> MultipleRank1Lattices:
    """Randomized multiple-lattice construction.

    Draws lattices of random prime size in [c |I|, 2 c |I|] with uniformly
    random generating vectors and assigns every frequency that is alias-free
    within the whole of I to the first such lattice.  Draws that assign
    nothing new are discarded.  If the frequencies are not exhausted within
    a draw budget the construction restarts (at most ``b`` times) before
    raising :class:`LatticeConstructionError`.
    """
    source = _as_source(freqs)
    n, d = source.count, source.dim
    if n == 0:
        raise ValueError("cannot build lattices for an empty frequency set")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if n == 1:
        return MultipleRank1Lattices(
            (Rank1Lattice(np.zeros(d, dtype=np.int64), 1),),
            np.zeros(1, dtype=np.int64),
        )
    lo = max(2, int(np.ceil(c * n)))
    hi = max(lo + 1, int(np.ceil(2 * c * n)))
    draw_budget = max(16, 2 * int(np.ceil(np.log2(n + 1))))
    for _ in range(b + 1):
        lattices: list[Rank1Lattice] = []
        assignment = np.full(n, -1, dtype=np.int64)
        remaining = n
        for _ in range(draw_budget):
            M = _random_prime(lo, hi, rng)
            z = rng.integers(0, M, size=d, dtype=np.int64)
            res = source.residues(z, M)
            counts = np.bincount(res, minlength=M)
            fresh = (counts[res] == 1) & (assignment < 0)
            if not np.any(fresh):
                continue
            lattices.append(Rank1Lattice(z, M))
            assignment[fresh] = len(lattices) - 1
            remaining -= int(np.count_nonzero(fresh))
            if remaining == 0:
                return MultipleRank1Lattices(tuple(lattices), assignment)
    raise LatticeConstructionError(
        f"multiple-lattice construction exhausted {b} restarts for |I|={n}"
    )


# ---------------------------------------------------------------------------
# reconstruction plans


@dataclass(frozen=True)
class ReconstructionPlan:
    """Lattice(s), frequency set and residue maps for coefficient reconstruction.

    ``index_lists[i]`` holds positions (into the frequency-set order) of the
    frequencies assigned to ``lattices[i]``, and ``residue_lists[i]`` their
    residues; reconstruction gathers one FFT per lattice into a coefficient
    vector aligned with the frequency-set order.
    """

    backend: str
    dim: int
    count: int
    lattices: tuple[Rank1Lattice, ...]
    index_lists: tuple[np.ndarray, ...]
    residue_lists: tuple[np.ndarray, ...]

    @property
    def total_samples(self) -> int:
        return sum(lat.M for lat in self.lattices)

    def reconstruct(self, samples: Sequence[np.ndarray]) -> np.ndarray:
        if len(samples) != len(self.lattices):
            raise DimensionMismatchError("one sample vector per lattice required")
        out = np.empty(self.count, dtype=np.complex128)
        for lat, idx, res, smp in zip(
            self.lattices, self.index_lists, self.residue_lists, samples
        ):
            smp = np.asarray(smp, dtype=np.complex128)
            if smp.shape != (lat.M,):
                raise DimensionMismatchError("sample vector does not match lattice size")
            fhat = np.fft.fft(smp) / lat.M
            out[idx] = fhat[res]
        return out


def plan_single(freqs, m_cap: int = 2**26) -> ReconstructionPlan:
    """Reconstruction plan backed by one component-by-component lattice."""
    source = _as_source(freqs)
    lat = cbc_reconstructing_lattice(source, m_cap=m_cap)
    idx = np.arange(source.count, dtype=np.int64)
    res = source.residues(lat.z, lat.M)
    return ReconstructionPlan(
        "single", source.dim, source.count, (lat,), (idx,), (res,)
    )


def plan_multiple(
    freqs, c: float = 2.0, b: int = 5, seed: int | np.random.Generator = 0
) -> ReconstructionPlan:
    """Reconstruction plan backed by multiple random lattices."""
    source = _as_source(freqs)
    multi = build_multiple_lattices(source, c=c, b=b, seed=seed)
    index_lists = []
    residue_lists = []
    for i, lat in enumerate(multi.lattices):
        idx = np.nonzero(multi.assignment == i)[0]
        index_lists.append(idx)
        if isinstance(freqs, (ExplicitFreqs, ProductFreqs)):
            rows = freqs.gather(idx)
        else:
            rows = np.asarray(freqs, dtype=np.int64)[idx]
        residue_lists.append((rows @ lat.z) % lat.M)
    return ReconstructionPlan(
        "multiple",
        source.dim,
        source.count,
        multi.lattices,
        tuple(index_lists),
        tuple(residue_lists),
    )

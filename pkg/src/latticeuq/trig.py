"""Sparse multivariate trigonometric polynomials.

A sparse trigonometric polynomial is a finite sum

    p(x) = sum_{k in I} p_hat(k) * exp(2*pi*i * <k, x>),   x in [0, 1)^d,

held as a frequency array together with a matching coefficient vector.
Frequencies are canonicalized to a fixed (lexicographic) order so that
evaluation, serialization and comparisons are deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct
from typing import Iterable, Mapping, TextIO

import numpy as np

from .errors import DimensionMismatchError

__all__ = [
    "SparseTrigPoly",
    "TrigAntiderivative",
    "antiderivative_first_var",
    "directional_expansion",
    "dump_coefficients",
    "load_coefficients",
    "symmetrize_reflections",
]

# Largest number of phase-table entries (points x terms) materialized at once
# by batched evaluation; keeps peak memory of a single chunk around 64 MB.
_EVAL_CHUNK = 1 << 22


def _as_freq_array(freqs: Iterable, dim: int) -> np.ndarray:
    arr = np.asarray(list(freqs) if not isinstance(freqs, np.ndarray) else freqs)
    if arr.size == 0:
        return np.zeros((0, dim), dtype=np.int64)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise DimensionMismatchError(
            f"frequency array of shape {arr.shape} does not match dim={dim}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("frequencies must be integers")
    return arr.astype(np.int64)


def _lex_order(freqs: np.ndarray) -> np.ndarray:
    """Indices sorting rows of `freqs` lexicographically (first column major)."""
    if len(freqs) == 0:
        return np.zeros(0, dtype=np.intp)
    return np.lexsort(freqs.T[::-1])


class SparseTrigPoly:
    """Finite map from integer frequencies to complex coefficients.

    Parameters
    ----------
    dim : int
        Number of variables d >= 1.
    freqs : array-like of shape (n, dim), integer
        Frequency vectors; duplicate rows are rejected.
    coeffs : array-like of shape (n,), complex
        Coefficient for each frequency row.

    Notes
    -----
    Rows are stored sorted lexicographically, and every operation that sums
    over terms iterates in that order, so results are reproducible run to run.
    """

    __slots__ = ("dim", "freqs", "coeffs")

    def __init__(self, dim: int, freqs, coeffs) -> None:
        if dim < 1:
            raise ValueError("dim must be a positive integer")
        farr = _as_freq_array(freqs, dim)
        carr = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if len(farr) != len(carr):
            raise ValueError("freqs and coeffs must have matching lengths")
        order = _lex_order(farr)
        farr = farr[order]
        carr = carr[order]
        if len(farr) > 1 and np.any(np.all(farr[1:] == farr[:-1], axis=1)):
            raise ValueError("duplicate frequencies are not allowed")
        object.__setattr__(self, "dim", int(dim))
        object.__setattr__(self, "freqs", farr)
        object.__setattr__(self, "coeffs", carr)
        farr.setflags(write=False)
        carr.setflags(write=False)

    def __setattr__(self, name, value):  # immutable by convention
        raise AttributeError("SparseTrigPoly is immutable")

    @classmethod
    def from_terms(cls, dim: int, terms: Mapping) -> "SparseTrigPoly":
        """Build from a mapping ``{(k_1, ..., k_d): coefficient}``."""
        keys = list(terms.keys())
        freqs = np.asarray(keys, dtype=np.int64).reshape(len(keys), dim)
        coeffs = np.asarray([terms[k] for k in keys], dtype=np.complex128)
        return cls(dim, freqs, coeffs)

    @property
    def terms(self) -> dict:
        """Terms as ``{frequency tuple: coefficient}`` in canonical order."""
        return {
            tuple(int(v) for v in row): complex(c)
            for row, c in zip(self.freqs, self.coeffs)
        }

    def __len__(self) -> int:
        return len(self.coeffs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseTrigPoly):
            return NotImplemented
        return (
            self.dim == other.dim
            and self.freqs.shape == other.freqs.shape
            and bool(np.all(self.freqs == other.freqs))
            and bool(np.all(self.coeffs == other.coeffs))
        )

    def __repr__(self) -> str:
        return f"SparseTrigPoly(dim={self.dim}, terms={len(self)})"

    def __add__(self, other: "SparseTrigPoly") -> "SparseTrigPoly":
        if not isinstance(other, SparseTrigPoly):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatchError("cannot add polynomials of different dims")
        merged = dict(zip(map(tuple, self.freqs), self.coeffs))
        for row, c in zip(map(tuple, other.freqs), other.coeffs):
            merged[row] = merged.get(row, 0.0) + c
        return SparseTrigPoly.from_terms(self.dim, merged) if merged else _empty(self.dim)

    def __mul__(self, scalar) -> "SparseTrigPoly":
        return SparseTrigPoly(self.dim, self.freqs, self.coeffs * complex(scalar))

    __rmul__ = __mul__

    def evaluate(self, x) -> complex:
        """Evaluate p at a single point x in [0, 1)^d."""
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"point of shape {x.shape} does not match dim={self.dim}"
            )
        phases = np.exp(2j * np.pi * (self.freqs @ x))
        return complex(phases @ self.coeffs)

    def evaluate_batch(self, xs: np.ndarray) -> np.ndarray:
        """Evaluate p at many points.

        Parameters
        ----------
        xs : ndarray of shape (m, dim)

        Returns
        -------
        ndarray of shape (m,), complex
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"batch of shape {xs.shape} does not match dim={self.dim}"
            )
        m = len(xs)
        n = max(len(self), 1)
        out = np.zeros(m, dtype=np.complex128)
        if len(self) == 0:
            return out
        step = max(1, _EVAL_CHUNK // n)
        ft = self.freqs.T.astype(np.float64)
        for lo in range(0, m, step):
            hi = min(m, lo + step)
            out[lo:hi] = np.exp(2j * np.pi * (xs[lo:hi] @ ft)) @ self.coeffs
        return out


def _empty(dim: int) -> SparseTrigPoly:
    return SparseTrigPoly(dim, np.zeros((0, dim), dtype=np.int64), np.zeros(0))


@dataclass(frozen=True)
class TrigAntiderivative:
    """Closed-form antiderivative of a sparse trig polynomial in its first variable.

    With p(x) = sum_k p_hat(k) e^{2 pi i k . x} the antiderivative along x_1,
    fixed to vanish at x_1 = 0, is

        P(x) = sum_{k_1 != 0} p_hat(k) / (2 pi i k_1) * (e^{2 pi i k_1 x_1} - 1)
               * e^{2 pi i <k_tail, x_tail>}
             + x_1 * sum_{l} p_hat(0, l) e^{2 pi i <l, x_tail>}.

    Attributes
    ----------
    dim : ambient dimension of the input polynomial.
    osc_freqs, osc_coeffs : the oscillatory terms, keyed by full frequencies
        (k_1, l) with k_1 != 0; coefficient p_hat / (2 pi i k_1).
    lin_freqs, lin_coeffs : the linear-in-x_1 terms, keyed by tail frequencies l.
    """

    dim: int
    osc_freqs: np.ndarray
    osc_coeffs: np.ndarray
    lin_freqs: np.ndarray
    lin_coeffs: np.ndarray

    def evaluate(self, x) -> complex:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape != (self.dim,):
            raise DimensionMismatchError(
                f"point of shape {x.shape} does not match dim={self.dim}"
            )
        out = 0.0 + 0.0j
        if len(self.osc_coeffs):
            ph = np.exp(2j * np.pi * (self.osc_freqs @ x))
            base = np.exp(-2j * np.pi * (self.osc_freqs[:, 0] * x[0]))
            # (e^{2 pi i k1 x1} - 1) e^{2 pi i <k_tail, x_tail>}
            out += np.sum(self.osc_coeffs * (ph - ph * base))
        if len(self.lin_coeffs):
            ph = np.exp(2j * np.pi * (self.lin_freqs @ x[1:]))
            out += x[0] * np.sum(self.lin_coeffs * ph)
        return complex(out)

    def derivative(self) -> SparseTrigPoly:
        """Differentiate back; recovers the original polynomial."""
        terms: dict = {}
        for row, c in zip(self.osc_freqs, self.osc_coeffs):
            terms[tuple(int(v) for v in row)] = c * (2j * np.pi * row[0])
        for row, c in zip(self.lin_freqs, self.lin_coeffs):
            terms[(0, *(int(v) for v in row))] = terms.get((0, *map(int, row)), 0.0) + c
        if not terms:
            return _empty(self.dim)
        return SparseTrigPoly.from_terms(self.dim, terms)


def antiderivative_first_var(p: SparseTrigPoly) -> TrigAntiderivative:
    """Antiderivative of p along its first variable, vanishing at x_1 = 0."""
    k1 = p.freqs[:, 0]
    osc = k1 != 0
    osc_freqs = p.freqs[osc]
    osc_coeffs = p.coeffs[osc] / (2j * np.pi * k1[osc])
    lin_freqs = p.freqs[~osc, 1:]
    lin_coeffs = p.coeffs[~osc].copy()
    return TrigAntiderivative(p.dim, osc_freqs, osc_coeffs, lin_freqs, lin_coeffs)


def directional_expansion(p: SparseTrigPoly, coeff_floor: float = 0.0) -> np.ndarray:
    """Per-dimension maximal absolute frequency of the significant terms.

    Returns ``max(|k_j|)`` over all terms with ``|coefficient| > coeff_floor``,
    as an integer vector of length ``dim`` (all zeros for an empty selection).
    """
    if coeff_floor < 0:
        raise ValueError("coeff_floor must be nonnegative")
    keep = np.abs(p.coeffs) > coeff_floor
    if not np.any(keep):
        return np.zeros(p.dim, dtype=np.int64)
    return np.max(np.abs(p.freqs[keep]), axis=0).astype(np.int64)


def dump_coefficients(p: SparseTrigPoly, fh: TextIO) -> None:
    """Write the coefficient dump: header then one ``k_1 ... k_d re im`` per term."""
    fh.write(f"# dim={p.dim} terms={len(p)}\n")
    for row, c in zip(p.freqs, p.coeffs):
        ks = " ".join(str(int(v)) for v in row)
        fh.write(f"{ks} {float(c.real)!r} {float(c.imag)!r}\n")


def load_coefficients(fh: TextIO) -> SparseTrigPoly:
    """Parse a coefficient dump written by :func:`dump_coefficients`."""
    header = fh.readline()
    if not header.startswith("# dim="):
        raise ValueError("malformed coefficient dump header")
    fields = dict(part.split("=") for part in header[2:].split())
    dim, nterms = int(fields["dim"]), int(fields["terms"])
    freqs = np.zeros((nterms, dim), dtype=np.int64)
    coeffs = np.zeros(nterms, dtype=np.complex128)
    for i in range(nterms):
        parts = fh.readline().split()
        if len(parts) != dim + 2:
            raise ValueError(f"malformed coefficient line {i + 1}")
        freqs[i] = [int(v) for v in parts[:dim]]
        coeffs[i] = complex(float(parts[dim]), float(parts[dim + 1]))
    return SparseTrigPoly(dim, freqs, coeffs)


# Orbits larger than this (2^#nonzero sign flips) are averaged over their
# detected members only instead of being extended to the full orbit.
_ORBIT_CAP = 64


def symmetrize_reflections(p: SparseTrigPoly, parity: Iterable[int]) -> SparseTrigPoly:
    """Project coefficients onto a prescribed reflection symmetry.

    ``parity[j] = +1`` declares the underlying function even under the
    reflection ``x_j -> 1 - x_j`` (coefficients even under ``k_j -> -k_j``),
    ``parity[j] = -1`` declares it odd.  Coefficients are averaged over each
    sign-flip orbit with the matching parity weights and the orbit is
    completed, so that detection noise and partially detected orbits are
    replaced by an exactly symmetric spectrum.
    """
    par = np.asarray(list(parity), dtype=np.int64)
    if par.shape != (p.dim,) or not np.all(np.abs(par) == 1):
        raise ValueError("parity must be a vector of +1/-1 of length dim")
    if len(p) == 0:
        return p

    freqs = p.freqs
    coeffs = p.coeffs
    odd = par < 0

    # Odd directions admit no k_j = 0 content.
    forbidden = np.any((freqs == 0) & odd, axis=1)
    canon = np.abs(freqs)
    weights = np.where(
        np.any((freqs < 0) & odd, axis=1),
        (-1.0) ** np.sum((freqs < 0) & odd, axis=1),
        1.0,
    )

    reps, inverse = np.unique(canon, axis=0, return_inverse=True)
    out: dict = {}
    for g in range(len(reps)):
        members = np.nonzero(inverse == g)[0]
        members = members[~forbidden[members]]
        if len(members) == 0:
            continue
        value = np.mean(weights[members] * coeffs[members])
        if value == 0:
            continue
        rep = reps[g]
        nz = np.nonzero(rep)[0]
        if 2 ** len(nz) <= _ORBIT_CAP:
            # Emit the full orbit with parity-consistent signs.
            for signs in _iproduct((1, -1), repeat=len(nz)):
                row = rep.copy()
                row[nz] *= np.asarray(signs, dtype=np.int64)
                w = 1.0
                for j, s in zip(nz, signs):
                    if s < 0 and odd[j]:
                        w = -w
                out[tuple(int(v) for v in row)] = w * value
        else:
            # Orbit too large to extend: keep the detected members, symmetrized.
            for m in members:
                out[tuple(int(v) for v in freqs[m])] = weights[m] * value
    if not out:
        return _empty(p.dim)
    return SparseTrigPoly.from_terms(p.dim, out)

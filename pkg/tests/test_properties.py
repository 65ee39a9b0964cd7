"""Property-based tests: the shared randomized suites as pytest items, plus
hypothesis-driven invariants for the core algebra.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import tests.property_suites as ps
from latticeuq.lattice import Rank1Lattice, lattice_evaluate
from latticeuq.periodize import PeriodizationMap
from latticeuq.trig import SparseTrigPoly, antiderivative_first_var


@pytest.mark.parametrize("suite", ps.ALL_SUITES, ids=lambda fn: fn.__name__)
def test_randomized_suite(suite):
    suite()


# ---------------------------------------------------------------------------
# hypothesis properties

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def trig_polys(draw, max_dim=3, max_terms=6):
    dim = draw(st.integers(1, max_dim))
    n = draw(st.integers(1, max_terms))
    freqs = np.array(
        draw(
            st.lists(
                st.tuples(*[st.integers(-6, 6) for _ in range(dim)]),
                min_size=n,
                max_size=n,
            )
        ),
        dtype=np.int64,
    )
    freqs = np.unique(freqs, axis=0)
    coeffs = np.array(
        [
            complex(draw(finite), draw(finite))
            for _ in range(len(freqs))
        ]
    )
    return SparseTrigPoly(dim, freqs, coeffs)


@settings(max_examples=50, deadline=None)
@given(trig_polys(), st.floats(0.0, 1.0, allow_nan=False), st.floats(0.0, 1.0, allow_nan=False))
def test_evaluate_is_one_periodic(p, x0, shift):
    pt = np.full(p.dim, x0)
    shifted = pt.copy()
    shifted[0] = (shifted[0] + 1.0) % 2.0  # +1 modulo the torus
    a = p.evaluate(pt)
    b = p.evaluate(pt % 1.0)
    assert a == pytest.approx(b, rel=1e-9, abs=1e-9 * (1 + abs(a)))


@settings(max_examples=50, deadline=None)
@given(trig_polys(), finite, finite)
def test_evaluate_linear_in_coefficients(p, sa, sb):
    q = SparseTrigPoly(p.dim, p.freqs, p.coeffs * complex(sa, sb))
    pt = np.full(p.dim, 0.3217)
    assert q.evaluate(pt) == pytest.approx(
        complex(sa, sb) * p.evaluate(pt), rel=1e-9, abs=1e-6
    )


@settings(max_examples=50, deadline=None)
@given(trig_polys())
def test_antiderivative_vanishes_at_origin(p):
    q = antiderivative_first_var(p)
    scale = max(1.0, float(np.max(np.abs(p.coeffs))))
    for tail in np.linspace(0.1, 0.9, 4):
        pt = np.full(p.dim, tail)
        pt[0] = 0.0
        assert abs(q.evaluate(pt)) <= 1e-9 * scale


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 97), st.integers(1, 96), st.integers(1, 4))
def test_lattice_single_frequency_sums(M, z1, dim):
    # mean over lattice points of e^{2 pi i k.x} is 1 if k.z = 0 mod M else 0
    z = np.array([1] + [z1] * (dim - 1))[:dim]
    lat = Rank1Lattice(M=M, z=z)
    k = np.zeros(dim, dtype=np.int64)
    k[0] = M  # k.z = M = 0 mod M
    vals = lattice_evaluate(SparseTrigPoly(dim, k[None, :], [1.0]), lat)
    assert np.mean(vals).real == pytest.approx(1.0, abs=1e-9)
    k2 = np.zeros(dim, dtype=np.int64)
    k2[0] = 1
    if M > 1:
        vals2 = lattice_evaluate(SparseTrigPoly(dim, k2[None, :], [1.0]), lat)
        assert abs(np.mean(vals2)) <= 1e-9


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from(["tent", "spline4", "cosine"]),
    st.floats(-4.0, 4.0, allow_nan=False),
    st.floats(0.1, 5.0, allow_nan=False),
    st.floats(0.0, 1.0, allow_nan=False),
)
def test_periodization_forward_stays_in_interval(kind, alpha, width, x):
    pmap = PeriodizationMap(kind, alpha, alpha + width)
    t = float(pmap.forward(np.array([x]))[0])
    assert alpha - 1e-12 <= t <= alpha + width + 1e-12


@settings(max_examples=80, deadline=None)
@given(
    st.sampled_from(["tent", "spline4", "cosine"]),
    st.floats(-4.0, 4.0, allow_nan=False),
    st.floats(0.1, 5.0, allow_nan=False),
    st.floats(0.0, 1.0, allow_nan=False),
)
def test_periodization_reflection_symmetry(kind, alpha, width, x):
    pmap = PeriodizationMap(kind, alpha, alpha + width)
    a = float(pmap.forward(np.array([x % 1.0]))[0])
    b = float(pmap.forward(np.array([(1.0 - x) % 1.0]))[0])
    assert a == pytest.approx(b, abs=1e-10 * (1 + abs(alpha) + width))

"""Unit tests for the dimension-incremental sparse FFT."""

import numpy as np
import pytest

from latticeuq.lattice import plan_single
from latticeuq.sfft import BlackBoxFn, SfftConfig, projected_coefficients, sfft
from latticeuq.trig import SparseTrigPoly


def random_sparse_poly(rng, dim, n_terms, N, mag_lo=1.0, mag_hi=10.0):
    """A polynomial with well-separated magnitudes, guaranteed n_terms terms."""
    seen = set()
    rows = []
    while len(rows) < n_terms:
        k = tuple(int(v) for v in rng.integers(-N, N + 1, size=dim))
        if k not in seen:
            seen.add(k)
            rows.append(k)
    freqs = np.array(rows, dtype=np.int64)
    mags = rng.uniform(mag_lo, mag_hi, size=n_terms)
    phases = rng.uniform(0, 2 * np.pi, size=n_terms)
    return SparseTrigPoly(dim, freqs, mags * np.exp(1j * phases))


def as_blackbox(p):
    return BlackBoxFn(p.dim, lambda pts: p.evaluate_batch(pts))


class TestBasics:
    def test_zero_function(self):
        f = BlackBoxFn(3, lambda pts: np.zeros(len(pts), dtype=np.complex128))
        res = sfft(f, SfftConfig(N=4, s=10, r=2, seed=0))
        assert len(res.poly) == 0

    def test_constant_function(self):
        f = BlackBoxFn(3, lambda pts: np.full(len(pts), 5.0, dtype=np.complex128))
        res = sfft(f, SfftConfig(N=4, s=10, r=2, seed=0))
        assert len(res.poly) == 1
        assert res.poly.freqs.tolist() == [[0, 0, 0]]
        assert res.poly.coeffs[0] == pytest.approx(5.0, abs=1e-10)

    @pytest.mark.parametrize("backend", ["single", "multiple"])
    def test_exact_recovery_small(self, backend):
        rng = np.random.default_rng(30)
        p = random_sparse_poly(rng, 4, 8, N=8)
        res = sfft(as_blackbox(p), SfftConfig(N=8, s=20, r=3, backend=backend, seed=7))
        assert np.array_equal(res.poly.freqs, p.freqs)
        assert np.max(np.abs(res.poly.coeffs - p.coeffs)) < 1e-8

    def test_output_within_box_and_sparsity(self):
        rng = np.random.default_rng(31)
        p = random_sparse_poly(rng, 3, 12, N=5)
        cfg = SfftConfig(N=5, s=6, r=2, seed=1)  # s below true sparsity
        res = sfft(as_blackbox(p), cfg)
        assert len(res.poly) <= 6
        assert np.all(np.abs(res.poly.freqs) <= 5)

    def test_determinism(self):
        rng = np.random.default_rng(32)
        p = random_sparse_poly(rng, 3, 10, N=6)
        cfg = SfftConfig(N=6, s=15, r=2, backend="multiple", seed=11)
        r1 = sfft(as_blackbox(p), cfg)
        r2 = sfft(as_blackbox(p), cfg)
        assert np.array_equal(r1.poly.freqs, r2.poly.freqs)
        assert np.array_equal(r1.poly.coeffs, r2.poly.coeffs)
        assert r1.total_samples == r2.total_samples

    def test_thresholding_relative(self):
        # a term at 1e-15 of the leading magnitude must be dropped at theta=1e-6
        p = SparseTrigPoly.from_terms(2, {(1, 0): 1.0, (0, 3): 1e-15})
        res = sfft(as_blackbox(p), SfftConfig(N=4, s=10, theta=1e-6, r=2, seed=2))
        assert res.poly.freqs.tolist() == [[1, 0]]

    def test_sample_accounting(self):
        rng = np.random.default_rng(33)
        p = random_sparse_poly(rng, 3, 6, N=4)
        res = sfft(as_blackbox(p), SfftConfig(N=4, s=10, r=2, seed=3))
        assert res.total_samples == sum(rec.samples for rec in res.steps)
        assert res.total_samples > 0


class TestRecoveryRate:
    def test_seeded_trials_both_backends(self):
        # smaller instance of the acceptance trial, quick version
        for backend in ("single", "multiple"):
            wins = 0
            for trial in range(10):
                rng = np.random.default_rng(1000 + trial)
                p = random_sparse_poly(rng, 6, 10, N=16)
                cfg = SfftConfig(N=16, s=20, r=3, backend=backend, seed=trial)
                res = sfft(as_blackbox(p), cfg)
                if np.array_equal(res.poly.freqs, p.freqs) and np.max(
                    np.abs(res.poly.coeffs - p.coeffs)
                ) < 1e-8:
                    wins += 1
            assert wins >= 9, f"{backend}: {wins}/10"


class TestProjectedCoefficients:
    def test_single_frequency_phase(self):
        # projecting f(x) = e^{2 pi i (k x1 + m x2)} onto dim 1 at anchor y0
        # leaves the coefficient e^{2 pi i m y0} at k: magnitude exactly 1
        k, m = 3, 2
        p = SparseTrigPoly.from_terms(2, {(k, m): 1.0})
        f = as_blackbox(p)
        cand = np.arange(-4, 5)[:, None]
        plan = plan_single(cand)
        anchor = np.array([0.37])
        coeffs = projected_coefficients(f, plan, anchor)
        got = coeffs[7]  # row of k=3 in cand
        assert abs(got) == pytest.approx(1.0, abs=1e-10)
        assert got == pytest.approx(np.exp(2j * np.pi * m * anchor[0]), abs=1e-10)

    def test_zero_function(self):
        f = BlackBoxFn(2, lambda pts: np.zeros(len(pts), dtype=np.complex128))
        cand = np.arange(-3, 4)[:, None]
        plan = plan_single(cand)
        coeffs = projected_coefficients(f, plan, np.array([0.5]))
        assert np.allclose(coeffs, 0.0)

    def test_two_term_cancellation_recovered_by_second_anchor(self):
        # two terms differing only in the trailing dim can cancel at one
        # anchor; a different anchor exposes them
        p = SparseTrigPoly.from_terms(2, {(2, 0): 1.0, (2, 1): -1.0})
        f = as_blackbox(p)
        cand = np.arange(-3, 4)[:, None]
        plan = plan_single(cand)
        # anchor y=0: coefficient is 1 - 1 = 0 (perfect cancellation)
        c0 = projected_coefficients(f, plan, np.array([0.0]))
        assert abs(c0[5]) < 1e-10  # k=2 row
        # anchor y=0.5: coefficient is 1 - e^{i pi} = 2
        c1 = projected_coefficients(f, plan, np.array([0.5]))
        assert c1[5] == pytest.approx(2.0, abs=1e-10)

    def test_cancellation_survived_by_multiple_iterations(self):
        # the detection loop with r >= 2 random anchors almost surely sees a
        # nonzero projection and keeps the frequency
        p = SparseTrigPoly.from_terms(2, {(2, 0): 1.0, (2, 1): -1.0})
        res = sfft(as_blackbox(p), SfftConfig(N=3, s=10, r=3, seed=5))
        assert set(map(tuple, res.poly.freqs.tolist())) == {(2, 0), (2, 1)}


class TestConfigValidation:
    def test_bad_backend(self):
        with pytest.raises(ValueError):
            SfftConfig(N=4, s=10, backend="triple")

    def test_bad_theta(self):
        with pytest.raises(ValueError):
            SfftConfig(N=4, s=10, theta=0.0)

    def test_s_local_exceeding_s_requires_override(self):
        with pytest.raises(ValueError):
            SfftConfig(N=4, s=10, s_local=20)
        cfg = SfftConfig(N=4, s=10, s_local=20, allow_s_local_gt_s=True)
        assert cfg.effective_s_local == 20

    def test_candidate_cap_guard(self):
        from latticeuq.errors import CandidateExplosionError

        rng = np.random.default_rng(34)
        p = random_sparse_poly(rng, 3, 20, N=8)
        cfg = SfftConfig(N=8, s=20, r=2, seed=0, candidate_cap=10)
        with pytest.raises(CandidateExplosionError):
            sfft(as_blackbox(p), cfg)

    def test_sample_budget_guard(self):
        from latticeuq.errors import SampleBudgetError

        rng = np.random.default_rng(35)
        p = random_sparse_poly(rng, 3, 20, N=8)
        cfg = SfftConfig(N=8, s=20, r=2, seed=0, max_samples=50)
        with pytest.raises(SampleBudgetError):
            sfft(as_blackbox(p), cfg)

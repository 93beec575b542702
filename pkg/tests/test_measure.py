import math
from fractions import Fraction

import numpy as np
import pytest

import cpapprox as cp
from cpapprox.errors import CoordinateOverflowError, DimensionMismatchError
from helpers import random_distribution, random_signed
from oracle import DenseRational

I = cp.identity(1)
F_HALF = cp.SymmetricDistribution.from_items(
    1, [((0,), 0.5), ((1,), 0.25), ((-1,), 0.25)]
)


def measure(items, dim=1, trunc_err=0.0):
    return cp.SignedLatticeMeasure.from_items(dim, items, trunc_err)


class TestLinearCombine:
    def test_exact_cancellation_doubles_trunc_err(self):
        F = F_HALF.measure.with_trunc_err(1e-6)
        out = cp.linear_combine([(1.0, F), (-1.0, F)])
        assert len(out) == 0
        assert out.tv == 0.0
        assert out.trunc_err == pytest.approx(2e-6)

    def test_identity_passthrough(self):
        out = cp.linear_combine([(1.0, I)])
        assert out.as_dict() == {(0,): 1.0}

    def test_centered_atoms(self):
        out = cp.linear_combine([(1.0, F_HALF.measure), (-1.0, I)])
        assert out.as_dict() == {(0,): -0.5, (1,): 0.25, (-1,): 0.25}
        assert cp.tv_norm(out) == (1.0, 0.0)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            cp.linear_combine([(1.0, I), (1.0, cp.identity(2))])

    def test_empty_terms_rejected(self):
        with pytest.raises(ValueError):
            cp.linear_combine([])


class TestConvolve:
    def test_identity_neutral(self):
        M = measure([((2,), 0.5), ((-3,), -0.25)])
        out = cp.convolve(I, M)
        assert out.as_dict() == M.as_dict()

    def test_point_mass_translation(self):
        a = cp.SignedLatticeMeasure.point_mass((3,))
        b = cp.SignedLatticeMeasure.point_mass((-5,))
        assert cp.convolve(a, b).as_dict() == {(-2,): 1.0}

    def test_square_center_weight(self):
        out = cp.convolve(F_HALF.measure, F_HALF.measure)
        assert out.weight_at((0,)) == pytest.approx(0.375, abs=1e-15)

    def test_trunc_err_propagation(self):
        A = F_HALF.measure.with_trunc_err(1e-3)
        B = F_HALF.measure.with_trunc_err(1e-4)
        out = cp.convolve(A, B)
        expected = 1.0 * 1e-4 + (1.0 + 1e-4) * 1e-3
        assert out.trunc_err == pytest.approx(expected, rel=1e-12)

    def test_coordinate_overflow_aborts(self):
        far = cp.SignedLatticeMeasure.point_mass((1 << 39,))
        with pytest.raises(CoordinateOverflowError):
            cp.convolve(cp.convolve(far, far), cp.convolve(far, far))

    def test_multidim(self):
        a = measure([((1, 0), 0.5), ((0, 1), 0.5)], dim=2)
        out = cp.convolve(a, a)
        assert out.as_dict() == {(2, 0): 0.25, (1, 1): 0.5, (0, 2): 0.25}


class TestConvolutionPower:
    def test_n1_returns_input_unchanged(self):
        F = F_HALF.measure.with_trunc_err(1e-7)
        out = cp.convolution_power(F, 1, 1e-3)
        assert out is F

    def test_point_mass_power(self):
        out = cp.convolution_power(cp.SignedLatticeMeasure.point_mass((1,)), 5, 0.0)
        assert out.as_dict() == {(5,): 1.0}

    def test_center_weight_matches_laurent_oracle(self):
        # oracle: dense rational Laurent power
        F = DenseRational.from_dict(
            {0: Fraction(1, 2), 1: Fraction(1, 4), -1: Fraction(1, 4)}
        )
        exact = F.power(4).to_dict()[0]
        assert exact == Fraction(35, 128)
        out = cp.convolution_power(F_HALF.measure, 4, 0.0)
        assert out.weight_at((0,)) == pytest.approx(float(exact), abs=1e-15)

    def test_tol_zero_equals_iterated(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            M = random_signed(rng, dim=int(rng.integers(1, 3)), max_atoms=8)
            n = int(rng.integers(2, 9))
            fast = cp.convolution_power(M, n, 0.0)
            slow = M
            for _ in range(n - 1):
                slow = cp.convolve(slow, M)
            diff = cp.linear_combine([(1.0, fast), (-1.0, slow)])
            scale = max(1.0, slow.tv)
            assert diff.tv <= 1e-12 * scale
            for point, w in fast.items():
                if abs(w) > 1e-12 * scale:
                    assert slow.weight_at(point) != 0.0

    def test_budget_respected(self):
        F = F_HALF.measure
        out = cp.convolution_power(F, 64, 1e-6)
        assert out.trunc_err <= 1e-6


class TestTvNorm:
    def test_distribution_norm_one(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            F = random_distribution(rng, dim=int(rng.integers(1, 4)))
            value, err = cp.tv_norm(F.measure)
            assert err == 0.0
            assert value == pytest.approx(1.0, abs=1e-12)

    def test_disjoint_point_masses(self):
        d = cp.linear_combine(
            [
                (1.0, cp.SignedLatticeMeasure.point_mass((2,))),
                (-1.0, cp.SignedLatticeMeasure.point_mass((5,))),
            ]
        )
        assert cp.tv_norm(d)[0] == 2.0

    def test_centered_norm(self):
        g = cp.linear_combine([(1.0, F_HALF.measure), (-1.0, I)])
        assert cp.tv_norm(g)[0] == 1.0

    def test_distance_is_half_norm(self):
        a = cp.SignedLatticeMeasure.point_mass((0,))
        b = cp.SignedLatticeMeasure.point_mass((4,))
        dist, err = cp.tv_distance(a, b)
        assert dist == 1.0 and err == 0.0


class TestTruncate:
    def test_eps_zero_noop(self):
        M = F_HALF.measure
        assert cp.truncate(M, 0.0) is M

    def test_small_atoms_removed(self):
        M = measure([((0,), 0.9), ((5,), 1e-9), ((-5,), 1e-9)])
        out = cp.truncate(M, 1e-8)
        assert out.as_dict() == {(0,): 0.9}
        assert out.trunc_err == pytest.approx(2e-9)

    def test_budget_not_exceeded(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            M = random_signed(rng, max_atoms=20)
            eps = float(rng.uniform(0, M.tv))
            out = cp.truncate(M, eps)
            assert out.trunc_err - M.trunc_err <= eps * (1 + 1e-12)

    def test_symmetric_pairs_preserved(self):
        rng = np.random.default_rng(5)
        for _ in range(40):
            F = random_distribution(rng, dim=2, max_pairs=6)
            eps = float(rng.uniform(0, 0.5))
            out = cp.truncate(F.measure, eps)
            assert cp.symmetry_check(out)

    def test_smallest_removed_first(self):
        M = measure([((0,), 0.5), ((1,), 0.01), ((2,), 0.3), ((3,), 0.02)])
        out = cp.truncate(M, 0.03)
        # 0.01 + 0.02 fit; 0.3 must stay
        assert out.as_dict() == {(0,): 0.5, (2,): 0.3}


class TestSymmetryCheck:
    def test_symmetric(self):
        assert cp.symmetry_check(F_HALF.measure)

    def test_asymmetric(self):
        assert not cp.symmetry_check(measure([((0,), 0.5), ((1,), 0.5)]))

    def test_example1_truncated_symmetric(self):
        from cpapprox import ExampleSpec, make_example

        F = make_example(ExampleSpec("ex1", truncation_K=100))
        assert cp.symmetry_check(F.measure)


class TestAlgebraicProperties:
    def test_commutativity_exact(self):
        rng = np.random.default_rng(17)
        for _ in range(30):
            dim = int(rng.integers(1, 4))
            A = random_signed(rng, dim=dim, max_atoms=20)
            B = random_signed(rng, dim=dim, max_atoms=20)
            d = cp.linear_combine([(1.0, cp.convolve(A, B)), (-1.0, cp.convolve(B, A))])
            assert d.tv == 0.0

    def test_associativity(self):
        rng = np.random.default_rng(19)
        for _ in range(30):
            dim = int(rng.integers(1, 3))
            A = random_signed(rng, dim=dim, max_atoms=10)
            B = random_signed(rng, dim=dim, max_atoms=10)
            C = random_signed(rng, dim=dim, max_atoms=10)
            left = cp.convolve(cp.convolve(A, B), C)
            right = cp.convolve(A, cp.convolve(B, C))
            assert cp.linear_combine([(1.0, left), (-1.0, right)]).tv <= 1e-10

    def test_submultiplicativity(self):
        rng = np.random.default_rng(23)
        for _ in range(40):
            dim = int(rng.integers(1, 4))
            A = random_signed(rng, dim=dim)
            B = random_signed(rng, dim=dim)
            out = cp.convolve(A, B)
            assert out.tv <= A.tv * B.tv * (1 + 1e-12) + out.trunc_err

    def test_probability_closure(self):
        rng = np.random.default_rng(29)
        for _ in range(25):
            dim = int(rng.integers(1, 3))
            F = random_distribution(rng, dim=dim)
            G = random_distribution(rng, dim=dim)
            out = cp.convolve(F.measure, G.measure)
            assert cp.symmetry_check(out)
            assert out.total_mass() == pytest.approx(1.0, abs=out.trunc_err + 1e-10)

    def test_error_soundness_vs_oracle(self):
        rng = np.random.default_rng(31)
        for _ in range(12):
            F = random_distribution(rng, dim=1, max_pairs=3, coord_cap=3)
            n = int(rng.integers(2, 65))
            tol = float(rng.choice([0.0, 1e-10, 1e-7]))
            computed = cp.convolution_power(F.measure, n, tol)
            exact = DenseRational.from_measure(F.measure).power(n).to_dict()
            got = {k: Fraction(w) for (k,), w in computed.items()}
            err = float(
                sum(abs(got.get(k, Fraction(0)) - v) for k, v in exact.items())
                + sum(abs(v) for k, v in got.items() if k not in exact)
            )
            assert err <= computed.trunc_err + 1e-9


class TestDeterminism:
    def test_repeat_runs_bit_identical(self):
        rng = np.random.default_rng(37)
        A = random_signed(rng, dim=2, max_atoms=30, coord_cap=6)
        B = random_signed(rng, dim=2, max_atoms=30, coord_cap=6)
        first = cp.convolve(A, B)
        second = cp.convolve(A, B)
        assert np.array_equal(first.weights, second.weights)
        assert np.array_equal(first.coords, second.coords)


class TestDensePathAgreement:
    def test_paths_agree_within_1e10(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            A = random_signed(rng, dim=1, max_atoms=40, coord_cap=30)
            B = random_signed(rng, dim=1, max_atoms=40, coord_cap=30)
            lo_a = A.coords.min(axis=0)
            lo_b = B.coords.min(axis=0)
            from cpapprox.measure import _dense1d_convolve, _sparse_convolve

            shape = A.coords.max(0) + B.coords.max(0) - lo_a - lo_b + 1
            cd, wd = _dense1d_convolve(A, B, lo_a + lo_b)
            cs, ws = _sparse_convolve(A, B, lo_a + lo_b, shape)
            dense = cp.SignedLatticeMeasure(1, cd, wd)
            sparse = cp.SignedLatticeMeasure(1, cs, ws)
            assert cp.linear_combine([(1.0, dense), (-1.0, sparse)]).tv <= 1e-10

    def test_fft_path_agrees_and_accounts_noise(self):
        rng = np.random.default_rng(43)
        for _ in range(10):
            F = random_distribution(rng, dim=1, max_pairs=5, coord_cap=8)
            G = random_distribution(rng, dim=1, max_pairs=5, coord_cap=8)
            exact = cp.convolve(F.measure, G.measure)
            from cpapprox.measure import _bounding_box, _fft_convolve, _fft_noise_bound

            lo = _bounding_box(F.measure)[0] + _bounding_box(G.measure)[0]
            hi = _bounding_box(F.measure)[1] + _bounding_box(G.measure)[1]
            shape = hi - lo + 1
            est = _fft_noise_bound(F.measure, G.measure, float(np.prod(shape)))
            coords, weights, extra = _fft_convolve(F.measure, G.measure, lo, shape, est)
            approx = cp.SignedLatticeMeasure(1, coords, weights)
            diff = cp.linear_combine([(1.0, exact), (-1.0, approx)]).tv
            assert diff <= extra
            # the bound must hold with a wide margin, not barely
            assert diff <= extra / 16


class TestSymmetricDistribution:
    def test_symmetrizes_by_averaging(self):
        F = cp.SymmetricDistribution.from_items(
            1, [((0,), 0.5), ((1,), 0.3), ((-1,), 0.2)]
        )
        assert F.measure.weight_at((1,)) == 0.25
        assert F.q == 0.5

    def test_rejects_asymmetric_support(self):
        with pytest.raises(ValueError):
            cp.SymmetricDistribution.from_items(1, [((0,), 0.5), ((1,), 0.5)])

    def test_rejects_bad_mass(self):
        with pytest.raises(ValueError):
            cp.SymmetricDistribution.from_items(
                1, [((0,), 0.6), ((1,), 0.25), ((-1,), 0.25)]
            )

    def test_rejects_degenerate_q(self):
        with pytest.raises(ValueError):
            cp.SymmetricDistribution.from_items(1, [((0,), 1.0)])

    def test_cached_tv_invariant(self):
        rng = np.random.default_rng(47)
        for _ in range(20):
            M = random_signed(rng, dim=2)
            assert M.tv == pytest.approx(float(np.abs(M.weights).sum()), rel=1e-12)


class TestTextFormat:
    def test_roundtrip(self):
        rng = np.random.default_rng(53)
        for _ in range(10):
            M = random_signed(rng, dim=int(rng.integers(1, 4)), max_atoms=15)
            M = M.with_trunc_err(float(rng.uniform(0, 1e-6)))
            back = cp.loads_measure(cp.dumps_measure(M))
            assert back.as_dict() == M.as_dict()
            assert back.trunc_err == M.trunc_err
            assert back.dim == M.dim

    def test_comments_and_blanks_ignored(self):
        text = "# comment\n\ndim=2 trunc_err=0.0\n# more\n1 -2 0.5\n-1 2 0.5\n"
        M = cp.loads_measure(text)
        assert M.as_dict() == {(1, -2): 0.5, (-1, 2): 0.5}

    def test_file_roundtrip(self, tmp_path):
        path = tmp_path / "m.txt"
        cp.write_measure(F_HALF.measure, path)
        back = cp.read_measure(path)
        assert back.as_dict() == F_HALF.measure.as_dict()

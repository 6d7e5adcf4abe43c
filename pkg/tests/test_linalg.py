import numpy as np
import pytest

from conftest import deque_roll_oracle
from nnmpc.errors import DimensionError, SingularMatrix
from nnmpc.linalg import LuFactors, hadamard, lu_factor, lu_solve, mat2, mat_mul, roll


class TestMat2:
    def test_validates_flat_buffer(self):
        a = mat2([1.0, 2.0, 3.0, 4.0], rows=2, cols=2)
        assert a.shape == (2, 2)
        assert a.flags.c_contiguous
        assert a.dtype == np.float64

    def test_rejects_wrong_size(self):
        with pytest.raises(DimensionError):
            mat2([1.0, 2.0, 3.0], rows=2, cols=2)

    def test_rejects_empty(self):
        with pytest.raises(DimensionError):
            mat2(np.zeros((0, 3)))


class TestMatMul:
    def test_identity(self, rng):
        a = rng.normal(size=(3, 3))
        assert np.array_equal(mat_mul(np.eye(3), a), a)

    def test_hand_case(self):
        out = mat_mul([[1.0, 2.0], [3.0, 4.0]], [[5.0], [6.0]])
        assert np.array_equal(out, [[17.0], [39.0]])

    def test_matches_triple_loop(self, rng):
        a = rng.normal(size=(5, 4))
        b = rng.normal(size=(4, 3))
        expected = np.zeros((5, 3))
        for i in range(5):
            for j in range(3):
                for k in range(4):
                    expected[i, j] += a[i, k] * b[k, j]
        assert np.allclose(mat_mul(a, b), expected, rtol=1e-13)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            mat_mul(np.ones((2, 3)), np.ones((2, 3)))

    def test_associativity(self, rng):
        for _ in range(20):
            a = rng.normal(size=rng.integers(1, 11, size=2))
            b = rng.normal(size=(a.shape[1], rng.integers(1, 11)))
            c = rng.normal(size=(b.shape[1], rng.integers(1, 11)))
            left = mat_mul(mat_mul(a, b), c)
            right = mat_mul(a, mat_mul(b, c))
            assert np.allclose(left, right, rtol=1e-9)


class TestHadamard:
    def test_ones_identity(self, rng):
        a = rng.normal(size=(4, 2))
        assert np.array_equal(hadamard(a, np.ones_like(a)), a)

    def test_hand_case(self):
        assert np.array_equal(hadamard([[2.0, 3.0]], [[4.0, 5.0]]), [[8.0, 15.0]])

    def test_matches_elementwise_loop(self, rng):
        a = rng.normal(size=(6, 6))
        b = rng.normal(size=(6, 6))
        expected = np.array([[a[i, j] * b[i, j] for j in range(6)] for i in range(6)])
        assert np.array_equal(hadamard(a, b), expected)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            hadamard(np.ones((2, 2)), np.ones((2, 3)))


class TestLu:
    def test_identity_solve(self):
        f = lu_factor(np.eye(4))
        b = np.array([1.0, 2.0, 3.0, 4.0])
        assert np.allclose(lu_solve(f, b), b, atol=1e-14)

    def test_hand_2x2(self):
        f = lu_factor([[4.0, 3.0], [6.0, 3.0]])
        x = lu_solve(f, np.array([10.0, 12.0]))
        assert np.allclose(x, [1.0, 2.0], atol=1e-12)

    def test_residual_on_random_spd(self, rng):
        a = rng.normal(size=(8, 8))
        spd = a @ a.T + 8 * np.eye(8)
        b = rng.normal(size=8)
        x = lu_solve(lu_factor(spd), b)
        assert np.max(np.abs(spd @ x - b)) < 1e-8

    def test_reconstruction(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 9))
            a = rng.normal(size=(n, n)) + n * np.eye(n)
            f = lu_factor(a)
            lower = np.tril(f.lu, -1) + np.eye(n)
            upper = np.triu(f.lu)
            assert np.allclose(a[f.perm], lower @ upper, rtol=1e-10, atol=1e-12)
            assert sorted(f.perm.tolist()) == list(range(n))
            assert f.parity in (-1, 1)

    def test_exact_singularity(self):
        with pytest.raises(SingularMatrix):
            lu_factor([[1.0, 2.0], [2.0, 4.0]])

    def test_non_square_rejected(self):
        with pytest.raises(DimensionError):
            lu_factor(np.ones((2, 3)))

    def test_rhs_length_mismatch(self):
        f = lu_factor(np.eye(3))
        with pytest.raises(DimensionError):
            lu_solve(f, np.ones(4))


class TestRoll:
    def test_full_window_shift(self):
        q = np.arange(6.0)
        roll(q, 0, 5, 2)
        assert np.array_equal(q, [0, 1, 0, 1, 2, 3])

    def test_zero_block_is_noop(self):
        q = np.arange(6.0)
        roll(q, 1, 4, 0)
        assert np.array_equal(q, np.arange(6.0))

    def test_degenerate_single_slot(self):
        q = np.arange(4.0)
        roll(q, 2, 2, 1)
        assert np.array_equal(q, np.arange(4.0))

    def test_matches_deque_oracle_randomized(self, rng):
        for _ in range(500):
            length = int(rng.integers(1, 20))
            q = rng.integers(0, 100, size=length).astype(float)
            start = int(rng.integers(0, length))
            end = int(rng.integers(start, length))
            bsize = int(rng.integers(0, end - start + 2))
            bsize = min(bsize, end - start + 1)
            expected = deque_roll_oracle(q, start, end, bsize)
            roll(q, start, end, bsize)
            assert np.array_equal(q, expected)

    def test_repeated_rolls_equal_push_pop_rounds(self, rng):
        # k push/pop rounds over a window of w blocks of size b.
        b, w = 3, 4
        q = np.zeros(b * w)
        reference = [list(q[i * b : (i + 1) * b]) for i in range(w)]
        for round_idx in range(10):
            block = rng.normal(size=b)
            roll(q, 0, b * w - 1, b)
            q[:b] = block
            reference.insert(0, list(block))
            reference.pop()
            flat = [v for chunk in reference for v in chunk]
            assert np.array_equal(q, flat)

    def test_never_touches_outside_window(self, rng):
        q = np.arange(10.0)
        before = q.copy()
        roll(q, 3, 6, 2)
        assert np.array_equal(q[:3], before[:3])
        assert np.array_equal(q[7:], before[7:])

    def test_out_of_range(self):
        q = np.arange(5.0)
        with pytest.raises(IndexError):
            roll(q, 0, 5, 1)
        with pytest.raises(IndexError):
            roll(q, -1, 3, 1)
        with pytest.raises(IndexError):
            roll(q, 2, 3, 3)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spnn.linalg import (
    as_cmatrix,
    dagger,
    haar_random_unitary,
    is_unitary,
    matmul,
    rvd,
    svd,
)


def random_cmatrix(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


class TestDagger:
    def test_identity(self):
        assert np.array_equal(dagger(np.eye(4, dtype=complex)), np.eye(4))

    def test_involution(self):
        rng = np.random.default_rng(0)
        x = random_cmatrix(rng, 5, 3)
        assert np.array_equal(dagger(dagger(x)), x)

    def test_conjugation(self):
        x = np.array([[0, 1j], [1j, 0]])
        expected = np.array([[0, -1j], [-1j, 0]])
        assert np.array_equal(dagger(x), expected)

    def test_antihomomorphism(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = random_cmatrix(rng, 6, 4)
            b = random_cmatrix(rng, 4, 5)
            lhs = dagger(matmul(a, b))
            rhs = matmul(dagger(b), dagger(a))
            assert np.max(np.abs(lhs - rhs)) <= 1e-12


class TestIsUnitary:
    def test_identity_16(self):
        assert is_unitary(np.eye(16, dtype=complex), tol=1e-10)

    def test_mzi_transfer_random(self):
        from spnn.devices import mzi_transfer

        rng = np.random.default_rng(2)
        for _ in range(25):
            theta, phi = rng.uniform(0, 2 * np.pi, 2)
            assert is_unitary(mzi_transfer(theta, phi), tol=1e-10)

    def test_imperfect_lossless_splitters(self):
        from spnn.devices import MZIParams, mzi_transfer_imperfect

        r = 0.8
        p = MZIParams(theta=1.2, phi=0.3, r1=r, t1=np.sqrt(1 - r * r),
                      r2=1 / np.sqrt(2), t2=1 / np.sqrt(2))
        assert is_unitary(mzi_transfer_imperfect(p), tol=1e-10)

    def test_scaled_identity_fails(self):
        assert not is_unitary(2.0 * np.eye(3, dtype=complex), tol=1e-10)

    def test_non_square_raises(self):
        with pytest.raises(ValueError):
            is_unitary(np.ones((2, 3), dtype=complex), tol=1e-10)


class TestMatmul:
    def test_associative(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            a = random_cmatrix(rng, 16, 16)
            b = random_cmatrix(rng, 16, 16)
            c = random_cmatrix(rng, 16, 16)
            lhs = matmul(matmul(a, b), c)
            rhs = matmul(a, matmul(b, c))
            scale = np.max(np.abs(lhs))
            assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            matmul(np.ones((2, 3), dtype=complex), np.ones((2, 3), dtype=complex))


class TestSvd:
    def test_diagonal(self):
        u, s, vh = svd(np.diag([3.0, 2.0]).astype(complex))
        assert np.allclose(s, [3.0, 2.0])
        for m in (u, vh):
            off = m - np.diag(np.diag(m))
            assert np.max(np.abs(off)) <= 1e-12
            assert np.allclose(np.abs(np.diag(m)), 1.0)

    def test_rectangular_round_trip(self):
        rng = np.random.default_rng(4)
        m = random_cmatrix(rng, 10, 16)
        u, s, vh = svd(m)
        rebuilt = u @ np.hstack([np.diag(s), np.zeros((10, 6))]) @ vh
        assert np.linalg.norm(rebuilt - m) <= 1e-9 * np.linalg.norm(m)

    def test_unitary_input_singular_values(self):
        rng = np.random.default_rng(5)
        u0 = haar_random_unitary(7, rng)
        _, s, _ = svd(u0)
        assert np.max(np.abs(s - 1.0)) <= 1e-10

    def test_shapes_and_order(self):
        rng = np.random.default_rng(6)
        m = random_cmatrix(rng, 16, 10)
        u, s, vh = svd(m)
        assert u.shape == (16, 16) and vh.shape == (10, 10)
        assert len(s) == 10
        assert np.all(np.diff(s) <= 0)
        assert np.all(s >= 0)

    def test_batch_round_trip_and_unitarity(self):
        rng = np.random.default_rng(7)
        shapes = [(16, 16), (10, 16), (16, 10)]
        for rows, cols in shapes:
            for _ in range(67):
                m = random_cmatrix(rng, rows, cols)
                u, s, vh = svd(m)
                d = np.zeros((rows, cols))
                np.fill_diagonal(d, s)
                assert (np.linalg.norm(u @ d @ vh - m)
                        <= 1e-9 * np.linalg.norm(m))
                assert np.linalg.norm(u @ dagger(u) - np.eye(rows)) <= 1e-10
                assert np.linalg.norm(vh @ dagger(vh) - np.eye(cols)) <= 1e-10

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            svd(np.zeros((0, 0), dtype=complex))


class TestRvd:
    def test_self_is_zero(self):
        rng = np.random.default_rng(8)
        x = random_cmatrix(rng, 5, 5)
        assert rvd(x, x) == 0.0

    def test_hand_example(self):
        value = rvd(np.diag([1.0, 1j]), np.eye(2, dtype=complex))
        assert abs(value - np.sqrt(2) / 2) <= 1e-12

    def test_doubling(self):
        rng = np.random.default_rng(9)
        u = haar_random_unitary(4, rng)
        assert abs(rvd(2.0 * u, u) - 1.0) <= 1e-12

    def test_zero_reference_raises(self):
        with pytest.raises(ValueError):
            rvd(np.eye(2, dtype=complex), np.zeros((2, 2), dtype=complex))

    def test_shape_mismatch_raises(self):
        with pytest.raises(ValueError):
            rvd(np.eye(2, dtype=complex), np.eye(3, dtype=complex))

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(10)
        for _ in range(20):
            u = random_cmatrix(rng, 4, 4)
            v = random_cmatrix(rng, 4, 4)
            val = rvd(u, v)
            assert val >= 0.0
            if not np.array_equal(u, v):
                assert val > 0.0

    @settings(max_examples=40, deadline=None)
    @given(alpha=st.floats(min_value=0.0, max_value=2 * np.pi))
    def test_common_phase_invariance(self, alpha):
        rng = np.random.default_rng(11)
        u = random_cmatrix(rng, 3, 3)
        v = random_cmatrix(rng, 3, 3)
        scale = np.exp(1j * alpha)
        assert abs(rvd(scale * u, scale * v) - rvd(u, v)) <= 1e-12


class TestHaarRandomUnitary:
    def test_unitary(self):
        rng = np.random.default_rng(12)
        for n in (2, 5, 16):
            assert is_unitary(haar_random_unitary(n, rng), tol=1e-10)

    def test_seed_reproducible(self):
        a = haar_random_unitary(6, np.random.default_rng(13))
        b = haar_random_unitary(6, np.random.default_rng(13))
        assert np.array_equal(a, b)


def test_as_cmatrix_rejects_non_finite():
    with pytest.raises(ValueError):
        as_cmatrix([[1.0, np.inf], [0.0, 1.0]])

"""Tests for the dense linear-algebra primitives."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cleanpovm.errors import (
    NonHermitianInput,
    NotPsd,
    SingularBasis,
    SingularSuperop,
)
from cleanpovm.linalg import (
    DEFAULT_TOL,
    Tolerances,
    coords_in_basis,
    eig_hermitian,
    greedy_basis_subset,
    haar_unitary,
    hermitian_part,
    orthonormal_columns,
    orthonormal_complement,
    psd_sqrt,
    random_hermitian,
    random_psd,
    superop_matrix,
    superop_solve,
    unvec,
    vec,
)

E1 = np.array([1.0, 0.0], dtype=complex)
E2 = np.array([0.0, 1.0], dtype=complex)


def eig2_oracle(h):
    """Closed-form eigenvalues of a 2x2 Hermitian matrix (trace/determinant)."""
    a, c = h[0, 0].real, h[1, 1].real
    b = h[0, 1]
    mean = 0.5 * (a + c)
    radius = np.sqrt((0.5 * (a - c)) ** 2 + abs(b) ** 2)
    return mean - radius, mean + radius


class TestEigHermitian:
    def test_identity(self):
        w, v = eig_hermitian(np.eye(2))
        assert np.allclose(w, [1.0, 1.0])
        assert np.allclose(v.conj().T @ v, np.eye(2), atol=1e-12)

    def test_diagonal(self):
        w, v = eig_hermitian(np.diag([0.25, 0.75]))
        assert np.allclose(w, [0.25, 0.75])
        assert np.allclose(np.abs(v), np.eye(2), atol=1e-12)

    def test_half_matrix_against_closed_form(self):
        h = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        w, v = eig_hermitian(h)
        lo, hi = eig2_oracle(h)
        assert np.allclose(w, [lo, hi], atol=1e-14)
        assert np.allclose(w, [0.0, 1.0], atol=1e-14)
        # eigenvectors (e1 -+ e2)/sqrt(2) up to phase
        assert abs(abs(v[:, 0] @ np.array([1, -1]) / np.sqrt(2)) - 1) < 1e-12
        assert abs(abs(v[:, 1] @ np.array([1, 1]) / np.sqrt(2)) - 1) < 1e-12

    def test_rejects_asymmetric(self):
        with pytest.raises(NonHermitianInput):
            eig_hermitian(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_repairs_tiny_asymmetry(self):
        h = np.diag([0.3, 0.7]).astype(complex)
        h[0, 1] = 1e-12
        w, _ = eig_hermitian(h)
        assert np.allclose(w, [0.3, 0.7], atol=1e-10)

    @given(st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_reconstruction_property(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        h = random_hermitian(d, rng)
        w, v = eig_hermitian(h)
        scale = max(1.0, np.linalg.norm(h))
        assert np.linalg.norm(h - (v * w) @ v.conj().T) <= 1e-10 * scale
        assert np.all(np.diff(w) >= 0)
        assert np.linalg.norm(v.conj().T @ v - np.eye(d)) <= 1e-10


class TestGreedyBasisSubset:
    def test_dependent_third(self):
        assert greedy_basis_subset([E1, E2, E1 + E2]) == [0, 1]

    def test_colinear_pair(self):
        assert greedy_basis_subset([E1, 2 * E1]) == [0]

    def test_exact_dependence(self):
        # residual of e1 against span{e1+e2, e1-e2} is exactly zero
        assert greedy_basis_subset([E1 + E2, E1 - E2, E1]) == [0, 1]

    def test_invariant_under_appending_spanned_vectors(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            d = int(rng.integers(2, 6))
            k = int(rng.integers(1, d + 1))
            vs = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(k)]
            base = greedy_basis_subset(vs)
            span = [vs[i] for i in base]
            extra = sum(rng.standard_normal() * s for s in span)
            assert greedy_basis_subset(vs + [extra]) == base


class TestCoordsInBasis:
    def test_standard_basis(self):
        c = coords_in_basis(E1, np.column_stack([E1, E2]))
        assert np.allclose(c, [1, 0])

    def test_sum_vector(self):
        c = coords_in_basis(E1 + E2, np.column_stack([E1, E2]))
        assert np.allclose(c, [1, 1])

    def test_hand_solved_system(self):
        # e1 = 0.5 (e1+e2) + 0.5 (e1-e2)
        c = coords_in_basis(E1, np.column_stack([E1 + E2, E1 - E2]))
        assert np.allclose(c, [0.5, 0.5], atol=1e-14)

    def test_small_coefficients_reported_zero(self):
        c = coords_in_basis(E1 + 1e-12 * E2, np.column_stack([E1, E2]))
        assert c[1] == 0.0

    def test_singular_basis(self):
        with pytest.raises(SingularBasis):
            coords_in_basis(E1, np.column_stack([E1, E1]))


class TestPsdSqrt:
    def test_identity(self):
        assert np.allclose(psd_sqrt(np.eye(3)), np.eye(3))

    def test_diagonal(self):
        assert np.allclose(psd_sqrt(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_projector_is_fixed_point(self):
        h = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
        s = psd_sqrt(h)
        assert np.linalg.norm(s @ s - h) <= 1e-12

    def test_rejects_negative(self):
        with pytest.raises(NotPsd):
            psd_sqrt(np.diag([1.0, -0.1]))

    def test_clamps_tiny_negative(self):
        s = psd_sqrt(np.diag([1.0, -1e-12]))
        assert np.all(np.linalg.eigvalsh(s) >= 0)

    @given(st.integers(0, 10**6))
    @settings(max_examples=60, deadline=None)
    def test_roundtrip_property(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        s = psd_sqrt(random_psd(d, rng))
        assert np.linalg.norm(psd_sqrt(s @ s.conj().T) - s) <= 1e-8 * max(1, np.linalg.norm(s))


class TestSuperop:
    def test_identity_channel(self):
        s = superop_matrix([np.eye(3)])
        assert np.allclose(s, np.eye(9))

    def test_columns_match_direct_application_on_matrix_units(self):
        # the defining property: column (k,l) is the image of the matrix unit E_kl
        kraus = [np.outer(E1, E1.conj()), np.outer(E1, E2.conj())]
        s = superop_matrix(kraus)
        for k in range(2):
            for l in range(2):
                unit = np.zeros((2, 2), dtype=complex)
                unit[k, l] = 1.0
                direct = sum(r.conj().T @ unit @ r for r in kraus)
                assert np.allclose(s @ vec(unit), vec(direct), atol=1e-15)

    def test_unitary_channel_gives_unitary_superop(self):
        u = haar_unitary(3, np.random.default_rng(1))
        s = superop_matrix([u])
        assert np.linalg.norm(s.conj().T @ s - np.eye(9)) <= 1e-12

    def test_vec_convention_row_major(self):
        a = np.arange(4, dtype=complex).reshape(2, 2)
        assert np.array_equal(vec(a), np.array([0, 1, 2, 3], dtype=complex))
        assert np.array_equal(unvec(vec(a), 2), a)


class TestSuperopSolve:
    def test_identity(self):
        target = np.array([[0.3, 0.1], [0.1, 0.7]], dtype=complex)
        a = superop_solve(np.eye(4), target)
        assert np.allclose(a, target)

    def test_unitary_conjugation(self):
        rng = np.random.default_rng(7)
        u = haar_unitary(2, rng)
        s = superop_matrix([u])  # E(A) = U^dagger A U
        target = random_psd(2, rng)
        a = superop_solve(s, target)
        assert np.allclose(a, u @ target @ u.conj().T, atol=1e-12)

    def test_projector_mixing_inverse_scales_off_diagonal(self):
        # channel {eps P1, eps P2, sqrt(1-eps^2) 1} at eps = 0.2:
        # the inverse image scales off-diagonal entries by 1/(1-eps^2) = 1.041666...
        eps = 0.2
        kraus = [
            eps * np.diag([1.0, 0.0]),
            eps * np.diag([0.0, 1.0]),
            np.sqrt(1 - eps**2) * np.eye(2),
        ]
        s = superop_matrix(kraus)
        target = np.array([[0.5, 0.1], [0.1, 0.5]], dtype=complex)
        a = superop_solve(s, target)
        expected = np.array([[0.5, 0.1 / 0.96], [0.1 / 0.96, 0.5]])
        assert np.allclose(a, expected, atol=1e-13)
        assert abs(a[0, 1].real - 0.1 * 1.0416666666666667) < 1e-12

    def test_singular_raises(self):
        kraus = [np.outer(E1, E1.conj()), np.outer(E1, E2.conj())]
        s = superop_matrix(kraus)  # rank-one range
        with pytest.raises(SingularSuperop):
            superop_solve(s, np.eye(2))

    def test_round_trip_for_near_identity_channels(self):
        from cleanpovm.channel import near_identity_channel

        rng = np.random.default_rng(15)
        for _ in range(30):
            d = int(rng.integers(2, 5))
            ch = near_identity_channel(d, float(rng.uniform(0.001, 0.05)), rng)
            s = superop_matrix(ch.kraus)
            x = random_hermitian(d, rng)
            a = superop_solve(s, x)
            image = sum(k.conj().T @ a @ k for k in ch.kraus)
            assert np.linalg.norm(image - x) <= 1e-8 * max(1, np.linalg.norm(x))


class TestOrthonormalHelpers:
    def test_complement_dimensions(self):
        rng = np.random.default_rng(3)
        q = orthonormal_columns([rng.standard_normal(4) + 1j * rng.standard_normal(4)])
        comp = orthonormal_complement(q)
        assert comp.shape == (4, 3)
        assert np.linalg.norm(q.conj().T @ comp) <= 1e-12

    def test_haar_unitary_is_unitary(self):
        u = haar_unitary(5, np.random.default_rng(0))
        assert np.linalg.norm(u.conj().T @ u - np.eye(5)) <= 1e-12


def test_tolerances_defaults():
    t = Tolerances()
    assert (t.herm, t.psd, t.closure) == (1e-9, 1e-9, 1e-9)
    assert (t.rank, t.zero) == (1e-8, 1e-8)
    assert (t.eig, t.orth) == (1e-10, 1e-10)
    with pytest.raises(ValueError):
        Tolerances(rank=-1.0)
    assert DEFAULT_TOL == Tolerances()


def test_hermitian_part_idempotent():
    rng = np.random.default_rng(9)
    m = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    h = hermitian_part(m)
    assert np.allclose(h, h.conj().T)
    assert np.allclose(hermitian_part(h), h)

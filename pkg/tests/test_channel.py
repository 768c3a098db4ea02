"""Tests for Kraus channels, norms, near-identity bounds, and map inversion."""

import numpy as np
import pytest

from cleanpovm.channel import (
    KrausChannel,
    apply,
    apply_to_povm,
    f_bound,
    hs_norm,
    induced_norm,
    invert_positive_map,
    min_eig_lower_bound,
    near_identity_channel,
    random_channel,
    spectrum_width_check,
    superop,
)
from cleanpovm.errors import BoundUnavailable, ClosureViolation, SingularSuperop
from cleanpovm.linalg import haar_unitary, random_hermitian, random_psd
from cleanpovm.povm import classify, random_povm, validate

E1 = np.array([1.0, 0.0], dtype=complex)
E2 = np.array([0.0, 1.0], dtype=complex)


def depolarize_to_first_entry():
    """Channel with E(A) = <e1|A|e1> * 1 (Kraus |e1><e1|, |e1><e2|)."""
    return KrausChannel.build([np.outer(E1, E1.conj()), np.outer(E1, E2.conj())])


class TestKrausChannel:
    def test_identity_closure(self):
        ch = KrausChannel.build([np.eye(2)])
        assert ch.closure_residual() <= 1e-15

    def test_closure_violation(self):
        with pytest.raises(ClosureViolation):
            KrausChannel.build([0.5 * np.eye(2)])

    def test_identity_distance(self):
        ch = KrausChannel.build([np.eye(3)])
        assert ch.identity_distance() == pytest.approx(0.0)


class TestApply:
    def test_identity_channel(self):
        ch = KrausChannel.build([np.eye(2)])
        a = np.array([[0.3, 0.2], [0.2, 0.7]], dtype=complex)
        assert np.allclose(apply(ch, a), a)

    def test_first_entry_channel_by_hand(self):
        # sum_a K^dagger E_kl K expands to <e1|E_kl|e1> 1 on each matrix unit
        ch = depolarize_to_first_entry()
        for k in range(2):
            for l in range(2):
                unit = np.zeros((2, 2), dtype=complex)
                unit[k, l] = 1.0
                expected = unit[0, 0] * np.eye(2)
                assert np.allclose(apply(ch, unit), expected, atol=1e-15)

    def test_unital(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            ch = random_channel(int(rng.integers(2, 5)), int(rng.integers(1, 4)), rng)
            assert np.linalg.norm(apply(ch, np.eye(ch.dim)) - np.eye(ch.dim)) <= 1e-10

    def test_preserves_psd(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            d = int(rng.integers(2, 5))
            ch = random_channel(d, 3, rng)
            out = apply(ch, random_psd(d, rng))
            assert np.linalg.eigvalsh(out)[0] >= -1e-9


class TestApplyToPovm:
    def test_identity(self):
        p = random_povm("strict-quasi-qubit", 3, 4, 0)
        q = apply_to_povm(KrausChannel.build([np.eye(3)]), p)
        for a, b in zip(p.elements, q.elements):
            assert np.allclose(a.matrix, b.matrix)

    def test_unitary_conjugation_keeps_classification(self):
        rng = np.random.default_rng(2)
        p = random_povm("strict-quasi-qubit", 3, 4, rng)
        u = haar_unitary(3, rng)
        q = apply_to_povm(KrausChannel.build([u]), p)
        assert classify(q).kind is classify(p).kind
        for a, b in zip(p.elements, q.elements):
            assert np.allclose(b.matrix, u.conj().T @ a.matrix @ u, atol=1e-12)

    def test_degrading_channel_hits_scalar_target(self):
        # E(Q) for Q = {diag(0.5, 1), diag(0.5, 0)} lands on {0.5 1, 0.5 1}
        q = validate([np.diag([0.5, 1.0]).astype(complex), np.diag([0.5, 0.0]).astype(complex)])
        p = apply_to_povm(depolarize_to_first_entry(), q)
        assert np.allclose(p.elements[0].matrix, 0.5 * np.eye(2))
        assert np.allclose(p.elements[1].matrix, 0.5 * np.eye(2))


class TestNorms:
    def test_hs_norm_values(self):
        assert hs_norm(np.eye(2)) == pytest.approx(np.sqrt(2))
        assert hs_norm(np.zeros((2, 2))) == 0.0
        assert hs_norm(np.array([[3.0, 4.0], [0.0, 0.0]])) == pytest.approx(5.0)
        m = np.array([[1.0, 2.0j], [0.5, 0.0]])
        assert hs_norm(m) == pytest.approx(hs_norm(m.conj().T))

    def test_induced_norm_values(self):
        assert induced_norm(np.eye(4)) == pytest.approx(1.0)
        assert induced_norm(2 * np.eye(4)) == pytest.approx(2.0)
        u = haar_unitary(3, np.random.default_rng(0))
        assert induced_norm(superop(KrausChannel.build([u]))) == pytest.approx(1.0)


class TestFBound:
    def test_zero(self):
        b = f_bound(0.0, 2)
        assert b.f_eps == 0.0
        assert b.inverse_norm_bound == 0.0

    def test_direct_evaluation_d2(self):
        b = f_bound(0.1, 2)
        assert b.f_eps == pytest.approx(2 * (1 + np.sqrt(2)) * 0.1 + 2 * 0.01)
        assert b.f_eps == pytest.approx(0.502842712, abs=1e-9)
        assert b.inverse_norm_bound == pytest.approx(b.f_eps / (1 - b.f_eps))

    def test_no_inverse_bound_beyond_one(self):
        b = f_bound(0.5, 4)
        assert b.f_eps == pytest.approx(3.5)
        assert b.inverse_norm_bound is None


class TestMinEigLowerBound:
    def test_zero_epsilon(self):
        x = np.diag([0.5, 1.0]).astype(complex)
        assert min_eig_lower_bound(x, 0.0, 2) == pytest.approx(0.5)

    def test_formula_on_identity(self):
        f = f_bound(0.01, 2).f_eps
        expected = 1.0 - 1.0 * f * np.sqrt(2) / (1 - f)
        assert min_eig_lower_bound(np.eye(2), 0.01, 2) == pytest.approx(expected)

    def test_positive_bound_for_small_epsilon(self):
        x = np.diag([0.5, 1.0]).astype(complex)
        assert min_eig_lower_bound(x, 1e-3, 2) > 0

    def test_unavailable_when_f_too_large(self):
        with pytest.raises(BoundUnavailable):
            min_eig_lower_bound(np.eye(2), 0.5, 2)

    def test_bound_is_actually_respected(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            d = int(rng.integers(2, 4))
            eps = float(rng.uniform(0.001, 0.03))
            ch = near_identity_channel(d, eps, rng)
            handle = invert_positive_map(ch)
            x = random_psd(d, rng)
            bound = min_eig_lower_bound(x, eps, d)
            actual = np.linalg.eigvalsh(handle.solve(x))[0]
            assert actual >= bound - 1e-10


class TestInvertPositiveMap:
    def test_identity_channel(self):
        handle = invert_positive_map(KrausChannel.build([np.eye(2)]))
        target = np.array([[0.3, 0.1], [0.1, 0.7]], dtype=complex)
        assert np.allclose(handle.solve(target), target)

    def test_projector_mixing_closed_form(self):
        eps = 0.2
        ch = KrausChannel.build(
            [eps * np.diag([1.0, 0.0]), eps * np.diag([0.0, 1.0]), np.sqrt(1 - eps**2) * np.eye(2)]
        )
        handle = invert_positive_map(ch)
        target = np.array([[0.5, 0.1], [0.1, 0.5]], dtype=complex)
        a = handle.solve(target)
        expected = np.array([[0.5, 0.1 / (1 - eps**2)], [0.1 / (1 - eps**2), 0.5]])
        assert np.allclose(a, expected, atol=1e-12)

    def test_singular_channel_raises(self):
        with pytest.raises(SingularSuperop):
            invert_positive_map(depolarize_to_first_entry())

    def test_hermitian_targets_give_hermitian_solutions(self):
        rng = np.random.default_rng(14)
        ch = near_identity_channel(3, 0.02, rng)
        handle = invert_positive_map(ch)
        a = handle.solve(random_hermitian(3, rng))
        assert np.allclose(a, a.conj().T)


class TestSpectrumWidth:
    def test_identity_channel_equal_spectra(self):
        ch = KrausChannel.build([np.eye(2)])
        x = np.diag([0.2, 0.9]).astype(complex)
        report = spectrum_width_check(ch, x)
        assert report.ok
        assert report.output_min == pytest.approx(report.input_min)
        assert report.output_max == pytest.approx(report.input_max)

    def test_unitary_conjugation_equal_spectra(self):
        u = haar_unitary(3, np.random.default_rng(0))
        ch = KrausChannel.build([u])
        x = random_hermitian(3, np.random.default_rng(1))
        report = spectrum_width_check(ch, x)
        assert report.ok
        assert report.output_min == pytest.approx(report.input_min, abs=1e-12)

    def test_monte_carlo_never_widens(self):
        rng = np.random.default_rng(3)
        for _ in range(300):
            d = int(rng.integers(2, 5))
            ch = random_channel(d, int(rng.integers(1, 4)), rng)
            assert spectrum_width_check(ch, random_hermitian(d, rng)).ok


class TestNearIdentityChannel:
    def test_distance_is_exact(self):
        rng = np.random.default_rng(8)
        ch = near_identity_channel(3, 0.04, rng)
        assert np.linalg.norm(np.eye(3) - ch.kraus[0]) == pytest.approx(0.04, abs=1e-12)
        assert ch.closure_residual() <= 1e-9

    def test_distance_bound_holds(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            d = int(rng.integers(2, 4))
            eps = float(rng.uniform(0.001, 0.05))
            ch = near_identity_channel(d, eps, rng)
            deviation = induced_norm(superop(ch) - np.eye(d * d))
            assert deviation <= f_bound(eps, d).f_eps + 1e-10

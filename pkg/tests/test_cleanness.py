"""Tests for the cleanness decision, the nullspace oracle, and frame detection."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cleanpovm.cleanness import (
    VerdictReason,
    decide_clean,
    is_projective_frame,
    separating_pair,
    totally_determined_nullspace,
)
from cleanpovm.errors import NotQuasiQubit, SingleBlock, WrongCount
from cleanpovm.fuzz import oracle_agrees, random_quasi_qubit_instance
from cleanpovm.linalg import haar_unitary
from cleanpovm.povm import random_povm, rank_one_supports, validate

E1 = np.array([1.0, 0.0], dtype=complex)
E2 = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)


def projector(ket):
    return np.outer(ket, ket.conj())


def qb_not_clean():
    return validate([0.25 * projector(E1), 0.25 * projector(E2), np.diag([0.75, 0.75]).astype(complex)])


class TestDecideClean:
    def test_trine_is_clean_rank_one(self):
        kets = [
            np.array([np.cos(t / 2), np.sin(t / 2)], dtype=complex)
            for t in (0.0, 2 * np.pi / 3, 4 * np.pi / 3)
        ]
        mats = [(2 / 3) * projector(k) for k in kets]
        assert np.linalg.norm(sum(mats) - np.eye(2)) <= 1e-12  # closure by hand
        verdict = decide_clean(validate(mats))
        assert verdict.clean and verdict.reason is VerdictReason.RANK_ONE

    def test_two_colinear_support_classes_not_clean(self):
        verdict = decide_clean(qb_not_clean())
        assert not verdict.clean
        assert verdict.reason is VerdictReason.PARTITION_SPLIT
        assert verdict.partition.blocks == ((0,), (1,))
        assert verdict.separating_pair == ((0,), (1,))

    def test_third_direction_makes_it_clean(self):
        r = np.eye(2) - 0.25 * (projector(E1) + projector(E2) + projector(PLUS))
        assert np.allclose(r, np.array([[0.625, -0.125], [-0.125, 0.625]]))
        assert sorted(np.linalg.eigvalsh(r)) == pytest.approx([0.5, 0.75])
        p = validate([0.25 * projector(E1), 0.25 * projector(E2), 0.25 * projector(PLUS), r])
        verdict = decide_clean(p)
        assert verdict.clean and verdict.reason is VerdictReason.TOTALLY_DETERMINED
        assert len(verdict.partition.blocks) == 1
        # cross-check with the independent oracle
        supports = [s.ket for s in rank_one_supports(p)]
        assert totally_determined_nullspace(supports, 2) == 1

    def test_single_outcome_identity(self):
        verdict = decide_clean(validate([np.eye(2)]))
        assert verdict.clean and verdict.reason is VerdictReason.TRIVIAL_SINGLE_OUTCOME

    def test_scalar_elements(self):
        verdict = decide_clean(validate([0.5 * np.eye(2), 0.5 * np.eye(2)]))
        assert not verdict.clean and verdict.reason is VerdictReason.SCALAR_ELEMENTS
        assert verdict.partition is None

    def test_full_rank_non_scalar_gets_eigen_pair(self):
        pm = np.array([[0.5, 0.1], [0.1, 0.5]], dtype=complex)
        verdict = decide_clean(validate([pm, np.eye(2) - pm]))
        assert not verdict.clean and verdict.reason is VerdictReason.PARTITION_SPLIT
        assert verdict.partition is not None
        assert verdict.partition.basis_element_indices == (None, None)
        v, w = separating_pair(verdict.partition)
        # the chosen element must have a nonzero off-diagonal block for (V, W)
        off = v.conj().T @ pm @ w
        assert np.linalg.norm(off) > 1e-3

    def test_supports_do_not_span(self):
        p = validate([0.5 * projector(E1), np.eye(2) - 0.5 * projector(E1)])
        verdict = decide_clean(p)
        assert not verdict.clean and verdict.reason is VerdictReason.SUPPORTS_DO_NOT_SPAN
        v, w = separating_pair(verdict.partition, [E1])
        assert np.allclose(v[:, 0], E1)
        assert abs(w[:, 0].conj() @ E1) <= 1e-12

    def test_rejects_non_quasi_qubit(self):
        p = validate(
            [np.diag([0.5, 0.5, 0.0]).astype(complex), np.diag([0.5, 0.5, 1.0]).astype(complex)]
        )
        with pytest.raises(NotQuasiQubit):
            decide_clean(p)

    def test_verdict_boolean_invariant(self):
        rng = np.random.default_rng(77)
        for _ in range(40):
            d = int(rng.integers(2, 5))
            _, p = random_quasi_qubit_instance(d, rng)
            clean = decide_clean(p).clean
            perm = rng.permutation(p.n_outcomes)
            assert decide_clean(validate([p.elements[i].matrix for i in perm])).clean == clean
            u = haar_unitary(d, rng)
            rotated = validate([u @ e.matrix @ u.conj().T for e in p.elements])
            assert decide_clean(rotated).clean == clean


class TestSeparatingPair:
    def test_two_singletons(self):
        verdict = decide_clean(qb_not_clean())
        v, w = separating_pair(verdict.partition, [E1, E2])
        assert np.allclose(v[:, 0], E1) and np.allclose(w[:, 0], E2)

    def test_three_dim_blocks(self):
        # supports e1, e2, e1+e2, e3: positions {0,1} merge, e3 stays apart
        e1 = np.array([1, 0, 0], dtype=complex)
        e2 = np.array([0, 1, 0], dtype=complex)
        e3 = np.array([0, 0, 1], dtype=complex)
        plus12 = (e1 + e2) / np.sqrt(2)
        mats = [0.1 * projector(k) for k in (e1, e2, e3, plus12)]
        mats.append(np.eye(3) - sum(mats))
        verdict = decide_clean(validate(mats))
        assert verdict.reason is VerdictReason.PARTITION_SPLIT
        assert verdict.partition.blocks == ((0, 1), (2,))
        v, w = separating_pair(verdict.partition)
        assert v.shape == (3, 2) and w.shape == (3, 1)

    def test_single_block_raises(self):
        r = np.eye(2) - 0.25 * (projector(E1) + projector(E2) + projector(PLUS))
        p = validate([0.25 * projector(E1), 0.25 * projector(E2), 0.25 * projector(PLUS), r])
        verdict = decide_clean(p)
        with pytest.raises(SingleBlock):
            separating_pair(verdict.partition)

    def test_supports_always_land_in_v_or_w(self):
        rng = np.random.default_rng(31)
        checked = 0
        while checked < 30:
            d = int(rng.integers(2, 5))
            _, p = random_quasi_qubit_instance(d, rng)
            verdict = decide_clean(p)
            if verdict.separating_pair is None or verdict.partition is None:
                continue
            kets = [s.ket for s in rank_one_supports(p)]
            separating_pair(verdict.partition, kets)  # raises on a stray support
            checked += 1


class TestNullspaceOracle:
    def test_two_orthogonal_supports(self):
        assert totally_determined_nullspace([E1, E2], 2) == 2

    def test_frame_pins_down_plane(self):
        assert totally_determined_nullspace([E1, E2, PLUS], 2) == 1

    def test_single_support(self):
        assert totally_determined_nullspace([E1], 2) == 3

    def test_no_supports(self):
        assert totally_determined_nullspace([], 3) == 9

    def test_agreement_with_algorithm(self):
        rng = np.random.default_rng(99)
        for _ in range(150):
            d = int(rng.integers(2, 6))
            _, p = random_quasi_qubit_instance(d, rng)
            agree, algo, oracle = oracle_agrees(p)
            assert agree, f"algorithm={algo} oracle={oracle}"

    def test_qubit_closed_form(self):
        # d=2: clean iff rank-one or three pairwise non-colinear supports exist
        rng = np.random.default_rng(13)
        def colinear(a, b):
            # residual of a against span(b); stable even for nearly parallel kets
            return np.linalg.norm(a - np.vdot(b, a) * b) <= 1e-8
        for _ in range(250):
            _, p = random_quasi_qubit_instance(2, rng)
            supports = [s.ket for s in rank_one_supports(p)]
            rank_one = all(e.rank == 1 for e in p.elements)
            triple = any(
                not colinear(supports[i], supports[j])
                and not colinear(supports[i], supports[k])
                and not colinear(supports[j], supports[k])
                for i in range(len(supports))
                for j in range(i + 1, len(supports))
                for k in range(j + 1, len(supports))
            )
            assert decide_clean(p).clean == (rank_one or triple)


class TestProjectiveFrame:
    def test_basic_true(self):
        assert is_projective_frame([E1, E2, E1 + E2])

    def test_repeated_vector(self):
        assert not is_projective_frame([E1, E2, E1])

    def test_zero_coordinate_in_dim_three(self):
        e1 = np.array([1, 0, 0], dtype=complex)
        e2 = np.array([0, 1, 0], dtype=complex)
        e3 = np.array([0, 0, 1], dtype=complex)
        assert not is_projective_frame([e1, e2, e3, e1 + e2])
        assert is_projective_frame([e1, e2, e3, e1 + e2 + e3])

    def test_wrong_count(self):
        with pytest.raises(WrongCount):
            is_projective_frame([E1, E2])

    @given(st.integers(0, 10**6))
    @settings(max_examples=100, deadline=None)
    def test_routes_agree_on_random_inputs(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 6))
        if rng.random() < 0.5:
            vectors = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(d + 1)]
        else:
            # planted degeneracy: repeat a vector or zero out coordinates
            vectors = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(d)]
            if rng.random() < 0.5:
                vectors.append(vectors[int(rng.integers(0, d))].copy())
            else:
                v = np.zeros(d, dtype=complex)
                v[0] = 1.0
                vectors.append(v)
        is_projective_frame(vectors)  # the two routes are asserted to agree inside

    def test_routes_agree_bulk(self):
        rng = np.random.default_rng(2024)
        for trial in range(1000):
            d = int(rng.integers(2, 6))
            vectors = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(d + 1)]
            if trial % 3 == 0:  # plant degeneracies on a third of the trials
                vectors[-1] = vectors[int(rng.integers(0, d))] * (1 + 0j)
            is_projective_frame(vectors)


def test_rank_one_with_exactly_d_generic_supports_is_not_clean():
    rng = np.random.default_rng(55)
    for _ in range(20):
        d = int(rng.integers(2, 5))
        kets = [rng.standard_normal(d) + 1j * rng.standard_normal(d) for _ in range(d)]
        kets = [k / np.linalg.norm(k) for k in kets]
        mats = [0.5 / d * projector(k) for k in kets]
        mats.append(np.eye(d) - sum(mats))
        verdict = decide_clean(validate(mats))
        assert not verdict.clean
        assert verdict.reason is VerdictReason.PARTITION_SPLIT
        assert len(verdict.partition.blocks) == d


def test_strict_with_generic_frame_is_clean():
    rng = np.random.default_rng(56)
    for _ in range(20):
        d = int(rng.integers(2, 5))
        p = random_povm("strict-quasi-qubit", d, d + 3, rng, n_rank_one=d + 1)
        assert decide_clean(p).clean

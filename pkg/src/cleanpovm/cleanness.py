"""Cleanness decision for quasi-qubit POVMs.

A POVM is *clean* when it is maximal under channel pre-processing: no
strictly less noisy POVM maps onto it through a channel. For quasi-qubit
POVMs (every element rank one or full rank) cleanness can be read off the
rank-one supports: the POVM is clean iff it is rank-one, or the supports pin
down the space so tightly that the only operator mapping each support into
its own line is a multiple of the identity ("totally determined").

Two independent routes to that support condition live here:

* :func:`decide_clean` — partition refinement over a support basis, merging
  coordinate blocks touched by each remaining support (union-find);
* :func:`totally_determined_nullspace` — the dimension of the space of
  operators R with R psi_i colinear to psi_i for every support, computed as
  a nullspace of an n(d-1) x d^2 system. For spanning support families the
  dimension is 1 exactly when the supports totally determine the space.

The two must agree; the test suite fuzzes that agreement.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import NotQuasiQubit, SingleBlock, WrongCount
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_ket,
    coords_in_basis,
    greedy_basis_subset,
    orthonormal_columns,
    orthonormal_complement,
)
from .povm import Povm, PovmClass, classify, rank_one_supports


class _UnionFind:
    """Array union-find with path compression and size tracking."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.size = [1] * size
        self.max_size = 1 if size else 0

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        self.max_size = max(self.max_size, self.size[ra])
        return ra

    def groups(self) -> list[tuple[int, ...]]:
        members: dict[int, list[int]] = {}
        for x in range(len(self.parent)):
            members.setdefault(self.find(x), []).append(x)
        return sorted(tuple(sorted(g)) for g in members.values())


@dataclass(frozen=True, eq=False)
class BlockPartition:
    """Disjoint blocks of basis positions encoding a direct-sum decomposition.

    ``basis_kets`` holds the d basis vectors as columns; block ``B`` encodes
    the subspace spanned by the columns at positions in ``B``. Column ``j``
    of an algorithmic partition is the support of POVM element
    ``basis_element_indices[j]``; synthetic completion columns (used for
    evidence when the supports do not span, or when there are no supports at
    all) carry ``None`` there.
    """

    basis_kets: np.ndarray
    blocks: tuple[tuple[int, ...], ...]
    basis_element_indices: tuple[Optional[int], ...]

    def __post_init__(self):
        d = self.basis_kets.shape[1]
        seen = sorted(pos for block in self.blocks for pos in block)
        if seen != list(range(d)) or any(len(b) == 0 for b in self.blocks):
            raise ValueError("blocks must partition the basis positions exactly")
        if len(self.basis_element_indices) != d:
            raise ValueError("one element index (or None) per basis column required")

    @property
    def dim(self) -> int:
        return self.basis_kets.shape[0]

    def block_element_indices(self) -> list[list[Optional[int]]]:
        """Blocks translated from basis positions to POVM element indices."""
        return [[self.basis_element_indices[j] for j in block] for block in self.blocks]


class VerdictReason(enum.Enum):
    RANK_ONE = "RankOne"
    TOTALLY_DETERMINED = "TotallyDetermined"
    SUPPORTS_DO_NOT_SPAN = "SupportsDoNotSpan"
    PARTITION_SPLIT = "PartitionSplit"
    SCALAR_ELEMENTS = "ScalarElements"
    TRIVIAL_SINGLE_OUTCOME = "TrivialSingleOutcome"


@dataclass(frozen=True, eq=False)
class CleannessVerdict:
    clean: bool
    reason: VerdictReason
    partition: Optional[BlockPartition]
    separating_pair: Optional[tuple[tuple[int, ...], tuple[int, ...]]]


def scalar_weight(matrix: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> Optional[float]:
    """The scalar mu with ``matrix = mu * 1``, or None if the matrix is not scalar."""
    d = matrix.shape[0]
    mu = float(np.trace(matrix).real) / d
    if np.linalg.norm(matrix - mu * np.eye(d)) <= tol.zero * max(1.0, np.linalg.norm(matrix)):
        return mu
    return None


def _partition(basis_kets, blocks, element_indices) -> BlockPartition:
    kets = np.asarray(basis_kets, dtype=complex)
    kets.setflags(write=False)
    return BlockPartition(kets, tuple(tuple(sorted(b)) for b in blocks), tuple(element_indices))


def decide_clean(povm: Povm, tol: Tolerances = DEFAULT_TOL) -> CleannessVerdict:
    """Decide whether a quasi-qubit POVM is clean.

    The verdict carries its evidence: the final block partition for a
    partition-based outcome, and a separating pair of supplementary
    subspaces (as index sets into the partition basis) whenever the POVM is
    not clean for a support-geometry reason.

    Raises :class:`NotQuasiQubit` for POVMs outside the quasi-qubit class.
    """
    profile = classify(povm)
    if not profile.is_quasi_qubit:
        bad = [i for i, r in enumerate(profile.ranks) if r not in (1, povm.dim)]
        raise NotQuasiQubit(
            f"elements {bad} have rank outside {{1, {povm.dim}}}: ranks {profile.ranks}"
        )
    d = povm.dim

    if profile.kind is PovmClass.RANK_ONE:
        return CleannessVerdict(True, VerdictReason.RANK_ONE, None, None)
    if povm.n_outcomes == 1:
        # The only one-outcome POVM is {1}, trivially maximal.
        return CleannessVerdict(True, VerdictReason.TRIVIAL_SINGLE_OUTCOME, None, None)

    supports = rank_one_supports(povm)
    if not supports:
        return _decide_full_rank(povm, tol)

    kets = [s.ket for s in supports]
    selected = greedy_basis_subset(kets, tol)
    if len(selected) < d:
        return _supports_do_not_span(povm, supports, selected, tol)

    basis = np.column_stack([kets[j] for j in selected])
    element_of_position = [supports[j].index for j in selected]
    uf = _UnionFind(d)
    selected_set = set(selected)
    for j, ket in enumerate(kets):
        if j in selected_set:
            continue
        coeffs = coords_in_basis(ket, basis, tol)
        touched = [pos for pos in range(d) if coeffs[pos] != 0]
        for pos in touched[1:]:
            uf.union(touched[0], pos)
        if uf.max_size == d:
            partition = _partition(basis, uf.groups(), element_of_position)
            return CleannessVerdict(True, VerdictReason.TOTALLY_DETERMINED, partition, None)

    blocks = uf.groups()
    partition = _partition(basis, blocks, element_of_position)
    if len(blocks) == 1:
        return CleannessVerdict(True, VerdictReason.TOTALLY_DETERMINED, partition, None)
    first = blocks[0]
    rest = tuple(sorted(pos for block in blocks[1:] for pos in block))
    return CleannessVerdict(False, VerdictReason.PARTITION_SPLIT, partition, (first, rest))


def _decide_full_rank(povm: Povm, tol: Tolerances) -> CleannessVerdict:
    """Full-rank POVM with n >= 2: never clean; pick the evidence by shape."""
    d = povm.dim
    scalars = [scalar_weight(e.matrix, tol) for e in povm.elements]
    if all(mu is not None for mu in scalars):
        return CleannessVerdict(False, VerdictReason.SCALAR_ELEMENTS, None, None)
    # A non-scalar element has distinct extreme eigenvalues; mixing their
    # eigenvectors yields a line u with <u|P|u_perp> = (lam_max - lam_min)/2 != 0,
    # so P is not block-diagonal for the split span(u) + span(u)^perp.
    i = next(j for j, mu in enumerate(scalars) if mu is None)
    element = povm.elements[i]
    v_min = element.eigenvectors[:, 0]
    v_max = element.eigenvectors[:, -1]
    u = (v_min + v_max) / np.sqrt(2.0)
    completion = orthonormal_complement(u.reshape(d, 1))
    basis = np.column_stack([u, completion])
    blocks = ((0,), tuple(range(1, d)))
    partition = _partition(basis, blocks, [None] * d)
    return CleannessVerdict(False, VerdictReason.PARTITION_SPLIT, partition, blocks)


def _supports_do_not_span(povm, supports, selected, tol) -> CleannessVerdict:
    d = povm.dim
    chosen = [supports[j].ket for j in selected]
    completion = orthonormal_complement(orthonormal_columns(chosen, tol))
    basis = np.column_stack(chosen + [completion]) if completion.size else np.column_stack(chosen)
    element_indices = [supports[j].index for j in selected] + [None] * completion.shape[1]
    r = len(selected)
    blocks = (tuple(range(r)), tuple(range(r, d)))
    partition = _partition(basis, blocks, element_indices)
    return CleannessVerdict(False, VerdictReason.SUPPORTS_DO_NOT_SPAN, partition, blocks)


def separating_pair(
    partition: BlockPartition,
    supports: Optional[Sequence[np.ndarray]] = None,
    tol: Tolerances = DEFAULT_TOL,
):
    """Supplementary proper subspaces (V, W) splitting the partition.

    V is spanned by the first block's basis columns, W by all the others.
    When the rank-one support kets are supplied, each is asserted to lie in
    V or in W. Returns (V, W) as matrices of basis columns.
    """
    if len(partition.blocks) < 2:
        raise SingleBlock("partition has a single block; no separating pair")
    first = partition.blocks[0]
    rest = [pos for block in partition.blocks[1:] for pos in block]
    v = partition.basis_kets[:, list(first)]
    w = partition.basis_kets[:, sorted(rest)]
    if supports is not None:
        ov = orthonormal_columns(v, tol)
        ow = orthonormal_columns(w, tol)
        for ket in supports:
            k = as_ket(ket, partition.dim)
            res_v = np.linalg.norm(k - ov @ (ov.conj().T @ k))
            res_w = np.linalg.norm(k - ow @ (ow.conj().T @ k))
            if min(res_v, res_w) > tol.zero * np.linalg.norm(k):
                raise SingleBlock(
                    f"support residual {min(res_v, res_w):.3e} against both subspaces"
                )
    return v, w


def totally_determined_nullspace(
    supports: Sequence[np.ndarray], dim: int, tol: Tolerances = DEFAULT_TOL
) -> int:
    """Dimension of {R : R psi_i colinear to psi_i for every support psi_i}.

    Each support contributes the d-1 rows ``u_k^dagger R psi_i = 0`` for an
    orthonormal basis {u_k} of its orthogonal complement; stacking gives an
    n(d-1) x d^2 homogeneous system over the entries of R. The identity is
    always a solution. For a spanning support family, nullity 1 means the
    supports totally determine C^d; any second solution splits the space
    into a separating pair of R-invariant subspaces, and conversely an
    oblique projector onto V along W is a second solution.
    """
    d = int(dim)
    rows = []
    for ket in supports:
        psi = as_ket(ket, d)
        psi = psi / np.linalg.norm(psi)
        complement = orthonormal_complement(psi.reshape(d, 1))
        for k in range(complement.shape[1]):
            rows.append(np.kron(complement[:, k].conj(), psi))
    if not rows:
        return d * d
    system = np.vstack(rows)
    s = np.linalg.svd(system, compute_uv=False)
    rank = int(np.sum(s > tol.rank * s[0])) if s[0] > 0 else 0
    return d * d - rank


def is_projective_frame(vectors: Sequence[np.ndarray], tol: Tolerances = DEFAULT_TOL) -> bool:
    """True iff the d+1 vectors are in general position (every d of them a basis).

    Computed by two routes that must agree: rank of every leave-one-out
    subset, and independence of the first d plus all-nonzero coordinates of
    the last one in that basis.
    """
    kets = [as_ket(v) for v in vectors]
    if not kets:
        raise WrongCount("no vectors supplied")
    d = kets[0].shape[0]
    if len(kets) != d + 1:
        raise WrongCount(f"need exactly {d + 1} vectors for dimension {d}, got {len(kets)}")
    if any(k.shape[0] != d for k in kets):
        raise WrongCount("vectors have mixed dimensions")

    def full_rank(cols):
        s = np.linalg.svd(np.column_stack(cols), compute_uv=False)
        return s[0] > 0 and s[-1] > tol.rank * s[0]

    by_subsets = all(full_rank([k for j, k in enumerate(kets) if j != leave]) for leave in range(d + 1))

    by_coords = False
    if full_rank(kets[:d]):
        coeffs = coords_in_basis(kets[d], np.column_stack(kets[:d]), tol)
        by_coords = bool(np.all(coeffs != 0))

    assert by_subsets == by_coords, "projective-frame routes disagree"
    return by_subsets

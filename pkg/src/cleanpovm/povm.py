"""POVM representation, validation, rank taxonomy, and random generation.

A POVM is a finite list of Hermitian PSD operators on C^d (d >= 2) summing
to the identity. Elements whose rank is 1 carry a cached weight/support
decomposition ``P = weight * |support><support|`` with the support phase
fixed so its largest-magnitude amplitude is real positive.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import (
    ClosureViolation,
    DimensionMismatch,
    EquivalenceInconclusive,
    InfeasibleRequest,
    NonHermitianInput,
    NotPsd,
    ZeroElement,
)
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_operator,
    haar_unitary,
    hermitian_part,
    random_psd,
)


def fix_support_phase(ket: np.ndarray) -> np.ndarray:
    """Normalize and rotate the global phase so the largest amplitude is real positive."""
    v = np.asarray(ket, dtype=complex).reshape(-1)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ZeroElement("cannot phase-fix the zero vector")
    v = v / norm
    i = int(np.argmax(np.abs(v)))
    phase = v[i] / abs(v[i])
    return v * phase.conjugate()


@dataclass(frozen=True, eq=False)
class PovmElement:
    """One POVM element with cached eigendata.

    ``weight`` and ``support`` are present iff ``rank == 1``, in which case
    ``matrix ~= weight * outer(support, support.conj())``.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    weight: Optional[float]
    support: Optional[np.ndarray]

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max_eigenvalue(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True, eq=False)
class Povm:
    """Validated POVM: use :func:`validate` to construct one."""

    dim: int
    elements: tuple[PovmElement, ...]
    labels: Optional[tuple[str, ...]] = None

    @property
    def n_outcomes(self) -> int:
        return len(self.elements)

    def matrices(self) -> list[np.ndarray]:
        return [e.matrix.copy() for e in self.elements]


class PovmClass(enum.Enum):
    RANK_ONE = "rank-one"
    FULL_RANK = "full-rank"
    STRICT_QUASI_QUBIT = "strict-quasi-qubit"
    NOT_QUASI_QUBIT = "not-quasi-qubit"


@dataclass(frozen=True)
class RankProfile:
    kind: PovmClass
    ranks: tuple[int, ...]

    @property
    def is_quasi_qubit(self) -> bool:
        return self.kind is not PovmClass.NOT_QUASI_QUBIT


class RankOneSupport(NamedTuple):
    index: int
    weight: float
    ket: np.ndarray


def _build_element(matrix, index: int, tol: Tolerances) -> PovmElement:
    a = as_operator(matrix)
    scale = max(1.0, float(np.linalg.norm(a)))
    asym = float(np.linalg.norm(a - a.conj().T))
    if asym > tol.herm * scale:
        raise NonHermitianInput(f"element {index}: asymmetry {asym:.3e} exceeds tolerance")
    h = hermitian_part(a)
    w, v = np.linalg.eigh(h)
    lam_max = float(w[-1])
    if w[0] < -tol.psd * max(1.0, lam_max):
        raise NotPsd(
            f"element {index}: minimum eigenvalue {w[0]:.3e}",
            index=index,
            min_eigenvalue=float(w[0]),
        )
    if np.linalg.norm(h) <= tol.zero:
        raise ZeroElement(f"element {index} is numerically zero", index=index)
    rank = int(np.sum(w > tol.rank * lam_max))
    weight = None
    support = None
    if rank == 1:
        weight = lam_max
        support = fix_support_phase(v[:, -1])
    h.setflags(write=False)
    w.setflags(write=False)
    v.setflags(write=False)
    return PovmElement(h, w, v, rank, weight, support)


def validate(matrices: Sequence, tol: Tolerances = DEFAULT_TOL, labels=None) -> Povm:
    """Check the POVM axioms and return a :class:`Povm` with cached eigendata.

    Raises ``DimensionMismatch``, ``NonHermitianInput``, ``NotPsd(index)``,
    ``ZeroElement(index)`` or ``ClosureViolation`` as appropriate.
    """
    mats = [as_operator(m) for m in matrices]
    if not mats:
        raise DimensionMismatch("a POVM needs at least one element")
    d = mats[0].shape[0]
    if d < 2:
        raise DimensionMismatch("dimension must be at least 2")
    if any(m.shape != (d, d) for m in mats):
        raise DimensionMismatch("POVM elements have mixed dimensions")
    elements = tuple(_build_element(m, i, tol) for i, m in enumerate(mats))
    total = sum(e.matrix for e in elements)
    residual = float(np.linalg.norm(total - np.eye(d)))
    if residual > tol.closure:
        raise ClosureViolation(
            f"sum of elements deviates from identity by {residual:.3e}", residual=residual
        )
    if labels is not None:
        labels = tuple(str(s) for s in labels)
        if len(labels) != len(elements):
            raise DimensionMismatch("label count does not match element count")
    return Povm(d, elements, labels)


def classify(povm: Povm) -> RankProfile:
    """Rank taxonomy: rank-one / full-rank / strict quasi-qubit / not quasi-qubit."""
    d = povm.dim
    ranks = tuple(e.rank for e in povm.elements)
    if all(r == 1 for r in ranks):
        kind = PovmClass.RANK_ONE
    elif all(r == d for r in ranks):
        kind = PovmClass.FULL_RANK
    elif all(r in (1, d) for r in ranks):
        kind = PovmClass.STRICT_QUASI_QUBIT
    else:
        kind = PovmClass.NOT_QUASI_QUBIT
    return RankProfile(kind, ranks)


def rank_one_supports(povm: Povm) -> list[RankOneSupport]:
    """Weight/support data of every rank-one element, in element order."""
    out = []
    for i, e in enumerate(povm.elements):
        if e.rank == 1:
            out.append(RankOneSupport(i, float(e.weight), e.support))
    return out


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _random_kets(dim: int, count: int, rng: np.random.Generator) -> list[np.ndarray]:
    kets = []
    for _ in range(count):
        v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        kets.append(v / np.linalg.norm(v))
    return kets


def random_povm(kind: str, dim: int, n_elements: int, seed, n_rank_one=None) -> Povm:
    """Deterministic random POVM of the requested kind.

    ``kind`` is one of ``"rank-one"``, ``"full-rank"``,
    ``"strict-quasi-qubit"``, ``"scalar"``. Rank-one POVMs need
    ``n_elements >= dim``; strict quasi-qubit POVMs need ``n_elements >= 2``
    and accept an optional rank-one element count ``n_rank_one``.
    """
    rng = _as_generator(seed)
    d, n = int(dim), int(n_elements)
    if d < 2 or n < 1:
        raise InfeasibleRequest(f"need dim >= 2 and n >= 1, got ({d}, {n})")

    if kind == "scalar":
        mu = rng.uniform(0.2, 1.0, size=n)
        mu = mu / mu.sum()
        return validate([m * np.eye(d) for m in mu])

    if kind == "rank-one":
        if n < d:
            raise InfeasibleRequest(f"rank-one POVM needs n >= dim, got n={n} < d={d}")
        # Rows of a Haar isometry: columns m_i of the d x n block give
        # P_i = m_i m_i^dagger with sum_i P_i = 1 exactly.
        m = haar_unitary(n, rng)[:d, :]
        cols = [m[:, i] for i in range(n)]
        if any(np.linalg.norm(c) < 1e-6 for c in cols):
            return random_povm(kind, dim, n_elements, rng)  # measure-zero retry
        return validate([np.outer(c, c.conj()) for c in cols])

    if kind == "full-rank":
        if n == 1:
            return validate([np.eye(d)])
        parts = [random_psd(d, rng, ridge=0.05) for _ in range(n - 1)]
        return _close_with_remainder(parts, d, rng)

    if kind == "strict-quasi-qubit":
        if n < 2:
            raise InfeasibleRequest("strict quasi-qubit POVM needs n >= 2")
        if n_rank_one is None:
            n_rank_one = int(rng.integers(1, n))
        if not 1 <= n_rank_one <= n - 1:
            raise InfeasibleRequest(f"n_rank_one must be in [1, {n - 1}]")
        parts = []
        for ket in _random_kets(d, n_rank_one, rng):
            parts.append(rng.uniform(0.2, 1.0) * np.outer(ket, ket.conj()))
        for _ in range(n - 1 - n_rank_one):
            parts.append(random_psd(d, rng, ridge=0.05))
        return _close_with_remainder(parts, d, rng)

    raise InfeasibleRequest(f"unknown POVM kind {kind!r}")


def _close_with_remainder(parts: list[np.ndarray], dim: int, rng, margin: float = 0.1) -> Povm:
    """Scale ``parts`` so their sum stays below (1 - margin) and append the remainder."""
    total = sum(parts)
    lam = float(np.linalg.eigvalsh(total)[-1])
    scale = (1.0 - margin) / lam
    parts = [scale * p for p in parts]
    remainder = np.eye(dim) - sum(parts)
    order = list(rng.permutation(len(parts) + 1))
    mats = parts + [remainder]
    return validate([mats[i] for i in order])


def random_split_povm(
    dim: int,
    dim_v: int,
    n_v: int,
    n_w: int,
    seed,
    oblique: bool = False,
    block_diagonal: bool = False,
    n_extra_full: int = 0,
) -> Povm:
    """POVM whose rank-one supports are planted inside two supplementary subspaces.

    ``n_v`` supports are drawn in a random ``dim_v``-dimensional subspace V and
    ``n_w`` in a supplement W (the orthogonal complement, or an oblique tilt of
    it when ``oblique``). With ``block_diagonal`` (orthogonal split only) every
    element is block-diagonal with respect to V and its complement. The last
    element closes the sum and is full-rank, so the result is quasi-qubit.
    """
    rng = _as_generator(seed)
    d, k = int(dim), int(dim_v)
    if not (1 <= k <= d - 1):
        raise InfeasibleRequest(f"dim_v must be in [1, {d - 1}]")
    if oblique and block_diagonal:
        raise InfeasibleRequest("block_diagonal requires an orthogonal split")
    u = haar_unitary(d, rng)
    v_basis = u[:, :k]
    w_basis = u[:, k:]
    if oblique:
        tilt = 0.4 * (rng.standard_normal((k, d - k)) + 1j * rng.standard_normal((k, d - k)))
        w_basis = w_basis + v_basis @ tilt
        w_basis = w_basis / np.linalg.norm(w_basis, axis=0)

    def ket_in(basis):
        c = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
        v = basis @ c
        return v / np.linalg.norm(v)

    parts = []
    for _ in range(n_v):
        ket = ket_in(v_basis)
        parts.append(rng.uniform(0.2, 1.0) * np.outer(ket, ket.conj()))
    for _ in range(n_w):
        ket = ket_in(w_basis)
        parts.append(rng.uniform(0.2, 1.0) * np.outer(ket, ket.conj()))
    if not parts:
        raise InfeasibleRequest("need at least one planted support")

    for _ in range(n_extra_full):
        if block_diagonal:
            top = random_psd(k, rng, ridge=0.05)
            bottom = random_psd(d - k, rng, ridge=0.05)
            blk = np.zeros((d, d), dtype=complex)
            blk[:k, :k] = top
            blk[k:, k:] = bottom
            parts.append(u @ blk @ u.conj().T)
        else:
            parts.append(random_psd(d, rng, ridge=0.05))

    return _close_with_remainder(parts, d, rng)


def unitary_equivalence_check(
    p: Povm,
    q: Povm,
    tol: Tolerances = DEFAULT_TOL,
    attempts: int = 8,
    seed: int = 0,
) -> Optional[np.ndarray]:
    """Best-effort search for a unitary U with ``U P_i U^dagger = Q_i`` for all i.

    Draws a random real combination ``sum_i c_i P_i`` / ``sum_i c_i Q_i``; when
    both spectra are nondegenerate, matches eigenvectors by eigenvalue, fixes
    phases against the individual elements, and verifies the candidate to a
    residual of 1e-6. Returns ``None`` when a nondegenerate draw rules the
    unitary out (this is evidence, not proof, of inequivalence). Raises
    :class:`EquivalenceInconclusive` when every draw was degenerate.

    This is a diagnostic; it plays no role in the cleanness verdict.
    """
    if p.dim != q.dim or p.n_outcomes != q.n_outcomes:
        raise DimensionMismatch("POVMs must share dimension and outcome count")
    d, n = p.dim, p.n_outcomes
    rng = _as_generator(seed)
    p_mats = [e.matrix for e in p.elements]
    q_mats = [e.matrix for e in q.elements]
    saw_nondegenerate = False

    for _ in range(attempts):
        c = rng.standard_normal(n)
        mp = hermitian_part(sum(ci * m for ci, m in zip(c, p_mats)))
        mq = hermitian_part(sum(ci * m for ci, m in zip(c, q_mats)))
        wp, vp = np.linalg.eigh(mp)
        wq, vq = np.linalg.eigh(mq)
        scale = max(1.0, float(np.abs(wp).max()), float(np.abs(wq).max()))
        gap = 1e-6 * scale
        if np.min(np.diff(wp)) < gap or np.min(np.diff(wq)) < gap:
            continue
        saw_nondegenerate = True
        if np.max(np.abs(wp - wq)) > 1e-6 * scale:
            return None  # combined spectra differ; no unitary can conjugate P to Q

        theta = _match_phases(p_mats, q_mats, vp, vq)
        u = (vq * np.exp(1j * theta)) @ vp.conj().T
        residual = max(
            float(np.linalg.norm(u @ pm @ u.conj().T - qm))
            for pm, qm in zip(p_mats, q_mats)
        )
        if residual <= 1e-6 and np.linalg.norm(u.conj().T @ u - np.eye(d)) <= 1e-8:
            return u
    if not saw_nondegenerate:
        raise EquivalenceInconclusive(
            f"all {attempts} random combinations had degenerate spectra"
        )
    return None


def _match_phases(p_mats, q_mats, vp, vq):
    """Phase vector aiming for ``vq diag(e^{i theta}) vp^dagger`` to conjugate P to Q.

    Works on the element matrices rotated into the matched eigenbases: the
    conjugation holds iff Q~[k,l] = e^{i(theta_k - theta_l)} P~[k,l], which is
    solved by a BFS over the graph of significantly nonzero entries. Indices
    in disconnected components get phase 0 (no element couples them, so any
    choice is as good; the caller verifies the candidate anyway).
    """
    d = vp.shape[0]
    best = np.zeros((d, d))
    delta = np.zeros((d, d))
    for pm, qm in zip(p_mats, q_mats):
        pt = vp.conj().T @ pm @ vp
        qt = vq.conj().T @ qm @ vq
        weight = np.minimum(np.abs(pt), np.abs(qt))
        mask = weight > best
        if mask.any():
            ratio = np.zeros_like(pt)
            nz = np.abs(pt) > 0
            ratio[nz] = qt[nz] / pt[nz]
            delta[mask] = np.angle(ratio[mask])
            best[mask] = weight[mask]
    significant = best > 1e-8 * max(best.max(), 1e-300)
    theta = np.full(d, np.nan)
    for root in range(d):
        if not np.isnan(theta[root]):
            continue
        theta[root] = 0.0
        queue = [root]
        while queue:
            k = queue.pop()
            for l in range(d):
                if significant[k, l] and np.isnan(theta[l]):
                    # theta_k - theta_l = angle(Q~[k,l] / P~[k,l])
                    theta[l] = theta[k] - delta[k, l]
                    queue.append(l)
    return theta

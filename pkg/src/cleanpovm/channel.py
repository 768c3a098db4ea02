"""Kraus channels in the Heisenberg picture.

A channel acts on operators as ``E(A) = sum_a K_a^dagger A K_a`` with the
closure ``sum_a K_a^dagger K_a = 1`` (so E is unital: E(1) = 1). Channels
never widen the spectrum of a Hermitian operator; a channel with one Kraus
operator close to the identity can be inverted as a linear map on operators,
which is the workhorse behind witness construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BoundUnavailable,
    ClosureViolation,
    DimensionMismatch,
    NotPsd,
    SingularSuperop,
)
from .linalg import (
    DEFAULT_TOL,
    Tolerances,
    as_operator,
    eig_hermitian,
    hermitian_part,
    haar_unitary,
    psd_sqrt,
    superop_matrix,
    unvec,
    vec,
)
from .povm import Povm, validate


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Validated Kraus channel; use :meth:`build` to construct one."""

    dim: int
    kraus: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, kraus, tol: Tolerances = DEFAULT_TOL) -> "KrausChannel":
        ops = [as_operator(k) for k in kraus]
        if not ops:
            raise DimensionMismatch("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise DimensionMismatch("Kraus operators have mixed dimensions")
        residual = float(np.linalg.norm(sum(k.conj().T @ k for k in ops) - np.eye(d)))
        if residual > tol.closure:
            raise ClosureViolation(
                f"Kraus closure residual {residual:.3e} exceeds {tol.closure:.1e}",
                residual=residual,
            )
        frozen = []
        for k in ops:
            k = k.copy()
            k.setflags(write=False)
            frozen.append(k)
        return cls(d, tuple(frozen))

    def closure_residual(self) -> float:
        total = sum(k.conj().T @ k for k in self.kraus)
        return float(np.linalg.norm(total - np.eye(self.dim)))

    def identity_distance(self) -> float:
        """Smallest HS distance from any Kraus operator to the identity."""
        eye = np.eye(self.dim)
        return min(float(np.linalg.norm(eye - k)) for k in self.kraus)


def hs_norm(matrix) -> float:
    """Hilbert-Schmidt norm sqrt(sum |M_ij|^2)."""
    return float(np.linalg.norm(np.asarray(matrix, dtype=complex)))


def apply(channel: KrausChannel, operator) -> np.ndarray:
    """Heisenberg action ``sum_a K_a^dagger A K_a``, re-Hermitized."""
    a = as_operator(operator)
    if a.shape[0] != channel.dim:
        raise DimensionMismatch(
            f"operator dimension {a.shape[0]} does not match channel dimension {channel.dim}"
        )
    out = np.zeros_like(a)
    for k in channel.kraus:
        out += k.conj().T @ a @ k
    return hermitian_part(out)


def apply_to_povm(channel: KrausChannel, povm: Povm, tol: Tolerances = DEFAULT_TOL) -> Povm:
    """Element-wise channel action; unitality preserves the closure relation."""
    if povm.dim != channel.dim:
        raise DimensionMismatch("POVM and channel dimensions differ")
    return validate([apply(channel, e.matrix) for e in povm.elements], tol, povm.labels)


def superop(channel: KrausChannel) -> np.ndarray:
    """d^2 x d^2 matrix of the channel in the row-major vec convention."""
    return superop_matrix(channel.kraus)


def induced_norm(superop_mat) -> float:
    """HS-to-HS operator norm of a superoperator = spectral norm of its matrix."""
    return float(np.linalg.norm(np.asarray(superop_mat, dtype=complex), 2))


@dataclass(frozen=True)
class NearIdentityBound:
    """Distance bound for a channel with a Kraus operator eps-close to the identity.

    ``f_eps = 2 (1 + sqrt(d)) eps + 2 eps^2`` bounds ``||E - 1||`` in the
    HS-induced norm; when ``f_eps < 1`` the channel is invertible as a linear
    map and ``||E^-1 - 1|| <= f_eps / (1 - f_eps)``.
    """

    epsilon: float
    f_eps: float
    inverse_norm_bound: Optional[float]


def f_bound(epsilon: float, dim: int) -> NearIdentityBound:
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    f = 2.0 * (1.0 + math.sqrt(dim)) * epsilon + 2.0 * epsilon**2
    inverse = f / (1.0 - f) if f < 1.0 else None
    return NearIdentityBound(float(epsilon), float(f), inverse)


def min_eig_lower_bound(operator, epsilon: float, dim: int, tol: Tolerances = DEFAULT_TOL) -> float:
    """Lower bound on the minimum eigenvalue of the inverse image E^-1(X).

    Requires X PSD and f(eps) < 1; returns
    ``lambda_min(X) - lambda_max(X) f sqrt(d) / (1 - f)``. A positive value
    certifies that the inverse image is PSD without computing it.
    """
    w, _ = eig_hermitian(operator, tol)
    lam_min, lam_max = float(w[0]), float(w[-1])
    if lam_min < -tol.psd * max(1.0, lam_max):
        raise NotPsd("bound requires a PSD operator", min_eigenvalue=lam_min)
    bound = f_bound(epsilon, dim)
    if bound.f_eps >= 1.0:
        raise BoundUnavailable(f"f({epsilon}) = {bound.f_eps:.3f} >= 1")
    return lam_min - lam_max * bound.f_eps * math.sqrt(dim) / (1.0 - bound.f_eps)


@dataclass(frozen=True, eq=False)
class PositiveMapInverse:
    """Solver handle for E(A) = B; constructed by :func:`invert_positive_map`."""

    channel: KrausChannel
    superop: np.ndarray
    bound: Optional[NearIdentityBound]

    def solve(self, target, residual_tol: float = 1e-8) -> np.ndarray:
        """Solve ``E(A) = target``; certified by the round-trip residual."""
        t = as_operator(target)
        d = self.channel.dim
        if t.shape != (d, d):
            raise DimensionMismatch("target dimension does not match channel")
        x = self._solve_columns(vec(t).reshape(-1, 1), residual_tol)
        return hermitian_part(unvec(x[:, 0], d))

    def solve_all(self, targets, residual_tol: float = 1e-8) -> list[np.ndarray]:
        """Solve for several targets with a single factorization."""
        d = self.channel.dim
        mats = [as_operator(t) for t in targets]
        rhs = np.column_stack([vec(t) for t in mats])
        x = self._solve_columns(rhs, residual_tol)
        return [hermitian_part(unvec(x[:, i], d)) for i in range(len(mats))]

    def _solve_columns(self, rhs: np.ndarray, residual_tol: float) -> np.ndarray:
        try:
            x = np.linalg.solve(self.superop, rhs)
        except np.linalg.LinAlgError as exc:
            raise SingularSuperop(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(x)):
            raise SingularSuperop("linear solve produced non-finite values")
        residual = np.linalg.norm(self.superop @ x - rhs, axis=0)
        scale = np.maximum(1.0, np.linalg.norm(rhs, axis=0))
        worst = float(np.max(residual / scale))
        if worst > residual_tol:
            raise SingularSuperop(f"round-trip residual {worst:.3e} exceeds {residual_tol:.1e}")
        return x


def invert_positive_map(channel: KrausChannel, tol: Tolerances = DEFAULT_TOL) -> PositiveMapInverse:
    """Invertible-map handle for the channel, certified on the identity probe.

    The near-identity bound (when some Kraus operator is close enough to the
    identity that f(eps) < 1) is attached as a certificate, but the solve is
    a direct d^2 x d^2 linear solve, never a Neumann series, and works
    whenever the superoperator is numerically nonsingular.
    """
    s = superop(channel)
    eps = channel.identity_distance()
    bound = f_bound(eps, channel.dim)
    handle = PositiveMapInverse(channel, s, bound if bound.f_eps < 1.0 else None)
    probe = handle.solve(np.eye(channel.dim))  # E is unital, so E^-1(1) = 1
    if np.linalg.norm(probe - np.eye(channel.dim)) > 1e-8:
        raise SingularSuperop("identity probe failed; map is not reliably invertible")
    return handle


@dataclass(frozen=True)
class SpectrumWidthReport:
    """Extreme eigenvalues of X and E(X); channels may only narrow the spectrum."""

    input_min: float
    input_max: float
    output_min: float
    output_max: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return (
            self.output_min >= self.input_min - self.tolerance
            and self.output_max <= self.input_max + self.tolerance
        )


def spectrum_width_check(
    channel: KrausChannel,
    operator,
    tolerance: float = 1e-10,
    tol: Tolerances = DEFAULT_TOL,
) -> SpectrumWidthReport:
    """Check that the channel did not widen the spectrum of a Hermitian operator.

    A violation beyond floating-point noise indicates a broken channel (or a
    bug), never a property of a valid channel.
    """
    w_in, _ = eig_hermitian(operator, tol)
    w_out = np.linalg.eigvalsh(apply(channel, operator))
    return SpectrumWidthReport(
        float(w_in[0]), float(w_in[-1]), float(w_out[0]), float(w_out[-1]), tolerance
    )


def random_channel(dim: int, n_kraus: int, rng: np.random.Generator) -> KrausChannel:
    """Random channel: Ginibre Kraus operators renormalized to satisfy closure."""
    gs = [
        (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
        for _ in range(n_kraus)
    ]
    total = hermitian_part(sum(g.conj().T @ g for g in gs))
    w, v = np.linalg.eigh(total)
    inv_sqrt = (v / np.sqrt(w)) @ v.conj().T
    return KrausChannel.build([g @ inv_sqrt for g in gs])


def near_identity_channel(dim: int, epsilon: float, rng: np.random.Generator) -> KrausChannel:
    """Channel whose first Kraus operator sits at HS distance exactly ``epsilon`` from 1.

    ``K_1 = 1 - eps T`` with T PSD of unit HS norm; the deficit
    ``1 - K_1^dagger K_1 = 2 eps T - eps^2 T^2`` is PSD for eps <= 2 and is
    absorbed into a second Kraus operator (rotated by a random unitary).
    """
    if not 0 < epsilon <= 1:
        raise ValueError("epsilon must be in (0, 1]")
    t = hermitian_part(
        (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    )
    t = t @ t.conj().T
    t = t / np.linalg.norm(t)
    k1 = np.eye(dim) - epsilon * t
    deficit = hermitian_part(np.eye(dim) - k1.conj().T @ k1)
    k2 = haar_unitary(dim, rng) @ psd_sqrt(deficit)
    return KrausChannel.build([k1, k2])

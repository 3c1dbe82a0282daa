"""Symmetric logarithmic derivative, quantum Fisher information, bound chain."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import Schedule, evolve
from .errors import InvalidStateError, SpaceMismatchError
from .opalg import HermitianOp, QuantumState, seminorm, variance
from .probespec import ProbeSpec, build_h0, build_schedule, initial_state

PURITY_TOL = 1e-10
EIG_FLOOR = 1e-12
CHAIN_TOL = 1e-8


def _same(a, b):
    if a != b:
        raise SpaceMismatchError(f"spaces differ: {a.site_dims} vs {b.site_dims}")


def sld_pure(rho: QuantumState, K: HermitianOp) -> HermitianOp:
    """``L = -2i[K, rho]`` for a pure state."""
    _same(rho.space, K.space)
    if abs(rho.purity() - 1) > PURITY_TOL:
        raise InvalidStateError(f"state is not pure (purity {rho.purity():.12f})")
    r = rho.density_matrix()
    k = K.matrix
    return HermitianOp(rho.space, -2j * (k @ r - r @ k), tol=1e-10)


def _sld_eigenbasis(rho: QuantumState, drho: HermitianOp, eig_floor: float):
    p, V = np.linalg.eigh(rho.density_matrix())
    d = V.conj().T @ drho.matrix @ V
    denom = p[:, None] + p[None, :]
    keep = denom > eig_floor
    L = np.zeros_like(d)
    L[keep] = 2 * d[keep] / denom[keep]
    total = float(np.sum(np.abs(d) ** 2))
    lost = float(np.sum(np.abs(d[~keep]) ** 2))
    return V @ L @ V.conj().T, (lost / total if total > 0 else 0.0)


def sld_mixed(rho: QuantumState, drho: HermitianOp, eig_floor: float = EIG_FLOOR) -> HermitianOp:
    """Solve ``(L rho + rho L)/2 = drho`` in the eigenbasis of ``rho``.

    Components with ``p_i + p_j <= eig_floor`` are set to zero; the SLD is
    only defined on the support of ``rho``.
    """
    _same(rho.space, drho.space)
    tr = np.trace(drho.matrix).real
    if abs(tr) > 1e-10 * max(1.0, float(np.max(np.abs(drho.matrix)))):
        raise ValueError(f"drho must be traceless, trace is {tr:.3e}")
    L, _ = _sld_eigenbasis(rho, drho, eig_floor)
    return HermitianOp(rho.space, L, tol=1e-8)


def sld_truncated_fraction(rho: QuantumState, drho: HermitianOp, eig_floor: float = EIG_FLOOR) -> float:
    """Share of ``||drho||_F^2`` dropped by the population cutoff."""
    return _sld_eigenbasis(rho, drho, eig_floor)[1]


def sld_residual(rho: QuantumState, L: HermitianOp, drho: HermitianOp) -> float:
    """Frobenius norm of ``(L rho + rho L)/2 - drho``."""
    r = rho.density_matrix()
    return float(np.linalg.norm(0.5 * (L.matrix @ r + r @ L.matrix) - drho.matrix))


def qfi(rho: QuantumState, sld: HermitianOp) -> float:
    """``tr(rho L^2)``, clamped at zero for round-off down to -1e-10."""
    _same(rho.space, sld.space)
    L = sld.matrix
    if rho.is_pure_vector:
        v = L @ rho.data
        value = float(np.real(np.vdot(v, v)))
    else:
        value = float(np.real(np.einsum("ij,ji->", rho.data, L @ L)))
    if value < -1e-10:
        raise ArithmeticError(f"negative Fisher information {value:.3e}")
    return max(value, 0.0)


def commutator_derivative(K: HermitianOp, rho: QuantumState) -> HermitianOp:
    """``-i[K, rho]``."""
    _same(rho.space, K.space)
    r = rho.density_matrix()
    k = K.matrix
    return HermitianOp(rho.space, -1j * (k @ r - r @ k), tol=1e-10)


def drho_dgamma(
    h0: HermitianOp,
    aux: Schedule,
    gamma: float,
    t: float,
    rho0: QuantumState,
    substeps: int | None = None,
) -> HermitianOp:
    """``d rho_gamma(t) / d gamma = -i[K_gamma(t), rho_gamma(t)]``."""
    res = evolve(h0, aux, gamma, t, rho0, substeps=substeps)
    return commutator_derivative(res.K, res.rho_t)


@dataclass(frozen=True)
class BoundChainReport:
    qfi: float
    sqrt_qfi: float
    two_delta_K: float
    seminorm_K: float
    t_seminorm_h0: float
    all_ordered: bool
    slacks: tuple[float, float, float]
    variance_bound: float  # 4 Var(K): equals qfi for pure states, an upper bound otherwise
    truncated_fraction: float = 0.0
    pure: bool = True

    @property
    def delta_gamma_bound(self) -> float:
        """Lower bound ``1/(t ||h0||)`` on the single-probe uncertainty."""
        return math.inf if self.t_seminorm_h0 == 0 else 1.0 / self.t_seminorm_h0

    def as_dict(self) -> dict:
        return {
            "qfi": self.qfi,
            "sqrt_qfi": self.sqrt_qfi,
            "two_delta_K": self.two_delta_K,
            "seminorm_K": self.seminorm_K,
            "t_seminorm_h0": self.t_seminorm_h0,
            "variance_bound": self.variance_bound,
            "all_ordered": self.all_ordered,
            "slacks": list(self.slacks),
            "truncated_fraction": self.truncated_fraction,
            "pure": self.pure,
        }


def chain_from_evolution(
    rho_t: QuantumState, K: HermitianOp, h0: HermitianOp, t: float, eig_floor: float = EIG_FLOOR
) -> BoundChainReport:
    """Evaluate ``sqrt(I) <= 2 dK <= ||K|| <= t ||h0||`` for an evolved state."""
    pure = rho_t.is_pure_vector or abs(rho_t.purity() - 1) <= PURITY_TOL
    drho = commutator_derivative(K, rho_t)
    truncated = 0.0
    if pure:
        L = sld_pure(rho_t, K)
    else:
        L = sld_mixed(rho_t, drho, eig_floor)
        truncated = sld_truncated_fraction(rho_t, drho, eig_floor)
    info = qfi(rho_t, L)
    var_k = variance(rho_t, K)
    links = (math.sqrt(info), 2 * math.sqrt(var_k), seminorm(K), t * seminorm(h0))
    slacks = tuple(b - a for a, b in zip(links, links[1:]))
    return BoundChainReport(
        qfi=info,
        sqrt_qfi=links[0],
        two_delta_K=links[1],
        seminorm_K=links[2],
        t_seminorm_h0=links[3],
        all_ordered=all(s >= -CHAIN_TOL for s in slacks),
        slacks=slacks,
        variance_bound=4 * var_k,
        truncated_fraction=truncated,
        pure=pure,
    )


def bound_chain(rho0: QuantumState | None, spec: ProbeSpec, gamma: float, t: float, substeps: int | None = None) -> BoundChainReport:
    """Evolve the spec's probe and report every link of the precision chain.

    ``rho0=None`` uses the spec's declared initial state.
    """
    h0 = build_h0(spec)
    aux = build_schedule(spec)
    if rho0 is None:
        rho0 = initial_state(spec)
    res = evolve(h0, aux, gamma, t, rho0, substeps=substeps)
    return chain_from_evolution(res.rho_t, res.K, h0, t)

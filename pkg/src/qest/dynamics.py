"""Evolution under ``gamma*h0 + H_aux(t)`` and the displacement generator K.

Schedules are piecewise constant, so each segment's propagator is an exact
matrix exponential.  The generator ``K = i (dU/dgamma) U^dagger`` is obtained
by co-integrating ``F(t) = U^dagger K U`` with ``dF/dt = U^dagger h0 U``
alongside ``U`` on a common substep grid and conjugating back at the end.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SpaceMismatchError
from .opalg import HermitianOp, HilbertSpace, QuantumState, seminorm

PHASE_PER_SUBSTEP = 0.1
MIN_SUBSTEPS = 16


@dataclass(frozen=True)
class Segment:
    t_start: float
    t_end: float
    op: HermitianOp


class Schedule:
    """Non-overlapping, ascending piecewise-constant auxiliary Hamiltonian."""

    def __init__(self, space: HilbertSpace, segments: Iterable[tuple[float, float, HermitianOp]] = ()):
        segs = []
        for t0, t1, op in segments:
            t0, t1 = float(t0), float(t1)
            if not t0 < t1:
                raise ValueError(f"segment needs t_start < t_end, got [{t0}, {t1}]")
            if t0 < 0:
                raise ValueError(f"segment starts before t=0: {t0}")
            if op.space != space:
                raise SpaceMismatchError("schedule operator is not on the schedule's space")
            segs.append(Segment(t0, t1, op))
        segs.sort(key=lambda s: s.t_start)
        for a, b in zip(segs, segs[1:]):
            if b.t_start < a.t_end:
                raise ValueError(f"segments overlap: [{a.t_start}, {a.t_end}] and [{b.t_start}, {b.t_end}]")
        self.space = space
        self.segments: tuple[Segment, ...] = tuple(segs)

    @classmethod
    def empty(cls, space: HilbertSpace) -> "Schedule":
        return cls(space)

    @classmethod
    def from_terms(cls, space: HilbertSpace, terms: Sequence[tuple[float, float, HermitianOp]]) -> "Schedule":
        """Build a schedule from possibly overlapping terms by summing active ones."""
        cuts = sorted({float(x) for a, b, _ in terms for x in (a, b)})
        segs = []
        for lo, hi in zip(cuts, cuts[1:]):
            active = [op for a, b, op in terms if a <= lo and hi <= b]
            if not active:
                continue
            total = active[0]
            for op in active[1:]:
                total = total + op
            segs.append((lo, hi, total))
        return cls(space, segs)

    def __len__(self):
        return len(self.segments)

    def pieces(self, t0: float, t1: float) -> list[tuple[float, float, HermitianOp | None]]:
        """Cover ``[t0, t1]`` with constant pieces; ``None`` marks gaps."""
        out: list[tuple[float, float, HermitianOp | None]] = []
        cursor = t0
        for seg in self.segments:
            if seg.t_end <= cursor or seg.t_start >= t1:
                continue
            a, b = max(seg.t_start, cursor), min(seg.t_end, t1)
            if a > cursor:
                out.append((cursor, a, None))
            out.append((a, b, seg.op))
            cursor = b
        if cursor < t1:
            out.append((cursor, t1, None))
        return out


@dataclass(frozen=True)
class EvolutionResult:
    U: np.ndarray
    K: HermitianOp
    rho_t: QuantumState | None
    t: float
    gamma: float
    diagnostics: dict = field(default_factory=dict)


def _check_inputs(h0: HermitianOp, aux: Schedule, t0: float, t: float) -> None:
    if aux.space != h0.space:
        raise SpaceMismatchError(
            f"schedule space {aux.space.site_dims} differs from h0 space {h0.space.site_dims}"
        )
    if t < 0 or t0 < 0:
        raise ValueError(f"evolution time must be non-negative, got t={t}")
    if t < t0:
        raise ValueError(f"end time {t} precedes start time {t0}")


def default_substeps(gamma: float, h0_norm: float, aux_norm: float, duration: float) -> int:
    """Substeps keeping the phase advanced per substep at or below 0.1 rad."""
    rate = abs(gamma) * h0_norm + aux_norm
    return max(MIN_SUBSTEPS, math.ceil(rate * duration / PHASE_PER_SUBSTEP))


def _eig_generator(gamma: float, h0: np.ndarray, aux: np.ndarray | None):
    a = gamma * h0 if aux is None else gamma * h0 + aux
    return np.linalg.eigh(a)


def _propagator(evals: np.ndarray, evecs: np.ndarray, tau: float) -> np.ndarray:
    return (evecs * np.exp(-1j * evals * tau)) @ evecs.conj().T


def _exact_quadrature(evals, evecs, h0: np.ndarray, tau: float) -> np.ndarray:
    """``int_0^tau e^{iAs} h0 e^{-iAs} ds`` evaluated in the eigenbasis of A."""
    hb = evecs.conj().T @ h0 @ evecs
    w = evals[:, None] - evals[None, :]
    # int_0^tau e^{i w s} ds = tau * e^{i w tau/2} * sinc(w tau / 2pi)
    kernel = tau * np.exp(0.5j * w * tau) * np.sinc(w * tau / (2 * np.pi))
    return evecs @ (hb * kernel) @ evecs.conj().T


def _midpoint_quadrature(evals, evecs, h0: np.ndarray, tau: float) -> np.ndarray:
    half = _propagator(evals, evecs, tau / 2)
    return tau * (half.conj().T @ h0 @ half)


def _integrate(h0, aux, gamma, t0, t, substeps, quadrature, want_f):
    _check_inputs(h0, aux, t0, t)
    if substeps is not None and substeps < 1:
        raise ValueError("substeps must be >= 1")
    if quadrature not in ("exact", "midpoint"):
        raise ValueError(f"unknown quadrature {quadrature!r}")
    h = h0.matrix
    d = h0.dim
    U = np.eye(d, dtype=complex)
    F = np.zeros((d, d), dtype=complex)
    h0_norm = seminorm(h0) if substeps is None else 0.0
    total_steps = 0
    for a, b, op in aux.pieces(t0, t):
        duration = b - a
        aux_m = None if op is None else op.matrix
        if substeps is None:
            aux_norm = 0.0 if op is None else float(np.max(np.abs(np.linalg.eigvalsh(aux_m))))
            n = default_substeps(gamma, h0_norm, aux_norm, duration)
        else:
            n = substeps
        total_steps += n
        evals, evecs = _eig_generator(gamma, h, aux_m)
        if want_f and quadrature == "exact":
            # the exact per-substep integrals telescope into one per piece
            q = _exact_quadrature(evals, evecs, h, duration)
            F += U.conj().T @ q @ U
            U = _propagator(evals, evecs, duration) @ U
            continue
        tau = duration / n
        step = _propagator(evals, evecs, tau)
        q = _midpoint_quadrature(evals, evecs, h, tau) if want_f else None
        for _ in range(n):
            if want_f:
                F += U.conj().T @ q @ U
            U = step @ U
    return U, F, total_steps


def evolve_unitary(
    h0: HermitianOp,
    aux: Schedule,
    gamma: float,
    t: float,
    substeps_per_segment: int | None = None,
    t0: float = 0.0,
) -> np.ndarray:
    """Time-ordered propagator from ``t0`` to ``t`` (latest factor leftmost)."""
    U, _, _ = _integrate(h0, aux, gamma, t0, t, substeps_per_segment, "midpoint", want_f=False)
    return U


def _k_from_f(U: np.ndarray, F: np.ndarray, space: HilbertSpace) -> HermitianOp:
    return HermitianOp(space, U @ F @ U.conj().T, tol=1e-10)


def generator_K(
    h0: HermitianOp,
    aux: Schedule,
    gamma: float,
    t: float,
    substeps: int | None = None,
    quadrature: str = "exact",
) -> HermitianOp:
    """Displacement generator ``K_gamma(t)`` (units of time).

    ``quadrature="exact"`` integrates ``U^dagger h0 U`` exactly over each
    substep; ``"midpoint"`` uses the midpoint rule (second order in the
    substep length).
    """
    U, F, _ = _integrate(h0, aux, gamma, 0.0, t, substeps, quadrature, want_f=True)
    return _k_from_f(U, F, h0.space)


def evolve_state(rho0: QuantumState, U: np.ndarray) -> QuantumState:
    U = np.asarray(U)
    if U.shape != (rho0.space.total_dim,) * 2:
        raise SpaceMismatchError(f"unitary of shape {U.shape} vs state dimension {rho0.space.total_dim}")
    if rho0.is_pure_vector:
        return QuantumState(rho0.space, U @ rho0.data)
    return QuantumState(rho0.space, U @ rho0.data @ U.conj().T)


def unitarity_residual(U: np.ndarray) -> float:
    return float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[0])))


def evolve(
    h0: HermitianOp,
    aux: Schedule,
    gamma: float,
    t: float,
    rho0: QuantumState | None = None,
    substeps: int | None = None,
    quadrature: str = "exact",
) -> EvolutionResult:
    U, F, steps = _integrate(h0, aux, gamma, 0.0, t, substeps, quadrature, want_f=True)
    K = _k_from_f(U, F, h0.space)
    rho_t = evolve_state(rho0, U) if rho0 is not None else None
    diag = {"unitarity_residual": unitarity_residual(U), "substeps": steps, "quadrature": quadrature}
    U = np.array(U)
    U.setflags(write=False)
    return EvolutionResult(U=U, K=K, rho_t=rho_t, t=float(t), gamma=float(gamma), diagnostics=diag)


@dataclass(frozen=True)
class KBoundReport:
    lhs: float
    rhs: float
    slack: float
    passed: bool


def check_K_bound(K: HermitianOp, t: float, h0: HermitianOp) -> KBoundReport:
    """Compare ``||K||`` with ``t ||h0||`` (relative tolerance 1e-6, absolute 1e-9)."""
    lhs = seminorm(K)
    rhs = t * seminorm(h0)
    passed = lhs <= rhs * (1 + 1e-6) + 1e-9
    return KBoundReport(lhs=lhs, rhs=rhs, slack=rhs - lhs, passed=bool(passed))

"""Deferred measurement: mid-circuit measurements with classical control
versus coherent controls with every measurement moved to the end.

A circuit has ``L`` measurement levels.  Level ``l`` is chosen by the
outcome history of the earlier levels, and after every level except the
last a history-dependent unitary is applied::

    C_h = P_{L-1|h} ... U_{h[:2]} P_{1|h[:1]} U_{h[:1]} P_{0} U0

The coherent pipeline replaces each conditioned unitary by
``U_l = sum_h U_h P_{l|h[:l]} ... P_0`` and evaluates
``C_h = P_{L-1|h} ... P_0 U_{L-2} ... U_0 U0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import unitary_group

from ..dynamics import Schedule, evolve_unitary, unitarity_residual
from ..opalg import HermitianOp, HilbertSpace, QuantumState, embed, embed_matrix
from .measurement import MeasurementSpec

UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class DeferredCircuit:
    space: HilbertSpace
    initial: np.ndarray
    measurements: tuple[Mapping[tuple, MeasurementSpec], ...]
    unitaries: tuple[Mapping[tuple, np.ndarray], ...]

    def __post_init__(self):
        L = len(self.measurements)
        if L < 1:
            raise ValueError("a circuit needs at least one measurement level")
        if len(self.unitaries) != L - 1:
            raise ValueError(f"expected {L - 1} conditioned-unitary levels, got {len(self.unitaries)}")
        _require_unitary(self.initial, "initial unitary")
        for level in range(L):
            for hist in self.histories(level):
                m = self.measurements[level].get(hist)
                if m is None:
                    raise ValueError(f"no measurement for history {hist} at level {level}")
                if m.space != self.space:
                    raise ValueError(f"measurement for history {hist} is on the wrong space")
                if level < L - 1:
                    for a in range(len(m)):
                        u = self.unitaries[level].get(hist + (a,))
                        if u is None:
                            raise ValueError(f"no conditioned unitary for history {hist + (a,)}")
                        _require_unitary(u, f"unitary {hist + (a,)}")

    def histories(self, level: int):
        """Outcome histories that precede measurement ``level``."""
        out = [()]
        for lv in range(level):
            out = [h + (a,) for h in out for a in range(len(self.measurements[lv][h]))]
        return out

    def outcome_histories(self):
        return self.histories(len(self.measurements))


def _require_unitary(u: np.ndarray, what: str) -> None:
    if unitarity_residual(np.asarray(u)) > UNITARY_TOL:
        raise ValueError(f"{what} is not unitary")


def _projector_chain(circuit: DeferredCircuit, hist: tuple) -> np.ndarray:
    """``P_{l|h[:l]} ... P_{0}`` for the first ``len(hist)`` levels."""
    d = circuit.space.total_dim
    out = np.eye(d, dtype=complex)
    for level, a in enumerate(hist):
        out = circuit.measurements[level][hist[:level]].projectors[a] @ out
    return out


def sequential_operators(circuit: DeferredCircuit) -> dict[tuple, np.ndarray]:
    """Measure-then-condition Kraus operators, one per outcome history."""
    L = len(circuit.measurements)
    ops = {}
    for hist in circuit.outcome_histories():
        C = np.array(circuit.initial, dtype=complex)
        for level in range(L):
            C = circuit.measurements[level][hist[:level]].projectors[hist[level]] @ C
            if level < L - 1:
                C = circuit.unitaries[level][hist[: level + 1]] @ C
        ops[hist] = C
    return ops


def coherent_unitaries(circuit: DeferredCircuit) -> list[np.ndarray]:
    """``U_A = sum_a U_a P_a``, ``U_{A,B} = sum_{a,b} U_{a,b} P_{b|a} P_a``, ..."""
    d = circuit.space.total_dim
    out = []
    for level, table in enumerate(circuit.unitaries):
        U = np.zeros((d, d), dtype=complex)
        for hist in circuit.histories(level + 1):
            U += table[hist] @ _projector_chain(circuit, hist)
        out.append(U)
    return out


def coherent_operators(circuit: DeferredCircuit) -> dict[tuple, np.ndarray]:
    """Kraus operators with coherent controls and all projectors at the end."""
    body = np.array(circuit.initial, dtype=complex)
    for U in coherent_unitaries(circuit):
        body = U @ body
    return {hist: _projector_chain(circuit, hist) @ body for hist in circuit.outcome_histories()}


def _probabilities(ops: Mapping[tuple, np.ndarray], rho0: QuantumState) -> dict[tuple, float]:
    if rho0.is_pure_vector:
        return {h: float(np.real(np.vdot(C @ rho0.data, C @ rho0.data))) for h, C in ops.items()}
    return {h: float(np.real(np.trace(C @ rho0.data @ C.conj().T))) for h, C in ops.items()}


def _commutation_residual(circuit: DeferredCircuit) -> float:
    """Largest ``||[X, P]||`` between a later unitary/projector and an earlier projector."""
    worst = 0.0
    L = len(circuit.measurements)
    for hist in circuit.outcome_histories():
        earlier = []
        for level in range(L):
            P = circuit.measurements[level][hist[:level]].projectors[hist[level]]
            for Q in earlier:
                worst = max(worst, float(np.linalg.norm(P @ Q - Q @ P)))
            earlier.append(P)
            if level < L - 1:
                U = circuit.unitaries[level][hist[: level + 1]]
                for Q in earlier:
                    worst = max(worst, float(np.linalg.norm(U @ Q - Q @ U)))
    return worst


@dataclass(frozen=True)
class DeferredReport:
    max_abs_diff: float
    total_sequential: float
    total_coherent: float
    unitarity_residuals: tuple[float, ...]
    commutation_residual: float
    probabilities: dict
    passed: bool

    def as_dict(self) -> dict:
        return {
            "max_abs_diff": self.max_abs_diff,
            "total_sequential": self.total_sequential,
            "total_coherent": self.total_coherent,
            "unitarity_residuals": list(self.unitarity_residuals),
            "commutation_residual": self.commutation_residual,
            "passed": self.passed,
        }


def verify_deferred(circuit: DeferredCircuit, rho0: QuantumState, tol: float = 1e-10) -> DeferredReport:
    """Compare outcome distributions of the two circuit forms."""
    if rho0.space != circuit.space:
        raise ValueError("initial state is not on the circuit's space")
    seq = _probabilities(sequential_operators(circuit), rho0)
    coh = _probabilities(coherent_operators(circuit), rho0)
    diff = max(abs(seq[h] - coh[h]) for h in seq)
    unit = tuple(unitarity_residual(U) for U in coherent_unitaries(circuit))
    tot_s, tot_c = sum(seq.values()), sum(coh.values())
    passed = (
        diff <= tol
        and all(u <= tol for u in unit)
        and abs(tot_s - 1) <= tol
        and abs(tot_c - 1) <= tol
    )
    return DeferredReport(
        max_abs_diff=diff,
        total_sequential=tot_s,
        total_coherent=tot_c,
        unitarity_residuals=unit,
        commutation_residual=_commutation_residual(circuit),
        probabilities={"sequential": seq, "coherent": coh},
        passed=bool(passed),
    )


def controlled_evolution(
    h0: HermitianOp,
    schedules: Sequence[Schedule],
    projectors: Sequence[np.ndarray],
    gamma: float,
    t: float,
) -> np.ndarray:
    """Propagator of ``gamma h0 + sum_a H_a(t) P_a``.

    Each ``H_a`` must act trivially where ``P_a`` acts; the result then equals
    ``sum_a U_a P_a`` with ``U_a`` generated by ``gamma h0 + H_a(t)``.
    """
    space = h0.space
    terms = []
    for sched, P in zip(schedules, projectors):
        for seg in sched.segments:
            terms.append((seg.t_start, seg.t_end, HermitianOp(space, seg.op.matrix @ P, tol=1e-10)))
    return evolve_unitary(h0, Schedule.from_terms(space, terms), gamma, t)


# --- random circuits ---------------------------------------------------------

def _random_hermitian(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def _random_schedule(rng, space: HilbertSpace, sites: Sequence[int], t: float) -> Schedule:
    n_seg = int(rng.integers(1, 3))
    cuts = np.sort(rng.uniform(0, t, size=n_seg - 1))
    edges = [0.0, *cuts.tolist(), t]
    d_local = int(np.prod([space.site_dims[s] for s in sites]))
    segs = []
    for a, b in zip(edges, edges[1:]):
        local = HermitianOp(HilbertSpace([space.site_dims[s] for s in sites]), _random_hermitian(rng, d_local))
        segs.append((a, b, embed(local, sites, space)))
    return Schedule(space, segs)


def _random_basis_measurement(rng, space: HilbertSpace, sites: Sequence[int]) -> MeasurementSpec:
    d_local = int(np.prod([space.site_dims[s] for s in sites]))
    V = unitary_group.rvs(d_local, random_state=rng)
    projs = [embed_matrix(np.outer(V[:, j], V[:, j].conj()), sites, space) for j in range(d_local)]
    return MeasurementSpec(space, projs)


def random_deferred_circuit(rng: np.random.Generator, gamma: float | None = None) -> DeferredCircuit:
    """Two-qubit probe (sites 0, 1), upper ancilla 2, lower ancilla 3.

    Level 0 measures the lower ancilla; the conditioned evolutions under
    ``gamma h0 + H_a(t)`` act on probe and upper ancilla.  Level 1 measures
    the upper ancilla; ``U_{a,b}`` then act on the probe, which level 2
    measures.
    """
    space = HilbertSpace.qubits(4)
    Z = np.diag([1.0, -1.0])
    h0 = HermitianOp(space, embed_matrix(Z, [0], space) + embed_matrix(Z, [1], space))
    if gamma is None:
        gamma = float(rng.uniform(-2, 2))
    U0 = unitary_group.rvs(space.total_dim, random_state=rng)
    m0 = _random_basis_measurement(rng, space, [3])
    unit0, m1 = {}, {}
    for a in range(len(m0)):
        t = float(rng.uniform(0.2, 1.5))
        unit0[(a,)] = evolve_unitary(h0, _random_schedule(rng, space, [0, 1, 2], t), gamma, t)
        m1[(a,)] = _random_basis_measurement(rng, space, [2])
    unit1, m2 = {}, {}
    for a in range(len(m0)):
        for b in range(len(m1[(a,)])):
            t = float(rng.uniform(0.2, 1.5))
            unit1[(a, b)] = evolve_unitary(h0, _random_schedule(rng, space, [0, 1], t), gamma, t)
            m2[(a, b)] = _random_basis_measurement(rng, space, [0, 1])
    return DeferredCircuit(space, U0, ({(): m0}, m1, m2), (unit0, unit1))


def random_pure_state(rng: np.random.Generator, space: HilbertSpace) -> QuantumState:
    v = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    return QuantumState.from_vector(space, v, normalize=True)


__all__ = [
    "DeferredCircuit",
    "DeferredReport",
    "coherent_operators",
    "coherent_unitaries",
    "controlled_evolution",
    "random_deferred_circuit",
    "random_pure_state",
    "sequential_operators",
    "verify_deferred",
]

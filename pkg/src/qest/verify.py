"""Randomized property suites run by ``qest verify`` and the test-suite.

Every suite draws its cases from ``numpy.random.default_rng(seed)`` so a
(suite, cases, seed) triple always reproduces the same diagnostics.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

from .dynamics import check_K_bound, evolve
from .estimate.deferred import random_deferred_circuit, verify_deferred
from .fisher import CHAIN_TOL, chain_from_evolution
from .opalg import (
    HermitianOp,
    HilbertSpace,
    QuantumState,
    max_variance_state,
    seminorm,
    variance,
)
from .probespec import build_h0, build_schedule, initial_state, parse_probe_spec

SUITES = ("chain", "deferred", "seminorm", "bound")


@dataclass
class SuiteResult:
    suite: str
    cases: int
    seed: int
    failures: list[dict] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "suite": self.suite,
            "cases": self.cases,
            "seed": self.seed,
            "passed": self.passed,
            "n_failures": len(self.failures),
            "failures": self.failures,
            "stats": self.stats,
        }


# --- random inputs -----------------------------------------------------------

def _coef(rng) -> str:
    return repr(round(float(rng.uniform(-1.5, 1.5)), 6))


def _random_local_expr(rng) -> str:
    return " + ".join(f"{_coef(rng)} * {p}" for p in "IXYZ")


def _random_pauli_string_expr(rng, n_sites: int) -> str:
    letters = [str(rng.choice(list("XYZ"))) for _ in range(n_sites)]
    expr = letters[-1]
    for p in reversed(letters[:-1]):
        expr = f"kron({p}, {expr})"
    return expr


def random_probe_text(rng, max_n: int = 3, max_ancillas: int = 2, max_segments: int = 3, t: float = 1.0) -> str:
    """A random, valid probe spec: random coupling, ancillas and aux schedule.

    When ancillas are present at least one aux term couples a probe site to
    an ancilla.
    """
    n = int(rng.integers(1, max_n + 1))
    n_anc = int(rng.integers(0, max_ancillas + 1))
    lines = [f"n = {n};"]
    if n >= 2 and rng.random() < 0.4:
        c = [_coef(rng) for _ in range(3)]
        lines.append("k = 2;")
        lines.append(
            f"coupling = explicit({c[0]} * kron(Z, Z) + {c[1]} * (kron(X, X) + kron(Y, Y))"
            f" + {c[2]} * (kron(X, Z) + kron(Z, X)));"
        )
        lines.append("state = maxvar;")
    else:
        k = int(rng.integers(1, n + 1))
        lines.append(f"k = {k};")
        lines.append(f"coupling = product({_random_local_expr(rng)});")
        lines.append("state = cat;" if rng.random() < 0.5 else "state = maxvar;")
    if n_anc:
        lines.append(f"ancillas = [{', '.join(['2'] * n_anc)}];")
    total_sites = n + n_anc
    n_seg = int(rng.integers(0, max_segments + 1))
    if n_anc and n_seg == 0:
        n_seg = 1
    cuts = np.sort(rng.uniform(0, t, size=2 * n_seg)).reshape(-1, 2) if n_seg else []
    for j, (a, b) in enumerate(cuts):
        a, b = float(a), float(b)
        if b - a < 1e-3:
            b = a + 1e-3
        if n_anc and j == 0:
            sites = [int(rng.integers(0, n)), n + int(rng.integers(0, n_anc))]
        else:
            width = int(rng.integers(1, min(2, total_sites) + 1))
            sites = [int(s) for s in rng.choice(total_sites, size=width, replace=False)]
        strength = repr(round(float(rng.uniform(0.2, 4.0)), 6))
        expr = _random_pauli_string_expr(rng, len(sites))
        site_txt = ", ".join(str(s) for s in sites)
        lines.append(f"aux = [{round(a, 6)!r}, {round(b, 6)!r}] {strength} * {expr} @ ({site_txt});")
    return "probe {\n    " + "\n    ".join(lines) + "\n}\n"


def random_hermitian(rng, d: int, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_pure_state(rng, space: HilbertSpace) -> QuantumState:
    v = rng.normal(size=space.total_dim) + 1j * rng.normal(size=space.total_dim)
    return QuantumState.from_vector(space, v, normalize=True)


def random_mixed_state(rng, space: HilbertSpace, rank: int | None = None) -> QuantumState:
    """Full-rank by default (Ginibre construction)."""
    d = space.total_dim
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return QuantumState(space, rho / np.trace(rho).real)


def random_unitary(rng, d: int) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng) if d > 1 else np.eye(1, dtype=complex)


def random_config(rng, t_max: float = 2.0):
    """``(spec_text, spec, gamma, t)`` for a random evolution."""
    t = float(rng.uniform(0.2, t_max))
    text = random_probe_text(rng, t=t)
    spec = parse_probe_spec(text)
    gamma = float(rng.uniform(-2.0, 2.0))
    return text, spec, gamma, t


# --- suites --------------------------------------------------------------------

def run_chain_suite(cases: int = 100, seed: int = 0) -> SuiteResult:
    """Precision chain on random specs; every fourth case starts full-rank mixed."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("chain", cases, seed)
    worst = math.inf
    min_gap = math.inf
    for i in range(cases):
        text, spec, gamma, t = random_config(rng)
        space = spec.full_space
        kind = i % 4
        if kind == 0:
            rho0 = random_mixed_state(rng, space)
        elif kind == 1:
            rho0 = random_pure_state(rng, space)
        else:
            rho0 = initial_state(spec)
        h0 = build_h0(spec)
        ev = evolve(h0, build_schedule(spec), gamma, t, rho0)
        chain = chain_from_evolution(ev.rho_t, ev.K, h0, t)
        worst = min(worst, min(chain.slacks))
        problems = []
        if not chain.all_ordered:
            problems.append("chain out of order")
        if chain.qfi > chain.variance_bound + CHAIN_TOL:
            problems.append("QFI exceeds 4 Var(K)")
        if kind == 0:
            gap = chain.variance_bound - chain.qfi
            min_gap = min(min_gap, gap)
            if not gap > 1e-9 * max(1.0, chain.variance_bound):
                problems.append("no strict gap between QFI and 4 Var(K) for a full-rank state")
        if problems:
            res.failures.append({"case": i, "problems": problems, "spec": text, "gamma": gamma, "t": t, **chain.as_dict()})
    res.stats = {"min_slack": worst, "min_mixed_gap": min_gap}
    return res


def run_bound_suite(cases: int = 100, seed: int = 0) -> SuiteResult:
    """``||K|| <= t ||h0||`` on random aux schedules and ancilla couplings."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("bound", cases, seed)
    max_ratio = 0.0
    for i in range(cases):
        text, spec, gamma, t = random_config(rng)
        h0 = build_h0(spec)
        ev = evolve(h0, build_schedule(spec), gamma, t)
        rep = check_K_bound(ev.K, t, h0)
        if rep.rhs > 0:
            max_ratio = max(max_ratio, rep.lhs / rep.rhs)
        if not rep.passed:
            res.failures.append({"case": i, "spec": text, "gamma": gamma, "t": t, "lhs": rep.lhs, "rhs": rep.rhs})
    res.stats = {"max_ratio": max_ratio}
    return res


def run_deferred_suite(cases: int = 50, seed: int = 0) -> SuiteResult:
    rng = np.random.default_rng(seed)
    res = SuiteResult("deferred", cases, seed)
    worst = 0.0
    worst_unit = 0.0
    for i in range(cases):
        circuit = random_deferred_circuit(rng)
        rho0 = random_pure_state(rng, circuit.space) if i % 2 else random_mixed_state(rng, circuit.space)
        rep = verify_deferred(circuit, rho0)
        worst = max(worst, rep.max_abs_diff)
        worst_unit = max(worst_unit, *rep.unitarity_residuals)
        if not rep.passed:
            res.failures.append({"case": i, **rep.as_dict()})
    res.stats = {"max_abs_diff": worst, "max_unitarity_residual": worst_unit}
    return res


def _degenerate_hermitian(rng, d: int) -> np.ndarray:
    levels = rng.normal(size=max(2, d // 2))
    evals = np.sort(rng.choice(levels, size=d))
    evals[0], evals[-1] = evals[1], evals[-2]  # repeated extremes
    U = random_unitary(rng, d)
    return (U * evals) @ U.conj().T


def run_seminorm_suite(cases: int = 1000, seed: int = 0) -> SuiteResult:
    """Triangle inequality, unitary invariance, variance bound, extremal states."""
    rng = np.random.default_rng(seed)
    res = SuiteResult("seminorm", cases, seed)
    worst = {"triangle": -math.inf, "unitary": 0.0, "variance": -math.inf, "maxvar": 0.0}
    for i in range(cases):
        d = int(rng.integers(2, 17))
        space = HilbertSpace([d])
        A = HermitianOp(space, random_hermitian(rng, d, rng.uniform(0.1, 3)))
        B = HermitianOp(space, random_hermitian(rng, d, rng.uniform(0.1, 3)))
        U = random_unitary(rng, d)
        sa, sb = seminorm(A), seminorm(B)
        problems = []
        tri = seminorm(A + B) - (sa + sb)
        worst["triangle"] = max(worst["triangle"], tri)
        if tri > 1e-9:
            problems.append("triangle inequality")
        uni = abs(seminorm(A.conjugate_by(U)) - sa)
        worst["unitary"] = max(worst["unitary"], uni)
        if uni > 1e-9:
            problems.append("unitary invariance")
        state = random_pure_state(rng, space) if i % 2 else random_mixed_state(rng, space)
        excess = variance(state, A) - sa**2 / 4
        worst["variance"] = max(worst["variance"], excess)
        if excess > 1e-9:
            problems.append("variance bound")
        H = A if i % 3 else HermitianOp(space, _degenerate_hermitian(rng, d))
        gap = abs(variance(max_variance_state(H, float(rng.uniform(0, 2 * math.pi))), H) - seminorm(H) ** 2 / 4)
        worst["maxvar"] = max(worst["maxvar"], gap)
        if gap > 1e-10 * max(1.0, seminorm(H) ** 2):
            problems.append("max-variance state")
        if problems:
            res.failures.append({"case": i, "dim": d, "problems": problems})
    res.stats = worst
    return res


def run_suite(name: str, cases: int, seed: int) -> SuiteResult:
    runners = {
        "chain": run_chain_suite,
        "deferred": run_deferred_suite,
        "seminorm": run_seminorm_suite,
        "bound": run_bound_suite,
    }
    if name not in runners:
        raise ValueError(f"unknown suite {name!r}; expected one of {SUITES}")
    return runners[name](cases, seed)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qest.dynamics import Schedule, evolve_unitary
from qest.errors import InvalidStateError
from qest.fisher import (
    bound_chain,
    chain_from_evolution,
    commutator_derivative,
    drho_dgamma,
    qfi,
    sld_mixed,
    sld_pure,
    sld_residual,
    sld_truncated_fraction,
)
from qest.opalg import HermitianOp, HilbertSpace, QuantumState, pauli, variance
from qest.probespec import build_h0_separable, cat_state, parse_probe_spec

from conftest import rand_herm, rand_ket, rand_rho, rand_unitary
from test_dynamics import random_schedule

Z = pauli("Z")
hz = HermitianOp(HilbertSpace([2]), Z)


def test_sld_pure_eigenprojector_is_zero():
    space = HilbertSpace.qubits(2)
    K = build_h0_separable(hz, 2)
    L = sld_pure(QuantumState.basis(space, 0), K)
    assert np.allclose(L.matrix, 0)


def test_cat_qfi():
    for n in range(1, 6):
        t = 0.7
        K = build_h0_separable(hz, n) * t
        cat = cat_state(hz, n)
        assert qfi(cat, sld_pure(cat, K)) == pytest.approx(4 * t**2 * n**2, rel=1e-12)


def test_pure_matches_mixed(rng):
    for d in (2, 3, 6):
        space = HilbertSpace([d])
        for _ in range(10):
            v = rand_ket(rng, d)
            K = HermitianOp(space, rand_herm(rng, d))
            pure = QuantumState(space, v)
            rank1 = QuantumState(space, np.outer(v, v.conj()))
            Lp = sld_pure(pure, K)
            Lm = sld_mixed(rank1, commutator_derivative(K, rank1))
            # the mixed SLD is only fixed on the support; compare its action there
            P = np.outer(v, v.conj())
            assert np.abs((Lp.matrix - Lm.matrix) @ P).max() < 1e-8
            assert qfi(rank1, Lm) == pytest.approx(qfi(pure, Lp), abs=1e-8)
            assert qfi(pure, Lp) == pytest.approx(4 * variance(pure, K), abs=1e-8)


def test_pure_rejects_mixed(rng):
    space = HilbertSpace([3])
    with pytest.raises(InvalidStateError):
        sld_pure(QuantumState(space, rand_rho(rng, 3)), HermitianOp(space, np.eye(3)))


def test_maximally_mixed_is_insensitive():
    space = HilbertSpace.qubits(2)
    rho = QuantumState.maximally_mixed(space)
    drho = commutator_derivative(build_h0_separable(hz, 2), rho)
    L = sld_mixed(rho, drho)
    assert np.allclose(L.matrix, 0) and qfi(rho, L) == 0.0


def test_mixed_residual_and_variance_gap(rng):
    for d in (2, 4, 5):
        space = HilbertSpace([d])
        for _ in range(10):
            rho = QuantumState(space, rand_rho(rng, d))
            K = HermitianOp(space, rand_herm(rng, d))
            drho = commutator_derivative(K, rho)
            L = sld_mixed(rho, drho)
            assert sld_residual(rho, L, drho) <= 1e-8
            assert sld_truncated_fraction(rho, drho) == 0.0
            gap = 4 * variance(rho, K) - qfi(rho, L)
            assert gap > 1e-9


def test_low_rank_truncation_flagged(rng):
    space = HilbertSpace([4])
    rho = QuantumState(space, rand_rho(rng, 4, rank=2))
    K = HermitianOp(space, rand_herm(rng, 4))
    drho = commutator_derivative(K, rho)
    L = sld_mixed(rho, drho)
    assert sld_residual(rho, L, drho) <= 1e-8
    assert sld_truncated_fraction(rho, drho) == pytest.approx(0.0, abs=1e-12)
    bogus = HermitianOp(space, np.diag([0, 0, 1.0, -1.0]) + 0j)  # lives off the support
    assert sld_truncated_fraction(rho, bogus) > 0
    with pytest.raises(ValueError, match="traceless"):
        sld_mixed(rho, HermitianOp(space, np.eye(4)))


def test_qfi_zero_sld(rng):
    space = HilbertSpace([3])
    assert qfi(QuantumState(space, rand_ket(rng, 3)), HermitianOp(space, np.zeros((3, 3)))) == 0.0


def _fd_drho(h0, aux, gamma, t, rho0, eps=1e-5):
    def rho_at(g):
        U = evolve_unitary(h0, aux, g, t)
        return U @ rho0.density_matrix() @ U.conj().T

    return (rho_at(gamma + eps) - rho_at(gamma - eps)) / (2 * eps)


def test_drho_commuting_is_zero():
    h0 = build_h0_separable(hz, 2)
    rho0 = QuantumState.basis(h0.space, 1)
    assert np.allclose(drho_dgamma(h0, Schedule.empty(h0.space), 0.4, 1.0, rho0).matrix, 0, atol=1e-14)


def test_drho_matches_finite_difference(rng):
    for i in range(20):
        space = HilbertSpace.qubits(2)
        h0 = HermitianOp(space, rand_herm(rng, 4))
        t = float(rng.uniform(0.2, 2))
        gamma = float(rng.uniform(-1, 1))
        aux = random_schedule(rng, space, t, segments=2, scale=1.5)
        rho0 = QuantumState(space, rand_rho(rng, 4) if i % 2 else rand_ket(rng, 4))
        d = drho_dgamma(h0, aux, gamma, t, rho0).matrix
        ref = _fd_drho(h0, aux, gamma, t, rho0)
        assert np.linalg.norm(d - ref) / np.linalg.norm(ref) <= 1e-6


def test_bound_chain_cat_saturates():
    spec = parse_probe_spec("probe { n=4; coupling=product(Z); state=cat; }")
    ch = bound_chain(None, spec, 0.3, 1.5)
    target = 2 * 1.5 * 4
    for v in (ch.sqrt_qfi, ch.two_delta_K, ch.seminorm_K, ch.t_seminorm_h0):
        assert v == pytest.approx(target, rel=1e-9)
    assert ch.all_ordered and ch.delta_gamma_bound == pytest.approx(1 / target)


def test_bound_chain_maximally_mixed():
    spec = parse_probe_spec("probe { n=2; coupling=product(Z); }")
    ch = bound_chain(QuantumState.maximally_mixed(spec.full_space), spec, 0.3, 1.0)
    assert ch.sqrt_qfi == 0.0 and ch.all_ordered and not ch.pure


def test_qfi_unitary_covariance(rng):
    space = HilbertSpace([4])
    for _ in range(10):
        rho = QuantumState(space, rand_rho(rng, 4))
        K = HermitianOp(space, rand_herm(rng, 4))
        W = rand_unitary(rng, 4)
        q1 = qfi(rho, sld_mixed(rho, commutator_derivative(K, rho)))
        rho2 = QuantumState(space, W @ rho.data @ W.conj().T)
        K2 = K.conjugate_by(W)
        q2 = qfi(rho2, sld_mixed(rho2, commutator_derivative(K2, rho2)))
        assert q2 == pytest.approx(q1, abs=1e-8)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_chain_ordering_property(seed, mixed):
    rng = np.random.default_rng(seed)
    space = HilbertSpace.qubits(2)
    h0 = HermitianOp(space, rand_herm(rng, 4))
    t = float(rng.uniform(0.1, 2))
    aux = random_schedule(rng, space, t, segments=2, scale=2.0)
    rho0 = QuantumState(space, rand_rho(rng, 4) if mixed else rand_ket(rng, 4))
    from qest.dynamics import evolve

    res = evolve(h0, aux, float(rng.uniform(-1, 1)), t, rho0)
    ch = chain_from_evolution(res.rho_t, res.K, h0, t)
    assert ch.all_ordered
    assert min(ch.slacks) >= -1e-8
    assert ch.qfi <= ch.variance_bound + 1e-8

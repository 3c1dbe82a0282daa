import math

import numpy as np
import pytest

from qest.estimate import (
    EstimationConfig,
    MeasurementSpec,
    Protocol,
    batch_rng,
    born_probabilities,
    born_sample,
    cat_protocol_distribution,
    local_basis_probabilities,
    mle_estimate,
    operating_point,
    pm_basis,
    run_monte_carlo,
)
from qest.opalg import HermitianOp, HilbertSpace, QuantumState, pauli
from qest.probespec import parse_probe_spec

from conftest import rand_ket, rand_rho

Z, X = pauli("Z"), pauli("X")


def cat_spec(n=4, k=1, coupling="Z"):
    return parse_probe_spec(f"probe {{ n={n}; k={k}; coupling=product({coupling}); state=cat; }}")


def test_born_deterministic_and_balanced(rng):
    space = HilbertSpace([3])
    m = MeasurementSpec.from_basis(space, np.eye(3), labels=["a", "b", "c"])
    rho = QuantumState(space, np.diag([0, 1.0, 0]) + 0j)
    assert set(born_sample(rho, m, rng, size=200)) == {"b"}
    q = HilbertSpace([2])
    mz = MeasurementSpec.from_basis(q, np.eye(2))
    draws = np.array(born_sample(QuantumState.maximally_mixed(q), mz, rng, size=10_000))
    assert abs(draws.mean() - 0.5) < 4 * 0.5 / 100


def test_born_cat_parity_frequency(rng):
    n, phi = 3, math.pi / 3
    spec = cat_spec(n)
    proto = Protocol(spec)
    gamma = phi / (2 * n)  # t = 1, lambda span 2
    p = proto.statistic_probabilities(gamma, 1.0)
    labels = np.argmax(proto.statistic, axis=1)
    idx = rng.choice(len(labels), size=10_000, p=proto.outcome_probabilities(gamma, 1.0))
    freq = np.mean(labels[idx] == 0)
    expect = (1 + math.cos(phi)) / 2
    assert p[0] == pytest.approx(expect, abs=1e-12)
    assert abs(freq - expect) < 4 * math.sqrt(expect * (1 - expect) / 10_000)


def test_measurement_validation():
    q = HilbertSpace([2])
    with pytest.raises(ValueError):
        MeasurementSpec(q, [np.diag([1, 0]), np.diag([1, 1])])
    with pytest.raises(ValueError):
        MeasurementSpec(q, [np.diag([1, 0])])


def test_local_basis_matches_full_projectors(rng):
    space = HilbertSpace([2, 2, 2])
    W = pm_basis(HermitianOp(HilbertSpace([2]), Z))
    full = np.kron(W, np.kron(W, W))
    m = MeasurementSpec.from_basis(space, full)
    for s in (QuantumState(space, rand_ket(rng, 8)), QuantumState(space, rand_rho(rng, 8))):
        assert np.allclose(local_basis_probabilities(s, W), born_probabilities(s, m), atol=1e-12)


def test_cat_distribution_examples():
    assert cat_protocol_distribution(0.0, 1.0, 4, 1, 1, -1) == (pytest.approx(1.0), pytest.approx(0.0))
    even, odd = cat_protocol_distribution(math.pi / 8, 1.0, 4, 1, 1, -1)
    assert (even, odd) == (pytest.approx(0.0, abs=1e-15), pytest.approx(1.0))


@pytest.mark.parametrize("n,k", [(1, 1), (3, 1), (4, 2), (5, 3), (8, 1), (6, 2)])
def test_cat_distribution_vs_simulation(n, k):
    spec = cat_spec(n, k, "0.5 * (I + Z)")
    proto = Protocol(spec)
    for gamma in (0.0, 0.13, 0.71, -0.4):
        sim = proto.statistic_probabilities(gamma, 1.3)
        even, odd = cat_protocol_distribution(gamma, 1.3, n, k, 1.0, 0.0)
        assert sim[0] == pytest.approx(even, abs=1e-10)
        assert sim[1] == pytest.approx(odd, abs=1e-10)


def test_cat_protocol_needs_phase():
    with pytest.raises(ValueError, match="relative phase"):
        Protocol(cat_spec(3, 2, "Z"))


def test_protocol_rejects_unsupported():
    with pytest.raises(ValueError):
        Protocol(parse_probe_spec("probe { n=2; k=2; coupling=explicit(kron(Z,Z)); }"))
    with pytest.raises(ValueError):
        Protocol(parse_probe_spec("probe { n=2; coupling=product(Z); aux=[0,1] X @ (0); }"))


def test_mle_exact_counts():
    model = Protocol(cat_spec(2)).model(1.0)
    window = (0.0, math.pi / 4)
    for g0 in (0.1, 0.3, 0.55):
        counts = np.round(model(np.array([g0]))[0] * 1e6)
        assert mle_estimate(counts, model, window) == pytest.approx(g0, abs=1e-5)


def test_mle_boundary():
    model = Protocol(cat_spec(2)).model(1.0)
    window = (0.0, math.pi / 4)
    assert mle_estimate(np.array([100, 0, 0]), model, window) == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        mle_estimate(np.zeros(3), model, window)


def test_monte_carlo_attains_bound():
    spec = cat_spec(4)
    g = operating_point(spec, 1.0)
    rep = run_monte_carlo(spec, EstimationConfig(nu=10_000, gamma_true=g, t=1.0, seed=42))
    assert 0.9 <= rep.ratio <= 1.1
    assert rep.bound == pytest.approx(1 / (100 * 8))


def test_monte_carlo_sqrt_nu_law():
    spec = cat_spec(4)
    g = operating_point(spec, 1.0)
    d = [
        np.mean([run_monte_carlo(spec, EstimationConfig(nu=nu, gamma_true=g, t=1.0, seed=s)).delta_gamma for s in range(4)])
        for nu in (100, 1000, 10_000)
    ]
    scaled = [x * math.sqrt(nu) for x, nu in zip(d, (100, 1000, 10_000))]
    for a, b in zip(scaled, scaled[1:]):
        assert 0.8 <= b / a <= 1.25
    quad = run_monte_carlo(spec, EstimationConfig(nu=4000, gamma_true=g, t=1.0, seed=3)).delta_gamma
    half = run_monte_carlo(spec, EstimationConfig(nu=16000, gamma_true=g, t=1.0, seed=3)).delta_gamma
    assert 0.35 <= half / quad <= 0.65


def test_product_state_shot_noise():
    out = {}
    for n in (1, 4):
        spec = parse_probe_spec(f"probe {{ n={n}; coupling=product(Z); state=product(1, 1); }}")
        g = operating_point(spec, 1.0)
        rep = run_monte_carlo(spec, EstimationConfig(nu=4000, gamma_true=g, t=1.0, seed=7))
        out[n] = rep.delta_gamma * math.sqrt(4000)
    # sqrt(N) improvement, far from the N-fold Heisenberg gain
    assert out[1] / out[4] == pytest.approx(2.0, rel=0.15)


def test_nu_one_warns():
    spec = cat_spec(4)
    rep = run_monte_carlo(spec, EstimationConfig(nu=1, gamma_true=operating_point(spec, 1.0), t=1.0, seed=1))
    assert math.isfinite(rep.ratio) and rep.warnings


def test_aliasing_window_rejected():
    spec = cat_spec(4)
    with pytest.raises(ValueError, match="alias"):
        run_monte_carlo(spec, EstimationConfig(nu=10, gamma_true=0.1, t=1.0, window=(0.0, 1.0)))


def test_determinism():
    spec = cat_spec(3)
    cfg = EstimationConfig(nu=500, gamma_true=0.2, t=1.0, seed=9, batches=20)
    assert run_monte_carlo(spec, cfg) == run_monte_carlo(spec, cfg)
    a = batch_rng(5, 3).random(4)
    assert np.array_equal(a, batch_rng(5, 3).random(4))
    assert not np.array_equal(a, batch_rng(5, 4).random(4))

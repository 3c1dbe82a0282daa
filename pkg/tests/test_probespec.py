import itertools
import math
import re
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qest.errors import DimensionCapError, SpecError
from qest.opalg import HermitianOp, HilbertSpace, QuantumState, pauli, seminorm, variance
from qest.probespec import (
    ExplicitKBody,
    build_h0,
    build_h0_kbody,
    build_h0_product,
    build_h0_separable,
    build_rb_hamiltonian,
    cat_state,
    coupling_summary,
    evaluate,
    format_expr,
    format_probe_spec,
    initial_state,
    parse_expression,
    parse_probe_spec,
    pauli_commutation_table,
    pauli_string_matrix,
    permutation_matrix,
    product_coupling,
    rb_pauli_terms,
)

CORPUS = Path(__file__).parent / "corpus"
Z, X, Y, I2 = pauli("Z"), pauli("X"), pauli("Y"), pauli("I")
Q1 = HilbertSpace([2])
hz = HermitianOp(Q1, Z)
proj = HermitianOp(Q1, (I2 + Z) / 2)


def test_separable_examples():
    assert np.allclose(build_h0_separable(hz, 2).matrix, np.diag([2, 0, 0, -2]))
    assert build_h0_separable(hz, 1).allclose(hz)
    assert seminorm(build_h0_separable(hz, 5)) == pytest.approx(10.0)


def test_kbody_pairwise_zz():
    zz = HermitianOp(HilbertSpace.qubits(2), np.kron(Z, Z))
    h0 = build_h0_kbody(zz, 3, 2)
    ev = np.linalg.eigvalsh(h0.matrix)
    assert ev.max() == pytest.approx(3.0) and ev.min() == pytest.approx(-1.0)
    assert h0.matrix[0, 0].real == pytest.approx(3.0)
    assert seminorm(h0) == pytest.approx(4.0)
    assert seminorm(h0) < 3 * seminorm(zz)
    assert build_h0_kbody(zz, 2, 2).allclose(zz)


def test_kbody_projector_saturates():
    for n, k in [(3, 2), (4, 2), (5, 3), (6, 2)]:
        h0 = build_h0_product(proj, n, k)
        assert seminorm(h0) == pytest.approx(math.comb(n, k), abs=1e-10)
        assert h0.matrix[0, 0].real == pytest.approx(math.comb(n, k))


def test_product_k1_is_separable():
    h = HermitianOp(Q1, 0.3 * X - 1.2 * Z + 0.7 * Y)
    for n in range(1, 6):
        assert np.array_equal(build_h0_product(h, n, 1).matrix, build_h0_separable(h, n).matrix)


def test_exchange_symmetry(rng):
    from conftest import rand_herm

    sym = rand_herm(rng, 4)
    swap = permutation_matrix((2, 2), (1, 0))
    h2 = HermitianOp(HilbertSpace.qubits(2), (sym + swap @ sym @ swap.T) / 2)
    h0 = build_h0_kbody(h2, 4, 2)
    for perm in itertools.permutations(range(4)):
        P = permutation_matrix((2,) * 4, perm)
        assert np.allclose(P @ h0.matrix @ P.T, h0.matrix, atol=1e-12)


def test_kbody_rejects_asymmetric():
    zx = HermitianOp(HilbertSpace.qubits(2), np.kron(Z, X))
    with pytest.raises(ValueError, match="symmetric"):
        build_h0_kbody(zx, 3, 2)
    with pytest.raises(SpecError, match="symmetric"):
        parse_probe_spec("probe { n=3; k=2; coupling=explicit(kron(Z, X)); }")


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_combinatorial_bound_property(n, seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, min(n, 3) + 1))
    a = rng.normal(size=4)
    h_local = HermitianOp(Q1, a[0] * I2 + a[1] * X + a[2] * Y + a[3] * Z)
    hk = product_coupling(h_local, k)
    h0 = build_h0_product(h_local, n, k)
    assert seminorm(h0) <= math.comb(n, k) * seminorm(hk) + 1e-9
    shifted = HermitianOp(Q1, h_local.matrix - np.linalg.eigvalsh(h_local.matrix)[0] * I2)  # spectrum >= 0
    bound = math.comb(n, k) * seminorm(product_coupling(shifted, k))
    assert seminorm(build_h0_product(shifted, n, k)) == pytest.approx(bound, rel=1e-10, abs=1e-10)


def test_rb_small_cases():
    assert np.allclose(build_rb_hamiltonian(1).matrix, X)
    h2 = build_rb_hamiltonian(2).matrix
    expect = np.zeros((4, 4)); expect[0, 3] = expect[3, 0] = 2
    assert np.allclose(h2, expect)
    h3 = build_rb_hamiltonian(3)
    assert seminorm(h3) == pytest.approx(8.0)
    from qest.opalg import max_variance_state

    assert math.sqrt(variance(max_variance_state(h3), h3)) == pytest.approx(4.0)


def test_rb_terms_reconstruct_and_commute():
    for n in range(1, 6):
        terms = rb_pauli_terms(n)
        assert len(terms) == 2 ** (n - 1)
        total = sum(c * pauli_string_matrix(s) for c, s in terms)
        assert np.allclose(total, build_rb_hamiltonian(n).matrix)
        assert pauli_commutation_table([s for _, s in terms]).all()


def test_commutation_table_detects_anticommuting():
    table = pauli_commutation_table(["XI", "ZI", "ZZ", "XX"])
    assert not table[0, 1] and table[2, 3] and table[0, 3]


def test_cat_state_convention():
    assert np.allclose(cat_state(hz, 2).data, np.array([1, 0, 0, 1]) / math.sqrt(2))
    c1 = cat_state(hz, 1)
    assert np.allclose(c1.data, np.array([1, 1]) / math.sqrt(2))
    h = HermitianOp(Q1, X)  # eigenvectors with nontrivial phases
    v = cat_state(h, 3).data
    assert variance(QuantumState(HilbertSpace.qubits(3), v), build_h0_separable(h, 3)) == pytest.approx(9.0)


def test_coupling_summary_examples():
    sep = coupling_summary(parse_probe_spec("probe { n=4; coupling=product(Z); }"))
    assert (sep.seminorm_h0, sep.seminorm_bound, sep.strictly_tighter) == (pytest.approx(8), pytest.approx(8), False)
    zz = coupling_summary(parse_probe_spec("probe { n=3; k=2; coupling=explicit(kron(Z,Z)); }"))
    assert zz.seminorm_h0 == pytest.approx(4) and zz.seminorm_bound == pytest.approx(6) and zz.strictly_tighter
    pk = coupling_summary(parse_probe_spec("probe { n=6; k=2; coupling=product(0.5*(I+Z)); }"))
    assert pk.seminorm_h0 == pytest.approx(15.0)


def test_parse_smoke():
    s = parse_probe_spec("probe { n=2; d=2; k=1; coupling=product(Z); state=cat; }")
    assert (s.n_systems, s.local_dim, s.degree, s.initial_state.kind) == (2, 2, 1, "cat")
    assert np.allclose(build_h0(s).matrix, np.diag([2, 0, 0, -2]))
    s = parse_probe_spec("probe { n=3; k=2; coupling=explicit(kron(Z,Z)); }")
    assert isinstance(s.coupling, ExplicitKBody) and s.initial_state.kind == "maxvar"


def test_parse_non_hermitian():
    with pytest.raises(SpecError, match="Hermitian"):
        parse_probe_spec("probe { n=2; coupling=product(X+i*Y); }")


@pytest.mark.parametrize("path", sorted((CORPUS / "valid").glob("*.probe")), ids=lambda p: p.stem)
def test_corpus_round_trip(path):
    spec = parse_probe_spec(path.read_text())
    text = format_probe_spec(spec)
    again = parse_probe_spec(text)
    assert again == spec
    assert format_probe_spec(again) == text
    assert np.allclose(build_h0(again).matrix, build_h0(spec).matrix)


@pytest.mark.parametrize("path", sorted((CORPUS / "malformed").glob("*.probe")), ids=lambda p: p.stem)
def test_corpus_malformed(path):
    text = path.read_text()
    line, col = map(int, re.search(r"expect: line (\d+), column (\d+)", text).groups())
    with pytest.raises(SpecError) as info:
        parse_probe_spec(text)
    assert (info.value.line, info.value.column) == (line, col)
    assert f"line {line}, column {col}" in str(info.value)


def test_corpus_size():
    assert len(list((CORPUS / "valid").glob("*.probe"))) >= 20
    assert len(list((CORPUS / "malformed").glob("*.probe"))) >= 5


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("probe { coupling=product(Z); }", "missing required field 'n'"),
        ("probe { n=0; coupling=product(Z); }", "n"),
        ("probe { n=2; k=3; coupling=product(Z); }", "k"),
        ("probe { n=2; d=3; coupling=product(Z); }", "dimension"),
        ("probe { n=2; k=2; coupling=explicit(kron(Z,Z)); state=cat; }", "cat"),
        ("probe { n=2; coupling=product(Z); aux=[1, 0.5] X @ (0); }", "interval"),
        ("probe { n=2; coupling=product(Z); aux=[0, 1] X @ (5); }", "site"),
        ("probe { n=2; coupling=product(Z); state=product(1, 0, 0); }", "amplitude"),
        ("probe { n=2; coupling=product(Z); state=product(0, 0); }", "zero"),
        ("probe { n=2; coupling=product(Z); } extra", "after"),
        ("probe { n=2; coupling=product(diag()); }", ""),
        ("probe { n=2; coupling=product(kron(Z, 2)); }", "scalar"),
    ],
)
def test_semantic_errors(text, fragment):
    with pytest.raises(SpecError) as info:
        parse_probe_spec(text)
    assert fragment.lower() in str(info.value).lower()
    assert info.value.line is not None


def test_dimension_cap_from_spec(monkeypatch):
    monkeypatch.setenv("QEST_DIM_CAP", "64")
    with pytest.raises(DimensionCapError):
        parse_probe_spec("probe { n=7; coupling=product(Z); }")


def test_initial_states():
    s = parse_probe_spec("probe { n=1; coupling=product(Z); ancillas=[2]; state=explicit(0.6, 0, 0, 0.8); }")
    assert np.allclose(initial_state(s).data, [0.6, 0, 0, 0.8])
    s = parse_probe_spec("probe { n=2; coupling=product(Z); ancillas=[3]; state=product(2, 0); }")
    v = initial_state(s).data
    assert v.shape == (12,) and v[0] == pytest.approx(1.0)


# random expression round trip

def _exprs():
    leaf = st.sampled_from(["I", "X", "Y", "Z", "i", "2", "0.5", "1e-3", "diag(1, -1)"])

    def extend(children):
        return st.one_of(
            st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            children.map(lambda c: f"-{c}"),
            st.tuples(children, children).map(lambda t: f"kron({t[0]}, {t[1]})"),
        )

    return st.recursive(leaf, extend, max_leaves=8)


@settings(max_examples=200, deadline=None)
@given(_exprs())
def test_expression_round_trip(text):
    node = parse_expression(text)
    printed = format_expr(node)
    assert parse_expression(printed) == node
    try:
        value = evaluate(node)
    except SpecError:
        return
    assert np.allclose(evaluate(parse_expression(printed)), value)

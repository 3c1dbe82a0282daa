"""Probe specifications: the text format, validation, and derived objects.

Example::

    probe {
        n = 3; d = 2; k = 2;
        coupling = product(0.5 * (I + Z));
        ancillas = [2];
        aux = [0, 0.5] kron(X, X) @ (0, 3);
        state = cat;
    }
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from ..dynamics import Schedule
from ..errors import DimensionCapError, NotHermitianError, SpecError
from ..opalg import (
    HermitianOp,
    HilbertSpace,
    QuantumState,
    dim_cap,
    embed,
    extremal_eigenpairs,
    max_variance_state,
    seminorm,
)
from . import expr as E
from .hamiltonians import (
    SYMMETRY_TOL,
    build_h0_kbody,
    build_h0_product,
    cat_state,
    kron_power,
    product_coupling,
    symmetry_defect,
)


@dataclass(frozen=True)
class ProductLocal:
    expr: E.Expr


@dataclass(frozen=True)
class ExplicitKBody:
    expr: E.Expr


Coupling = Union[ProductLocal, ExplicitKBody]


@dataclass(frozen=True)
class AuxTerm:
    t_start: float
    t_end: float
    expr: E.Expr
    sites: tuple[int, ...]


@dataclass(frozen=True)
class InitialState:
    kind: str  # "cat", "maxvar", "product", "explicit"
    amplitudes: tuple[complex, ...] = ()


@dataclass(frozen=True)
class ProbeSpec:
    n_systems: int
    coupling: Coupling
    local_dim: int = 2
    degree: int = 1
    aux_schedule: tuple[AuxTerm, ...] = ()
    ancillas: tuple[int, ...] = ()
    initial_state: InitialState = field(default_factory=lambda: InitialState("cat"))

    def __post_init__(self):
        validate(self)

    @property
    def probe_space(self) -> HilbertSpace:
        return HilbertSpace([self.local_dim] * self.n_systems)

    @property
    def full_space(self) -> HilbertSpace:
        return HilbertSpace([self.local_dim] * self.n_systems + list(self.ancillas))

    def with_n(self, n: int) -> "ProbeSpec":
        return replace(self, n_systems=n)


# --- validation --------------------------------------------------------------

def _as_matrix(node: E.Expr, what: str, field_name: str) -> np.ndarray:
    try:
        value = E.evaluate(node)
    except SpecError as exc:
        exc.field = field_name
        raise
    if np.isscalar(value):
        raise SpecError(f"{what} must be an operator, got a scalar", field=field_name)
    return value


def _hermitian(matrix: np.ndarray, space: HilbertSpace, what: str, field_name: str) -> HermitianOp:
    try:
        return HermitianOp(space, matrix)
    except NotHermitianError as exc:
        raise SpecError(f"non-Hermitian {what}: {exc}", field=field_name) from None


def coupling_operator(spec: ProbeSpec) -> HermitianOp:
    """Single-site ``h`` for product couplings, k-site ``h^(k)`` otherwise."""
    d, k = spec.local_dim, spec.degree
    m = _as_matrix(spec.coupling.expr, "coupling", "coupling")
    sites = 1 if isinstance(spec.coupling, ProductLocal) else k
    want = d**sites
    if m.shape[0] != want:
        raise SpecError(
            f"coupling has dimension {m.shape[0]}, expected {want} (d={d} on {sites} site(s))",
            field="coupling",
        )
    return _hermitian(m, HilbertSpace([d] * sites), "coupling term", "coupling")


def kbody_operator(spec: ProbeSpec) -> HermitianOp:
    """The k-site coupling ``h^(k)`` (a Kronecker power for product couplings)."""
    h = coupling_operator(spec)
    if isinstance(spec.coupling, ProductLocal):
        return product_coupling(h, spec.degree)
    return h


def validate(spec: ProbeSpec) -> None:
    n, d, k = spec.n_systems, spec.local_dim, spec.degree
    if not isinstance(n, int) or n < 1:
        raise SpecError(f"n must be a positive integer, got {n!r}", field="n")
    if not isinstance(d, int) or d < 2:
        raise SpecError(f"d must be an integer >= 2, got {d!r}", field="d")
    if not isinstance(k, int) or not 1 <= k <= n:
        raise SpecError(f"k must satisfy 1 <= k <= n={n}, got {k!r}", field="k")
    for a in spec.ancillas:
        if not isinstance(a, int) or a < 2:
            raise SpecError(f"ancilla dimension must be an integer >= 2, got {a!r}", field="ancillas")
    dims = [d] * n + list(spec.ancillas)
    total = math.prod(dims)
    if total > dim_cap():
        raise DimensionCapError(f"total dimension {total} exceeds cap {dim_cap()}")
    h = coupling_operator(spec)
    if isinstance(spec.coupling, ExplicitKBody) and k > 1:
        defect = symmetry_defect(h)
        if defect > SYMMETRY_TOL:
            raise SpecError(
                f"explicit coupling is not symmetric under site exchange (defect {defect:.3e})",
                field="coupling",
            )
    for idx, term in enumerate(spec.aux_schedule):
        fname = f"aux[{idx}]"
        if not term.t_start < term.t_end:
            raise SpecError(f"aux interval needs t_start < t_end, got [{term.t_start}, {term.t_end}]", field=fname)
        if term.t_start < 0:
            raise SpecError("aux interval starts before t=0", field=fname)
        if len(set(term.sites)) != len(term.sites) or not term.sites:
            raise SpecError(f"aux sites must be distinct and nonempty: {list(term.sites)}", field=fname)
        for s in term.sites:
            if not 0 <= s < len(dims):
                raise SpecError(f"aux site {s} out of range (0..{len(dims) - 1})", field=fname)
        m = _as_matrix(term.expr, "aux term", fname)
        want = math.prod(dims[s] for s in term.sites)
        if m.shape[0] != want:
            raise SpecError(f"aux term has dimension {m.shape[0]}, sites need {want}", field=fname)
        _hermitian(m, HilbertSpace([dims[s] for s in term.sites]), "aux term", fname)
    st = spec.initial_state
    if st.kind == "cat":
        if not isinstance(spec.coupling, ProductLocal):
            raise SpecError("state=cat needs a product coupling; use state=maxvar", field="state")
    elif st.kind == "product":
        if len(st.amplitudes) != d:
            raise SpecError(f"product state needs {d} amplitudes, got {len(st.amplitudes)}", field="state")
    elif st.kind == "explicit":
        if len(st.amplitudes) != total:
            raise SpecError(f"explicit state needs {total} amplitudes, got {len(st.amplitudes)}", field="state")
    elif st.kind != "maxvar":
        raise SpecError(f"unknown state kind {st.kind!r}", field="state")
    if st.kind in ("product", "explicit") and not any(abs(a) > 0 for a in st.amplitudes):
        raise SpecError("state amplitudes are all zero", field="state")


# --- derived objects ---------------------------------------------------------

def build_h0(spec: ProbeSpec, with_ancillas: bool = True) -> HermitianOp:
    """Coupling Hamiltonian ``h0``, embedded in the probe+ancilla space by default."""
    h = coupling_operator(spec)
    if isinstance(spec.coupling, ProductLocal):
        h0 = build_h0_product(h, spec.n_systems, spec.degree)
    else:
        h0 = build_h0_kbody(h, spec.n_systems, spec.degree)
    if with_ancillas and spec.ancillas:
        h0 = embed(h0, range(spec.n_systems), spec.full_space)
    return h0


def build_schedule(spec: ProbeSpec) -> Schedule:
    space = spec.full_space
    terms = []
    for term in spec.aux_schedule:
        m = E.evaluate(term.expr)
        local = HermitianOp(HilbertSpace([space.site_dims[s] for s in term.sites]), m)
        terms.append((term.t_start, term.t_end, embed(local, term.sites, space)))
    return Schedule.from_terms(space, terms)


def _ancilla_ground(spec: ProbeSpec) -> QuantumState | None:
    if not spec.ancillas:
        return None
    space = HilbertSpace(spec.ancillas)
    return QuantumState.basis(space, 0)


def initial_state(spec: ProbeSpec) -> QuantumState:
    """Initial probe+ancilla state; ancillas start in their first basis state."""
    st = spec.initial_state
    if st.kind == "explicit":
        return QuantumState.from_vector(spec.full_space, np.array(st.amplitudes), normalize=True)
    if st.kind == "cat":
        probe = cat_state(coupling_operator(spec), spec.n_systems)
    elif st.kind == "maxvar":
        probe = max_variance_state(build_h0(spec, with_ancillas=False))
    else:
        v = np.array(st.amplitudes, dtype=complex)
        probe = QuantumState(spec.probe_space, kron_power(v / np.linalg.norm(v), spec.n_systems))
    anc = _ancilla_ground(spec)
    return probe if anc is None else probe.tensor(anc)


@dataclass(frozen=True)
class CouplingSummary:
    h0: HermitianOp
    seminorm_h0: float
    seminorm_bound: float
    seminorm_hk: float
    lambda_max: float | None = None
    lambda_min: float | None = None

    @property
    def strictly_tighter(self) -> bool:
        return self.seminorm_h0 < self.seminorm_bound - 1e-9


def coupling_summary(spec: ProbeSpec) -> CouplingSummary:
    """``h0``, its exact seminorm, and the combinatorial bound C(N,k)*||h^(k)||."""
    h0 = build_h0(spec, with_ancillas=False)
    hk = kbody_operator(spec)
    s_hk = seminorm(hk)
    lmax = lmin = None
    if isinstance(spec.coupling, ProductLocal):
        lmax, _, lmin, _ = extremal_eigenpairs(coupling_operator(spec))
    return CouplingSummary(
        h0=h0,
        seminorm_h0=seminorm(h0),
        seminorm_bound=math.comb(spec.n_systems, spec.degree) * s_hk,
        seminorm_hk=s_hk,
        lambda_max=lmax,
        lambda_min=lmin,
    )


# --- text format -------------------------------------------------------------

_KEYS = ("n", "d", "k", "coupling", "ancillas", "state", "aux")


def _parse_int(ts: E.TokenStream) -> int:
    tok = ts.peek()
    if tok.kind != "num" or not tok.text.isdigit():
        raise ts.error("expected a non-negative integer")
    ts.next()
    return int(tok.text)


def _parse_complex(ts: E.TokenStream) -> complex:
    start = ts.peek()
    node = E.parse_expr(ts)
    value = E.evaluate(node)
    if not np.isscalar(value):
        raise ts.error("expected a complex number, got an operator", start)
    return complex(value)


def _parse_amplitudes(ts: E.TokenStream) -> tuple[complex, ...]:
    ts.expect("(")
    values = [_parse_complex(ts)]
    while ts.accept(","):
        values.append(_parse_complex(ts))
    ts.expect(")")
    return tuple(values)


def parse_probe_spec(text: str) -> ProbeSpec:
    """Parse and validate the probe-spec text format."""
    ts = E.TokenStream(E.tokenize(text))
    ts.expect("probe")
    ts.expect("{")
    values: dict = {}
    where: dict = {}
    aux: list[AuxTerm] = []
    while not ts.at("}"):
        key_tok = ts.peek()
        if key_tok.kind != "ident" or key_tok.text not in _KEYS:
            raise ts.error(f"expected one of {', '.join(_KEYS)}")
        ts.next()
        key = key_tok.text
        if key in values:
            raise ts.error(f"duplicate field {key!r}", key_tok)
        ts.expect("=")
        if key in ("n", "d", "k"):
            values[key] = _parse_int(ts)
        elif key == "coupling":
            kind_tok = ts.peek()
            if ts.accept("product"):
                cls = ProductLocal
            elif ts.accept("explicit"):
                cls = ExplicitKBody
            else:
                raise ts.error("expected product(...) or explicit(...)", kind_tok)
            ts.expect("(")
            values[key] = cls(E.parse_expr(ts))
            ts.expect(")")
        elif key == "ancillas":
            ts.expect("[")
            dims = []
            if not ts.at("]"):
                dims.append(_parse_int(ts))
                while ts.accept(","):
                    dims.append(_parse_int(ts))
            ts.expect("]")
            values[key] = tuple(dims)
        elif key == "state":
            kind_tok = ts.peek()
            if ts.accept("cat"):
                values[key] = InitialState("cat")
            elif ts.accept("maxvar"):
                values[key] = InitialState("maxvar")
            elif ts.accept("product"):
                values[key] = InitialState("product", _parse_amplitudes(ts))
            elif ts.accept("explicit"):
                values[key] = InitialState("explicit", _parse_amplitudes(ts))
            else:
                raise ts.error("expected cat, maxvar, product(...) or explicit(...)", kind_tok)
        else:  # aux
            ts.expect("[")
            t0 = E.parse_real(ts)
            ts.expect(",")
            t1 = E.parse_real(ts)
            ts.expect("]")
            term = E.parse_expr(ts)
            ts.expect("@")
            ts.expect("(")
            sites = [_parse_int(ts)]
            while ts.accept(","):
                sites.append(_parse_int(ts))
            ts.expect(")")
            where[f"aux[{len(aux)}]"] = key_tok
            aux.append(AuxTerm(t0, t1, term, tuple(sites)))
            ts.expect(";")
            continue
        where[key] = key_tok
        ts.expect(";")
    close = ts.expect("}")
    if ts.peek().kind != "eof":
        raise ts.error("unexpected input after closing brace")
    for required in ("n", "coupling"):
        if required not in values:
            raise SpecError(f"missing required field {required!r}", close.line, close.col, "}")
    coupling = values["coupling"]
    default_state = InitialState("cat" if isinstance(coupling, ProductLocal) else "maxvar")
    try:
        return ProbeSpec(
            n_systems=values["n"],
            coupling=coupling,
            local_dim=values.get("d", 2),
            degree=values.get("k", 1),
            aux_schedule=tuple(aux),
            ancillas=values.get("ancillas", ()),
            initial_state=values.get("state", default_state),
        )
    except SpecError as exc:
        if exc.line is None:
            tok = where.get(exc.field) or close
            raise SpecError(exc.message, tok.line, tok.col, tok.text, exc.field) from None
        raise


def format_probe_spec(spec: ProbeSpec) -> str:
    """Canonical text form; reparses to an equal :class:`ProbeSpec`."""
    kind = "product" if isinstance(spec.coupling, ProductLocal) else "explicit"
    lines = [
        "probe {",
        f"    n = {spec.n_systems};",
        f"    d = {spec.local_dim};",
        f"    k = {spec.degree};",
        f"    coupling = {kind}({E.format_expr(spec.coupling.expr)});",
    ]
    if spec.ancillas:
        lines.append(f"    ancillas = [{', '.join(str(a) for a in spec.ancillas)}];")
    for term in spec.aux_schedule:
        sites = ", ".join(str(s) for s in term.sites)
        lines.append(
            f"    aux = [{E.format_real(term.t_start)}, {E.format_real(term.t_end)}] "
            f"{E.format_expr(term.expr)} @ ({sites});"
        )
    st = spec.initial_state
    if st.kind in ("cat", "maxvar"):
        lines.append(f"    state = {st.kind};")
    else:
        amps = ", ".join(E.format_complex(a) for a in st.amplitudes)
        lines.append(f"    state = {st.kind}({amps});")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_probe_spec(path) -> ProbeSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_probe_spec(fh.read())

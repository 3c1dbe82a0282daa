"""Dense Hermitian-operator algebra on finite tensor-product Hilbert spaces.

All matrices are dense ``complex128`` arrays.  Objects are immutable: the
arrays they hold are flagged read-only at construction.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionCapError,
    InvalidStateError,
    NotHermitianError,
    SpaceMismatchError,
)

DEFAULT_DIM_CAP = 4096
HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
# eigenvalues closer than this (relative to the spectral scale) form one group
DEGENERACY_TOL = 1e-9


def dim_cap() -> int:
    """Current dimension cap; ``QEST_DIM_CAP`` overrides the default."""
    raw = os.environ.get("QEST_DIM_CAP")
    if raw is None or raw.strip() == "":
        return DEFAULT_DIM_CAP
    try:
        cap = int(raw)
    except ValueError:
        raise DimensionCapError(f"QEST_DIM_CAP must be an integer, got {raw!r}") from None
    if cap < 1:
        raise DimensionCapError(f"QEST_DIM_CAP must be positive, got {cap}")
    return cap


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of finite sites (probe sites first, then ancillas)."""

    site_dims: tuple[int, ...]

    def __init__(self, site_dims: Sequence[int]):
        dims = tuple(int(d) for d in site_dims)
        for d in dims:
            if d < 2:
                raise ValueError(f"site dimension must be >= 2, got {d}")
        total = math.prod(dims)
        cap = dim_cap()
        if total > cap:
            raise DimensionCapError(
                f"total dimension {total} of sites {list(dims)} exceeds cap {cap}"
            )
        object.__setattr__(self, "site_dims", dims)

    @classmethod
    def qubits(cls, n: int) -> "HilbertSpace":
        return cls([2] * n)

    @property
    def total_dim(self) -> int:
        return math.prod(self.site_dims)

    @property
    def n_sites(self) -> int:
        return len(self.site_dims)

    def __add__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.site_dims + other.site_dims)


def _hermitize(matrix: np.ndarray, tol: float) -> np.ndarray:
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    scale = max(1.0, float(np.max(np.abs(m)))) if m.size else 1.0
    if dev > tol * scale:
        raise NotHermitianError(f"matrix deviates from Hermitian by {dev:.3e}")
    return (m + m.conj().T) / 2


class HermitianOp:
    """Hermitian matrix bound to a :class:`HilbertSpace`.

    The input is replaced by ``(M + M^dagger)/2``; a deviation larger than
    ``tol`` (relative to ``max(1, max|M|)``) is an error.
    """

    __slots__ = ("space", "matrix")

    def __init__(self, space: HilbertSpace, matrix, tol: float = HERMITIAN_TOL):
        m = _hermitize(matrix, tol)
        if m.shape[0] != space.total_dim:
            raise SpaceMismatchError(
                f"matrix of size {m.shape[0]} does not fit space of dimension {space.total_dim}"
            )
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "matrix", _frozen(m))

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOp is immutable")

    def __repr__(self):
        return f"HermitianOp(site_dims={list(self.space.site_dims)})"

    @property
    def dim(self) -> int:
        return self.space.total_dim

    def _check(self, other: "HermitianOp") -> None:
        if self.space != other.space:
            raise SpaceMismatchError(
                f"spaces differ: {self.space.site_dims} vs {other.space.site_dims}"
            )

    def __add__(self, other: "HermitianOp") -> "HermitianOp":
        self._check(other)
        return HermitianOp(self.space, self.matrix + other.matrix)

    def __sub__(self, other: "HermitianOp") -> "HermitianOp":
        self._check(other)
        return HermitianOp(self.space, self.matrix - other.matrix)

    def __neg__(self) -> "HermitianOp":
        return HermitianOp(self.space, -self.matrix)

    def __mul__(self, scalar: float) -> "HermitianOp":
        if isinstance(scalar, complex) or np.iscomplexobj(scalar):
            raise TypeError("HermitianOp can only be scaled by a real number")
        return HermitianOp(self.space, float(scalar) * self.matrix)

    __rmul__ = __mul__

    def conjugate_by(self, unitary: np.ndarray) -> "HermitianOp":
        """Return ``U H U^dagger``."""
        u = np.asarray(unitary)
        return HermitianOp(self.space, u @ self.matrix @ u.conj().T, tol=1e-10)

    def allclose(self, other: "HermitianOp", atol: float = 1e-12) -> bool:
        return self.space == other.space and np.allclose(self.matrix, other.matrix, rtol=0, atol=atol)

    @classmethod
    def identity(cls, space: HilbertSpace) -> "HermitianOp":
        return cls(space, np.eye(space.total_dim))


@dataclass(frozen=True)
class SpectralDecomp:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def groups(self) -> list[np.ndarray]:
        """Index arrays of degenerate eigenvalue groups, ascending."""
        return _degenerate_groups(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _degenerate_groups(evals: np.ndarray) -> list[np.ndarray]:
    if len(evals) == 0:
        return []
    scale = 1.0 + float(np.max(np.abs(evals)))
    breaks = np.nonzero(np.diff(evals) > DEGENERACY_TOL * scale)[0] + 1
    return np.split(np.arange(len(evals)), breaks)


def _first_nonzero(v: np.ndarray, tol: float = 1e-10) -> int:
    return int(np.argmax(np.abs(v) > tol))


def _phase_fix(v: np.ndarray) -> np.ndarray:
    j = _first_nonzero(v)
    c = v[j]
    return v * (abs(c) / c)


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of ``span(block)``.

    Gram-Schmidt on the projections of the standard basis vectors, taken in
    index order, followed by sorting on the first nonzero component and a
    phase fix making that component real positive.
    """
    n, m = block.shape
    if m == 1:
        return _phase_fix(block[:, 0])[:, None]
    # projections P e_j = block @ conj(block[j]); work in the m-dim coefficients
    coeffs = block.conj()
    basis = np.zeros((m, m), dtype=complex)
    k = 0
    for j in range(n):
        c = coeffs[j].copy()
        if k:
            b = basis[:k]
            c = c - b.T @ (b.conj() @ c)
            c = c - b.T @ (b.conj() @ c)
        norm = np.linalg.norm(c)
        if norm > 1e-8:
            basis[k] = c / norm
            k += 1
            if k == m:
                break
    vecs = [_phase_fix(block @ c) for c in basis[:k]]
    vecs.sort(key=_first_nonzero)
    return np.column_stack(vecs)


def spectral_decomposition(h: HermitianOp) -> SpectralDecomp:
    """Ascending eigendecomposition with deterministic degenerate bases."""
    evals, evecs = np.linalg.eigh(h.matrix)
    groups = _degenerate_groups(evals)
    cols = []
    for g in groups:
        cols.append(_canonical_basis(evecs[:, g]))
    vecs = np.column_stack(cols) if cols else evecs
    ev = np.array(evals, dtype=float)
    vecs = _frozen(vecs)
    ev.setflags(write=False)
    return SpectralDecomp(ev, vecs)


def extremal_eigenpairs(h: HermitianOp) -> tuple[float, np.ndarray, float, np.ndarray]:
    """``(M_H, |M_H>, m_H, |m_H>)`` using the canonical degenerate ordering."""
    sd = spectral_decomposition(h)
    groups = sd.groups()
    lo, hi = groups[0], groups[-1]
    return (
        float(sd.eigenvalues[hi[-1]]),
        sd.eigenvectors[:, hi[0]],
        float(sd.eigenvalues[lo[0]]),
        sd.eigenvectors[:, lo[0]],
    )


def seminorm(h: HermitianOp) -> float:
    """Spectral spread ``M_H - m_H``."""
    evals = np.linalg.eigvalsh(h.matrix)
    return float(evals[-1] - evals[0])


class QuantumState:
    """Pure state vector or density matrix on a :class:`HilbertSpace`."""

    __slots__ = ("space", "data")

    def __init__(self, space: HilbertSpace, data, tol: float = STATE_TOL):
        a = np.asarray(data, dtype=complex)
        d = space.total_dim
        if a.ndim == 1:
            if a.shape[0] != d:
                raise SpaceMismatchError(f"state vector of length {a.shape[0]} vs dimension {d}")
            norm = np.linalg.norm(a)
            if abs(norm - 1) > tol:
                raise InvalidStateError(f"state vector norm {norm!r} is not 1")
        elif a.ndim == 2:
            if a.shape != (d, d):
                raise SpaceMismatchError(f"density matrix of shape {a.shape} vs dimension {d}")
            try:
                a = _hermitize(a, tol)
            except NotHermitianError as exc:
                raise InvalidStateError(f"density matrix is not Hermitian: {exc}") from None
            tr = np.trace(a).real
            if abs(tr - 1) > tol:
                raise InvalidStateError(f"density matrix trace {tr!r} is not 1")
            lo = np.linalg.eigvalsh(a)[0]
            if lo < -tol:
                raise InvalidStateError(f"density matrix has negative eigenvalue {lo:.3e}")
        else:
            raise InvalidStateError("state must be a vector or a square matrix")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "data", _frozen(a))

    def __setattr__(self, name, value):
        raise AttributeError("QuantumState is immutable")

    def __repr__(self):
        return f"QuantumState({self.kind}, site_dims={list(self.space.site_dims)})"

    @classmethod
    def from_vector(cls, space: HilbertSpace, vector, normalize: bool = False) -> "QuantumState":
        v = np.asarray(vector, dtype=complex)
        if normalize:
            norm = np.linalg.norm(v)
            if norm == 0:
                raise InvalidStateError("cannot normalize the zero vector")
            v = v / norm
        return cls(space, v)

    @classmethod
    def basis(cls, space: HilbertSpace, index: int = 0) -> "QuantumState":
        v = np.zeros(space.total_dim, dtype=complex)
        v[index] = 1
        return cls(space, v)

    @classmethod
    def maximally_mixed(cls, space: HilbertSpace) -> "QuantumState":
        d = space.total_dim
        return cls(space, np.eye(d) / d)

    @property
    def kind(self) -> str:
        return "pure" if self.data.ndim == 1 else "mixed"

    @property
    def is_pure_vector(self) -> bool:
        return self.data.ndim == 1

    def density_matrix(self) -> np.ndarray:
        if self.data.ndim == 1:
            return np.outer(self.data, self.data.conj())
        return np.array(self.data)

    def purity(self) -> float:
        if self.data.ndim == 1:
            return 1.0
        return float(np.real(np.vdot(self.data, self.data)))

    def expectation(self, op: HermitianOp) -> float:
        _same_space(self.space, op.space)
        if self.data.ndim == 1:
            return float(np.real(np.vdot(self.data, op.matrix @ self.data)))
        return float(np.real(np.einsum("ij,ji->", self.data, op.matrix)))

    def tensor(self, other: "QuantumState") -> "QuantumState":
        space = self.space + other.space
        if self.data.ndim == 1 and other.data.ndim == 1:
            return QuantumState(space, np.kron(self.data, other.data))
        return QuantumState(space, np.kron(self.density_matrix(), other.density_matrix()))


def _same_space(a: HilbertSpace, b: HilbertSpace) -> None:
    if a != b:
        raise SpaceMismatchError(f"spaces differ: {a.site_dims} vs {b.site_dims}")


def variance(state: QuantumState, h: HermitianOp) -> float:
    """``<H^2> - <H>^2``, clamped at zero for round-off down to -1e-10."""
    _same_space(state.space, h.space)
    if state.data.ndim == 1:
        hpsi = h.matrix @ state.data
        second = np.real(np.vdot(hpsi, hpsi))
        first = np.real(np.vdot(state.data, hpsi))
    else:
        rh = state.data @ h.matrix
        first = np.real(np.trace(rh))
        second = np.real(np.einsum("ij,ji->", rh, h.matrix))
    var = float(second - first**2)
    if var < -1e-10 * max(1.0, float(second)):
        raise ArithmeticError(f"negative variance {var:.3e}")
    return max(var, 0.0)


def max_variance_state(h: HermitianOp, phase: float = 0.0) -> QuantumState:
    """``(|M_H> + e^{i phase}|m_H>)/sqrt(2)``; any eigenstate when ``||H|| = 0``."""
    top, v_top, bottom, v_bot = extremal_eigenpairs(h)
    if top - bottom <= DEGENERACY_TOL * (1 + max(abs(top), abs(bottom))):
        return QuantumState(h.space, v_bot)
    psi = (v_top + np.exp(1j * phase) * v_bot) / math.sqrt(2)
    return QuantumState(h.space, psi)


def _check_sites(sites: Sequence[int], space: HilbertSpace) -> tuple[int, ...]:
    sites = tuple(int(s) for s in sites)
    if len(set(sites)) != len(sites):
        raise ValueError(f"site indices must be distinct: {list(sites)}")
    for s in sites:
        if not 0 <= s < space.n_sites:
            raise IndexError(f"site {s} out of range for {space.n_sites} sites")
    return sites


def embed_matrix(matrix: np.ndarray, sites: Sequence[int], space: HilbertSpace) -> np.ndarray:
    """Place ``matrix`` (acting on ``sites`` in the given order) into ``space``."""
    sites = _check_sites(sites, space)
    dims = space.site_dims
    local = [dims[s] for s in sites]
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (math.prod(local), math.prod(local)):
        raise SpaceMismatchError(
            f"operator of shape {m.shape} does not match site dimensions {local}"
        )
    rest = [s for s in range(len(dims)) if s not in sites]
    if not rest and list(sites) == sorted(sites):
        return m.copy()
    rest_dim = math.prod(dims[s] for s in rest)
    big = np.kron(m, np.eye(rest_dim))
    order = list(sites) + rest  # axis order of `big`
    n = len(dims)
    shape = [dims[s] for s in order]
    big = big.reshape(shape + shape)
    perm = [order.index(s) for s in range(n)]
    big = big.transpose(perm + [n + p for p in perm])
    d = space.total_dim
    return big.reshape(d, d)


def embed(op: HermitianOp, sites: Sequence[int], space: HilbertSpace) -> HermitianOp:
    """Tensor ``op`` with identity on every site of ``space`` not in ``sites``."""
    sites = _check_sites(sites, space)
    if op.space.site_dims != tuple(space.site_dims[s] for s in sites):
        raise SpaceMismatchError(
            f"operator sites {list(op.space.site_dims)} do not match "
            f"target sites {[space.site_dims[s] for s in sites]}"
        )
    return HermitianOp(space, embed_matrix(op.matrix, sites, space))


def partial_trace(state: QuantumState, keep: Sequence[int]) -> QuantumState:
    """Reduced density matrix on ``keep`` (in the order given)."""
    space = state.space
    keep = _check_sites(keep, space)
    dims = space.site_dims
    rest = [s for s in range(len(dims)) if s not in keep]
    dk = math.prod(dims[s] for s in keep)
    dr = math.prod(dims[s] for s in rest)
    order = list(keep) + rest
    n = len(dims)
    if state.data.ndim == 1:
        psi = state.data.reshape(dims).transpose(order).reshape(dk, dr)
        rho = psi @ psi.conj().T
    else:
        r = state.data.reshape(list(dims) + list(dims))
        r = r.transpose(order + [n + s for s in order]).reshape(dk, dr, dk, dr)
        rho = np.einsum("ajbj->ab", r)
    return QuantumState(HilbertSpace([dims[s] for s in keep]), rho)


def frobenius(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def pauli(name: str) -> np.ndarray:
    return _PAULI[name].copy()


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

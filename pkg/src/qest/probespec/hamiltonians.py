"""Coupling Hamiltonians on N identical probe sites and the cat state."""
from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np

from ..opalg import (
    HermitianOp,
    HilbertSpace,
    QuantumState,
    embed_matrix,
    extremal_eigenpairs,
    pauli,
)

SYMMETRY_TOL = 1e-10


def _site_dim(h_local: HermitianOp) -> int:
    if h_local.space.n_sites != 1:
        raise ValueError(f"expected a single-site operator, got {h_local.space.n_sites} sites")
    return h_local.space.site_dims[0]


def permutation_matrix(site_dims, perm) -> np.ndarray:
    """Unitary sending site ``j`` of the input to position ``perm[j]``."""
    n = len(site_dims)
    d = math.prod(site_dims)
    idx = np.arange(d).reshape(site_dims)
    inv = [0] * n
    for j, p in enumerate(perm):
        inv[p] = j
    moved = idx.transpose(inv).reshape(-1)
    P = np.zeros((d, d))
    P[np.arange(d), moved] = 1.0
    return P


def symmetry_defect(h_k: HermitianOp) -> float:
    """Largest change of ``h_k`` under an adjacent site transposition."""
    dims = h_k.space.site_dims
    k = len(dims)
    worst = 0.0
    for j in range(k - 1):
        perm = list(range(k))
        perm[j], perm[j + 1] = perm[j + 1], perm[j]
        P = permutation_matrix(dims, perm)
        worst = max(worst, float(np.max(np.abs(P @ h_k.matrix @ P.T - h_k.matrix))))
    return worst


def _sum_over_subsets(term: np.ndarray, d: int, N: int, k: int) -> HermitianOp:
    space = HilbertSpace([d] * N)
    total = np.zeros((space.total_dim,) * 2, dtype=complex)
    for subset in itertools.combinations(range(N), k):
        total += embed_matrix(term, subset, space)
    return HermitianOp(space, total)


def build_h0_separable(h_local: HermitianOp, N: int) -> HermitianOp:
    """``sum_j h_j`` over N identical sites."""
    d = _site_dim(h_local)
    if N < 1:
        raise ValueError("N must be >= 1")
    return _sum_over_subsets(h_local.matrix, d, N, 1)


def build_h0_kbody(h_k: HermitianOp, N: int, k: int) -> HermitianOp:
    """Sum of an exchange-symmetric k-site coupling over all C(N, k) subsets."""
    dims = h_k.space.site_dims
    if len(dims) != k:
        raise ValueError(f"coupling acts on {len(dims)} sites, expected k={k}")
    if len(set(dims)) != 1:
        raise ValueError("k-body coupling must act on identical sites")
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    defect = symmetry_defect(h_k)
    if defect > SYMMETRY_TOL:
        raise ValueError(f"k-body coupling is not symmetric under site exchange (defect {defect:.3e})")
    return _sum_over_subsets(h_k.matrix, dims[0], N, k)


def kron_power(m: np.ndarray, k: int) -> np.ndarray:
    return reduce(np.kron, [m] * k)


def product_coupling(h_local: HermitianOp, k: int) -> HermitianOp:
    """``h_{j1} ... h_{jk}`` on k sites."""
    d = _site_dim(h_local)
    return HermitianOp(HilbertSpace([d] * k), kron_power(h_local.matrix, k))


def build_h0_product(h_local: HermitianOp, N: int, k: int) -> HermitianOp:
    d = _site_dim(h_local)
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    return _sum_over_subsets(kron_power(h_local.matrix, k), d, N, k)


def build_rb_hamiltonian(N: int) -> HermitianOp:
    """``(Sigma_+ + Sigma_-)/2`` with ``Sigma_pm = prod_j (X_j +- i Y_j)``."""
    if N < 1:
        raise ValueError("N must be >= 1")
    space = HilbertSpace.qubits(N)
    plus = kron_power(pauli("X") + 1j * pauli("Y"), N)
    minus = kron_power(pauli("X") - 1j * pauli("Y"), N)
    return HermitianOp(space, 0.5 * (plus + minus))


def rb_pauli_terms(N: int) -> list[tuple[complex, str]]:
    """Expansion of the Roy-Braunstein coupling into Pauli strings.

    Strings with an odd number of Y factors cancel between the two products;
    the survivors carry coefficient ``i^{#Y}``, which is real (+-1).
    """
    terms = []
    for letters in itertools.product("XY", repeat=N):
        ny = letters.count("Y")
        if ny % 2:
            continue
        terms.append(((1j) ** ny, "".join(letters)))
    return terms


def pauli_string_matrix(s: str) -> np.ndarray:
    return reduce(np.kron, [pauli(c) for c in s])


def _symplectic(strings: list[str]) -> tuple[np.ndarray, np.ndarray]:
    x = np.array([[c in "XY" for c in s] for s in strings], dtype=np.int64)
    z = np.array([[c in "ZY" for c in s] for s in strings], dtype=np.int64)
    return x, z


def pauli_commutation_table(strings: list[str]) -> np.ndarray:
    """Boolean matrix: ``True`` where two Pauli strings commute."""
    x, z = _symplectic(strings)
    anti = (x @ z.T + z @ x.T) % 2
    return anti == 0


def cat_state(h_local: HermitianOp, N: int) -> QuantumState:
    """``(|M...M> + |m...m>)/sqrt(2)`` with real positive branch amplitudes."""
    d = _site_dim(h_local)
    _, v_top, _, v_bot = extremal_eigenpairs(h_local)
    psi = (kron_power(v_top, N) + kron_power(v_bot, N)) / math.sqrt(2)
    return QuantumState(HilbertSpace([d] * N), psi)


def product_state(site_vector, N: int) -> QuantumState:
    v = np.asarray(site_vector, dtype=complex)
    v = v / np.linalg.norm(v)
    return QuantumState(HilbertSpace([len(v)] * N), kron_power(v, N))

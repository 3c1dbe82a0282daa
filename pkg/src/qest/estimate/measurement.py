"""Projective measurements and Born-rule sampling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import SpaceMismatchError
from ..opalg import HilbertSpace, QuantumState

PROJECTOR_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementSpec:
    """Complete family of orthogonal projectors on ``space``."""

    space: HilbertSpace
    projectors: tuple[np.ndarray, ...]
    labels: tuple

    def __init__(self, space: HilbertSpace, projectors: Sequence[np.ndarray], labels: Sequence | None = None):
        projs = []
        d = space.total_dim
        for P in projectors:
            P = np.array(P, dtype=complex)
            if P.shape != (d, d):
                raise SpaceMismatchError(f"projector of shape {P.shape} on dimension {d}")
            P.setflags(write=False)
            projs.append(P)
        if labels is None:
            labels = tuple(range(len(projs)))
        if len(labels) != len(projs):
            raise ValueError("one label per projector required")
        for a, Pa in enumerate(projs):
            for b, Pb in enumerate(projs):
                target = Pa if a == b else 0
                if np.max(np.abs(Pa @ Pb - target)) > PROJECTOR_TOL:
                    raise ValueError(f"projectors {labels[a]!r} and {labels[b]!r} are not orthogonal projectors")
        if np.max(np.abs(sum(projs) - np.eye(d))) > PROJECTOR_TOL:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "projectors", tuple(projs))
        object.__setattr__(self, "labels", tuple(labels))

    @classmethod
    def from_basis(cls, space: HilbertSpace, basis: np.ndarray, labels=None) -> "MeasurementSpec":
        """Rank-one projectors onto the orthonormal columns of ``basis``."""
        basis = np.asarray(basis, dtype=complex)
        return cls(space, [np.outer(basis[:, j], basis[:, j].conj()) for j in range(basis.shape[1])], labels)

    def __len__(self):
        return len(self.projectors)


def born_probabilities(rho: QuantumState, m: MeasurementSpec) -> np.ndarray:
    if rho.space != m.space:
        raise SpaceMismatchError("state and measurement live on different spaces")
    if rho.is_pure_vector:
        psi = rho.data
        probs = np.array([np.real(np.vdot(psi, P @ psi)) for P in m.projectors])
    else:
        probs = np.array([np.real(np.einsum("ij,ji->", P, rho.data)) for P in m.projectors])
    return _checked(probs)


def _checked(probs: np.ndarray) -> np.ndarray:
    if abs(probs.sum() - 1) > 1e-8 or probs.min() < -1e-8:
        raise ValueError(f"outcome probabilities are invalid (sum {probs.sum():.12f})")
    return np.clip(probs, 0.0, None)


def sample_indices(probs: np.ndarray, rng: np.random.Generator, size: int | None = None):
    """Inverse-CDF sampling of outcome indices."""
    probs = _checked(np.asarray(probs, dtype=float))
    cdf = np.cumsum(probs)
    u = rng.random(size)
    return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), len(probs) - 1)


def born_sample(rho: QuantumState, m: MeasurementSpec, rng: np.random.Generator, size: int | None = None):
    """Outcome label(s) drawn with probability ``tr(P_a rho)``."""
    idx = sample_indices(born_probabilities(rho, m), rng, size)
    if size is None:
        return m.labels[int(idx)]
    return [m.labels[int(i)] for i in idx]


def local_basis_probabilities(state: QuantumState, local_basis: np.ndarray) -> np.ndarray:
    """Joint outcome probabilities for measuring every site in ``local_basis``.

    ``local_basis`` has the measurement vectors as columns and must match the
    dimension of every site.  Outcomes are indexed like computational basis
    strings.
    """
    dims = state.space.site_dims
    W = np.asarray(local_basis, dtype=complex)
    if any(d != W.shape[0] for d in dims):
        raise SpaceMismatchError("local basis does not match the site dimensions")
    Wd = W.conj().T
    if state.is_pure_vector:
        psi = state.data.reshape(dims)
        for j in range(len(dims)):
            psi = np.moveaxis(np.tensordot(Wd, psi, axes=([1], [j])), 0, j)
        probs = np.abs(psi.reshape(-1)) ** 2
    else:
        n = len(dims)
        r = state.data.reshape(list(dims) * 2)
        for j in range(n):
            r = np.moveaxis(np.tensordot(Wd, r, axes=([1], [j])), 0, j)
            r = np.moveaxis(np.tensordot(r, W, axes=([n + j], [0])), -1, n + j)
        probs = np.real(np.diagonal(r.reshape(state.space.total_dim, -1)))
    return _checked(probs)

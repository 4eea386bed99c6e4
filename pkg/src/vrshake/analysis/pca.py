"""Column standardization and principal-component projection.

Conventions fixed here so serialized models are reproducible:
  - z-scores use the sample standard deviation (ddof=1)
  - columns with stddev below STD_FLOOR are excluded before PCA
  - covariance eigenvectors are sorted by descending eigenvalue
  - each component's sign is chosen so its largest-magnitude entry
    is positive (first such entry wins on exact ties)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import InvalidInputError

STD_FLOOR = 1e-12


class DegenerateRankError(ValueError):
    """Input rank too small for the requested number of components."""

    def __init__(self, rank: int, requested: int):
        super().__init__(f"data rank {rank} is below the {requested} requested components")
        self.rank = rank
        self.requested = requested


@dataclass(frozen=True)
class Standardization:
    mean: tuple[float, ...]
    std: tuple[float, ...]          # sample stddev, ddof=1
    retained: tuple[bool, ...]      # False where std < STD_FLOOR

    @property
    def n_retained(self) -> int:
        return sum(self.retained)

    def apply(self, x) -> np.ndarray:
        """Standardize one raw feature vector, dropping excluded columns."""
        x = np.asarray(x, dtype=float)
        if x.shape != (len(self.mean),):
            raise InvalidInputError(f"expected {len(self.mean)} features, got {x.shape}")
        mean = np.array(self.mean)
        std = np.array(self.std)
        keep = np.array(self.retained)
        return (x[keep] - mean[keep]) / std[keep]


def standardize(X) -> tuple[np.ndarray, Standardization]:
    """Z-score each column; returns (Z over retained columns, parameters)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InvalidInputError("standardize needs a 2-D array with at least 2 rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0, ddof=1)
    retained = std >= STD_FLOOR
    Z = (X[:, retained] - mean[retained]) / std[retained]
    return Z, Standardization(tuple(mean), tuple(std), tuple(bool(r) for r in retained))


@dataclass(frozen=True)
class PcaModel:
    components: tuple[tuple[float, ...], ...]   # n_components rows, each a unit vector
    explained_variance: tuple[float, ...]       # matching eigenvalues, descending

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def n_inputs(self) -> int:
        return len(self.components[0])

    def project(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        W = np.array(self.components)
        if z.shape[-1] != W.shape[1]:
            raise InvalidInputError(f"expected {W.shape[1]} inputs, got {z.shape[-1]}")
        return z @ W.T


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-|entry| coordinate is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        pivot = int(np.argmax(np.abs(out[:, j])))
        if out[pivot, j] < 0:
            out[:, j] = -out[:, j]
    return out


def pca_fit(Z, n_components: int = 3) -> PcaModel:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise InvalidInputError("pca_fit needs a 2-D array")
    n, d = Z.shape
    if n < 2:
        raise InvalidInputError("pca_fit needs at least 2 rows")
    if not 1 <= n_components <= d:
        raise InvalidInputError(f"n_components must be in [1, {d}]")
    cov = Z.T @ Z / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    tol = max(eigvals[0], 0.0) * 1e-10
    rank = int(np.sum(eigvals > tol))
    if rank < n_components:
        raise DegenerateRankError(rank, n_components)
    eigvecs = _fix_signs(eigvecs[:, :n_components])
    return PcaModel(
        components=tuple(tuple(float(v) for v in eigvecs[:, j]) for j in range(n_components)),
        explained_variance=tuple(float(v) for v in eigvals[:n_components]),
    )

"""Kernel evaluation and Gram-matrix construction."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

VALID_FAMILIES = ("gaussian", "polynomial", "linear")


@dataclass(frozen=True)
class KernelSpec:
    """A positive semi-definite kernel with its hyperparameters.

    family: one of "gaussian", "polynomial", "linear".
    bandwidth: sigma in exp(-||x-z||^2 / (2 sigma^2)), gaussian only.
    degree, offset: (x.z + offset)^degree, polynomial only.
    """

    family: str
    bandwidth: float | None = None
    degree: int | None = None
    offset: float | None = None

    def __post_init__(self):
        if self.family not in VALID_FAMILIES:
            raise ValueError(f"unknown kernel family: {self.family!r}")
        if self.family == "gaussian":
            if self.bandwidth is None or self.bandwidth <= 0:
                raise ValueError("gaussian kernel requires bandwidth > 0")
        if self.family == "polynomial":
            if self.degree is None or self.degree < 1:
                raise ValueError("polynomial kernel requires degree >= 1")
            if self.offset is None:
                object.__setattr__(self, "offset", 0.0)

    def to_dict(self) -> dict:
        d = {"family": self.family}
        if self.family == "gaussian":
            d["bandwidth"] = float(self.bandwidth)
        elif self.family == "polynomial":
            d["degree"] = int(self.degree)
            d["offset"] = float(self.offset)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(
            family=d["family"],
            bandwidth=d.get("bandwidth"),
            degree=d.get("degree"),
            offset=d.get("offset"),
        )


def _as_2d(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"points must be 1-d or 2-d, got shape {X.shape}")
    return X


def eval_kernel(spec: KernelSpec, x, z) -> float:
    """Evaluate K(x, z) for a single pair of points."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.shape != z.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {z.shape}")
    if spec.family == "gaussian":
        sq = float(np.sum((x - z) ** 2))
        return float(np.exp(-sq / (2.0 * spec.bandwidth**2)))
    if spec.family == "linear":
        return float(x @ z)
    return float((x @ z + spec.offset) ** spec.degree)


def gram(spec: KernelSpec, X, Z) -> np.ndarray:
    """Gram matrix with entries K(X[i], Z[j]).

    Rows index X, columns index Z. Entries are never jittered here;
    ridge stabilization is the solvers' job.
    """
    X = _as_2d(X)
    Z = _as_2d(Z)
    if X.shape[0] == 0 or Z.shape[0] == 0:
        raise ValueError("empty point set")
    if X.shape[1] != Z.shape[1]:
        raise ValueError(
            f"dimension mismatch: {X.shape[1]} vs {Z.shape[1]}"
        )
    if spec.family == "gaussian":
        sq = cdist(X, Z, metric="sqeuclidean")
        return np.exp(-sq / (2.0 * spec.bandwidth**2))
    if spec.family == "linear":
        return X @ Z.T
    return (X @ Z.T + spec.offset) ** spec.degree


def median_heuristic(X, fallback: float = 1.0) -> float:
    """Median pairwise euclidean distance, the default gaussian bandwidth.

    Falls back when all points coincide (median distance 0).
    """
    X = _as_2d(X)
    if X.shape[0] < 2:
        return fallback
    d = cdist(X, X)
    vals = d[np.triu_indices_from(d, k=1)]
    med = float(np.median(vals))
    if med <= 1e-12:
        return fallback
    return med

"""Sparse Laplacian construction for the two partitioning relaxations.

The unnormalized Laplacian L = D - A relaxes the RatioCut objective and
the symmetrically normalized one D^{-1/2} L D^{-1/2} relaxes Ncut.  Both
are materialized as explicit csr matrices so the eigensolver sees a
single uniform interface.
"""
from __future__ import annotations

from enum import Enum

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, ZeroDegreeVertex
from .graphs import PlantedGraph

__all__ = ["LaplacianKind", "build_laplacian", "matvec", "zero_mode"]


class LaplacianKind(Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"


def build_laplacian(graph: PlantedGraph, kind: LaplacianKind) -> sp.csr_matrix:
    """Laplacian of `graph` as a csr matrix with sorted indices."""
    adj = graph.adjacency
    deg = graph.degrees.astype(np.float64)
    if kind is LaplacianKind.UNNORMALIZED:
        lap = sp.diags(deg) - adj
    else:
        if deg.min() < 1:
            raise ZeroDegreeVertex("normalized Laplacian needs min degree >= 1")
        inv_sqrt = 1.0 / np.sqrt(deg)
        lap = sp.eye(graph.n) - sp.diags(inv_sqrt) @ adj @ sp.diags(inv_sqrt)
    lap = sp.csr_matrix(lap)
    lap.sort_indices()
    return lap


def zero_mode(graph: PlantedGraph, kind: LaplacianKind) -> np.ndarray:
    """The known null vector: all-ones for L, D^{1/2} 1 for the normalized one."""
    if kind is LaplacianKind.UNNORMALIZED:
        return np.ones(graph.n)
    return np.sqrt(graph.degrees.astype(np.float64))


def matvec(m: sp.csr_matrix, x: np.ndarray) -> np.ndarray:
    """y = M x; csr row-major accumulation keeps this deterministic."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (m.shape[0],):
        raise DimensionMismatch(f"vector of length {x.shape} vs matrix {m.shape}")
    return m @ x

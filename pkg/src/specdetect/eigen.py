"""Second-smallest eigenpair with zero-mode deflation, plus diagnostics.

The solver targets the bottom of the Laplacian spectrum with Lanczos on
the reflected operator sigma*I - M, where sigma is the upper Gershgorin
bound, so the smallest eigenvalues of M become the largest of a cheap
matvec-only operator.  (Shift-invert is a poor fit here: sparse LU of an
expander-like graph Laplacian fills in badly and the factorization alone
dominates the run time.)  The known zero mode is projected out of the
returned vector; the second-smallest eigenpair is what the sign
partition is read from.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    BadZeroMode,
    LengthMismatch,
    NoConvergence,
    TooLarge,
    ZeroVector,
)

__all__ = [
    "EigenResult",
    "second_smallest_eigenpair",
    "dense_spectrum_oracle",
    "ipr",
    "overlap",
]

_DENSE_LIMIT = 2000
_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class EigenResult:
    lambda2: float
    vector: np.ndarray
    iterations: int
    residual: float


class _CountedReflection(spla.LinearOperator):
    """sigma*I - M with the known zero mode deflated, counting matvecs.

    The rank-one term moves the zero mode from the top of the reflected
    spectrum down to zero, so the dominant eigenvector is the smallest
    eigenpair of M restricted to the complement of z.  Without the
    deflation, a second exact zero mode (disconnected component) is
    degenerate with the known one and plain Lanczos can miss it.
    """

    def __init__(self, m: sp.csr_matrix, sigma: float, z: np.ndarray):
        n = m.shape[0]
        super().__init__(dtype=np.float64, shape=(n, n))
        self._m = m
        self._sigma = sigma
        self._z = z
        self.count = 0

    def _matvec(self, x):
        self.count += 1
        x = np.asarray(x).ravel()
        return self._sigma * x - self._m @ x - self._sigma * (self._z @ x) * self._z


def second_smallest_eigenpair(
    m: sp.csr_matrix,
    zero_mode: np.ndarray,
    seed: int,
    max_iterations: int | None = None,
    tol: float = _RESIDUAL_TOL,
) -> EigenResult:
    """Smallest eigenpair of `m` restricted to the complement of `zero_mode`.

    Deterministic for a fixed seed: the Lanczos start vector is drawn
    from the seed and the reflected operator is applied exactly.
    """
    n = m.shape[0]
    z = np.asarray(zero_mode, dtype=np.float64)
    if z.shape != (n,):
        raise LengthMismatch("zero mode length does not match the matrix")
    zn = np.linalg.norm(z)
    if zn == 0 or np.linalg.norm(m @ z) >= _RESIDUAL_TOL * zn:
        raise BadZeroMode("supplied vector is not a null vector of the matrix")
    z = z / zn

    if max_iterations is None:
        max_iterations = 10 * n
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(n)
    if n < 10:
        # ARPACK needs k < n and is pointless at this size anyway
        vals, vecs = np.linalg.eigh(np.asarray(m.todense()))
        iterations = 0
        vec = vecs[:, np.argsort(vals)[1]]
    else:
        sigma = float(np.abs(m).sum(axis=1).max())
        op = _CountedReflection(m, sigma, z)
        try:
            vals, vecs = spla.eigsh(
                op,
                k=1,
                which="LA",
                v0=v0,
                maxiter=max_iterations,
                tol=1e-11,
            )
        except spla.ArpackNoConvergence as exc:
            raise NoConvergence(str(exc)) from exc
        iterations = op.count
        vec = vecs[:, 0]
    vec = vec - (vec @ z) * z
    nrm = np.linalg.norm(vec)
    if nrm < 1e-8:
        raise NoConvergence("second eigenvector collapsed onto the zero mode")
    vec = vec / nrm
    lam = float(vec @ (m @ vec))
    residual = float(np.linalg.norm(m @ vec - lam * vec))
    if residual > tol:
        raise NoConvergence(f"residual {residual:.2e} above tolerance {tol:.0e}")
    # canonical sign: first nonzero-ish component positive
    pivot = np.argmax(np.abs(vec))
    if vec[pivot] < 0:
        vec = -vec
    return EigenResult(
        lambda2=lam, vector=vec, iterations=iterations, residual=residual
    )


def dense_spectrum_oracle(m: sp.spmatrix) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition, ascending; test oracle for small systems."""
    n = m.shape[0]
    if n > _DENSE_LIMIT:
        raise TooLarge(f"dense oracle limited to n <= {_DENSE_LIMIT}, got {n}")
    vals, vecs = np.linalg.eigh(np.asarray(m.todense()))
    return vals, vecs


def ipr(x: np.ndarray) -> float:
    """Inverse participation ratio: 1/n for flat vectors, 1 for one-hot."""
    x = np.asarray(x, dtype=np.float64)
    s2 = float(np.sum(x * x))
    if s2 == 0:
        raise ZeroVector("IPR undefined for the zero vector")
    return float(np.sum(x**4)) / (s2 * s2)


def overlap(x: np.ndarray, labels: np.ndarray) -> float:
    """Fraction correctly classified by the sign partition of x.

    Ties (x_i == 0) go to module 1; the result is maximized over the two
    sign-to-module assignments, so 0.5 is chance level for equal modules.
    """
    x = np.asarray(x, dtype=np.float64)
    labels = np.asarray(labels)
    if x.shape != labels.shape:
        raise LengthMismatch("vector and labels have different lengths")
    guess = np.where(x >= 0, 1, 2)
    frac = float(np.mean(guess == labels))
    return max(frac, 1.0 - frac)

"""Hermitian matrices and their spectral statistics.

Everything downstream consumes the empirical spectral CDF
F(x) = #{eigenvalues <= x} / n, so this module centers on exact operations on
sorted eigenvalue lists: evaluation, sup-distance between two CDFs, and the
rank of a difference (which controls how far two CDFs can be apart:
sup |F_M - F_N| <= rank(M - N) / n).
"""

from __future__ import annotations

import numpy as np

from .groups import UnitaryMatrix

HERMITICITY_TOL = 1e-12


class HermitianMatrix:
    """Square complex matrix stored in hermitianized form (M + M*) / 2.

    Construction rejects inputs whose hermiticity defect max|M - M*| exceeds
    ``tol * max(1, max|M|)``; roundoff-level asymmetry from products such as
    U M U* is silently symmetrized away.
    """

    __slots__ = ("entries",)

    def __init__(self, entries, *, tol: float = HERMITICITY_TOL):
        arr = np.array(entries, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError("entries must form a square matrix")
        defect = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
        scale = max(1.0, float(np.max(np.abs(arr))) if arr.size else 0.0)
        if defect > tol * scale:
            raise ValueError(f"matrix is not hermitian: defect {defect:.3e} exceeds tolerance")
        self.entries = (arr + arr.conj().T) / 2.0

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])


def _as_hermitian(m) -> HermitianMatrix:
    return m if isinstance(m, HermitianMatrix) else HermitianMatrix(m)


class SpectralCDF:
    """Empirical spectral distribution of a finite eigenvalue list.

    Right-continuous step function F(x) = #{lambda <= x} / n over the sorted
    eigenvalues.
    """

    __slots__ = ("eigenvalues",)

    def __init__(self, eigenvalues):
        arr = np.sort(np.asarray(eigenvalues, dtype=float).reshape(-1))
        if arr.size == 0:
            raise ValueError("eigenvalue list must be nonempty")
        self.eigenvalues = arr

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    def value(self, x):
        """F(x); accepts a scalar or an array of evaluation points."""
        counts = np.searchsorted(self.eigenvalues, x, side="right")
        if np.isscalar(x):
            return float(counts) / self.n
        return np.asarray(counts, dtype=float) / self.n


def eigenvalues(m) -> SpectralCDF:
    """Sorted eigenvalues of a hermitian matrix as a SpectralCDF."""
    return SpectralCDF(np.linalg.eigvalsh(_as_hermitian(m).entries))


def eigensystem(m) -> tuple[SpectralCDF, np.ndarray]:
    """Eigenvalues plus the unitary eigenvector matrix (columns)."""
    h = _as_hermitian(m)
    vals, vecs = np.linalg.eigh(h.entries)
    return SpectralCDF(vals), vecs


def ecdf_value(cdf: SpectralCDF, x: float) -> float:
    return cdf.value(float(x))


def sup_cdf_distance(cdf1: SpectralCDF, cdf2: SpectralCDF) -> float:
    """Exact sup-norm distance between two empirical spectral CDFs.

    Both step functions are constant between jump points, so the supremum is
    attained at one of the merged eigenvalues; integer jump counts keep the
    scan exact up to a single final division.
    """
    if cdf1.n != cdf2.n:
        raise ValueError("CDFs must have the same number of eigenvalues")
    grid = np.concatenate([cdf1.eigenvalues, cdf2.eigenvalues])
    c1 = np.searchsorted(cdf1.eigenvalues, grid, side="right")
    c2 = np.searchsorted(cdf2.eigenvalues, grid, side="right")
    return float(np.max(np.abs(c1 - c2))) / cdf1.n


def rank_distance(m, n, tol: float = 1e-8) -> int:
    """Numerical rank of M - N: singular values above tol * max(sigma_max, 1)."""
    a = _as_hermitian(m).entries
    b = _as_hermitian(n).entries
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    sing = np.linalg.svd(a - b, compute_uv=False)
    threshold = tol * max(float(sing[0]) if sing.size else 0.0, 1.0)
    return int(np.sum(sing > threshold))


def conjugate(u, m) -> HermitianMatrix:
    """U M U*; the spectrum is preserved."""
    umat = u.entries if isinstance(u, UnitaryMatrix) else np.asarray(u, dtype=np.complex128)
    h = _as_hermitian(m)
    if umat.shape != h.entries.shape:
        raise ValueError("dimension mismatch")
    return HermitianMatrix(umat @ h.entries @ umat.conj().T)

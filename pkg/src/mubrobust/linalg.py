"""Dense complex Hermitian linear algebra.

The eigensolver for individual operators is a cyclic complex Jacobi method.
Hot loops that diagonalise millions of tiny matrices (tuple enumeration,
interior-point iterations) go through the batched LAPACK helpers at the end
of this module instead.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, NumericalError

HERMITICITY_TOL = 1e-10
CLUSTER_TOL = 1e-8
PSD_TOL = 1e-9
JACOBI_MAX_SWEEPS = 100
JACOBI_REL_TOL = 1e-13


class HermitianOperator:
    """A d x d complex Hermitian matrix, symmetrised on construction.

    Parameters
    ----------
    matrix : array_like
        Square complex matrix with ``max|M - M^dagger| <= hermiticity_tol``.
    hermiticity_tol : float
        Construction fails above this deviation.
    """

    __slots__ = ("matrix", "_eig")

    def __init__(self, matrix, hermiticity_tol: float = HERMITICITY_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix has non-finite entries")
        dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
        if dev > hermiticity_tol:
            raise InvalidInputError(f"matrix is not Hermitian (deviation {dev:.3e})")
        self.matrix = (m + m.conj().T) / 2
        self.matrix.setflags(write=False)
        self._eig = None

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigh(self) -> "EigenSystem":
        if self._eig is None:
            self._eig = jacobi_eigh(self.matrix)
        return self._eig

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix + _as_array(other))

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.matrix - _as_array(other))

    def __mul__(self, scalar: float) -> "HermitianOperator":
        return HermitianOperator(self.matrix * float(scalar))

    __rmul__ = __mul__

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim})"


def _as_array(m) -> np.ndarray:
    return m.matrix if isinstance(m, HermitianOperator) else np.asarray(m, dtype=complex)


@dataclass(frozen=True)
class EigenSystem:
    eigenvalues: np.ndarray  # ascending, real
    eigenvectors: np.ndarray  # columns
    sweeps: int = 0

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _off_norm(a: np.ndarray) -> float:
    off = a[~np.eye(a.shape[0], dtype=bool)]
    return float(np.sqrt(np.sum(off.real**2 + off.imag**2)))


def jacobi_eigh(matrix, max_sweeps: int = JACOBI_MAX_SWEEPS, rel_tol: float = JACOBI_REL_TOL) -> EigenSystem:
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Each rotation zeroes one off-diagonal pair ``(p, q)`` with the unitary
    ``[[c, s e^{i phi}], [-s e^{-i phi}, c]]`` where ``phi = arg a_pq``.
    Sweeps stop once the off-diagonal Frobenius norm drops below
    ``rel_tol * ||M||_F``.  Eigenvalues are returned ascending; ties keep
    the column order produced by the sweep, which is deterministic.
    """
    a = np.array(_as_array(matrix), dtype=complex)
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = np.linalg.norm(a)
    threshold = rel_tol * scale
    sweeps = 0
    while _off_norm(a) > threshold:
        if sweeps >= max_sweeps:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps")
        sweeps += 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300 or mag < 1e-18 * scale:
                    continue
                phase = apq / mag
                tau = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                # A <- J^dagger A J, V <- V J
                cp, cq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * cp - s * phase.conjugate() * cq
                a[:, q] = s * phase * cp + c * cq
                rp, rq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * rp - s * phase * rq
                a[q, :] = s * phase.conjugate() * rp + c * rq
                a[p, q] = a[q, p] = 0.0
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * phase.conjugate() * vq
                v[:, q] = s * phase * vp + c * vq
    w = np.diag(a).real.copy()
    order = np.argsort(w, kind="stable")
    return EigenSystem(w[order], v[:, order], sweeps)


def eigh(m, method: str = "jacobi") -> EigenSystem:
    """Full spectral decomposition; ``method="lapack"`` delegates to numpy."""
    if method == "jacobi":
        return HermitianOperator(_as_array(m)).eigh() if not isinstance(m, HermitianOperator) else m.eigh()
    if method == "lapack":
        w, v = np.linalg.eigh(_as_array(m))
        return EigenSystem(w, v)
    raise InvalidInputError(f"unknown eigensolver {method!r}")


def op_norm(m) -> float:
    """Operator norm (largest eigenvalue magnitude) of a Hermitian matrix."""
    w = eigh(m).eigenvalues
    return float(max(abs(w[0]), abs(w[-1])))


def max_eigenspace_projector(m, cluster_tol: float = CLUSTER_TOL) -> HermitianOperator:
    """Orthogonal projector onto eigenvectors with eigenvalue >= lambda_max - cluster_tol."""
    es = eigh(m)
    keep = es.eigenvalues >= es.eigenvalues[-1] - cluster_tol
    vecs = es.eigenvectors[:, keep]
    return HermitianOperator(vecs @ vecs.conj().T)


def is_psd(m, tol: float = PSD_TOL) -> bool:
    return bool(eigh(m).eigenvalues[0] >= -tol)


def root_of_unity(p: int) -> complex:
    if p < 2:
        raise InvalidInputError("root_of_unity needs p >= 2")
    # exact where the trigonometry is exact
    if p == 2:
        return complex(-1.0, 0.0)
    if p == 4:
        return 1j
    return cmath.exp(2j * math.pi / p)


def _polyval_derivs(coeffs: np.ndarray, x, order: int):
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(order):
        c = np.polyder(c)
    return np.polyval(c, x), np.polyval(np.polyder(c), x) if len(c) > 1 else 0.0


def real_poly_roots(coeffs, imag_tol: float = 1e-7) -> np.ndarray:
    """Distinct real roots of a real polynomial (coefficients highest degree first).

    Roots come from the companion-matrix eigenvalues (``numpy.roots``).
    Nearby eigenvalues are merged into clusters; a cluster of size ``m`` is
    refined by Newton steps on the ``(m-1)``-th derivative, where a root of
    multiplicity ``m`` becomes simple.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=float), "f")
    if c.size == 0:
        raise InvalidInputError("the zero polynomial has no well-defined roots")
    if c.size == 1:
        return np.empty(0)
    c = c / c[0]
    raw = np.roots(c)
    scale = max(1.0, float(np.max(np.abs(raw))))
    clusters: list[list[complex]] = []
    for z in sorted(raw, key=lambda z: (z.real, z.imag)):
        for cl in clusters:
            if abs(np.mean(cl) - z) < 1e-3 * scale:
                cl.append(z)
                break
        else:
            clusters.append([z])
    roots = []
    for cl in clusters:
        mult = len(cl)
        x = complex(np.mean(cl))
        if abs(x.imag) > max(imag_tol, 1e-3 * scale):
            continue
        x = x.real
        for _ in range(50):
            f, df = _polyval_derivs(c, x, mult - 1)
            if df == 0:
                break
            step = (f / df).real
            x -= step
            if abs(step) <= 1e-16 * max(1.0, abs(x)):
                break
        # reject clusters that were a complex-conjugate pair near the real axis
        resid = abs(np.polyval(c, x))
        if resid <= 1e-8 * np.sum(np.abs(c)) * max(1.0, abs(x)) ** (len(c) - 1):
            roots.append(x)
    return np.array(sorted(roots))


# -- batched helpers (LAPACK) ------------------------------------------------


def batched_eigvalsh(mats: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(mats)


def batched_max_eig(mats: np.ndarray) -> np.ndarray:
    return np.linalg.eigvalsh(mats)[..., -1]


def batched_top_projectors(mats: np.ndarray, cluster_tol: float = CLUSTER_TOL) -> np.ndarray:
    """Projector onto the top eigenspace of each matrix in a stack."""
    w, v = np.linalg.eigh(mats)
    keep = (w >= w[..., -1:] - cluster_tol).astype(float)
    return np.einsum("nik,nk,njk->nij", v, keep, v.conj())


def dagger(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m, -1, -2).conj()

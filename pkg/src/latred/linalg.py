"""Complex dense linear algebra for the reduction pipeline.

QR factorisation is built from 2x2 complex Givens rotations so the whole
toolkit shares one rotation kernel; the diagonal of R is normalised to be
real and non-negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonFiniteInputError, RankDeficiencyError, SingularPivotError

_PIVOT_TOL = 1e-12


def as_complex_matrix(a) -> np.ndarray:
    """Validate and return ``a`` as a 2-D complex128 array with finite entries."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise NonFiniteInputError("matrix contains NaN or Inf entries")
    return m


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class QrFactors:
    """QR factorisation with unitary ``q`` and upper-triangular ``r``.

    The diagonal of ``r`` is real and non-negative.
    """

    q: np.ndarray
    r: np.ndarray


def givens_coefficients(f: complex, g: complex) -> tuple[complex, complex, float]:
    """Rotation coefficients sending the pair ``(f, g)`` to ``(rho, 0)``.

    Returns ``(alpha, beta, rho)`` with ``alpha = f/rho``, ``beta = g/rho`` and
    ``rho = sqrt(|f|^2 + |g|^2)``.  The rotation matrix is
    ``[[conj(alpha), conj(beta)], [-beta, alpha]]``; it is unitary and leaves a
    real non-negative value in the first slot.  A zero pair yields the
    identity rotation.
    """
    rho = math.hypot(abs(f), abs(g))
    if rho == 0.0:
        return 1.0 + 0.0j, 0.0j, 0.0
    return f / rho, g / rho, rho


def qr_decompose(h) -> QrFactors:
    """Factor ``h = q @ r`` via complex Givens rotations.

    Requires ``h.rows >= h.cols``.  ``q`` is square unitary; ``r`` has the
    same shape as ``h``, is upper triangular, and has a real non-negative
    diagonal.
    """
    h = as_complex_matrix(h)
    m, n = h.shape
    if m < n:
        raise ValueError(f"need rows >= cols, got {m}x{n}")
    q = np.eye(m, dtype=np.complex128)
    r = h.copy()
    for j in range(n):
        for i in range(j + 1, m):
            f = r[j, j]
            g = r[i, j]
            if f == 0 and g == 0:
                continue
            alpha, beta, rho = givens_coefficients(f, g)
            ca = alpha.conjugate()
            cb = beta.conjugate()
            row_j = r[j, j:].copy()
            row_i = r[i, j:].copy()
            r[j, j:] = ca * row_j + cb * row_i
            r[i, j:] = -beta * row_j + alpha * row_i
            r[j, j] = rho
            r[i, j] = 0.0
            col_j = q[:, j].copy()
            col_i = q[:, i].copy()
            q[:, j] = alpha * col_j + beta * col_i
            q[:, i] = -cb * col_j + ca * col_i
    # Columns whose subdiagonal was already zero never went through a
    # rotation, so their diagonal phase still needs normalising.
    for j in range(n):
        d = r[j, j]
        if d.imag != 0.0 or d.real < 0.0:
            a = abs(d)
            if a == 0.0:
                continue
            u = d.conjugate() / a
            r[j, j:] *= u
            r[j, j] = a
            q[:, j] *= u.conjugate()
    return QrFactors(q=_freeze(q), r=_freeze(r))


def solve_upper_triangular(r, b) -> np.ndarray:
    """Back-substitution solve of ``r @ x = b`` for upper-triangular ``r``."""
    r = as_complex_matrix(r)
    n = r.shape[0]
    if r.shape[1] != n:
        raise ValueError("triangular solve needs a square matrix")
    if np.abs(np.tril(r, -1)).max(initial=0.0) > 1e-9 * max(np.abs(r).max(), 1.0):
        raise ValueError("matrix is not upper triangular")
    b = np.asarray(b, dtype=np.complex128)
    if b.shape != (n,):
        raise ValueError(f"right-hand side must have length {n}")
    if not np.isfinite(b).all():
        raise NonFiniteInputError("right-hand side contains NaN or Inf")
    diag = np.abs(np.diagonal(r))
    if diag.min() < _PIVOT_TOL:
        raise SingularPivotError(f"pivot magnitude {diag.min():.3e} below {_PIVOT_TOL}")
    x = np.zeros(n, dtype=np.complex128)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - r[i, i + 1:] @ x[i + 1:]) / r[i, i]
    return x


def orthogonality_defect(b) -> float:
    """Product of column norms over the basis volume; 1 iff orthogonal columns."""
    b = as_complex_matrix(b)
    norms = np.linalg.norm(b, axis=0)
    gram = b.conj().T @ b
    vol_sq = abs(np.linalg.det(gram))
    if not (vol_sq > 0.0) or not math.isfinite(vol_sq):
        raise RankDeficiencyError("basis volume underflowed; columns are dependent")
    return float(np.prod(norms) / math.sqrt(vol_sq))


def round_gaussian(c):
    """Round to the nearest Gaussian integer, ties away from zero per component.

    Accepts a scalar or an ndarray; returns the matching kind.
    """
    if isinstance(c, np.ndarray):
        return _round_half_away(c.real) + 1j * _round_half_away(c.imag)
    c = complex(c)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        raise NonFiniteInputError("cannot round a non-finite value")
    re = math.floor(c.real + 0.5) if c.real >= 0 else math.ceil(c.real - 0.5)
    im = math.floor(c.imag + 0.5) if c.imag >= 0 else math.ceil(c.imag - 0.5)
    return complex(re, im)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.where(x >= 0, np.floor(x + 0.5), np.ceil(x - 0.5))

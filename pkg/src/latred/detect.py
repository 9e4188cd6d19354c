"""Symbol mapping and MIMO detectors.

16-QAM with Gray labelling (two bits per axis: 00 -> -3, 01 -> -1,
11 -> +1, 10 -> +3), a plain zero-forcing detector working through the QR
factors, a reduced-basis zero-forcing detector that quantises on the
shifted integer lattice, and an exhaustive maximum-likelihood search.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import DimensionError, NonUnimodularError
from .linalg import QrFactors, round_gaussian, solve_upper_triangular
from .reduction import ReducedBasis

# Gray axis: bit pair (msb, lsb) -> level.  Index b0*2 + b1.
_LEVEL_BY_BITS = np.array([-3, -1, 3, 1], dtype=np.float64)
# level -> bit pair, indexed by (level + 3) // 2.
_BITS_BY_LEVEL = np.array([[0, 0], [0, 1], [1, 1], [1, 0]], dtype=np.uint8)

BITS_PER_SYMBOL = 4
SYMBOL_ENERGY = 10.0  # mean of |s|^2 over the 16 points


def constellation() -> np.ndarray:
    """The 16 points ordered by their 4-bit label value."""
    labels = np.arange(16)
    re = _LEVEL_BY_BITS[(labels >> 2) & 0b11]
    im = _LEVEL_BY_BITS[labels & 0b11]
    return re + 1j * im


def qam16_modulate(bits) -> np.ndarray:
    """Map a bit sequence (4 per symbol, real axis first) to symbols."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size % BITS_PER_SYMBOL != 0:
        raise ValueError(f"bit count must be a multiple of 4, got {bits.size}")
    if np.any(bits > 1):
        raise ValueError("bits must be 0 or 1")
    groups = bits.reshape(-1, BITS_PER_SYMBOL)
    re = _LEVEL_BY_BITS[groups[:, 0] * 2 + groups[:, 1]]
    im = _LEVEL_BY_BITS[groups[:, 2] * 2 + groups[:, 3]]
    return re + 1j * im


def qam16_demodulate(symbols) -> np.ndarray:
    """Inverse of :func:`qam16_modulate` for exact constellation points."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    re_idx = np.rint((symbols.real + 3) / 2).astype(np.int64)
    im_idx = np.rint((symbols.imag + 3) / 2).astype(np.int64)
    if (
        np.any(re_idx < 0)
        or np.any(re_idx > 3)
        or np.any(im_idx < 0)
        or np.any(im_idx > 3)
        or np.abs(symbols.real - (2 * re_idx - 3)).max(initial=0.0) > 1e-9
        or np.abs(symbols.imag - (2 * im_idx - 3)).max(initial=0.0) > 1e-9
    ):
        raise ValueError("symbols are not 16-QAM constellation points")
    out = np.empty((symbols.size, BITS_PER_SYMBOL), dtype=np.uint8)
    out[:, 0:2] = _BITS_BY_LEVEL[re_idx]
    out[:, 2:4] = _BITS_BY_LEVEL[im_idx]
    return out.ravel()


def _slice_axis(v: np.ndarray) -> np.ndarray:
    # Boundaries fall to the smaller level.
    return np.where(v <= -2, -3.0, np.where(v <= 0, -1.0, np.where(v <= 2, 1.0, 3.0)))


def qam16_slice(z):
    """Nearest constellation point; boundary ties take the smaller level."""
    if isinstance(z, np.ndarray):
        return _slice_axis(z.real) + 1j * _slice_axis(z.imag)
    z = complex(z)
    return complex(_slice_axis(np.float64(z.real)), _slice_axis(np.float64(z.imag)))


def zf_detect(qr: QrFactors, y) -> np.ndarray:
    """Zero-forcing detection through the QR factors, then hard slicing."""
    y = np.asarray(y, dtype=np.complex128)
    n = qr.r.shape[1]
    qh_y = qr.q.conj().T @ y
    x_soft = solve_upper_triangular(qr.r[:n, :n], qh_y[:n])
    return qam16_slice(x_soft)


# ---------------------------------------------------------------------------
# Exact Gaussian-integer arithmetic for the unimodular transform.

def _gi(z: complex) -> tuple[int, int]:
    re = int(round(z.real))
    im = int(round(z.imag))
    if abs(z.real - re) > 1e-6 or abs(z.imag - im) > 1e-6:
        raise NonUnimodularError(f"entry {z!r} is not a Gaussian integer")
    return re, im


def _gi_mul(a: tuple[int, int], b: tuple[int, int]) -> tuple[int, int]:
    return a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]


def _gi_det(m: list[list[tuple[int, int]]]) -> tuple[int, int]:
    n = len(m)
    if n == 1:
        return m[0][0]
    det = (0, 0)
    sign = 1
    for col in range(n):
        minor = [[row[c] for c in range(n) if c != col] for row in m[1:]]
        term = _gi_mul(m[0][col], _gi_det(minor))
        det = (det[0] + sign * term[0], det[1] + sign * term[1])
        sign = -sign
    return det


def gaussian_integer_inverse(t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Exact inverse of a unimodular Gaussian-integer matrix.

    Returns ``(t_int, t_inv)`` as complex arrays with exactly integral
    entries; raises :class:`NonUnimodularError` when the determinant is not
    a Gaussian unit or the entries are not integral.
    """
    n = t.shape[0]
    if t.shape != (n, n):
        raise ValueError("transform must be square")
    rows = [[_gi(complex(t[i, j])) for j in range(n)] for i in range(n)]
    det = _gi_det(rows)
    if det[0] * det[0] + det[1] * det[1] != 1:
        raise NonUnimodularError(f"determinant {det} is not a Gaussian unit")
    det_conj = (det[0], -det[1])
    inv = np.zeros((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != i]
                for r in range(n)
                if r != j
            ]
            cof = _gi_det(minor) if n > 1 else (1, 0)
            if (i + j) % 2:
                cof = (-cof[0], -cof[1])
            cell = _gi_mul(cof, det_conj)
            inv[i, j] = complex(cell[0], cell[1])
    t_int = np.array(
        [[complex(*rows[i][j]) for j in range(n)] for i in range(n)],
        dtype=np.complex128,
    )
    return t_int, inv


class LrZfDetector:
    """Zero forcing in a reduced basis with exact lattice re-mapping."""

    def __init__(self, rb: ReducedBasis):
        self.n = rb.r_tilde.shape[1]
        self.q_tilde_h = rb.q_tilde.conj().T
        self.r_tilde = rb.r_tilde[: self.n, : self.n]
        self.t, self.t_inv = gaussian_integer_inverse(rb.t)
        ident = self.t @ self.t_inv
        if not np.array_equal(ident, np.eye(self.n, dtype=np.complex128)):
            raise NonUnimodularError("t @ t_inv is not exactly the identity")
        # Constellation points are odd Gaussian integers; their image under
        # t_inv lives on the lattice 2*Z[i]^n + shift.
        self.shift = self.t_inv @ np.full(self.n, 1 + 1j)

    def detect(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.complex128)
        z_soft = solve_upper_triangular(self.r_tilde, (self.q_tilde_h @ y)[: self.n])
        z_hat = 2.0 * round_gaussian((z_soft - self.shift) / 2.0) + self.shift
        return qam16_slice(self.t @ z_hat)


def lr_zf_detect(rb: ReducedBasis, y) -> np.ndarray:
    """One-shot reduced-basis zero-forcing detection."""
    return LrZfDetector(rb).detect(y)


@lru_cache(maxsize=4)
def _candidates(m_t: int) -> np.ndarray:
    points = constellation()
    grids = np.meshgrid(*([points] * m_t), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


class ExhaustiveMlDetector:
    """Minimum-distance search over every candidate symbol vector.

    Candidates are ordered lexicographically by per-antenna label value;
    ties resolve to the first candidate in that order.
    """

    def __init__(self, h):
        h = np.asarray(h, dtype=np.complex128)
        self.m_t = h.shape[1]
        if 16**self.m_t > 65536:
            raise DimensionError(f"exhaustive search supports m_t <= 4, got {self.m_t}")
        self.candidates = _candidates(self.m_t)
        self.projected = self.candidates @ h.T

    def detect(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=np.complex128)
        diff = self.projected - y
        dist = np.einsum("ij,ij->i", diff.real, diff.real) + np.einsum(
            "ij,ij->i", diff.imag, diff.imag
        )
        return self.candidates[int(np.argmin(dist))].copy()


def ml_detect(h, y) -> np.ndarray:
    """One-shot exhaustive maximum-likelihood detection."""
    return ExhaustiveMlDetector(h).detect(y)

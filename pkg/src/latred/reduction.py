"""Lattice reduction on QR factors.

``mlll_reduce`` runs the budgeted variant: full size reduction of the
current column, the cheap Siegel swap test, and a Givens update on swap,
with a hard cap on body iterations.  ``clll_reduce`` is the classical
reference with the Lovász swap test, run to full convergence, and serves
as the correctness oracle for the budgeted variant.

Both maintain the invariant factorisation  q_tilde @ r_tilde == q @ r @ t
with ``t`` unimodular over the Gaussian integers, and keep the diagonal of
``r_tilde`` real and non-negative by re-phasing after every rotation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import fxp
from .errors import IterationOverflowError, ZeroDiagonalError
from .linalg import as_complex_matrix, givens_coefficients, round_gaussian, _freeze

_DIAG_TOL = 1e-12
_CLLL_GUARD = 10**6


@dataclass(frozen=True)
class MlllConfig:
    """Knobs for the budgeted reduction.

    ``delta`` is the swap-test constant in (0.5, 1].  ``max_body_iterations``
    caps how many times the per-column body (size reduction + swap test) may
    run.  ``arithmetic`` selects the double-precision path ("floating") or
    the bit-accurate Q3.12 path ("fixed"); fixed mode hardwires
    ``delta = 0.75`` because its scaler is a shift-add.
    ``early_termination`` permits stopping once a clean bottom-up pass makes
    no change; the backtracking schedule reaches that state exactly when the
    column index walks off the top, so the flag does not alter results.
    """

    delta: float = 0.75
    max_body_iterations: int = 5
    early_termination: bool = True
    arithmetic: str = "floating"

    def __post_init__(self):
        if not 0.5 < self.delta <= 1.0:
            raise ValueError(f"delta must be in (0.5, 1], got {self.delta}")
        if self.max_body_iterations < 0:
            raise ValueError("max_body_iterations must be >= 0")
        arith = "floating" if self.arithmetic == "float" else self.arithmetic
        if arith not in ("floating", "fixed"):
            raise ValueError(f"unknown arithmetic mode {self.arithmetic!r}")
        object.__setattr__(self, "arithmetic", arith)
        if arith == "fixed" and self.delta != 0.75:
            raise ValueError("fixed arithmetic supports only delta = 0.75")


@dataclass
class OpCounters:
    """Kernel invocation counts for one reduction run.

    ``cmul`` counts complex multiplies, ``cordic`` rotation kernels (one per
    swap in floating mode, actual kernel calls in fixed mode), ``siegel``
    swap-test evaluations, ``size_reduction`` executed column updates.
    ``stream`` and ``arrange`` count matrix elements moved in/out and
    operand packing operations; both stay zero in floating mode.
    """

    cmul: int = 0
    cordic: int = 0
    siegel: int = 0
    size_reduction: int = 0
    stream: int = 0
    arrange: int = 0


@dataclass(frozen=True)
class ReducedBasis:
    """Output bundle of one reduction run."""

    q_tilde: np.ndarray
    r_tilde: np.ndarray
    t: np.ndarray
    body_iterations_used: int
    swap_count: int
    converged: bool
    counters: OpCounters
    mu_clamp_count: int = 0
    saturation_count: int = 0


def snapshot_counters(run: ReducedBasis) -> OpCounters:
    """Copy of the kernel counters of a completed run."""
    return replace(run.counters)


def _abs2(z: complex) -> float:
    return z.real * z.real + z.imag * z.imag


class _FloatState:
    """Double-precision working state: matrices, counters, update kernels."""

    def __init__(self, q: np.ndarray, r: np.ndarray, delta: float, counters: OpCounters):
        self.q = q.copy()
        self.r = r.copy()
        self.m, self.n = r.shape
        self.t = np.eye(self.n, dtype=np.complex128)
        self.delta = delta
        self.c = counters

    def mu(self, l: int, j: int) -> complex:
        d = self.r[l, l]
        if abs(d) < _DIAG_TOL:
            raise ZeroDiagonalError(f"diagonal entry {l} vanished during size reduction")
        return round_gaussian(self.r[l, j] / d)

    def size_reduce(self, l: int, j: int, mu: complex) -> None:
        self.r[: l + 1, j] -= mu * self.r[: l + 1, l]
        self.t[:, j] -= mu * self.t[:, l]
        self.c.size_reduction += 1
        self.c.cmul += (l + 1) + self.n

    def siegel_swap(self, j: int) -> bool:
        self.c.siegel += 1
        return self.delta * _abs2(self.r[j - 1, j - 1]) > _abs2(self.r[j, j])

    def lovasz_swap(self, j: int) -> bool:
        self.c.siegel += 1
        return self.delta * _abs2(self.r[j - 1, j - 1]) > _abs2(self.r[j, j]) + _abs2(
            self.r[j - 1, j]
        )

    def swap_and_rotate(self, j: int) -> None:
        r, q, t = self.r, self.q, self.t
        r[:, [j - 1, j]] = r[:, [j, j - 1]]
        t[:, [j - 1, j]] = t[:, [j, j - 1]]
        alpha, beta, rho = givens_coefficients(r[j - 1, j - 1], r[j, j - 1])
        ca = alpha.conjugate()
        cb = beta.conjugate()
        top = r[j - 1, j - 1:].copy()
        bot = r[j, j - 1:].copy()
        r[j - 1, j - 1:] = ca * top + cb * bot
        r[j, j - 1:] = -beta * top + alpha * bot
        r[j - 1, j - 1] = rho
        r[j, j - 1] = 0.0
        c1 = q[:, j - 1].copy()
        c2 = q[:, j].copy()
        q[:, j - 1] = alpha * c1 + beta * c2
        q[:, j] = -cb * c1 + ca * c2
        self.c.cordic += 1
        self.c.cmul += 4 * (self.n - j + 1) + 4 * self.m
        # Rotation leaves an arbitrary phase on the lower diagonal entry;
        # rotate it onto the positive real axis to keep the convention.
        d = r[j, j]
        if d.imag != 0.0 or d.real < 0.0:
            a = abs(d)
            if a > 0.0:
                u = d.conjugate() / a
                r[j, j:] *= u
                r[j, j] = a
                q[:, j] *= u.conjugate()
                self.c.cmul += (self.n - 1 - j) + self.m

    def finish(self, body: int, swaps: int, converged: bool) -> ReducedBasis:
        return ReducedBasis(
            q_tilde=_freeze(self.q),
            r_tilde=_freeze(self.r),
            t=_freeze(self.t),
            body_iterations_used=body,
            swap_count=swaps,
            converged=converged,
            counters=self.c,
        )


class _FixedState:
    """Q3.12 working state; matrices live as column lists of packed words."""

    def __init__(self, q: np.ndarray, r: np.ndarray, counters: OpCounters):
        self.m, self.n = r.shape
        self.c = counters
        self.track = fxp.SaturationTracker()
        tr = self.track
        self.qcols = [
            [fxp.cfx_from_complex(complex(q[i, j]), tr) for i in range(self.m)]
            for j in range(self.m)
        ]
        self.rcols = [
            [fxp.cfx_from_complex(complex(r[i, j]), tr) for i in range(self.m)]
            for j in range(self.n)
        ]
        one = fxp.pack(fxp.FX_ONE, 0)
        self.tcols = [
            [one if i == j else 0 for i in range(self.n)] for j in range(self.n)
        ]
        elems = self.m * self.m + self.m * self.n + self.n * self.n
        self.c.stream += elems
        self.c.arrange += elems

    def mu(self, l: int, j: int) -> int:
        dr, di = fxp.unpack(self.rcols[l][l])
        if dr == 0 and di == 0:
            raise ZeroDiagonalError(f"diagonal entry {l} vanished during size reduction")
        num = fxp.cfx_to_complex(self.rcols[j][l])
        return fxp.quantize_mu(num / complex(dr / fxp.FX_ONE, di / fxp.FX_ONE), self.track)

    def size_reduce(self, l: int, j: int, mu: int) -> None:
        tr = self.track
        rj, rl = self.rcols[j], self.rcols[l]
        for i in range(l + 1):
            rj[i] = fxp.cfx_sub(rj[i], fxp.cmul(mu, rl[i], tr), tr)
        tj, tl = self.tcols[j], self.tcols[l]
        for i in range(self.n):
            tj[i] = fxp.cfx_sub(tj[i], fxp.cmul(mu, tl[i], tr), tr)
        self.c.size_reduction += 1
        self.c.cmul += (l + 1) + self.n

    def siegel_swap(self, j: int) -> bool:
        self.c.siegel += 1
        prev, _ = fxp.unpack(self.rcols[j - 1][j - 1])
        nxt, _ = fxp.unpack(self.rcols[j][j])
        return fxp.siegel_exceeds(prev, nxt)

    @staticmethod
    def _needs_rotation(word: int) -> bool:
        re, im = fxp.unpack(word)
        return not (im == 0 and re >= 0)

    def swap_and_rotate(self, j: int) -> None:
        tr = self.track
        rcols, qcols, tcols = self.rcols, self.qcols, self.tcols
        rcols[j - 1], rcols[j] = rcols[j], rcols[j - 1]
        tcols[j - 1], tcols[j] = tcols[j], tcols[j - 1]
        diag = rcols[j - 1][j - 1]
        sub = rcols[j - 1][j]
        alpha, beta = fxp.givens_theta_fixed(sub, diag, tr)
        self.c.cordic += 1 + self._needs_rotation(diag) + self._needs_rotation(sub)
        ca = fxp.cfx_conj(alpha, tr)
        cb = fxp.cfx_conj(beta, tr)
        nbeta = fxp.pack(*(fxp.fx_neg(v, tr) for v in fxp.unpack(beta)))
        ncb = fxp.pack(*(fxp.fx_neg(v, tr) for v in fxp.unpack(cb)))
        self.c.arrange += 4
        for col in range(j - 1, self.n):
            top = rcols[col][j - 1]
            bot = rcols[col][j]
            rcols[col][j - 1] = fxp.cfx_add(fxp.cmul(ca, top, tr), fxp.cmul(cb, bot, tr), tr)
            rcols[col][j] = fxp.cfx_add(fxp.cmul(nbeta, top, tr), fxp.cmul(alpha, bot, tr), tr)
            self.c.cmul += 4
        # Structural zero and known-real diagonal: the datapath stores
        # neither residue.
        rcols[j - 1][j] = 0
        dr, _ = fxp.unpack(rcols[j - 1][j - 1])
        rcols[j - 1][j - 1] = fxp.pack(max(dr, 0), 0)
        for i in range(self.m):
            c1 = qcols[j - 1][i]
            c2 = qcols[j][i]
            qcols[j - 1][i] = fxp.cfx_add(fxp.cmul(alpha, c1, tr), fxp.cmul(beta, c2, tr), tr)
            qcols[j][i] = fxp.cfx_add(fxp.cmul(ncb, c1, tr), fxp.cmul(ca, c2, tr), tr)
            self.c.cmul += 4
        d = rcols[j][j]
        dr, di = fxp.unpack(d)
        if di != 0 or dr < 0:
            res = fxp.cordic_master_slave(dr, di, tr)
            self.c.cordic += 1
            u = fxp.pack(res.cos_out, res.sin_out)
            u_conj = fxp.pack(res.cos_out, fxp.fx_neg(res.sin_out, tr))
            self.c.arrange += 2
            rcols[j][j] = fxp.pack(max(res.magnitude, 0), 0)
            for col in range(j + 1, self.n):
                rcols[col][j] = fxp.cmul(u_conj, rcols[col][j], tr)
                self.c.cmul += 1
            for i in range(self.m):
                qcols[j][i] = fxp.cmul(u, qcols[j][i], tr)
                self.c.cmul += 1

    def _to_array(self, cols: list[list[int]], rows: int) -> np.ndarray:
        out = np.empty((rows, len(cols)), dtype=np.complex128)
        for j, col in enumerate(cols):
            for i in range(rows):
                out[i, j] = fxp.cfx_to_complex(col[i])
        return out

    def finish(self, body: int, swaps: int, converged: bool) -> ReducedBasis:
        self.c.stream += self.m * self.m + self.m * self.n + self.n * self.n
        return ReducedBasis(
            q_tilde=_freeze(self._to_array(self.qcols, self.m)),
            r_tilde=_freeze(self._to_array(self.rcols, self.m)),
            t=_freeze(self._to_array(self.tcols, self.n)),
            body_iterations_used=body,
            swap_count=swaps,
            converged=converged,
            counters=self.c,
            mu_clamp_count=self.track.mu_clamps,
            saturation_count=self.track.events + self.track.cordic_overflows,
        )


def _validated_factors(q, r) -> tuple[np.ndarray, np.ndarray]:
    q = as_complex_matrix(q)
    r = as_complex_matrix(r)
    m, n = r.shape
    if q.shape != (m, m):
        raise ValueError(f"q must be {m}x{m} to match r, got {q.shape}")
    if m < n:
        raise ValueError(f"r must have rows >= cols, got {m}x{n}")
    scale = max(float(np.abs(r).max()), 1.0)
    if np.abs(np.tril(r, -1)).max(initial=0.0) > 1e-9 * scale:
        raise ValueError("r is not upper triangular")
    diag = np.diagonal(r)
    if np.abs(diag.imag).max(initial=0.0) > 1e-9 * scale or diag.real.min() < -1e-9 * scale:
        raise ValueError("diagonal of r must be real and non-negative")
    if np.abs(q.conj().T @ q - np.eye(m)).max() > 1e-6:
        raise ValueError("q is not unitary")
    r = r.copy()
    r[np.tril_indices(m, -1, n)] = 0.0
    idx = np.arange(n)
    r[idx, idx] = np.maximum(diag.real, 0.0)
    return q, r


def _run_schedule(state, swap_test, budget: int | None, guard: int | None):
    """Walk the column index per the backtracking schedule.

    One body iteration = full size reduction of the current column followed
    by one swap test.  Terminates when the index walks off the top (natural
    convergence) or the body-iteration budget is exhausted.
    """
    n = state.n
    j = 1
    body = 0
    swaps = 0
    while j < n and (budget is None or body < budget):
        if guard is not None and body >= guard:
            raise IterationOverflowError(f"no convergence after {guard} body iterations")
        body += 1
        for l in range(j - 1, -1, -1):
            mu = state.mu(l, j)
            if mu != 0:
                state.size_reduce(l, j, mu)
        if swap_test(j):
            state.swap_and_rotate(j)
            swaps += 1
            j = max(j - 1, 1)
        else:
            j += 1
    return body, swaps, j >= n


def mlll_reduce(q, r, config: MlllConfig | None = None) -> ReducedBasis:
    """Budgeted Siegel-test reduction of the factors ``(q, r)``.

    Expects ``q`` unitary and ``r`` upper triangular with a real
    non-negative diagonal, as produced by :func:`latred.linalg.qr_decompose`.
    """
    config = config or MlllConfig()
    q, r = _validated_factors(q, r)
    counters = OpCounters()
    if config.arithmetic == "fixed":
        state = _FixedState(q, r, counters)
    else:
        state = _FloatState(q, r, config.delta, counters)
    body, swaps, converged = _run_schedule(
        state, state.siegel_swap, config.max_body_iterations, None
    )
    return state.finish(body, swaps, converged)


def clll_reduce(q, r, delta: float = 0.75) -> ReducedBasis:
    """Classical Lovász-test reduction, run to full convergence."""
    if not 0.5 < delta <= 1.0:
        raise ValueError(f"delta must be in (0.5, 1], got {delta}")
    q, r = _validated_factors(q, r)
    state = _FloatState(q, r, delta, OpCounters())
    body, swaps, converged = _run_schedule(state, state.lovasz_swap, None, _CLLL_GUARD)
    return state.finish(body, swaps, converged)


def reduce_channel(h, config: MlllConfig | None = None) -> ReducedBasis:
    """QR-decompose a channel matrix and reduce the factors in one call."""
    from .linalg import qr_decompose

    factors = qr_decompose(h)
    return mlll_reduce(factors.q, factors.r, config)

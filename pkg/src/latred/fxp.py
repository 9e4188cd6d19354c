"""Bit-accurate fixed-point kernels for the reduction datapath.

Scalars are Q3.12: 16-bit two's complement, 12 fraction bits, range
[-8, 8).  A complex value packs the real part into the high half-word and
the imaginary part into the low half-word of a 32-bit word.  All kernels
operate on plain Python ints holding those raw words, use round half away
from zero for every requantisation, and saturate instead of wrapping.

The master-slave CORDIC keeps six extra fraction bits internally and
block-normalises its input with exact left shifts; both are needed to hold
the 2^-10 output accuracy over small-magnitude inputs.  The 16 micro
rotations run as four 4-stage blocks; the grouping is purely structural
and bit-identical to 16 single stages.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

from .errors import GoldenVectorMismatch, ZeroInputError
from .linalg import round_gaussian

FRAC_BITS = 12
FX_ONE = 1 << FRAC_BITS
FX_MAX = (1 << 15) - 1
FX_MIN = -(1 << 15)

MU_LIMIT = 4  # quantised ratio components clamp to [-4, 4]

CORDIC_STAGES = 16
CORDIC_STAGE_PLAN = (4, 4, 4, 4)
_GUARD_BITS = 6
# 1/K for 16 stages, 0.607253 in Q3.12.
INV_GAIN_RAW = 2487


class SaturationTracker:
    """Per-run accounting of clamping events inside the kernels.

    ``events`` counts value-corrupting saturations (overflowed products,
    sums, or stores).  ``mu_clamps`` counts ratio quantisations clipped to
    the designed [-4, 4] range.  ``cordic_overflows`` counts gain-amplified
    magnitudes that left the representable range.
    """

    __slots__ = ("events", "mu_clamps", "cordic_overflows")

    def __init__(self) -> None:
        self.events = 0
        self.mu_clamps = 0
        self.cordic_overflows = 0


def _sat16(v: int, track: SaturationTracker | None = None) -> int:
    if v > FX_MAX:
        if track is not None:
            track.events += 1
        return FX_MAX
    if v < FX_MIN:
        if track is not None:
            track.events += 1
        return FX_MIN
    return v


def _rshift_round(v: int, n: int) -> int:
    """Arithmetic right shift by ``n`` with round half away from zero."""
    if n <= 0:
        return v << -n if n else v
    bias = 1 << (n - 1)
    if v >= 0:
        return (v + bias) >> n
    return -((-v + bias) >> n)


def fx_from_float(x: float, track: SaturationTracker | None = None) -> int:
    """Quantise a float to a raw Q3.12 word."""
    scaled = x * FX_ONE
    q = int(scaled + 0.5) if scaled >= 0 else -int(-scaled + 0.5)
    return _sat16(q, track)


def fx_to_float(raw: int) -> float:
    return raw / FX_ONE


def fx_add(a: int, b: int, track: SaturationTracker | None = None) -> int:
    return _sat16(a + b, track)


def fx_sub(a: int, b: int, track: SaturationTracker | None = None) -> int:
    return _sat16(a - b, track)


def fx_neg(a: int, track: SaturationTracker | None = None) -> int:
    return _sat16(-a, track)


def _sext16(u: int) -> int:
    u &= 0xFFFF
    return u - 0x10000 if u & 0x8000 else u


def pack(re_raw: int, im_raw: int) -> int:
    """Pack two raw 16-bit words into one 32-bit complex word."""
    return ((re_raw & 0xFFFF) << 16) | (im_raw & 0xFFFF)


def unpack(word: int) -> tuple[int, int]:
    """Split a 32-bit complex word into sign-extended (re, im) raw words."""
    return _sext16(word >> 16), _sext16(word)


def cfx_from_complex(z: complex, track: SaturationTracker | None = None) -> int:
    return pack(fx_from_float(z.real, track), fx_from_float(z.imag, track))


def cfx_to_complex(word: int) -> complex:
    re, im = unpack(word)
    return complex(re / FX_ONE, im / FX_ONE)


def cfx_add(a: int, b: int, track: SaturationTracker | None = None) -> int:
    ar, ai = unpack(a)
    br, bi = unpack(b)
    return pack(fx_add(ar, br, track), fx_add(ai, bi, track))


def cfx_sub(a: int, b: int, track: SaturationTracker | None = None) -> int:
    ar, ai = unpack(a)
    br, bi = unpack(b)
    return pack(fx_sub(ar, br, track), fx_sub(ai, bi, track))


def cfx_conj(a: int, track: SaturationTracker | None = None) -> int:
    ar, ai = unpack(a)
    return pack(ar, fx_neg(ai, track))


def cmul(a: int, b: int, track: SaturationTracker | None = None) -> int:
    """Complex multiply of two packed words.

    Four full-precision 16-bit multiplies, one subtract, one add; each
    component is then rounded once to Q3.12 and saturated.
    """
    ar, ai = unpack(a)
    br, bi = unpack(b)
    re = ar * br - ai * bi
    im = ar * bi + ai * br
    return pack(
        _sat16(_rshift_round(re, FRAC_BITS), track),
        _sat16(_rshift_round(im, FRAC_BITS), track),
    )


def siegel_scale(x: int, track: SaturationTracker | None = None) -> int:
    """Scale a raw word by 0.75 using two arithmetic shifts and one add."""
    return _sat16((x >> 1) + (x >> 2), track)


def siegel_exceeds(prev_diag_raw: int, next_diag_raw: int) -> bool:
    """Swap test: 0.75 * prev^2 > next^2 on full-precision squares.

    The squares of 16-bit words need 32 bits, so the shift-add scaler runs
    on the wide products instead of the saturating 16-bit path.
    """
    pp = prev_diag_raw * prev_diag_raw
    nn = next_diag_raw * next_diag_raw
    return (pp >> 1) + (pp >> 2) > nn


def quantize_mu(c: complex, track: SaturationTracker | None = None) -> int:
    """Round a ratio to a Gaussian integer and clamp components to [-4, 4]."""
    g = round_gaussian(c)
    re = int(g.real)
    im = int(g.imag)
    if re > MU_LIMIT or re < -MU_LIMIT or im > MU_LIMIT or im < -MU_LIMIT:
        if track is not None:
            track.mu_clamps += 1
        re = min(max(re, -MU_LIMIT), MU_LIMIT)
        im = min(max(im, -MU_LIMIT), MU_LIMIT)
    return pack(re << FRAC_BITS, im << FRAC_BITS)


@dataclass(frozen=True)
class CordicResult:
    """Gain-compensated outputs of one master-slave rotation."""

    cos_out: int
    sin_out: int
    magnitude: int


def _vectoring_signs(xs: int, ys: int, plan: tuple[int, ...]) -> tuple[int, list[int]]:
    """Drive ``ys`` to zero; return the final x and the per-stage signs."""
    sigmas: list[int] = []
    i = 0
    for block in plan:
        for _ in range(block):
            sigma = -1 if ys >= 0 else 1
            xs, ys = xs - sigma * (ys >> i), ys + sigma * (xs >> i)
            sigmas.append(sigma)
            i += 1
    return xs, sigmas


def _rotate_by_signs(u: int, v: int, sigmas: list[int], plan: tuple[int, ...]) -> tuple[int, int]:
    """Replay the opposite sign sequence in rotation mode."""
    i = 0
    for block in plan:
        for _ in range(block):
            e = -sigmas[i]
            u, v = u - e * (v >> i), v + e * (u >> i)
            i += 1
    return u, v


def cordic_master_slave(
    x: int,
    y: int,
    track: SaturationTracker | None = None,
    _plan: tuple[int, ...] = CORDIC_STAGE_PLAN,
) -> CordicResult:
    """Normalise the vector ``(x, y)`` of raw Q3.12 words.

    The master runs 16 vectoring micro-rotations recording only the sign
    decisions; the slave replays them in rotation mode on the seed
    ``(1/K, 0)``, producing ``cos_out ~ x/r`` and ``sin_out ~ y/r`` without
    any angle accumulation.  ``magnitude`` is the gain-compensated vectoring
    output ``~ r = sqrt(x^2 + y^2)``.
    """
    if x == 0 and y == 0:
        raise ZeroInputError("cordic input must be non-zero")
    xs = x << _GUARD_BITS
    ys = y << _GUARD_BITS
    # Fold the left half-plane onto the right so vectoring converges; the
    # slave outputs are negated back at the end.
    flip = x < 0
    if flip:
        xs = -xs
        ys = -ys
    # Block-normalise small inputs with exact left shifts so the sign
    # decisions are taken on well-scaled words.
    shift = 0
    limit = 1 << (FRAC_BITS + _GUARD_BITS)
    while xs < limit and -xs < limit and ys < limit and -ys < limit:
        xs <<= 1
        ys <<= 1
        shift += 1
    mx, sigmas = _vectoring_signs(xs, ys, _plan)
    su, sv = _rotate_by_signs(INV_GAIN_RAW << _GUARD_BITS, 0, sigmas, _plan)
    if flip:
        su = -su
        sv = -sv
    mag = _rshift_round(mx * INV_GAIN_RAW, FRAC_BITS + _GUARD_BITS + shift)
    if mag > FX_MAX or mag < FX_MIN:
        if track is not None:
            track.cordic_overflows += 1
        mag = min(max(mag, FX_MIN), FX_MAX)
    return CordicResult(
        cos_out=_sat16(_rshift_round(su, _GUARD_BITS), track),
        sin_out=_sat16(_rshift_round(sv, _GUARD_BITS), track),
        magnitude=mag,
    )


def _phase_and_magnitude(
    word: int, track: SaturationTracker | None
) -> tuple[int, int, int]:
    """(cos, sin, magnitude) of a packed complex word.

    Real non-negative words skip the rotation: their phase is exactly zero.
    """
    re, im = unpack(word)
    if re == 0 and im == 0:
        return FX_ONE, 0, 0
    if im == 0 and re > 0:
        return FX_ONE, 0, re
    res = cordic_master_slave(re, im, track)
    return res.cos_out, res.sin_out, res.magnitude


def givens_theta_fixed(
    r_kk1: int, r_k1k1: int, track: SaturationTracker | None = None
) -> tuple[int, int]:
    """Fixed-point Givens coefficients for the pair (diagonal, subdiagonal).

    ``r_k1k1`` is the diagonal entry, ``r_kk1`` the subdiagonal entry below
    it; both are packed complex words.  Each entry is phase-aligned with a
    master-slave rotation, the two magnitudes are vectored, and the unit
    coefficients are re-phased with complex multiplies.  Returns
    ``(alpha, beta)`` such that ``[[conj(a), conj(b)], [-b, a]]`` zeroes the
    subdiagonal slot.
    """
    if r_kk1 & 0xFFFFFFFF == 0 and r_k1k1 & 0xFFFFFFFF == 0:
        raise ZeroInputError("both rotation inputs are zero")
    ca, sa, ma = _phase_and_magnitude(r_k1k1, track)
    cb, sb, mb = _phase_and_magnitude(r_kk1, track)
    vec = cordic_master_slave(ma, mb, track)
    alpha = cmul(pack(vec.cos_out, 0), pack(ca, sa), track)
    beta = cmul(pack(vec.sin_out, 0), pack(cb, sb), track)
    return alpha, beta


# ---------------------------------------------------------------------------
# Golden vectors: the shipped text file pins bit-exact kernel behaviour.

_GOLDEN_RESOURCE = "fxp_golden.txt"


def _golden_lines(path=None):
    if path is not None:
        with open(path, "r", encoding="ascii") as fh:
            yield from fh.read().splitlines()
        return
    text = resources.files(__package__).joinpath("data", _GOLDEN_RESOURCE).read_text("ascii")
    yield from text.splitlines()


def verify_golden_vectors(path=None) -> int:
    """Recompute every shipped golden vector; return the number checked.

    Raises :class:`GoldenVectorMismatch` on the first disagreement.
    """
    checked = 0
    for lineno, line in enumerate(_golden_lines(path), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "cmul":
            a, b, expect = (int(f, 16) for f in fields[1:])
            got = cmul(a, b)
        elif kind == "cordic":
            x, y, ec, es, em = (int(f, 16) for f in fields[1:])
            res = cordic_master_slave(_sext16(x), _sext16(y))
            got = (res.cos_out & 0xFFFF, res.sin_out & 0xFFFF, res.magnitude & 0xFFFF)
            expect = (ec, es, em)
        elif kind == "givens":
            a, b, ea, eb = (int(f, 16) for f in fields[1:])
            got = givens_theta_fixed(a, b)
            expect = (ea, eb)
        elif kind == "siegel":
            x, expect = (int(f, 16) for f in fields[1:])
            got = siegel_scale(_sext16(x)) & 0xFFFF
        else:
            raise GoldenVectorMismatch(f"line {lineno}: unknown kind {kind!r}")
        if got != expect:
            raise GoldenVectorMismatch(
                f"line {lineno}: {kind} expected {expect!r} got {got!r}"
            )
        checked += 1
    if checked == 0:
        raise GoldenVectorMismatch("golden vector file contained no vectors")
    return checked


def write_golden_vectors(path, seed: int = 20260810) -> int:
    """Regenerate the golden vector file; returns the number written."""
    import numpy as np

    rng = np.random.default_rng(seed)

    def rand_fx() -> int:
        return int(rng.integers(FX_MIN, FX_MAX + 1))

    lines = ["# fxp golden vectors: kind, operand words, expected words (hex)"]
    cmul_pairs = [(pack(FX_ONE, 0), pack(1234, -567)), (pack(0, FX_ONE), pack(0, FX_ONE))]
    cmul_pairs += [
        (pack(rand_fx(), rand_fx()), pack(rand_fx(), rand_fx())) for _ in range(512)
    ]
    for a, b in cmul_pairs:
        lines.append(f"cmul {a:08x} {b:08x} {cmul(a, b):08x}")
    cordic_pairs = [(FX_ONE, 0), (0, FX_ONE), (FX_ONE, FX_ONE), (-FX_ONE, 0), (1, 1)]
    while len(cordic_pairs) < 512:
        x, y = rand_fx(), rand_fx()
        if x == 0 and y == 0:
            continue
        cordic_pairs.append((x, y))
    for x, y in cordic_pairs:
        res = cordic_master_slave(x, y)
        lines.append(
            f"cordic {x & 0xFFFF:04x} {y & 0xFFFF:04x} "
            f"{res.cos_out & 0xFFFF:04x} {res.sin_out & 0xFFFF:04x} "
            f"{res.magnitude & 0xFFFF:04x}"
        )
    givens_pairs = [(pack(0, 0), pack(FX_ONE, 0)), (pack(FX_ONE, 0), pack(0, 0))]
    while len(givens_pairs) < 128:
        a = pack(rand_fx() >> 1, rand_fx() >> 1)
        b = pack(rand_fx() >> 1, rand_fx() >> 1)
        if a & 0xFFFFFFFF == 0 and b & 0xFFFFFFFF == 0:
            continue
        givens_pairs.append((b, a))
    for b, a in givens_pairs:
        alpha, beta = givens_theta_fixed(b, a)
        lines.append(f"givens {b:08x} {a:08x} {alpha:08x} {beta:08x}")
    for _ in range(128):
        x = rand_fx()
        lines.append(f"siegel {x & 0xFFFF:04x} {siegel_scale(x) & 0xFFFF:04x}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    return len(lines) - 1

"""Lattice-reduction-aided MIMO detection toolkit.

Complex Givens QR, a budgeted Siegel-test lattice reduction next to the
classical Lovász-test reference, a bit-accurate Q3.12 fixed-point kernel
layer, 16-QAM detectors (ZF, reduced-basis ZF, exhaustive ML), and a
seeded Monte-Carlo BER harness.
"""

from .linalg import (
    QrFactors,
    orthogonality_defect,
    qr_decompose,
    round_gaussian,
    solve_upper_triangular,
)
from .reduction import (
    MlllConfig,
    OpCounters,
    ReducedBasis,
    clll_reduce,
    mlll_reduce,
    reduce_channel,
    snapshot_counters,
)
from .detect import (
    ExhaustiveMlDetector,
    LrZfDetector,
    lr_zf_detect,
    ml_detect,
    qam16_demodulate,
    qam16_modulate,
    qam16_slice,
    zf_detect,
)
from .sim import (
    BerPoint,
    SimConfig,
    SweepResult,
    gen_channel,
    gen_noise,
    noise_variance,
    run_sweep,
)

__version__ = "0.1.0"

__all__ = [
    "QrFactors",
    "qr_decompose",
    "solve_upper_triangular",
    "orthogonality_defect",
    "round_gaussian",
    "MlllConfig",
    "OpCounters",
    "ReducedBasis",
    "mlll_reduce",
    "clll_reduce",
    "reduce_channel",
    "snapshot_counters",
    "qam16_modulate",
    "qam16_demodulate",
    "qam16_slice",
    "zf_detect",
    "lr_zf_detect",
    "ml_detect",
    "LrZfDetector",
    "ExhaustiveMlDetector",
    "SimConfig",
    "BerPoint",
    "SweepResult",
    "gen_channel",
    "gen_noise",
    "noise_variance",
    "run_sweep",
    "__version__",
]

"""Dithered one-bit capture of modulo samples.

Each sample y_k is compared against m random thresholds drawn uniformly from
[-lam, lam]; only the sign bits R[k, l] = sign(y_k - G[k, l]) are kept.  The
thresholds are reproducible from a seed (one counter-keyed stream per
threshold sequence), so a stored capture is just the bit matrix plus the
seed.  The bits define a box of feasible sample vectors: each (k, l) pair
contributes the one-sided constraint r * (y_k - tau) >= 0.

Capture file format (version 1, little-endian)
----------------------------------------------
::

    offset  size  field
    0       4     magic  b"UNO1"
    4       2     version (u16) = 1
    6       2     flags (u16); bit 0 = explicit threshold block present
    8       4     n (u32)  samples per row
    12      4     m (u32)  threshold sequences
    16      8     lambda (f64)
    24      8     period T (f64)
    32      8     seed (u64)
    40      2+L   generator id: u16 length, then ASCII bytes
    ...     4     row index (u32)
    ...     4     row length in pixels (u32)
    ...     2+K   image id: u16 length, then ASCII bytes
    ...     n*ceil(m/8)  bit matrix, row-major, one row of m bits per
                  sample, MSB-first within a byte, padded to a whole byte
                  per row; bit 1 = +1, bit 0 = -1
    [flags&1] n*m*8  thresholds (f64), row-major

"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .modulo import ModuloSampleVector

__all__ = [
    "DitherPlan",
    "RowMeta",
    "OneBitCapture",
    "generate_dithers",
    "quantize",
    "violation",
    "feasible_intervals",
    "derive_row_seed",
    "capture_to_bytes",
    "capture_from_bytes",
    "write_capture",
    "read_capture",
]

GENERATOR_ID = "philox-cols-v1"

_MAGIC = b"UNO1"
_VERSION = 1
_FLAG_EXPLICIT_GAMMA = 0x0001


@dataclass(frozen=True)
class DitherPlan:
    """Recipe for an n-by-m threshold matrix: dimensions, range and seed."""

    n: int
    m: int
    lam: float
    seed: int
    generator_id: str = GENERATOR_ID

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError(f"dither plan needs n, m >= 1, got n={self.n}, m={self.m}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"saturation threshold must be positive, got {self.lam}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class RowMeta:
    """Provenance of one captured row."""

    row_index: int = 0
    row_length: int = 0
    image_id: str = ""


def generate_dithers(plan: DitherPlan) -> np.ndarray:
    """Threshold matrix of shape (n, m), i.i.d. uniform on [-lam, lam].

    Column l is drawn from a Philox stream keyed by (seed, l), so the matrix
    is bit-exact reproducible from the plan alone and column streams never
    overlap regardless of thread scheduling.
    """
    if plan.generator_id != GENERATOR_ID:
        raise ValueError(f"unknown dither generator {plan.generator_id!r}")
    gamma = np.empty((plan.n, plan.m))
    for col in range(plan.m):
        key = np.array([plan.seed, col], dtype=np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        gamma[:, col] = rng.uniform(-plan.lam, plan.lam, plan.n)
    return gamma


def derive_row_seed(master_seed: int, row_index: int, trial_index: int = 0,
                    stream: int = 0) -> int:
    """Independent per-(row, trial) seed split off a master seed.

    ``stream`` separates consumers that need distinct randomness for the same
    (row, trial) pair, e.g. dither generation vs. solver row sampling.
    """
    ss = np.random.SeedSequence(entropy=master_seed,
                                spawn_key=(row_index, trial_index, stream))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class OneBitCapture:
    """Stored acquisition: sign bits, dither recipe and sampling metadata.

    ``bits`` is the n-by-m matrix of +/-1 signs.  Thresholds are regenerated
    from the plan on demand unless an explicit matrix was attached (interop
    mode); ``thresholds()`` returns them either way.
    """

    bits: np.ndarray
    dither: DitherPlan
    lam: float
    period_T: float
    row_meta: RowMeta = field(default_factory=RowMeta)
    explicit_gamma: np.ndarray | None = None
    _gamma_cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.bits = np.asarray(self.bits, dtype=np.int8)
        if self.bits.ndim != 2:
            raise ValueError("bit matrix must be two-dimensional")
        if self.bits.shape != (self.dither.n, self.dither.m):
            raise ValueError(
                f"bit matrix shape {self.bits.shape} does not match plan "
                f"({self.dither.n}, {self.dither.m})"
            )
        if not np.all(np.abs(self.bits) == 1):
            raise ValueError("bit matrix entries must be +1 or -1")
        if self.explicit_gamma is not None:
            self.explicit_gamma = np.asarray(self.explicit_gamma, dtype=np.float64)
            if self.explicit_gamma.shape != self.bits.shape:
                raise ValueError("explicit threshold matrix shape mismatch")

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def m(self) -> int:
        return self.bits.shape[1]

    def thresholds(self) -> np.ndarray:
        if self.explicit_gamma is not None:
            return self.explicit_gamma
        if self._gamma_cache is None:
            self._gamma_cache = generate_dithers(self.dither)
        return self._gamma_cache


def quantize(y: ModuloSampleVector, gamma: np.ndarray, *, plan: DitherPlan | None = None,
             row_meta: RowMeta | None = None, keep_gamma: bool = False) -> OneBitCapture:
    """Compare each sample against its thresholds: R[k, l] = sign(y_k - G[k, l]).

    Ties (exact equality) map to +1.  ``plan`` records how gamma was
    generated; when omitted, gamma is attached explicitly to the capture.
    """
    gamma = np.asarray(gamma, dtype=np.float64)
    values = y.values
    if gamma.ndim != 2 or gamma.shape[0] != len(values):
        raise ValueError(
            f"threshold matrix shape {gamma.shape} does not match {len(values)} samples"
        )
    bits = np.where(values[:, None] >= gamma, 1, -1).astype(np.int8)
    if plan is None:
        plan = DitherPlan(n=gamma.shape[0], m=gamma.shape[1], lam=y.lam, seed=0)
        explicit = gamma
    else:
        explicit = gamma if keep_gamma else None
    cap = OneBitCapture(
        bits=bits,
        dither=plan,
        lam=y.lam,
        period_T=y.period_T,
        row_meta=row_meta or RowMeta(row_length=len(values)),
        explicit_gamma=explicit,
    )
    if explicit is None:
        cap._gamma_cache = gamma
    return cap


def violation(capture: OneBitCapture, y_hat: np.ndarray) -> float:
    """Largest constraint violation max(0, max_{k,l} r*(tau - y_k)).

    Zero iff y_hat satisfies every sign constraint of the capture.
    """
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if capture.n == 0 or capture.m == 0:
        raise ValueError("capture holds no constraints")
    if y_hat.shape != (capture.n,):
        raise ValueError(f"estimate has shape {y_hat.shape}, expected ({capture.n},)")
    gamma = capture.thresholds()
    worst = float(np.max(capture.bits * (gamma - y_hat[:, None])))
    return max(worst, 0.0)


def feasible_intervals(capture: OneBitCapture) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate interval [lo_k, hi_k] consistent with all bits.

    lo is the largest threshold voted +1 (or -lam), hi the smallest voted -1
    (or +lam); the true sample always lies inside.
    """
    gamma = capture.thresholds()
    lam = capture.lam
    plus = capture.bits > 0
    lo = np.max(gamma, axis=1, where=plus, initial=-lam)
    hi = np.min(gamma, axis=1, where=~plus, initial=lam)
    return lo, hi


# ---------------------------------------------------------------------------
# serialization


def _pack_str(s: str) -> bytes:
    raw = s.encode("ascii")
    if len(raw) > 0xFFFF:
        raise ValueError("string field too long")
    return struct.pack("<H", len(raw)) + raw


def capture_to_bytes(capture: OneBitCapture) -> bytes:
    flags = _FLAG_EXPLICIT_GAMMA if capture.explicit_gamma is not None else 0
    head = [
        _MAGIC,
        struct.pack("<HH", _VERSION, flags),
        struct.pack("<II", capture.n, capture.m),
        struct.pack("<dd", capture.lam, capture.period_T),
        struct.pack("<Q", capture.dither.seed),
        _pack_str(capture.dither.generator_id),
        struct.pack("<II", capture.row_meta.row_index, capture.row_meta.row_length),
        _pack_str(capture.row_meta.image_id),
    ]
    packed = np.packbits(capture.bits > 0, axis=1)  # MSB-first, byte-padded rows
    head.append(packed.tobytes())
    if capture.explicit_gamma is not None:
        head.append(capture.explicit_gamma.astype("<f8").tobytes())
    return b"".join(head)


class CaptureFormatError(ValueError):
    """Raised when capture bytes are malformed; message carries the offset."""


def capture_from_bytes(data: bytes) -> OneBitCapture:
    view = memoryview(data)
    pos = 0

    def need(count: int, what: str) -> memoryview:
        nonlocal pos
        if pos + count > len(view):
            raise CaptureFormatError(
                f"truncated capture: needed {count} bytes for {what} at offset {pos}, "
                f"have {len(view) - pos}"
            )
        chunk = view[pos:pos + count]
        pos += count
        return chunk

    if bytes(need(4, "magic")) != _MAGIC:
        raise CaptureFormatError("bad magic at offset 0; not a capture file")
    version, flags = struct.unpack("<HH", need(4, "version/flags"))
    if version != _VERSION:
        raise CaptureFormatError(f"unsupported capture version {version}")
    n, m = struct.unpack("<II", need(8, "dimensions"))
    lam, period_T = struct.unpack("<dd", need(16, "lambda/period"))
    seed, = struct.unpack("<Q", need(8, "seed"))

    def read_str(what: str) -> str:
        length, = struct.unpack("<H", need(2, f"{what} length"))
        return bytes(need(length, what)).decode("ascii")

    generator_id = read_str("generator id")
    row_index, row_length = struct.unpack("<II", need(8, "row metadata"))
    image_id = read_str("image id")

    row_bytes = (m + 7) // 8
    packed = np.frombuffer(need(n * row_bytes, "bit matrix"), dtype=np.uint8)
    unpacked = np.unpackbits(packed.reshape(n, row_bytes), axis=1)[:, :m]
    bits = np.where(unpacked > 0, 1, -1).astype(np.int8)

    explicit = None
    if flags & _FLAG_EXPLICIT_GAMMA:
        raw = need(n * m * 8, "threshold block")
        explicit = np.frombuffer(raw, dtype="<f8").reshape(n, m).copy()
    if pos != len(view):
        raise CaptureFormatError(f"trailing {len(view) - pos} bytes at offset {pos}")

    plan = DitherPlan(n=n, m=m, lam=lam, seed=seed, generator_id=generator_id)
    return OneBitCapture(
        bits=bits,
        dither=plan,
        lam=lam,
        period_T=period_T,
        row_meta=RowMeta(row_index=row_index, row_length=row_length, image_id=image_id),
        explicit_gamma=explicit,
    )


def write_capture(capture: OneBitCapture, path) -> None:
    from ._util import atomic_write_bytes

    atomic_write_bytes(path, capture_to_bytes(capture))


def read_capture(path) -> OneBitCapture:
    with open(path, "rb") as fh:
        return capture_from_bytes(fh.read())

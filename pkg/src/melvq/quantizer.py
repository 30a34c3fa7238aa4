"""Frame quantization: scalar energy codebook plus one- or two-stage VQ.

Each 80-dim MFCC frame is split into its first coefficient (the frame energy
term, scalar quantized) and the remaining 79 coefficients (vector quantized).
The 1000 bit/s mode spends 4 + 12 bits per frame on a scalar codebook and a
single VQ stage; the 2000 bit/s mode spends 6 + 13 + 13 bits using a two-stage
multi-stage VQ searched with an M-best beam. Distortion is unweighted squared
Euclidean distance throughout, and every tie breaks toward the lowest index so
encoding is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

DEFAULT_BEAM_WIDTH = 8

CODEBOOK_MAGIC = b"MVQB"
CODEBOOK_VERSION = 1

FNV64_OFFSET_BASIS = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a digest of a byte string."""
    digest = FNV64_OFFSET_BASIS
    for byte in data:
        digest ^= byte
        digest = (digest * FNV64_PRIME) & 0xFFFFFFFFFFFFFFFF
    return digest


class RateMode(IntEnum):
    """Operating points of the codec, named by their payload bit rate."""

    R1000 = 1000
    R2000 = 2000

    @property
    def sq_field_bits(self) -> int:
        return 4 if self is RateMode.R1000 else 6

    @property
    def vq_field_bits(self) -> tuple[int, ...]:
        return (12,) if self is RateMode.R1000 else (13, 13)

    @property
    def bits_per_frame(self) -> int:
        return self.sq_field_bits + sum(self.vq_field_bits)

    @property
    def wire_byte(self) -> int:
        return 0 if self is RateMode.R1000 else 1

    @classmethod
    def from_wire_byte(cls, value: int) -> "RateMode":
        if value == 0:
            return cls.R1000
        if value == 1:
            return cls.R2000
        raise ValueError(f"unknown rate-mode byte {value:#04x}")


@dataclass(frozen=True, eq=False)
class ScalarCodebook:
    """Sorted reconstruction levels for the scalar (energy) quantizer."""

    levels: np.ndarray
    bits: int

    def __post_init__(self) -> None:
        levels = np.asarray(self.levels, dtype=np.float32)
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if levels.shape != (2 ** self.bits,):
            raise ValueError(f"expected {2 ** self.bits} levels, got shape {levels.shape}")
        if not np.all(np.isfinite(levels)):
            raise ValueError("levels must be finite")
        if np.any(np.diff(levels) <= 0):
            raise ValueError("levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)


@dataclass(frozen=True, eq=False)
class VectorCodebook:
    """One VQ stage: 2**bits codewords of a fixed dimension."""

    codewords: np.ndarray
    bits: int

    def __post_init__(self) -> None:
        codewords = np.asarray(self.codewords, dtype=np.float32)
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if codewords.ndim != 2 or codewords.shape[0] != 2 ** self.bits:
            raise ValueError(
                f"expected {2 ** self.bits} codewords, got shape {codewords.shape}"
            )
        if not np.all(np.isfinite(codewords)):
            raise ValueError("codewords must be finite")
        object.__setattr__(self, "codewords", codewords)

    @property
    def dim(self) -> int:
        return self.codewords.shape[1]


@dataclass(frozen=True, eq=False)
class MsvqCodebook:
    """Two cascaded VQ stages; stage 2 quantizes stage-1 residuals."""

    stages: tuple[VectorCodebook, VectorCodebook]

    def __post_init__(self) -> None:
        if len(self.stages) != 2:
            raise ValueError("exactly two stages are supported")
        if self.stages[0].dim != self.stages[1].dim:
            raise ValueError("stage dimensions differ")

    @property
    def dim(self) -> int:
        return self.stages[0].dim

    @property
    def bits(self) -> tuple[int, ...]:
        return tuple(stage.bits for stage in self.stages)


@dataclass(frozen=True)
class FrameCode:
    """Quantizer indices for one frame: scalar index plus VQ stage indices."""

    sq_index: int
    vq_indices: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.sq_index < 0 or any(i < 0 for i in self.vq_indices):
            raise ValueError("indices must be non-negative")


@dataclass(eq=False)
class CodebookSet:
    """All codebooks for one rate mode, plus a content digest.

    Production codebooks use the full per-mode field widths (4+12 or 6+13+13
    bits); smaller desk-scale codebooks are accepted for experiments as long
    as every index still fits its fixed wire field. The content hash is the
    64-bit FNV-1a digest of the serialized codebook payload and ties encoded
    streams to the exact codebooks that produced them.
    """

    rate_mode: RateMode
    scalar: ScalarCodebook
    vector: VectorCodebook | None = None
    msvq: MsvqCodebook | None = None
    content_hash: int = field(default=-1)

    def __post_init__(self) -> None:
        if self.rate_mode is RateMode.R1000:
            if self.vector is None or self.msvq is not None:
                raise ValueError("R1000 requires a single-stage vector codebook")
        else:
            if self.msvq is None or self.vector is not None:
                raise ValueError("R2000 requires a two-stage MSVQ codebook")
        if self.scalar.bits > self.rate_mode.sq_field_bits:
            raise ValueError("scalar codebook wider than the wire field")
        for stage_bits, field_bits in zip(self.stage_bits, self.rate_mode.vq_field_bits):
            if stage_bits > field_bits:
                raise ValueError("vector codebook wider than the wire field")
        self.content_hash = fnv1a64(codebook_payload(self))

    @property
    def stage_codebooks(self) -> tuple[VectorCodebook, ...]:
        return (self.vector,) if self.vector is not None else self.msvq.stages

    @property
    def stage_bits(self) -> tuple[int, ...]:
        return tuple(stage.bits for stage in self.stage_codebooks)

    @property
    def vector_dim(self) -> int:
        return self.stage_codebooks[0].dim


def codebook_payload(codebooks: CodebookSet) -> bytes:
    """Serialize a codebook set minus its trailing hash field.

    Layout: magic "MVQB", version byte, rate-mode byte (0 for 1000 bit/s,
    1 for 2000 bit/s), scalar bit width, vector dimension as 16-bit LE, one
    bit-width byte per VQ stage, scalar levels as float32 LE, then each
    stage's codewords as row-major float32 LE. The file format appends the
    64-bit FNV-1a digest of these bytes.
    """
    parts = [
        CODEBOOK_MAGIC,
        bytes([CODEBOOK_VERSION, codebooks.rate_mode.wire_byte, codebooks.scalar.bits]),
        int(codebooks.vector_dim).to_bytes(2, "little"),
        bytes(codebooks.stage_bits),
        codebooks.scalar.levels.astype("<f4").tobytes(),
    ]
    for stage in codebooks.stage_codebooks:
        parts.append(stage.codewords.astype("<f4").tobytes())
    return b"".join(parts)


def sq_encode(value: float, codebook: ScalarCodebook) -> int:
    """Index of the nearest level; out-of-range values saturate to the ends."""
    distances = (codebook.levels.astype(np.float64) - float(value)) ** 2
    return int(np.argmin(distances))


def sq_decode(index: int, codebook: ScalarCodebook) -> float:
    if not 0 <= index < codebook.levels.size:
        raise ValueError(f"scalar index {index} out of range")
    return float(codebook.levels[index])


def vq_encode(vec: np.ndarray, codebook: VectorCodebook) -> int:
    """Full-search nearest codeword under squared Euclidean distance."""
    vec = np.asarray(vec, dtype=np.float64)
    if vec.shape != (codebook.dim,):
        raise ValueError(f"expected a {codebook.dim}-dim vector, got shape {vec.shape}")
    distances = ((codebook.codewords - vec) ** 2).sum(axis=1)
    return int(np.argmin(distances))


def vq_decode(index: int, codebook: VectorCodebook) -> np.ndarray:
    if not 0 <= index < codebook.codewords.shape[0]:
        raise ValueError(f"vector index {index} out of range")
    return codebook.codewords[index].astype(np.float64)


def msvq_encode(vec: np.ndarray, codebook: MsvqCodebook,
                beam_width: int = DEFAULT_BEAM_WIDTH) -> tuple[int, int]:
    """M-best search over two stages.

    The beam keeps the beam_width stage-1 codewords closest to the input
    (ties toward lower index), runs a full stage-2 search on each residual,
    and returns the pair minimizing the total distortion
    ||vec - c1 - c2||^2, breaking ties toward the lexicographically
    smallest index pair. A beam as wide as stage 1 is an exhaustive joint
    search; beam_width 1 is the greedy sequential search.
    """
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    vec = np.asarray(vec, dtype=np.float64)
    stage1, stage2 = codebook.stages
    if vec.shape != (stage1.dim,):
        raise ValueError(f"expected a {stage1.dim}-dim vector, got shape {vec.shape}")
    d1 = ((stage1.codewords - vec) ** 2).sum(axis=1)
    beam = np.sort(np.argsort(d1, kind="stable")[:beam_width])
    best_pair = (0, 0)
    best_dist = np.inf
    for i1 in beam:
        residual = vec - stage1.codewords[i1]
        d2 = ((stage2.codewords - residual) ** 2).sum(axis=1)
        i2 = int(np.argmin(d2))
        if d2[i2] < best_dist:
            best_dist = d2[i2]
            best_pair = (int(i1), i2)
    return best_pair


def msvq_decode(indices: tuple[int, int], codebook: MsvqCodebook) -> np.ndarray:
    """Sum of the selected stage codewords."""
    if len(indices) != len(codebook.stages):
        raise ValueError("one index per stage is required")
    return sum(vq_decode(i, stage) for i, stage in zip(indices, codebook.stages))


def quantize_frame(z: np.ndarray, codebooks: CodebookSet,
                   beam_width: int = DEFAULT_BEAM_WIDTH) -> FrameCode:
    """Quantize one MFCC frame: z[0] through the scalar codebook, the rest
    through the mode's vector stage(s)."""
    z = np.asarray(z, dtype=np.float64)
    expected = 1 + codebooks.vector_dim
    if z.shape != (expected,):
        raise ValueError(f"expected a {expected}-dim frame, got shape {z.shape}")
    sq_index = sq_encode(z[0], codebooks.scalar)
    if codebooks.rate_mode is RateMode.R1000:
        vq_indices = (vq_encode(z[1:], codebooks.vector),)
    else:
        vq_indices = msvq_encode(z[1:], codebooks.msvq, beam_width)
    return FrameCode(sq_index, vq_indices)


def dequantize_frame(code: FrameCode, codebooks: CodebookSet) -> np.ndarray:
    """Reconstruct the 1 + dim coefficient vector selected by a FrameCode."""
    if len(code.vq_indices) != len(codebooks.stage_codebooks):
        raise ValueError("frame code does not match the codebook's stage count")
    out = np.empty(1 + codebooks.vector_dim)
    out[0] = sq_decode(code.sq_index, codebooks.scalar)
    if codebooks.rate_mode is RateMode.R1000:
        out[1:] = vq_decode(code.vq_indices[0], codebooks.vector)
    else:
        out[1:] = msvq_decode(code.vq_indices, codebooks.msvq)
    return out

"""Bit-exact stream container for encoded frames.

A stream is an 18-byte header followed by the packed frame payload:

    offset  size  field
    0       4     magic "MVQC"
    4       1     version (0x01)
    5       1     rate mode: 0 = 1000 bit/s, 1 = 2000 bit/s
    6       4     frame count, unsigned 32-bit little-endian
    10      8     codebook content hash, unsigned 64-bit little-endian

Payload frames are concatenated MSB-first in field order: scalar index, then
the VQ stage index(es). Field widths are fixed per mode (4+12 bits or
6+13+13 bits, so 16 or 32 bits per frame) regardless of the trained codebook
sizes, and the payload is zero-padded to a whole byte at the end. The header
is not counted in the payload bit rate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import FrameConfig
from .errors import FormatError
from .quantizer import FrameCode, RateMode

STREAM_MAGIC = b"MVQC"
STREAM_VERSION = 1
HEADER_LEN = 18


@dataclass(frozen=True, eq=False)
class EncodedStream:
    """Parsed stream header plus the packed payload bytes."""

    rate_mode: RateMode
    frame_count: int
    codebook_hash: int
    payload: bytes
    version: int = STREAM_VERSION

    def __post_init__(self) -> None:
        if self.frame_count < 0:
            raise ValueError("frame_count must be non-negative")
        if not 0 <= self.codebook_hash < 2 ** 64:
            raise ValueError("codebook_hash must fit in 64 bits")
        expected = _payload_len(self.rate_mode, self.frame_count)
        if len(self.payload) != expected:
            raise ValueError(
                f"payload is {len(self.payload)} bytes, expected {expected} "
                f"for {self.frame_count} frames"
            )

    def to_bytes(self) -> bytes:
        header = (
            STREAM_MAGIC
            + bytes([self.version, self.rate_mode.wire_byte])
            + self.frame_count.to_bytes(4, "little")
            + self.codebook_hash.to_bytes(8, "little")
        )
        return header + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "EncodedStream":
        if len(data) < HEADER_LEN:
            raise FormatError("stream shorter than its fixed header")
        if data[:4] != STREAM_MAGIC:
            raise FormatError(f"bad stream magic {data[:4]!r}")
        if data[4] != STREAM_VERSION:
            raise FormatError(f"unsupported stream version {data[4]}")
        try:
            mode = RateMode.from_wire_byte(data[5])
        except ValueError as exc:
            raise FormatError(str(exc)) from exc
        frame_count = int.from_bytes(data[6:10], "little")
        codebook_hash = int.from_bytes(data[10:18], "little")
        expected = _payload_len(mode, frame_count)
        payload = data[HEADER_LEN:]
        if len(payload) < expected:
            raise FormatError(
                f"truncated payload: {len(payload)} bytes for {frame_count} frames"
            )
        if len(payload) > expected:
            raise FormatError(
                f"trailing garbage: {len(payload) - expected} bytes beyond the payload"
            )
        return cls(mode, frame_count, codebook_hash, payload)


def _payload_len(mode: RateMode, frame_count: int) -> int:
    return (frame_count * mode.bits_per_frame + 7) // 8


def _field_layout(mode: RateMode) -> tuple[tuple[int, ...], np.dtype]:
    widths = (mode.sq_field_bits,) + mode.vq_field_bits
    dtype = np.dtype(">u2") if mode.bits_per_frame == 16 else np.dtype(">u4")
    return widths, dtype


def pack(codes: list[FrameCode], mode: RateMode, codebook_hash: int) -> EncodedStream:
    """Pack frame codes into a stream, validating every index against the
    mode's fixed field widths."""
    widths, dtype = _field_layout(mode)
    words = np.zeros(len(codes), dtype=np.uint64)
    for n, code in enumerate(codes):
        fields = (code.sq_index,) + code.vq_indices
        if len(fields) != len(widths):
            raise ValueError(
                f"frame {n}: {len(fields) - 1} VQ indices, "
                f"{mode.name} packs {len(widths) - 1}"
            )
        word = 0
        for value, width in zip(fields, widths):
            if not 0 <= value < (1 << width):
                raise ValueError(
                    f"frame {n}: index {value} does not fit in {width} bits"
                )
            word = (word << width) | value
        words[n] = word
    payload = words.astype(dtype).tobytes()
    return EncodedStream(mode, len(codes), codebook_hash, payload)


def stream_codes(stream: EncodedStream) -> tuple[FrameCode, ...]:
    """Decode the packed payload back into per-frame indices."""
    widths, dtype = _field_layout(stream.rate_mode)
    words = np.frombuffer(stream.payload, dtype=dtype, count=stream.frame_count)
    codes = []
    for word in words.astype(np.uint64):
        fields = []
        remaining = int(word)
        for width in reversed(widths):
            fields.append(remaining & ((1 << width) - 1))
            remaining >>= width
        fields.reverse()
        codes.append(FrameCode(fields[0], tuple(fields[1:])))
    return tuple(codes)


def unpack(data: bytes) -> tuple[RateMode, int, tuple[FrameCode, ...]]:
    """Parse a serialized stream into its mode, codebook hash, and codes."""
    stream = EncodedStream.from_bytes(data)
    return stream.rate_mode, stream.codebook_hash, stream_codes(stream)


def stream_bitrate(stream: EncodedStream, config: FrameConfig | None = None) -> float:
    """Payload bit rate in bit/s: bits per frame times frames per second.

    Computed from integers (bits * sample_rate / frame_shift), so the nominal
    operating points come out exactly 1000.0 and 2000.0.
    """
    cfg = config or FrameConfig()
    return stream.rate_mode.bits_per_frame * cfg.sample_rate_hz / cfg.frame_shift

"""Byte telemetry between the sleeve firmware and the host.

Frame layout (integers little-endian):

    magic 0xA5 | version 0x01 | kind u8 | payload_len u8 | payload | crc16 u16

kind 0x01, sensor, payload 14 octets: timestamp_ms u32 + 5 ADC counts u16.
kind 0x02, diagnostic, payload 7 octets: timestamp_ms u32 + class u8
+ probability u16 in basis points (0..10000).

The CRC is CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no
xorout) over every octet before it, magic included. The decoder never trusts
alignment: it scans for the magic, validates the header fields it can see,
and on any mismatch advances a single octet and rescans, counting what it
skipped. Results are invariant to how the byte stream is chunked.
"""

from __future__ import annotations

import struct
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Union

from .dataset import SensorFrame
from .errors import WireFormatError
from .forest import ForestClassifier, vote_fraction
from .validation import (
    ADC_MAX,
    N_SENSORS,
    check_is_fitted,
    check_probability_threshold,
)

FRAME_MAGIC = 0xA5
WIRE_VERSION = 0x01
KIND_SENSOR = 0x01
KIND_DIAGNOSTIC = 0x02

_PAYLOAD_LEN = {KIND_SENSOR: 14, KIND_DIAGNOSTIC: 7}
_HEADER_LEN = 4
_CRC_LEN = 2

_SENSOR_PAYLOAD = struct.Struct("<I5H")
_DIAG_PAYLOAD = struct.Struct("<IBH")

BASIS_POINTS = 10_000


def _crc16_table() -> tuple[int, ...]:
    table = []
    for byte in range(256):
        crc = byte << 8
        for _ in range(8):
            crc = ((crc << 1) ^ 0x1021) if crc & 0x8000 else (crc << 1)
            crc &= 0xFFFF
        table.append(crc)
    return tuple(table)


_CRC16_TABLE = _crc16_table()


def crc16(data: bytes) -> int:
    """CRC-16/CCITT-FALSE. crc16(b"123456789") == 0x29B1, crc16(b"") == 0xFFFF."""
    crc = 0xFFFF
    for b in data:
        crc = ((crc << 8) & 0xFFFF) ^ _CRC16_TABLE[((crc >> 8) ^ b) & 0xFF]
    return crc


@dataclass(frozen=True)
class DiagnosticEvent:
    """One classifier verdict: timestamp, class, and the vote fraction."""

    timestamp_ms: int
    label: int
    probability: float


def _check_timestamp(ts: int) -> int:
    if not isinstance(ts, int) or not 0 <= ts <= 0xFFFFFFFF:
        raise WireFormatError(f"timestamp {ts!r} outside the u32 field")
    return ts


def encode_sensor_frame(frame: SensorFrame) -> bytes:
    """20-octet sensor frame."""
    ts = _check_timestamp(frame.timestamp_ms)
    body = bytes((FRAME_MAGIC, WIRE_VERSION, KIND_SENSOR, _PAYLOAD_LEN[KIND_SENSOR]))
    body += _SENSOR_PAYLOAD.pack(ts, *frame.counts)
    return body + struct.pack("<H", crc16(body))


def encode_diagnostic_event(event: DiagnosticEvent) -> bytes:
    """13-octet diagnostic frame; probability is quantized to basis points."""
    ts = _check_timestamp(event.timestamp_ms)
    if event.label not in (0, 1):
        raise WireFormatError(f"class {event.label!r} must be 0 or 1")
    if not 0.0 <= event.probability <= 1.0:
        raise WireFormatError(f"probability {event.probability!r} outside [0, 1]")
    bp = round(event.probability * BASIS_POINTS)
    body = bytes((FRAME_MAGIC, WIRE_VERSION, KIND_DIAGNOSTIC, _PAYLOAD_LEN[KIND_DIAGNOSTIC]))
    body += _DIAG_PAYLOAD.pack(ts, event.label, bp)
    return body + struct.pack("<H", crc16(body))


def _parse_payload(kind: int, payload: bytes) -> Union[SensorFrame, DiagnosticEvent]:
    if kind == KIND_SENSOR:
        ts, *counts = _SENSOR_PAYLOAD.unpack(payload)
        for c in counts:
            if c > ADC_MAX:
                raise ValueError("count above 12-bit range")
        return SensorFrame(ts, tuple(counts))
    ts, label, bp = _DIAG_PAYLOAD.unpack(payload)
    if label not in (0, 1):
        raise ValueError("bad class byte")
    if bp > BASIS_POINTS:
        raise ValueError("basis points above 10000")
    return DiagnosticEvent(ts, label, bp / BASIS_POINTS)


class StreamDecoder:
    """Incremental resynchronizing frame decoder. Single-owner, not thread-safe.

    feed() returns the frames completed by the new bytes; skipped counts every
    octet discarded while hunting for a valid frame. close() drops and counts
    whatever is still buffered.
    """

    def __init__(self):
        self._buf = bytearray()
        self.skipped = 0

    @property
    def pending(self) -> int:
        return len(self._buf)

    def feed(self, data: bytes) -> list[Union[SensorFrame, DiagnosticEvent]]:
        self._buf += data
        out: list[Union[SensorFrame, DiagnosticEvent]] = []
        buf = self._buf
        pos = 0
        while True:
            hit = buf.find(FRAME_MAGIC, pos)
            if hit < 0:
                self.skipped += len(buf) - pos
                pos = len(buf)
                break
            self.skipped += hit - pos
            pos = hit
            avail = len(buf) - pos
            # validate what we can see; anything off means this 0xA5 was noise
            if avail >= 2 and buf[pos + 1] != WIRE_VERSION:
                pos += 1
                self.skipped += 1
                continue
            if avail >= 3 and buf[pos + 2] not in _PAYLOAD_LEN:
                pos += 1
                self.skipped += 1
                continue
            if avail >= 4 and buf[pos + 3] != _PAYLOAD_LEN[buf[pos + 2]]:
                pos += 1
                self.skipped += 1
                continue
            if avail < _HEADER_LEN:
                break  # incomplete header, wait for more bytes
            total = _HEADER_LEN + buf[pos + 3] + _CRC_LEN
            if avail < total:
                break  # incomplete frame, wait
            frame = bytes(buf[pos : pos + total])
            (stored,) = struct.unpack("<H", frame[-2:])
            if crc16(frame[:-2]) != stored:
                pos += 1
                self.skipped += 1
                continue
            try:
                out.append(_parse_payload(frame[2], frame[4:-2]))
            except ValueError:
                # checksummed but nonsensical; treat like line noise
                pos += 1
                self.skipped += 1
                continue
            pos += total
        del self._buf[:pos]
        return out

    def close(self) -> int:
        """Discard any buffered partial frame, counting it as skipped."""
        leftover = len(self._buf)
        self.skipped += leftover
        self._buf.clear()
        return leftover


def decode_stream(
    chunks: Iterable[bytes],
) -> tuple[list[Union[SensorFrame, DiagnosticEvent]], int]:
    """Decode a whole chunked stream; returns (frames, skipped octets)."""
    dec = StreamDecoder()
    frames: list[Union[SensorFrame, DiagnosticEvent]] = []
    for chunk in chunks:
        frames += dec.feed(chunk)
    dec.close()
    return frames, dec.skipped


def replay(frames: Iterable[SensorFrame], rate_hz: float | None = None):
    """Yield sensor frames, paced to rate_hz when given, else back to back."""
    if rate_hz is not None and not rate_hz > 0:
        raise ValueError("rate_hz must be positive")
    period = 1.0 / rate_hz if rate_hz else 0.0
    for frame in frames:
        yield frame
        if period:
            time.sleep(period)


@dataclass
class PipelineResult:
    events: list[DiagnosticEvent] = field(default_factory=list)
    skipped: int = 0


def _coerce_frame(item) -> tuple[int, tuple[int, ...]]:
    if isinstance(item, SensorFrame):
        return item.timestamp_ms, item.counts
    ts, counts = item
    frame = SensorFrame(int(ts), tuple(int(c) for c in counts))
    return frame.timestamp_ms, frame.counts


def run_pipeline(
    frames: Iterable,
    forest: ForestClassifier,
    threshold: float = 0.5,
    debounce_window: int = 1,
) -> PipelineResult:
    """Classify a frame stream into diagnostic events.

    Each frame gets the forest's vote fraction as its probability; the
    emitted class is the majority over the last debounce_window per-frame
    classes (window 1, the default, is per-frame and keeps class consistent
    with probability >= threshold). Malformed frames are skipped and counted,
    never fatal.
    """
    threshold = check_probability_threshold(threshold)
    if debounce_window < 1 or debounce_window % 2 == 0:
        raise ValueError("debounce_window must be a positive odd integer")
    check_is_fitted(forest, "trees_")
    if forest.n_features_in_ != N_SENSORS:
        raise ValueError(
            f"model expects {forest.n_features_in_} features, frames carry {N_SENSORS}"
        )
    result = PipelineResult()
    window: deque[int] = deque(maxlen=debounce_window)
    for item in frames:
        try:
            ts, counts = _coerce_frame(item)
        except (ValueError, TypeError):
            result.skipped += 1
            continue
        proba = vote_fraction(forest, counts)
        window.append(1 if proba >= threshold else 0)
        # majority over the window; a tie in a still-filling window goes positive
        label = 1 if 2 * sum(window) >= len(window) else 0
        result.events.append(DiagnosticEvent(ts, label, proba))
    return result

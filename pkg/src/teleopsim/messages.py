"""Binary wire format for all telemetry/command streams.

Every frame is a 20-byte little-endian header followed by a type-specific
payload:

    magic        2 bytes, fixed 0x54 0x4C
    version      u8
    type_id      u8
    sequence     u32, strictly increasing per stream
    timestamp_ns u64, sending clock
    payload_len  u32

The wearable batch payload packs per hand: hand_id (u8), joint count J (u8),
J float32 angles, actuator count K (u8), K float32 forces, K float32 vibro
amplitudes; so a frame carrying H hands is 20 + sum_h (3 + 4*J_h + 8*K_h)
bytes. All real values travel as float32.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import IntEnum

from .errors import TeleopsimError, ValidationError

MAGIC = b"\x54\x4c"
WIRE_VERSION = 1
HEADER_SIZE = 20
_HEADER_FMT = "<2sBBIQI"

DEFAULT_MAX_FORCE_N = 50.0


class WireError(TeleopsimError):
    """Base class for framing/codec errors."""


class EncodeError(WireError):
    """Message cannot be represented in the wire format."""


class CorruptFrameError(WireError):
    """Frame bytes violate the format (bad magic, garbage structure)."""


class TruncatedFrameError(WireError):
    """Frame is shorter than its header or payload_len declares."""


class UnsupportedTypeError(WireError):
    """Frame carries a type_id this decoder does not handle."""


class MessageType(IntEnum):
    WEARABLE = 0x01
    FEET = 0x02
    TRACKER = 0x03
    TRIPLET = 0x04
    JOINT_REFS = 0x05
    STATE = 0x06
    PING = 0x07
    PONG = 0x08


#: message types a bridge route may carry, by config name
SUPPORTED_TYPES = {t.name.lower(): t for t in MessageType}


class Hand(IntEnum):
    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class MessageHeader:
    version: int
    type_id: int
    sequence: int
    timestamp_ns: int
    payload_len: int


def pack_header(header: MessageHeader) -> bytes:
    return struct.pack(
        _HEADER_FMT,
        MAGIC,
        header.version,
        header.type_id,
        header.sequence,
        header.timestamp_ns,
        header.payload_len,
    )


def parse_header(data: bytes) -> MessageHeader:
    if len(data) < HEADER_SIZE:
        raise TruncatedFrameError(f"frame of {len(data)} bytes is shorter than the {HEADER_SIZE}-byte header")
    magic, version, type_id, sequence, timestamp_ns, payload_len = struct.unpack_from(_HEADER_FMT, data)
    if magic != MAGIC:
        raise CorruptFrameError(f"bad magic {magic!r}")
    return MessageHeader(version, type_id, sequence, timestamp_ns, payload_len)


def frame_payload(type_id: int, payload: bytes, sequence: int, timestamp_ns: int,
                  version: int = WIRE_VERSION) -> bytes:
    header = MessageHeader(version, int(type_id), sequence, timestamp_ns, len(payload))
    return pack_header(header) + payload


def split_frame(data: bytes) -> tuple[MessageHeader, bytes]:
    """Parse and length-check a frame, returning (header, payload)."""
    header = parse_header(data)
    payload = data[HEADER_SIZE:]
    if len(payload) != header.payload_len:
        raise TruncatedFrameError(
            f"payload_len says {header.payload_len} bytes, frame carries {len(payload)}"
        )
    return header, payload


@dataclass(frozen=True)
class HandFrame:
    """Joint state plus haptic feedback for one hand."""

    hand_id: Hand
    joint_angles: tuple[float, ...]
    force_feedback: tuple[float, ...]
    vibro_amplitude: tuple[float, ...]

    def validate(self, max_force_n: float = DEFAULT_MAX_FORCE_N) -> None:
        if len(self.force_feedback) != len(self.vibro_amplitude):
            raise ValidationError("force and vibro lists must cover the same actuators")
        for name, values in (("joint_angles", self.joint_angles),
                             ("force_feedback", self.force_feedback),
                             ("vibro_amplitude", self.vibro_amplitude)):
            if len(values) > 255:
                raise EncodeError(f"{name} has {len(values)} entries, wire format caps at 255")
        for v in self.vibro_amplitude:
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"vibro amplitude {v} outside [0, 1]")
        for f in self.force_feedback:
            if not 0.0 <= f <= max_force_n:
                raise ValidationError(f"force {f} N outside [0, {max_force_n}]")


@dataclass(frozen=True)
class WearableBatch:
    """All per-finger state for up to two hands in a single message."""

    hands: tuple[HandFrame, ...]

    def validate(self, max_force_n: float = DEFAULT_MAX_FORCE_N) -> None:
        ids = [h.hand_id for h in self.hands]
        if len(set(ids)) != len(ids):
            raise ValidationError("at most one HandFrame per hand_id")
        if len(self.hands) > 2:
            raise ValidationError("a batch carries at most two hands")
        for hand in self.hands:
            hand.validate(max_force_n)


def wearable_payload_size(joints: int, actuators: int, hands: int = 2) -> int:
    """Payload bytes for a batch of identical hands."""
    return hands * (3 + 4 * joints + 8 * actuators)


def wearable_frame_size(joints: int, actuators: int, hands: int = 2) -> int:
    return HEADER_SIZE + wearable_payload_size(joints, actuators, hands)


def encode(batch: WearableBatch, sequence: int, timestamp_ns: int,
           max_force_n: float = DEFAULT_MAX_FORCE_N) -> bytes:
    """Serialize a wearable batch. Identical input produces identical bytes."""
    batch.validate(max_force_n)
    payload = bytearray()
    for hand in batch.hands:
        j = len(hand.joint_angles)
        k = len(hand.force_feedback)
        payload += struct.pack("<BB", int(hand.hand_id), j)
        payload += struct.pack(f"<{j}f", *hand.joint_angles)
        payload += struct.pack("<B", k)
        payload += struct.pack(f"<{k}f", *hand.force_feedback)
        payload += struct.pack(f"<{k}f", *hand.vibro_amplitude)
    return frame_payload(MessageType.WEARABLE, bytes(payload), sequence, timestamp_ns)


def decode(data: bytes) -> WearableBatch:
    """Inverse of :func:`encode`; bit-exact for float32-representable values."""
    header, payload = split_frame(data)
    if header.type_id != MessageType.WEARABLE:
        raise UnsupportedTypeError(f"expected wearable frame, got type_id {header.type_id}")
    hands: list[HandFrame] = []
    offset = 0
    n = len(payload)
    while offset < n:
        if n - offset < 2:
            raise TruncatedFrameError("hand block truncated before joint count")
        hand_raw, j = struct.unpack_from("<BB", payload, offset)
        offset += 2
        try:
            hand_id = Hand(hand_raw)
        except ValueError as exc:
            raise CorruptFrameError(f"unknown hand_id {hand_raw}") from exc
        if n - offset < 4 * j + 1:
            raise TruncatedFrameError("joint angles truncated")
        angles = struct.unpack_from(f"<{j}f", payload, offset)
        offset += 4 * j
        (k,) = struct.unpack_from("<B", payload, offset)
        offset += 1
        if n - offset < 8 * k:
            raise TruncatedFrameError("actuator arrays truncated")
        forces = struct.unpack_from(f"<{k}f", payload, offset)
        offset += 4 * k
        vibro = struct.unpack_from(f"<{k}f", payload, offset)
        offset += 4 * k
        hands.append(HandFrame(hand_id, angles, forces, vibro))
    batch = WearableBatch(tuple(hands))
    if len({h.hand_id for h in batch.hands}) != len(batch.hands):
        raise CorruptFrameError("duplicate hand_id in frame")
    return batch


def pack_f32(*values: float) -> bytes:
    return struct.pack(f"<{len(values)}f", *values)


def unpack_f32(payload: bytes) -> tuple[float, ...]:
    if len(payload) % 4:
        raise TruncatedFrameError(f"float payload of {len(payload)} bytes is not a multiple of 4")
    return struct.unpack(f"<{len(payload) // 4}f", payload)


# Fixed float32-vector payload layouts for the remaining command/state types.
# feet:    pLx pLy yawL pRx pRy yawR                    (waist frame)
# tracker: px py pz qw qx qy qz                         (world frame)
# triplet: v omega v_lat
# state:   x y theta v omega v_lat q0..q{n-1}
# joint_refs: 3n floats, position/velocity/acceleration per joint
# ping/pong:  one float carrying the opaque client stamp

FEET_FLOATS = 6
TRACKER_FLOATS = 7
TRIPLET_FLOATS = 3


def decode_vector(data: bytes, expected_type: MessageType,
                  expected_len: int | None = None) -> tuple[MessageHeader, tuple[float, ...]]:
    header, payload = split_frame(data)
    if header.type_id != expected_type:
        raise UnsupportedTypeError(
            f"expected {expected_type.name.lower()} frame, got type_id {header.type_id}"
        )
    values = unpack_f32(payload)
    if expected_len is not None and len(values) != expected_len:
        raise CorruptFrameError(
            f"{expected_type.name.lower()} payload has {len(values)} floats, expected {expected_len}"
        )
    return header, values


class Framer:
    """Per-stream framing helper: owns the monotonic sequence counter."""

    def __init__(self, type_id: MessageType, clock=None) -> None:
        self.type_id = type_id
        self._clock = clock
        self._sequence = 0

    def _stamp(self, timestamp_ns: int | None) -> tuple[int, int]:
        seq = self._sequence
        self._sequence += 1
        if timestamp_ns is None:
            timestamp_ns = self._clock.now_ns() if self._clock is not None else 0
        return seq, timestamp_ns

    def frame(self, payload: bytes, timestamp_ns: int | None = None) -> bytes:
        seq, ts = self._stamp(timestamp_ns)
        return frame_payload(self.type_id, payload, seq, ts)

    def frame_floats(self, *values: float, timestamp_ns: int | None = None) -> bytes:
        return self.frame(pack_f32(*values), timestamp_ns=timestamp_ns)

    def frame_batch(self, batch: WearableBatch, timestamp_ns: int | None = None,
                    max_force_n: float = DEFAULT_MAX_FORCE_N) -> bytes:
        seq, ts = self._stamp(timestamp_ns)
        return encode(batch, seq, ts, max_force_n)

"""Stream bandwidth accounting.

A stream is (rate_hz, payload_bytes); every frame additionally carries the
20-byte wire header, so the line rate is rate_hz * (payload + 20) * 8 bits/s.
Integer inputs stay in exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ValidationError
from .messages import HEADER_SIZE


@dataclass(frozen=True)
class StreamSpec:
    name: str
    rate_hz: float
    payload_bytes: int

    def __post_init__(self) -> None:
        if self.rate_hz < 0:
            raise ValidationError(f"stream {self.name!r}: rate_hz must be >= 0")
        if self.payload_bytes < 0:
            raise ValidationError(f"stream {self.name!r}: payload_bytes must be >= 0")

    @property
    def frame_bytes(self) -> int:
        return self.payload_bytes + HEADER_SIZE


def stream_bandwidth(spec: StreamSpec) -> float:
    """Line rate in bits/s including per-frame header overhead."""
    return spec.rate_hz * spec.frame_bytes * 8


@dataclass(frozen=True)
class BudgetLine:
    name: str
    rate_hz: float
    frame_bytes: int
    bits_per_s: float


@dataclass(frozen=True)
class BudgetReport:
    lines: tuple[BudgetLine, ...]
    total_bps: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "total_bps", sum(line.bits_per_s for line in self.lines))

    def render(self, title: str = "stream budget") -> str:
        rows = [f"# {title}", f"{'stream':<24}{'rate_hz':>10}{'frame_B':>10}{'bits/s':>14}{'mbit/s':>10}"]
        for line in self.lines:
            rows.append(
                f"{line.name:<24}{line.rate_hz:>10g}{line.frame_bytes:>10d}"
                f"{line.bits_per_s:>14,.0f}{line.bits_per_s / 1e6:>10.3f}"
            )
        rows.append(f"{'TOTAL':<24}{'':>10}{'':>10}{self.total_bps:>14,.0f}{self.total_bps / 1e6:>10.3f}")
        return "\n".join(rows)


def budget_report(specs: list[StreamSpec]) -> BudgetReport:
    lines = tuple(
        BudgetLine(s.name, s.rate_hz, s.frame_bytes, stream_bandwidth(s)) for s in specs
    )
    return BudgetReport(lines)

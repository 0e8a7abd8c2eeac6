"""Operator traces: file-backed input for scripted runs.

Plain-text format, one sample per line, '#' comments:

    t  pLx pLy yawL  pRx pRy yawR  hx hy hz  g0 .. g{G-1}

t in seconds (strictly increasing, fixed step), foot positions/yaws in the
waist frame, hand tracker position in world meters, then G glove joint
angles in radians. G is constant across the file.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .locomotion import FootStance

_FIXED_COLUMNS = 10


@dataclass(frozen=True)
class TraceSample:
    t: float
    stance: FootStance
    hand_pos: tuple[float, float, float]
    glove: tuple[float, ...]


@dataclass(frozen=True)
class OperatorTrace:
    samples: tuple[TraceSample, ...]

    def __post_init__(self) -> None:
        if not self.samples:
            raise ConfigError("trace has no samples")
        times = [s.t for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ConfigError("trace timestamps must be strictly increasing")
        gloves = {len(s.glove) for s in self.samples}
        if len(gloves) != 1:
            raise ConfigError("glove joint count must be constant across the trace")

    @property
    def duration_s(self) -> float:
        return self.samples[-1].t

    @property
    def rate_hz(self) -> float:
        if len(self.samples) < 2:
            return 0.0
        return (len(self.samples) - 1) / (self.samples[-1].t - self.samples[0].t)

    @property
    def glove_joints(self) -> int:
        return len(self.samples[0].glove)


def load_trace(path: str | Path) -> OperatorTrace:
    path = Path(path)
    samples: list[TraceSample] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: non-numeric column ({exc})") from exc
        if len(values) < _FIXED_COLUMNS:
            raise ConfigError(
                f"{path}:{lineno}: expected at least {_FIXED_COLUMNS} columns, got {len(values)}"
            )
        t, plx, ply, yawl, prx, pry, yawr, hx, hy, hz = values[:_FIXED_COLUMNS]
        samples.append(TraceSample(
            t=t,
            stance=FootStance((plx, ply), (prx, pry), yawl, yawr),
            hand_pos=(hx, hy, hz),
            glove=tuple(values[_FIXED_COLUMNS:]),
        ))
    return OperatorTrace(tuple(samples))


def save_trace(trace: OperatorTrace, path: str | Path) -> None:
    path = Path(path)
    lines = ["# teleopsim trace v1",
             "# t pLx pLy yawL pRx pRy yawR hx hy hz g0..g{n-1}"]
    for s in trace.samples:
        cols = [s.t,
                s.stance.p_left[0], s.stance.p_left[1], s.stance.yaw_left,
                s.stance.p_right[0], s.stance.p_right[1], s.stance.yaw_right,
                *s.hand_pos, *s.glove]
        lines.append(" ".join(repr(float(c)) for c in cols))
    path.write_text("\n".join(lines) + "\n")

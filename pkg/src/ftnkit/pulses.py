"""Modulating pulses: SRRC/RC and rectangular/triangular pairs.

Square-root pulses (SRRC, RECT) are what the transmitter emits; their matched
composites (RC, TRI) are what the receiver sees after matched filtering.
Time pulses are normalised so the composite peaks at 1 (``h[0] = 1``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np


class PulseFamily(enum.Enum):
    SRRC = "srrc"
    RC = "rc"
    RECT = "rect"
    TRI = "tri"

    @classmethod
    def parse(cls, name: "str | PulseFamily") -> "PulseFamily":
        if isinstance(name, PulseFamily):
            return name
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            raise ValueError(f"unknown pulse family {name!r}") from None


_COMPOSITE = {
    PulseFamily.SRRC: PulseFamily.RC,
    PulseFamily.RC: PulseFamily.RC,
    PulseFamily.RECT: PulseFamily.TRI,
    PulseFamily.TRI: PulseFamily.TRI,
}


@dataclass(frozen=True)
class PulseSpec:
    """A pulse family with roll-off ``alpha``, Nyquist period ``T`` and a
    truncation half-width of ``span`` periods. ``alpha`` is ignored for
    RECT and TRI."""

    family: PulseFamily = PulseFamily.SRRC
    alpha: float = 0.3
    T: float = 1.0
    span: float = 16.0

    def __post_init__(self):
        object.__setattr__(self, "family", PulseFamily.parse(self.family))
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not self.T > 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if not self.span >= 1:
            raise ValueError(f"span must be >= 1, got {self.span}")

    @property
    def composite_family(self) -> PulseFamily:
        return _COMPOSITE[self.family]

    @property
    def is_composite(self) -> bool:
        return self.family in (PulseFamily.RC, PulseFamily.TRI)

    @property
    def bandlimited(self) -> bool:
        return self.composite_family is PulseFamily.RC

    def band_edge(self) -> float:
        """Highest frequency where the composite spectrum is nonzero."""
        if self.bandlimited:
            return (1 + self.alpha) / (2 * self.T)
        return np.inf

    def time(self, t):
        """The pulse itself at times ``t``."""
        return _TIME[self.family](np.asarray(t, dtype=float), self.alpha, self.T)

    def composite_time(self, t):
        """Transmit pulse convolved with its matched filter, at times ``t``."""
        return _TIME[self.composite_family](np.asarray(t, dtype=float), self.alpha, self.T)

    def composite_spectrum(self, f):
        """CTFT of the composite pulse in seconds (integrates to ``h(0) = 1``)."""
        f = np.asarray(f, dtype=float)
        if self.composite_family is PulseFamily.RC:
            return rc_ctft(f, self.alpha, self.T)
        return self.T * tri_ctft(f, self.T)


def rc_ctft(f, alpha: float, T: float = 1.0):
    """Raised-cosine spectrum: ``T`` on the flat part, cosine roll-off, 0 past
    ``(1 + alpha) / 2T``."""
    af = np.abs(np.asarray(f, dtype=float))
    lo = (1 - alpha) / (2 * T)
    hi = (1 + alpha) / (2 * T)
    out = np.where(af <= lo, T, 0.0)
    if alpha > 0:
        band = (af > lo) & (af <= hi)
        roll = 0.5 * T * (1 + np.cos(np.pi * T / alpha * (af - lo)))
        out = np.where(band, roll, out)
    return out[()] if out.ndim == 0 else out


def tri_ctft(f, T: float = 1.0):
    """``sinc^2(fT)``, normalised to 1 at ``f = 0``."""
    out = np.sinc(np.asarray(f, dtype=float) * T) ** 2
    return out[()] if np.ndim(out) == 0 else out


def srrc_ctft(f, alpha: float, T: float = 1.0):
    return np.sqrt(rc_ctft(f, alpha, T))


def srrc_time(t, alpha: float, T: float = 1.0):
    """Unit-energy square-root raised cosine, so (h*h)(0) = 1."""
    x = np.asarray(t, dtype=float) / T
    scale = 1.0 / np.sqrt(T)
    if alpha == 0:
        out = scale * np.sinc(x)
        return out[()] if out.ndim == 0 else out
    num = np.sin(np.pi * x * (1 - alpha)) + 4 * alpha * x * np.cos(np.pi * x * (1 + alpha))
    den = np.pi * x * (1 - (4 * alpha * x) ** 2)
    at_zero = np.isclose(x, 0.0, atol=1e-12)
    at_pole = np.isclose(np.abs(x), 1 / (4 * alpha), rtol=0, atol=1e-10)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out = np.where(at_zero, 1 - alpha + 4 * alpha / np.pi, out)
    pole_val = alpha / np.sqrt(2) * (
        (1 + 2 / np.pi) * np.sin(np.pi / (4 * alpha))
        + (1 - 2 / np.pi) * np.cos(np.pi / (4 * alpha))
    )
    out = scale * np.where(at_pole, pole_val, out)
    return out[()] if out.ndim == 0 else out


def rc_time(t, alpha: float, T: float = 1.0):
    """Raised cosine with unit peak."""
    x = np.asarray(t, dtype=float) / T
    if alpha == 0:
        out = np.sinc(x)
        return out[()] if out.ndim == 0 else out
    at_pole = np.isclose(np.abs(x), 1 / (2 * alpha), rtol=0, atol=1e-10)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sinc(x) * np.cos(np.pi * alpha * x) / (1 - (2 * alpha * x) ** 2)
    out = np.where(at_pole, np.pi / 4 * np.sinc(1 / (2 * alpha)), out)
    return out[()] if out.ndim == 0 else out


def rect_time(t, alpha: float = 0.0, T: float = 1.0):
    """Unit-energy rectangle of width T; rect*rect is the triangle."""
    t = np.asarray(t, dtype=float)
    out = np.where(np.abs(t) < T / 2, 1.0 / np.sqrt(T), 0.0)
    out = np.where(np.isclose(np.abs(t), T / 2), 0.5 / np.sqrt(T), out)
    return out[()] if out.ndim == 0 else out


def tri_time(t, alpha: float = 0.0, T: float = 1.0):
    out = np.maximum(0.0, 1.0 - np.abs(np.asarray(t, dtype=float)) / T)
    return out[()] if np.ndim(out) == 0 else out


_TIME = {
    PulseFamily.SRRC: srrc_time,
    PulseFamily.RC: rc_time,
    PulseFamily.RECT: rect_time,
    PulseFamily.TRI: tri_time,
}


def sample(p: PulseSpec, step: float, composite: bool = False):
    """Samples of the pulse (or its composite) every ``step`` seconds over
    ``+-span*T``. Returns ``(t, values)``; the centre sample sits at t=0."""
    m = int(np.floor(p.span * p.T / step + 1e-9))
    t = np.arange(-m, m + 1) * step
    values = p.composite_time(t) if composite else p.time(t)
    return t, values


def nyquist_check(p: PulseSpec, spacing: float | None = None, tol: float = 1e-6):
    """Check the zero-ISI criterion of a composite pulse sampled every
    ``spacing`` seconds (default ``T``).

    Returns ``(ok, worst)`` where ``worst`` is the largest off-centre sample
    magnitude within the truncation span.
    """
    if not p.is_composite:
        raise ValueError(
            f"{p.family.name} is a square-root pulse; check its composite "
            f"({p.composite_family.name}) instead"
        )
    step = p.T if spacing is None else spacing
    _, h = sample(p, step)
    centre = h.size // 2
    off = np.delete(h, centre)
    worst = float(np.max(np.abs(off))) if off.size else 0.0
    return worst < tol, worst

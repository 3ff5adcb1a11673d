"""Discrete FTN channel: composite taps, subcarrier gains, DTFT and Toeplitz view."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import toeplitz

from .pulses import PulseFamily, PulseSpec, rc_ctft

TRIM_TOL = 1e-12


def _is_pow2(n: int) -> bool:
    return n >= 2 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class FtnParams:
    tau: float = 0.8
    pulse: PulseSpec = field(default_factory=PulseSpec)
    N: int = 1024

    def __post_init__(self):
        if not 0 < self.tau <= 1:
            raise ValueError(f"tau must lie in (0, 1], got {self.tau}")
        if not _is_pow2(int(self.N)):
            raise ValueError(f"N must be a power of two >= 2, got {self.N}")


@dataclass(frozen=True)
class ChannelTaps:
    """Real, even tap sequence; ``taps[center]`` is h[0]."""

    taps: np.ndarray
    center: int

    def __post_init__(self):
        t = np.asarray(self.taps, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "taps", t)
        if not 0 <= self.center < t.size:
            raise ValueError("center outside tap range")

    @property
    def half_width(self) -> int:
        """Taps on each side of the centre (the channel memory M)."""
        return max(self.center, self.taps.size - 1 - self.center)

    def __len__(self) -> int:
        return self.taps.size

    def at(self, n) -> np.ndarray:
        """h[n] for integer lags, zero outside the stored support."""
        n = np.asarray(n, dtype=int)
        k = n + self.center
        ok = (k >= 0) & (k < self.taps.size)
        return np.where(ok, self.taps[np.clip(k, 0, self.taps.size - 1)], 0.0)


def composite_taps(params: FtnParams) -> ChannelTaps:
    """Sample the composite pulse at ``n*tau*T`` over ``+-span*T``.

    Edge taps whose magnitude is below 1e-12 (exact Nyquist zeros, e.g. every
    off-centre tap at tau=1) are dropped symmetrically.
    """
    p = params.pulse
    step = params.tau * p.T
    m = int(np.floor(p.span * p.T / step + 1e-9))
    n = np.arange(-m, m + 1)
    h = np.asarray(p.composite_time(n * step), dtype=float)
    # enforce exact evenness; the closed forms agree to rounding anyway
    h = 0.5 * (h + h[::-1])
    keep = np.nonzero(np.abs(h) >= TRIM_TOL)[0]
    edge = min(keep[0], h.size - 1 - keep[-1]) if keep.size else m
    h = h[edge: h.size - edge]
    return ChannelTaps(h, h.size // 2)


def subcarrier_gains(taps: ChannelTaps, N: int) -> np.ndarray:
    """N-point DFT of the taps with h[0] rotated to index 0.

    The taps are even, so the result is real (zero phase); it is returned as
    a float array.
    """
    if len(taps) > N:
        raise ValueError(
            f"{len(taps)} taps do not fit in an {N}-point DFT; increase N"
        )
    g = np.zeros(N)
    lags = np.arange(len(taps)) - taps.center
    np.add.at(g, lags % N, taps.taps)
    return np.fft.fft(g).real


def dtft_rc(omega, alpha: float, tau: float, T: float = 1.0):
    """DTFT of ``h_RC(n tau T)`` by summing the shifted RC spectra.

    Only copies with ``|k| <= 2`` can reach ``omega`` in ``[-pi, pi]``, so the
    sum is exact.
    """
    w = np.asarray(omega, dtype=float)
    w = np.mod(w + np.pi, 2 * np.pi) - np.pi
    scale = 2 * np.pi * tau * T
    total = np.zeros_like(w)
    for k in range(-2, 3):
        total = total + rc_ctft((w - 2 * np.pi * k) / scale, alpha, T)
    out = total / (tau * T)
    return out[()] if out.ndim == 0 else out


def dtft_tri(omega, tau: float):
    """DTFT of ``h_tri(n tau T)``; finitely many taps, so a closed cosine sum."""
    w = np.asarray(omega, dtype=float)
    out = np.ones_like(w)
    for n in range(1, int(np.floor(1 / tau + 1e-12)) + 1):
        out = out + 2 * max(0.0, 1 - n * tau) * np.cos(n * w)
    return out[()] if out.ndim == 0 else out


def dtft(omega, pulse: PulseSpec, tau: float):
    """Composite DTFT for either pulse family."""
    if pulse.composite_family is PulseFamily.RC:
        return dtft_rc(omega, pulse.alpha, tau, pulse.T)
    return dtft_tri(omega, tau)


def invertible(alpha: float, tau: float) -> bool:
    """Whether the aliased spectrum stays strictly positive."""
    return (1 + alpha) * tau > 1


def toeplitz_matrix(taps: ChannelTaps, n: int) -> np.ndarray:
    """The ``n x n`` symmetric banded convolution matrix of the taps."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return toeplitz(taps.at(np.arange(n)))

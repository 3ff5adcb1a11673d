"""Monte Carlo OFDM over the FTN ISI channel.

One frame: load bits onto carriers, scale by sqrt(P), IFFT, cyclic prefix,
convolve with the composite taps, add noise, drop the prefix, FFT, one-tap
equalise, demodulate. Transforms are orthonormal, so the per-sample signal
power equals the mean carrier power (1) and noise of variance ``1/snr`` sees
the same SNR on every carrier before the channel gain.

Throughput counts bits of error-free packets (goodput); the raw
correct-bit rate is reported alongside. Both are in bits per second with a
frame lasting ``(N + cp) * tau * T``.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from . import io as _io
from .allocation import waterfill
from .isi import ChannelTaps, FtnParams, composite_taps, dtft, subcarrier_gains
from .loading import (
    DEFAULT_PACKET_BITS,
    ThresholdTable,
    detect_loaded,
    labels_to_bits,
    loading_tx,
    assign_schemes,
)
from .modem import ALL_SCHEMES, ModScheme
from .pulses import PulseSpec


def default_thresholds() -> ThresholdTable:
    """Goodput thresholds derived from the packaged AWGN baseline run."""
    with resources.as_file(resources.files("ftnkit") / "data" / "goodput_thresholds.csv") as p:
        return ThresholdTable.from_csv(p)


@dataclass(frozen=True)
class SimConfig:
    snr_list_db: tuple[float, ...] = tuple(float(x) for x in range(0, 31, 2))
    N: int = 1024
    pulse: PulseSpec = field(default_factory=PulseSpec)
    tau: float = 0.8
    trials: int = 200
    seed: int = 0
    cp_length: int | None = None
    waterfilling: bool = True
    loading: bool = True
    fixed_scheme: ModScheme | None = None
    thresholds: ThresholdTable | None = None
    packet_bits: int = DEFAULT_PACKET_BITS
    colored_noise: bool = False

    def __post_init__(self):
        object.__setattr__(self, "snr_list_db", tuple(float(x) for x in self.snr_list_db))
        if self.fixed_scheme is not None:
            object.__setattr__(self, "fixed_scheme", ModScheme.parse(self.fixed_scheme))
        if not self.snr_list_db:
            raise ValueError("snr_list_db is empty")
        FtnParams(self.tau, self.pulse, self.N)  # validates tau and N
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be >= 1")
        if not self.loading and self.fixed_scheme is None:
            raise ValueError("loading is off, so a fixed_scheme is required")
        if self.cp_length is not None:
            need = len(self.channel()) - 1
            if self.cp_length < need:
                raise ValueError(
                    f"cp_length={self.cp_length} is shorter than the channel memory "
                    f"({need} = taps - 1)"
                )
            if self.cp_length < 0:
                raise ValueError("cp_length must be >= 0")

    def channel(self) -> ChannelTaps:
        return composite_taps(FtnParams(self.tau, self.pulse, self.N))

    @property
    def cp(self) -> int:
        return len(self.channel()) - 1 if self.cp_length is None else self.cp_length

    @property
    def frame_seconds(self) -> float:
        return (self.N + self.cp) * self.tau * self.pulse.T

    def table(self) -> ThresholdTable:
        return self.thresholds if self.thresholds is not None else default_thresholds()

    def label(self) -> str:
        parts = ["wf" if self.waterfilling else "nowf"]
        parts.append("loading" if self.loading else self.fixed_scheme.label)
        return "+".join(parts)

    def to_dict(self) -> dict:
        return {
            "snr_list_db": list(self.snr_list_db),
            "N": self.N,
            "pulse": {"family": self.pulse.family.value, "alpha": self.pulse.alpha,
                      "T": self.pulse.T, "span": self.pulse.span},
            "tau": self.tau,
            "trials": self.trials,
            "seed": self.seed,
            "cp_length": self.cp,
            "waterfilling": self.waterfilling,
            "loading": self.loading,
            "fixed_scheme": None if self.fixed_scheme is None else self.fixed_scheme.label,
            "thresholds": None if not self.loading else
                [[b, s.label] for b, s in self.table().entries],
            "packet_bits": self.packet_bits,
            "colored_noise": self.colored_noise,
        }


@dataclass
class ThroughputRow:
    snr_db: float
    throughput_bps: float
    stderr: float
    trials: int
    correct_bps: float
    correct_stderr: float


@dataclass
class ThroughputCurve:
    rows: list[ThroughputRow]
    config_hash: str
    label: str = ""

    HEADER = ("snr_dB", "throughput_bps", "stderr", "trials", "correct_bits_bps",
              "correct_stderr")

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([r.snr_db for r in self.rows])

    @property
    def throughput(self) -> np.ndarray:
        return np.array([r.throughput_bps for r in self.rows])

    def at(self, snr_db: float) -> ThroughputRow:
        for r in self.rows:
            if r.snr_db == snr_db:
                return r
        raise KeyError(snr_db)

    def to_csv(self, path) -> None:
        _io.write_csv(path, self.HEADER, [
            (r.snr_db, r.throughput_bps, r.stderr, r.trials, r.correct_bps, r.correct_stderr)
            for r in self.rows
        ])


def awgn(length: int, snr_linear: float, rng: np.random.Generator) -> np.ndarray:
    """Circular complex Gaussian noise with variance ``1/snr_linear`` per sample."""
    if not snr_linear > 0:
        raise ValueError("snr_linear must be positive")
    n = rng.standard_normal(2 * int(length)).view(np.complex128)
    return n * math.sqrt(0.5 / snr_linear)


def one_tap_equalize(y, H, P=1.0):
    """Divide each carrier by ``sqrt(P_i) H[i]``; every carrier given must be live."""
    y = np.asarray(y)
    scale = np.sqrt(np.asarray(P, dtype=float)) * np.asarray(H)
    if np.any(scale == 0):
        raise ValueError("one-tap equaliser applied to a carrier with zero gain or power")
    return y / scale


def add_cp(x: np.ndarray, cp: int) -> np.ndarray:
    return np.concatenate([x[..., x.shape[-1] - cp:], x], axis=-1) if cp else x


def ofdm_channel(symbols, taps: ChannelTaps, cp: int, noise=None):
    """Frequency-domain symbols ``(..., N)`` through IFFT, prefix, the taps,
    optional additive time-domain noise, prefix removal and FFT.

    The taps are applied causally (delay ``taps.center``); the matching
    linear phase is removed so the result equals ``H * symbols`` with the
    zero-phase gains of :func:`subcarrier_gains`.
    """
    s = np.atleast_2d(symbols)
    N = s.shape[-1]
    if cp < len(taps) - 1:
        raise ValueError(f"cyclic prefix {cp} shorter than channel memory {len(taps) - 1}")
    x = add_cp(np.fft.ifft(s, axis=-1, norm="ortho"), cp)
    r = fftconvolve(x, taps.taps[None, :], axes=-1) if len(taps) > 1 else x.copy()
    if noise is not None:
        r = r + noise
    y = np.fft.fft(r[..., cp: cp + N], axis=-1, norm="ortho")
    k = np.arange(N)
    return y * np.exp(2j * np.pi * k * taps.center / N)


def _noise_shaper(cfg: SimConfig, length: int):
    """Frequency response that colours white noise like the matched filter."""
    nfft = 1 << max(1, (length - 1).bit_length())
    w = 2 * np.pi * np.arange(nfft) / nfft
    return nfft, np.sqrt(np.maximum(dtft(w, cfg.pulse, cfg.tau), 0.0))


def _plan(cfg: SimConfig, snr: float, H: np.ndarray, table: ThresholdTable | None):
    gam = snr * H * H
    powers = waterfill(gam).powers if cfg.waterfilling else np.ones_like(gam)
    eff = powers * gam
    if cfg.loading:
        codes = assign_schemes(eff, table)
    else:
        codes = np.where(eff > 0, cfg.fixed_scheme.value, 0).astype(np.int8)
    return powers, codes.astype(np.int64)


def _packet_goodput(errors_per_bit: np.ndarray, packet_bits: int) -> np.ndarray:
    """Bits in error-free packets per frame; the last packet may be short."""
    trials, nbits = errors_per_bit.shape
    if nbits == 0:
        return np.zeros(trials)
    npk = -(-nbits // packet_bits)
    starts = np.arange(npk) * packet_bits
    bad = np.add.reduceat(errors_per_bit, starts, axis=1) > 0
    sizes = np.minimum(starts + packet_bits, nbits) - starts
    return (~bad * sizes).sum(axis=1).astype(float)


def _run_snr(cfg: SimConfig, j: int, taps: ChannelTaps, H: np.ndarray,
             table: ThresholdTable | None):
    snr_db = cfg.snr_list_db[j]
    snr = 10.0 ** (snr_db / 10.0)
    powers, codes = _plan(cfg, snr, H, table)
    nbits = int(codes.sum())
    trials = cfg.trials
    if nbits == 0:
        z = np.zeros(trials)
        return z, z
    cp = cfg.cp
    rlen = cfg.N + cp + len(taps) - 1
    shaper = _noise_shaper(cfg, rlen) if cfg.colored_noise else None
    bits = np.empty((trials, nbits), dtype=np.uint8)
    noise = np.empty((trials, rlen), dtype=np.complex128)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, j, t]))
        bits[t] = rng.integers(0, 2, nbits, dtype=np.uint8)
        if shaper is None:
            noise[t] = awgn(rlen, snr, rng)
        else:
            nfft, mag = shaper
            n = np.fft.ifft(np.fft.fft(awgn(nfft, snr, rng)) * mag)
            noise[t] = n[:rlen]
    s = np.stack([loading_tx(b, codes).symbols[0] for b in bits])
    amp = np.sqrt(powers)
    y = ofdm_channel(s * amp, taps, cp, noise)
    live = codes > 0
    y_eq = np.zeros_like(y)
    y_eq[:, live] = one_tap_equalize(y[:, live], H[live], powers[live])
    rx = labels_to_bits(detect_loaded(y_eq, codes), codes).reshape(trials, nbits)
    wrong = (rx != bits).astype(np.int64)
    correct = nbits - wrong.sum(axis=1)
    good = _packet_goodput(wrong, cfg.packet_bits)
    return good / cfg.frame_seconds, correct / cfg.frame_seconds


def _stderr(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def run_ofdm_ftn(cfg: SimConfig, threads: int = 1) -> ThroughputCurve:
    """Simulate every SNR point of ``cfg``; see the module docstring."""
    taps = cfg.channel()
    if len(taps) > cfg.N:
        raise ValueError(f"{len(taps)} channel taps exceed N={cfg.N}")
    H = subcarrier_gains(taps, cfg.N)
    table = cfg.table() if cfg.loading else None
    idx = range(len(cfg.snr_list_db))

    def one(j):
        return _run_snr(cfg, j, taps, H, table)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, idx))
    else:
        results = [one(j) for j in idx]
    rows = [
        ThroughputRow(cfg.snr_list_db[j], float(g.mean()), _stderr(g), cfg.trials,
                      float(c.mean()), _stderr(c))
        for j, (g, c) in zip(idx, results)
    ]
    return ThroughputCurve(rows, _io.config_hash(cfg.to_dict()), cfg.label())


def compare_matrix(cfg: SimConfig, schemes: Sequence[ModScheme] = ALL_SCHEMES,
                   threads: int = 1) -> dict[str, ThroughputCurve]:
    """Water-filling on/off crossed with adaptive loading and each fixed scheme."""
    out = {}
    for wf in (True, False):
        variants = [dict(loading=True, fixed_scheme=None)]
        variants += [dict(loading=False, fixed_scheme=s) for s in schemes]
        for v in variants:
            c = dataclasses.replace(cfg, waterfilling=wf, **v)
            out[c.label()] = run_ofdm_ftn(c, threads)
    return out


def fixed_envelope(curves: Sequence[ThroughputCurve]) -> np.ndarray:
    """Pointwise best throughput over several curves on the same grid."""
    return np.max(np.stack([c.throughput for c in curves]), axis=0)

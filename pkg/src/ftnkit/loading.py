"""Adaptive modulation: AWGN baselines, threshold tables and bit loading.

Per-carrier assignments are integer codes: ``0`` means the carrier is off,
otherwise the code is ``ModScheme.value`` (= bits per symbol).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

import numpy as np

from . import io as _io
from .modem import ALL_SCHEMES, ModScheme, constellation, detect

DEFAULT_PACKET_BITS = 960
DEFAULT_TRIALS = 10_000
DEFAULT_SEED = 0
# 0..28 dB in 0.5 dB steps: wide enough to bracket every goodput crossover
DEFAULT_GRID_DB = tuple(0.5 * k for k in range(57))
_CHUNK_SYMBOLS = 1 << 18
_POPCOUNT = np.array([bin(i).count("1") for i in range(64)], dtype=np.int64)


# -- threshold tables ---------------------------------------------------------

@dataclass(frozen=True)
class ThresholdTable:
    """Ordered ``(lower_dB, scheme)`` entries; each bound is an inclusive lower
    edge. A finite first bound leaves carriers below it switched off."""

    entries: tuple[tuple[float, ModScheme], ...]

    def __post_init__(self):
        ents = tuple((float(b), ModScheme.parse(s)) for b, s in self.entries)
        if not ents:
            raise ValueError("threshold table is empty")
        bounds = [b for b, _ in ents]
        bits = [s.bits_per_symbol for _, s in ents]
        if any(b1 <= b0 for b0, b1 in zip(bounds, bounds[1:])):
            raise ValueError(f"bounds must be strictly increasing: {bounds}")
        if any(m1 <= m0 for m0, m1 in zip(bits, bits[1:])):
            raise ValueError("schemes must strictly increase in bits per symbol")
        object.__setattr__(self, "entries", ents)

    @property
    def bounds(self) -> np.ndarray:
        return np.array([b for b, _ in self.entries])

    @property
    def schemes(self) -> tuple[ModScheme, ...]:
        return tuple(s for _, s in self.entries)

    def crossovers(self) -> dict[ModScheme, float]:
        """Finite lower bound of every scheme that has one."""
        return {s: b for b, s in self.entries if np.isfinite(b)}

    def lookup_db(self, snr_db) -> np.ndarray:
        """Scheme codes for SNRs given in dB (``-inf`` maps to off)."""
        db = np.asarray(snr_db, dtype=float)
        pos = np.searchsorted(self.bounds, db, side="right") - 1
        codes = np.array([s.value for s in self.schemes], dtype=np.int8)
        out = np.where(pos >= 0, codes[np.clip(pos, 0, None)], 0).astype(np.int8)
        dead = np.isnan(db) | np.isneginf(db)
        return np.where(dead, 0, out).astype(np.int8)

    def scheme_at(self, snr_db: float) -> ModScheme | None:
        code = int(self.lookup_db(snr_db))
        return ModScheme(code) if code else None

    def to_csv(self, path) -> None:
        _io.write_csv(path, ["lower_dB", "scheme"],
                      [(b, s.label) for b, s in self.entries])

    @classmethod
    def from_csv(cls, path) -> "ThresholdTable":
        rows = _io.read_csv(path)
        try:
            return cls(tuple((float(r["lower_dB"]), r["scheme"]) for r in rows))
        except KeyError as exc:
            raise ValueError(f"{path}: missing column {exc}") from None


def reference_table() -> ThresholdTable:
    """The published reference thresholds shipped with the package."""
    with resources.as_file(resources.files("ftnkit") / "data" / "reference_thresholds.csv") as p:
        return ThresholdTable.from_csv(p)


def assign_schemes(snrs, table: ThresholdTable) -> np.ndarray:
    """Scheme code per carrier from its linear SNR; zero SNR switches it off."""
    g = np.asarray(snrs, dtype=float)
    if np.any(g < 0):
        raise ValueError("carrier SNRs must be nonnegative")
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(g)
    return table.lookup_db(db)


# -- bit loading --------------------------------------------------------------

@dataclass(frozen=True)
class LoadedFrames:
    """Symbols shaped ``(frames, N)`` plus the unpadded payload length."""

    symbols: np.ndarray
    payload_bits: int


def _layout(codes: np.ndarray):
    codes = np.asarray(codes, dtype=np.int64).ravel()
    if np.any((codes < 0) | (codes > 6)):
        raise ValueError("scheme codes must lie in 0..6")
    offsets = np.concatenate(([0], np.cumsum(codes)[:-1]))
    return codes, offsets, int(codes.sum())


def frame_bits(codes) -> int:
    """Bits carried by one frame under the given assignment."""
    return int(np.asarray(codes, dtype=np.int64).sum())


def loading_tx(bits, codes) -> LoadedFrames:
    """Spread ``bits`` across carriers frame by frame, each active carrier
    taking its scheme's bits in carrier order. The tail frame is zero-padded;
    off carriers transmit 0."""
    codes, offsets, per_frame = _layout(codes)
    if per_frame == 0:
        raise ValueError("no active carriers")
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size and bits.max() > 1:
        raise ValueError("bits must be 0/1")
    frames = max(1, math.ceil(bits.size / per_frame))
    padded = np.zeros(frames * per_frame, dtype=np.int64)
    padded[: bits.size] = bits
    padded = padded.reshape(frames, per_frame)
    out = np.zeros((frames, codes.size), dtype=np.complex128)
    for m in np.unique(codes[codes > 0]):
        carriers = np.nonzero(codes == m)[0]
        cols = offsets[carriers][:, None] + np.arange(m)
        weights = 1 << np.arange(m - 1, -1, -1)
        idx = padded[:, cols] @ weights
        out[:, carriers] = constellation(ModScheme(int(m)))[idx]
    return LoadedFrames(out, int(bits.size))


def detect_loaded(symbols, codes) -> np.ndarray:
    """Detected labels per carrier, shape ``(frames, N)``; off carriers give 0."""
    codes = np.asarray(codes, dtype=np.int64).ravel()
    y = np.atleast_2d(np.asarray(symbols, dtype=np.complex128))
    if y.shape[1] != codes.size:
        raise ValueError(f"frames have {y.shape[1]} carriers, assignment has {codes.size}")
    labels = np.zeros(y.shape, dtype=np.int64)
    for m in np.unique(codes[codes > 0]):
        carriers = np.nonzero(codes == m)[0]
        sub = np.ascontiguousarray(y[:, carriers])
        labels[:, carriers] = detect(sub, ModScheme(int(m))).reshape(sub.shape)
    return labels


def labels_to_bits(labels, codes) -> np.ndarray:
    """Inverse of the loading layout: ``(frames, N)`` labels to flat bits."""
    codes, offsets, per_frame = _layout(codes)
    labels = np.atleast_2d(labels)
    out = np.zeros((labels.shape[0], per_frame), dtype=np.uint8)
    for m in np.unique(codes[codes > 0]):
        carriers = np.nonzero(codes == m)[0]
        shifts = np.arange(m - 1, -1, -1)
        b = (labels[:, carriers, None] >> shifts) & 1
        cols = offsets[carriers][:, None] + np.arange(m)
        out[:, cols] = b
    return out.ravel()


def loading_rx(symbols, codes, payload_bits: int | None = None) -> np.ndarray:
    """Demodulate loaded frames back to bits, dropping tail padding."""
    bits = labels_to_bits(detect_loaded(symbols, codes), codes)
    return bits if payload_bits is None else bits[:payload_bits]


# -- AWGN baseline ------------------------------------------------------------

@dataclass
class BaselineRow:
    scheme: ModScheme
    snr_db: float
    throughput: float  # packet goodput, bits per symbol slot
    correct_bits: float  # raw correct-bit rate, bits per symbol slot
    trials: int
    seed: int


@dataclass
class BaselineCurve:
    rows: list[BaselineRow] = field(default_factory=list)
    packet_bits: int = DEFAULT_PACKET_BITS

    HEADER = ("scheme", "snr_dB", "throughput", "correct_bits", "trials", "seed")

    @property
    def snr_grid(self) -> np.ndarray:
        return np.array(sorted({r.snr_db for r in self.rows}))

    @property
    def schemes(self) -> tuple[ModScheme, ...]:
        return tuple(sorted({r.scheme for r in self.rows}, key=lambda s: s.value))

    def matrix(self, metric: str = "throughput") -> np.ndarray:
        """``(len(schemes), len(snr_grid))`` array of the chosen metric."""
        grid = list(self.snr_grid)
        schemes = self.schemes
        out = np.full((len(schemes), len(grid)), np.nan)
        for r in self.rows:
            out[schemes.index(r.scheme), grid.index(r.snr_db)] = getattr(r, metric)
        return out

    def to_csv(self, path) -> None:
        _io.write_csv(path, self.HEADER, [
            (r.scheme.label, r.snr_db, r.throughput, r.correct_bits, r.trials, r.seed)
            for r in self.rows
        ])

    @classmethod
    def from_csv(cls, path, packet_bits: int = DEFAULT_PACKET_BITS) -> "BaselineCurve":
        rows = [
            BaselineRow(ModScheme.parse(r["scheme"]), float(r["snr_dB"]),
                        float(r["throughput"]), float(r.get("correct_bits", "nan")),
                        int(r["trials"]), int(r["seed"]))
            for r in _io.read_csv(path)
        ]
        return cls(rows, packet_bits)


def _baseline_cell(scheme: ModScheme, snr_db: float, snr_idx: int, trials: int,
                   packet_bits: int, seed: int):
    rng = np.random.default_rng(np.random.SeedSequence([seed, scheme.value, snr_idx]))
    m = scheme.bits_per_symbol
    per_packet = packet_bits // m
    pts = constellation(scheme)
    sigma = math.sqrt(0.5 / 10.0 ** (snr_db / 10.0))
    chunk = max(1, _CHUNK_SYMBOLS // per_packet)
    good = 0
    correct = 0
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        idx = rng.integers(0, scheme.order, size=(c, per_packet), dtype=np.uint8)
        y = rng.standard_normal(2 * c * per_packet).view(np.complex128)
        y *= sigma
        y += pts[idx].ravel()
        det = detect(y, scheme).reshape(c, per_packet)
        wrong = _POPCOUNT[idx ^ det.astype(np.uint8)]
        good += int(np.count_nonzero(~np.any(wrong, axis=1)))
        correct += c * packet_bits - int(wrong.sum())
        done += c
    slots = trials * per_packet
    return good * packet_bits / slots, correct / slots


def baseline_throughput(
    snr_list_db: Sequence[float],
    schemes: Sequence[ModScheme | str] = ALL_SCHEMES,
    trials: int = DEFAULT_TRIALS,
    packet_bits: int = DEFAULT_PACKET_BITS,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> BaselineCurve:
    """Monte Carlo throughput of each scheme on an AWGN channel.

    SNR is Es/N0 per symbol. Each trial sends one packet of ``packet_bits``
    random bits. ``throughput`` is packet goodput (a packet counts only if
    every bit is right), ``correct_bits`` the raw fraction of correct
    decisions; both are in bits per symbol slot. Every (scheme, SNR) cell
    draws from its own stream keyed by ``(seed, scheme, snr index)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    schemes = [ModScheme.parse(s) for s in schemes]
    for s in schemes:
        if packet_bits % s.bits_per_symbol:
            raise ValueError(
                f"packet_bits={packet_bits} is not a multiple of {s.bits_per_symbol} ({s.label})"
            )
    grid = [float(x) for x in snr_list_db]
    cells = [(s, x, j) for s in schemes for j, x in enumerate(grid)]

    def run(cell):
        s, x, j = cell
        g, c = _baseline_cell(s, x, j, trials, packet_bits, seed)
        return BaselineRow(s, x, g, c, trials, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run, cells))
    else:
        rows = [run(c) for c in cells]
    return BaselineCurve(rows, packet_bits)


class NonMonotoneTableError(ValueError):
    """The per-SNR winners do not form an increasing scheme sequence."""


def build_thresholds(curve: BaselineCurve, metric: str = "throughput",
                     allow_off: bool = True) -> ThresholdTable:
    """Pick the best scheme at every grid SNR and compress into bounds.

    With ``allow_off`` a silent carrier (throughput 0) competes too, so SNRs
    where no scheme delivers anything fall below the table's first bound.
    Ties go to fewer bits per symbol, silence counting as zero bits. Each
    switch point is placed where the two neighbouring curves cross, by linear
    interpolation between the bracketing grid points; an exact tie at the
    left point (two zero curves) puts it at the midpoint.
    """
    grid = curve.snr_grid
    schemes = list(curve.schemes)
    if grid.size < 2:
        raise ValueError("baseline grid needs at least two SNR points")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("baseline grid must be strictly increasing")
    mat = curve.matrix(metric)
    if np.isnan(mat).any():
        raise ValueError("baseline curve is missing (scheme, SNR) cells")
    if allow_off:
        mat = np.vstack([np.zeros(grid.size), mat])
        schemes = [None] + schemes
    winners = np.argmax(mat, axis=0)  # first max is the lowest-order choice
    runs = [int(winners[0])]
    starts = [0]
    for j in range(1, grid.size):
        if winners[j] != runs[-1]:
            runs.append(int(winners[j]))
            starts.append(j)
    bits = [0 if schemes[k] is None else schemes[k].bits_per_symbol for k in runs]
    if any(b1 <= b0 for b0, b1 in zip(bits, bits[1:])):
        seq = " -> ".join("off" if schemes[k] is None else schemes[k].label for k in runs)
        raise NonMonotoneTableError(
            f"winning schemes are not increasing ({seq}); use more trials or a finer grid"
        )
    if schemes[runs[0]] is None and len(runs) == 1:
        raise ValueError("no scheme delivers any throughput on this grid")
    entries = [] if schemes[runs[0]] is None else [(-np.inf, schemes[runs[0]])]
    for prev, k, j in zip(runs[:-1], runs[1:], starts[1:]):
        d0 = mat[prev, j - 1] - mat[k, j - 1]
        d1 = mat[prev, j] - mat[k, j]
        if d0 == 0:
            frac = 0.5
        else:
            frac = d0 / (d0 - d1) if d0 - d1 > 0 else 1.0
        entries.append((float(grid[j - 1] + frac * (grid[j] - grid[j - 1])), schemes[k]))
    return ThresholdTable(tuple(entries))

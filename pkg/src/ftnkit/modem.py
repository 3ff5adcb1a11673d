"""Bit/symbol mapping for BPSK through 64QAM.

Every constellation is stored as a complex array indexed by its bit label
(MSB first), scaled to unit mean energy. Demodulation is minimum Euclidean
distance; exact ties go to the lowest label.

Layouts
-------
BPSK   : 0 -> -1, 1 -> +1
QPSK, 16QAM, 64QAM : square grid, Gray coded per axis. The high half of the
    label drives the in-phase level, the low half the quadrature level.
8QAM   : 4x2 rectangular grid; two Gray bits on I, one bit on Q.
32QAM  : 6x6 cross (corners removed), quasi-Gray table ``CROSS32_LABELS``.
"""

from __future__ import annotations

import csv
import enum
from functools import lru_cache

import numpy as np

from . import kernels


class ModScheme(enum.Enum):
    BPSK = 1
    QPSK = 2
    QAM8 = 3
    QAM16 = 4
    QAM32 = 5
    QAM64 = 6

    @property
    def bits_per_symbol(self) -> int:
        return self.value

    @property
    def order(self) -> int:
        return 1 << self.value

    @property
    def label(self) -> str:
        return _LABELS[self]

    @classmethod
    def parse(cls, name: "str | ModScheme") -> "ModScheme":
        if isinstance(name, ModScheme):
            return name
        key = str(name).strip().upper().replace("-", "")
        for scheme in cls:
            if key in (scheme.name, scheme.label.upper()):
                return scheme
        raise ValueError(f"unknown modulation scheme {name!r}")

    def __str__(self) -> str:
        return self.label


_LABELS = {
    ModScheme.BPSK: "BPSK",
    ModScheme.QPSK: "QPSK",
    ModScheme.QAM8: "8QAM",
    ModScheme.QAM16: "16QAM",
    ModScheme.QAM32: "32QAM",
    ModScheme.QAM64: "64QAM",
}

ALL_SCHEMES = tuple(ModScheme)

# 32QAM cross, rows from Q=+5 (top) to Q=-5, columns I=-5..+5 (unnormalized
# levels). None marks the removed corners. Quasi-Gray: 52 nearest-neighbour
# pairs, 50 differ in one bit and 2 in three.
CROSS32_LABELS = (
    (None, 0b00001, 0b00000, 0b00010, 0b00011, None),
    (0b00111, 0b00101, 0b00100, 0b00110, 0b10011, 0b10001),
    (0b10111, 0b10101, 0b10100, 0b10110, 0b10010, 0b10000),
    (0b11111, 0b11101, 0b11100, 0b11110, 0b11010, 0b11000),
    (0b01111, 0b01101, 0b01100, 0b01110, 0b11011, 0b11001),
    (None, 0b01001, 0b01000, 0b01010, 0b01011, None),
)


def _gray_decode(g: np.ndarray) -> np.ndarray:
    """Position index of each Gray code word."""
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


def _pam_levels(bits_value: np.ndarray, nbits: int) -> np.ndarray:
    idx = _gray_decode(bits_value)
    return 2.0 * idx - ((1 << nbits) - 1)


def _rect_grid(i_bits: int, q_bits: int) -> np.ndarray:
    labels = np.arange(1 << (i_bits + q_bits))
    i_part = labels >> q_bits
    q_part = labels & ((1 << q_bits) - 1)
    return _pam_levels(i_part, i_bits) + 1j * _pam_levels(q_part, q_bits)


def _cross32() -> np.ndarray:
    levels = (-5, -3, -1, 1, 3, 5)
    pts = np.zeros(32, dtype=np.complex128)
    seen = set()
    for row, q in zip(CROSS32_LABELS, levels[::-1]):
        for lab, i in zip(row, levels):
            if lab is None:
                continue
            seen.add(lab)
            pts[lab] = complex(i, q)
    assert len(seen) == 32
    return pts


@lru_cache(maxsize=None)
def _constellation(scheme: ModScheme) -> np.ndarray:
    if scheme is ModScheme.BPSK:
        pts = np.array([-1.0 + 0j, 1.0 + 0j])
    elif scheme is ModScheme.QAM8:
        pts = _rect_grid(2, 1)
    elif scheme is ModScheme.QAM32:
        pts = _cross32()
    else:
        half = scheme.bits_per_symbol // 2
        pts = _rect_grid(half, half)
    pts = pts / np.sqrt(np.mean(np.abs(pts) ** 2))
    pts.setflags(write=False)
    return pts


def constellation(scheme: "ModScheme | str") -> np.ndarray:
    """Unit-energy points of ``scheme``; entry ``k`` carries bit label ``k``."""
    return _constellation(ModScheme.parse(scheme))


def bits_to_indices(bits, bits_per_symbol: int) -> np.ndarray:
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size % bits_per_symbol:
        raise ValueError(
            f"bit count {bits.size} is not a multiple of {bits_per_symbol} bits/symbol"
        )
    weights = 1 << np.arange(bits_per_symbol - 1, -1, -1, dtype=np.int64)
    return bits.reshape(-1, bits_per_symbol) @ weights


def indices_to_bits(indices, bits_per_symbol: int) -> np.ndarray:
    indices = np.asarray(indices, dtype=np.int64).ravel()
    shifts = np.arange(bits_per_symbol - 1, -1, -1, dtype=np.int64)
    return ((indices[:, None] >> shifts) & 1).astype(np.uint8).ravel()


def modulate(bits, scheme: "ModScheme | str") -> np.ndarray:
    """Map groups of ``bits_per_symbol`` bits to unit-energy symbols."""
    scheme = ModScheme.parse(scheme)
    bits = np.asarray(bits)
    if bits.size and not np.all((bits == 0) | (bits == 1)):
        raise ValueError("bits must be 0/1")
    return constellation(scheme)[bits_to_indices(bits, scheme.bits_per_symbol)]


def detect(symbols, scheme: "ModScheme | str") -> np.ndarray:
    """Label of the nearest constellation point for each received symbol."""
    symbols = np.ascontiguousarray(np.asarray(symbols, dtype=np.complex128).ravel())
    return kernels.nearest_index(symbols, constellation(scheme))


def demodulate(symbols, scheme: "ModScheme | str") -> np.ndarray:
    """Hard minimum-distance decisions, returned as a flat uint8 bit array."""
    scheme = ModScheme.parse(scheme)
    return indices_to_bits(detect(symbols, scheme), scheme.bits_per_symbol)


def write_constellation_csv(scheme: "ModScheme | str", path) -> None:
    """Dump ``label, bits, real, imag`` rows for documentation."""
    scheme = ModScheme.parse(scheme)
    pts = constellation(scheme)
    m = scheme.bits_per_symbol
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["label", "bits", "real", "imag"])
        for k, p in enumerate(pts):
            w.writerow([k, format(k, f"0{m}b"), repr(float(p.real)), repr(float(p.imag))])

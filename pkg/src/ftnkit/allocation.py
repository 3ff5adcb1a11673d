"""Water-filling power allocation across subcarriers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels


@dataclass(frozen=True)
class PowerAllocation:
    """Per-carrier powers summing to the carrier count, and the cutoff SNR.

    Carriers with ``gamma < cutoff`` get zero power; the rest sit on a common
    water level ``P_i + 1/gamma_i = 1/cutoff``.
    """

    powers: np.ndarray
    cutoff: float

    @property
    def water_level(self) -> float:
        return 1.0 / self.cutoff

    @property
    def active(self) -> np.ndarray:
        return self.powers > 0


def _as_gammas(gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float).ravel()
    if g.size == 0:
        raise ValueError("need at least one carrier")
    if not np.all(np.isfinite(g)) or np.any(g < 0):
        raise ValueError("carrier SNRs must be finite and nonnegative")
    return g


def waterfill(gammas) -> PowerAllocation:
    """Capacity-optimal powers for carrier SNRs ``gammas`` with mean power 1.

    Carriers are sorted by SNR and the cut index found by scanning the
    closed-form threshold ``(n - i) / (N + sum_{j>=i} 1/gamma_j)``, where ``n``
    counts the carriers that can possibly be active. Zero-SNR carriers take no
    power.
    """
    g = _as_gammas(gammas)
    N = g.size
    if not np.any(g > 0):
        raise ValueError("all carrier SNRs are zero; nothing to allocate")
    # The water level never exceeds N + 1/max(g), so anything weaker is dead
    # before the scan. This also keeps the suffix sums clear of overflow.
    with np.errstate(divide="ignore", over="ignore"):
        inv = 1.0 / g
        ceiling = N + 1.0 / g.max()
    if not np.isfinite(ceiling):
        raise ValueError("carrier SNRs are too small to represent the water level")
    pos = np.nonzero(inv < ceiling)[0]
    order = pos[np.argsort(g[pos], kind="stable")]
    sorted_g = np.ascontiguousarray(g[order])
    cut, thr = kernels.waterfill_cutoff(sorted_g, float(N))
    powers = np.zeros(N)
    active = order[cut:]
    powers[active] = np.maximum(1.0 / thr - 1.0 / g[active], 0.0)
    return PowerAllocation(powers, float(thr))


def apply_allocation(gammas, powers) -> np.ndarray:
    """Effective per-carrier SNRs ``P_i * gamma_i``."""
    g = np.asarray(gammas, dtype=float)
    p = np.asarray(powers, dtype=float)
    if g.shape != p.shape:
        raise ValueError(f"length mismatch: {g.shape} SNRs vs {p.shape} powers")
    return g * p


def objective(gammas, powers) -> float:
    """``sum_i log(1 + P_i gamma_i)`` in nats."""
    return float(np.sum(np.log1p(apply_allocation(gammas, powers))))

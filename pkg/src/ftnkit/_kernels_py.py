"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

TIE_EPS = 1e-12

# caps the temporary (n, m) distance matrix at ~64 MB
_CHUNK = 1 << 17


def nearest_index(symbols, points):
    symbols = np.asarray(symbols, dtype=np.complex128)
    points = np.asarray(points, dtype=np.complex128)
    out = np.empty(symbols.shape[0], dtype=np.int64)
    for start in range(0, symbols.shape[0], _CHUNK):
        chunk = symbols[start:start + _CHUNK, None]
        d = (chunk.real - points.real) ** 2 + (chunk.imag - points.imag) ** 2
        best = d.min(axis=1, keepdims=True)
        out[start:start + _CHUNK] = np.argmax(d < best + TIE_EPS, axis=1)
    return out


def waterfill_cutoff(sorted_snrs, budget):
    snrs = np.asarray(sorted_snrs, dtype=np.float64)
    n = snrs.shape[0]
    suffix = np.cumsum((1.0 / snrs)[::-1])[::-1]
    counts = n - np.arange(n)
    thr = counts / (budget + suffix)
    prev = np.concatenate(([0.0], snrs[:-1]))
    hit = np.flatnonzero((prev <= thr) & (thr < snrs))
    if hit.size == 0:
        return n - 1, float(thr[-1])
    i = int(hit[0])
    return i, float(thr[i])

"""Hot inner loops: arithmetic-coder core and quantizer assignment.

Each kernel is written once as a plain Python function over NumPy arrays
and compiled with numba's @njit when available. Set BICACOMP_NUMBA=0 to
force the uncompiled fallbacks (the two paths are bit-identical; see
benchmarks/bench_kernels.py for a speed comparison).
"""

import os

import numpy as np

STATE_BITS = 32
_TOP = 1 << STATE_BITS
_MASK = _TOP - 1
_HALF = _TOP >> 1
_QUARTER = _TOP >> 2
MAX_TOTAL = 1 << 30  # range/total must stay >= 1 during interval updates


def numba_requested() -> bool:
    flag = os.environ.get("BICACOMP_NUMBA", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


def _ac_encode_core(symbols, cum, out_bits):
    """Encode symbols against cumulative counts cum (len m+1, cum[0]=0).

    Writes 0/1 into out_bits, returns the bit count. Interval update is
    the classic integer low/high recurrence; carries surface as pending
    bits emitted on the next range split.
    """
    total = cum[-1]
    low = 0
    high = _MASK
    pending = 0
    nb = 0
    for t in range(symbols.shape[0]):
        s = symbols[t]
        span = high - low + 1
        high = low + (span * cum[s + 1]) // total - 1
        low = low + (span * cum[s]) // total
        while True:
            if high < _HALF:
                out_bits[nb] = 0
                nb += 1
                for _ in range(pending):
                    out_bits[nb] = 1
                    nb += 1
                pending = 0
            elif low >= _HALF:
                out_bits[nb] = 1
                nb += 1
                for _ in range(pending):
                    out_bits[nb] = 0
                    nb += 1
                pending = 0
                low -= _HALF
                high -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                pending += 1
                low -= _QUARTER
                high -= _QUARTER
            else:
                break
            low = low * 2
            high = high * 2 + 1
    pending += 1
    if low < _QUARTER:
        out_bits[nb] = 0
        nb += 1
        for _ in range(pending):
            out_bits[nb] = 1
            nb += 1
    else:
        out_bits[nb] = 1
        nb += 1
        for _ in range(pending):
            out_bits[nb] = 0
            nb += 1
    return nb


def _ac_decode_core(bits, n, cum, out_symbols):
    """Decode n symbols from a 0/1 array; bits past the end read as 0."""
    total = cum[-1]
    m = cum.shape[0] - 1
    nbits = bits.shape[0]
    low = 0
    high = _MASK
    code = 0
    pos = 0
    for _ in range(STATE_BITS):
        code <<= 1
        if pos < nbits:
            code |= int(bits[pos])  # keep the accumulator wide off-jit too
        pos += 1
    for t in range(n):
        span = high - low + 1
        target = ((code - low + 1) * total - 1) // span
        # binary search: largest s with cum[s] <= target
        lo = 0
        hi = m
        while hi - lo > 1:
            mid = (lo + hi) >> 1
            if cum[mid] <= target:
                lo = mid
            else:
                hi = mid
        s = lo
        out_symbols[t] = s
        high = low + (span * cum[s + 1]) // total - 1
        low = low + (span * cum[s]) // total
        while True:
            if high < _HALF:
                pass
            elif low >= _HALF:
                low -= _HALF
                high -= _HALF
                code -= _HALF
            elif low >= _QUARTER and high < 3 * _QUARTER:
                low -= _QUARTER
                high -= _QUARTER
                code -= _QUARTER
            else:
                break
            low = low * 2
            high = high * 2 + 1
            code <<= 1
            if pos < nbits:
                code |= int(bits[pos])
            pos += 1


def _ecvq_assign_core(x, centroids, bias, assign):
    """Nearest-centroid assignment under squared distance plus a per-cluster
    bias; returns the summed biased objective. Retired clusters carry an
    inf bias and are never selected."""
    n, dim = x.shape
    k = centroids.shape[0]
    total = 0.0
    for i in range(n):
        best = np.inf
        arg = 0
        for c in range(k):
            v = bias[c]
            if v == np.inf:
                continue
            for t in range(dim):
                dlt = x[i, t] - centroids[c, t]
                v += dlt * dlt
            if v < best:
                best = v
                arg = c
        assign[i] = arg
        total += best
    return total


NUMBA_ACTIVE = False
ac_encode = _ac_encode_core
ac_decode = _ac_decode_core
ecvq_assign = _ecvq_assign_core

if numba_requested():
    try:
        from numba import njit

        ac_encode = njit(cache=True)(_ac_encode_core)
        ac_decode = njit(cache=True)(_ac_decode_core)
        ecvq_assign = njit(cache=True)(_ecvq_assign_core)
        NUMBA_ACTIVE = True
    except ImportError:
        pass

"""Hot loops of the sector construction, in numba and pure-numpy flavours.

States are coded as mixed-radix integers ``code = sum_i u_i * stride_i`` with
local digit ``u_i = s_i + m_i`` and site 0 most significant, so ascending codes
are lexicographic in (m_1, ..., m_N).  Both flavours return identical arrays
(up to the order of COO triplets, which is irrelevant after CSR conversion).
"""
import numpy as np

from .._accel import USE_NUMBA, njit


def strides_for(dims):
    dims = np.asarray(dims, dtype=np.int64)
    strides = np.ones(len(dims), dtype=np.int64)
    for k in range(len(dims) - 2, -1, -1):
        strides[k] = strides[k + 1] * dims[k + 1]
    return strides


# ---------------------------------------------------------------------------
# numpy

def sector_codes_numpy(dims, total):
    sums = np.zeros(1, dtype=np.int64)
    for d in dims:
        sums = (sums[:, None] + np.arange(d, dtype=np.int64)[None, :]).ravel()
    return np.flatnonzero(sums == total).astype(np.int64)


def decode_numpy(codes, dims, strides):
    return (codes[:, None] // strides[None, :]) % dims[None, :]


def hopping_coo_numpy(codes, dims, strides, two_s, ei, ej, coeff):
    digits = decode_numpy(codes, dims, strides)
    rows, cols, vals = [], [], []
    src = np.arange(len(codes), dtype=np.int64)
    for e in range(len(ei)):
        i, j, c = ei[e], ej[e], coeff[e]
        for a, b in ((i, j), (j, i)):
            ua, ub = digits[:, a], digits[:, b]
            # S_a^+ S_b^-
            mask = (ua < two_s[a]) & (ub > 0)
            if not mask.any():
                continue
            amp = c * np.sqrt(((two_s[a] - ua[mask]) * (ua[mask] + 1)).astype(float)) \
                * np.sqrt((ub[mask] * (two_s[b] - ub[mask] + 1)).astype(float))
            target = codes[mask] + strides[a] - strides[b]
            rows.append(np.searchsorted(codes, target))
            cols.append(src[mask])
            vals.append(amp)
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), np.zeros(0)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def zz_diagonal_numpy(codes, dims, strides, two_s, ei, ej, jz):
    digits = decode_numpy(codes, dims, strides)
    m = digits - two_s[None, :] / 2.0
    diag = np.zeros(len(codes))
    for e in range(len(ei)):
        diag -= jz[e] * m[:, ei[e]] * m[:, ej[e]]
    return diag


# ---------------------------------------------------------------------------
# numba

@njit(cache=True)
def sector_codes_numba(dims, total):
    n = dims.shape[0]
    full = 1
    for k in range(n):
        full *= dims[k]
    digits = np.zeros(n, dtype=np.int64)
    out = np.empty(full, dtype=np.int64)
    count = 0
    s = 0
    for code in range(full):
        if s == total:
            out[count] = code
            count += 1
        # odometer increment, site n-1 fastest
        k = n - 1
        while k >= 0:
            if digits[k] + 1 < dims[k]:
                digits[k] += 1
                s += 1
                break
            s -= digits[k]
            digits[k] = 0
            k -= 1
    return out[:count].copy()


@njit(cache=True)
def _search(codes, value):
    lo, hi = 0, codes.shape[0]
    while lo < hi:
        mid = (lo + hi) >> 1
        if codes[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def hopping_coo_numba(codes, dims, strides, two_s, ei, ej, coeff):
    n = codes.shape[0]
    ne = ei.shape[0]
    nsite = dims.shape[0]
    cap = 2 * n * ne
    rows = np.empty(cap, dtype=np.int64)
    cols = np.empty(cap, dtype=np.int64)
    vals = np.empty(cap)
    digits = np.empty(nsite, dtype=np.int64)
    cnt = 0
    for idx in range(n):
        c = codes[idx]
        for k in range(nsite):
            digits[k] = (c // strides[k]) % dims[k]
        for e in range(ne):
            for flip in range(2):
                if flip == 0:
                    a = ei[e]
                    b = ej[e]
                else:
                    a = ej[e]
                    b = ei[e]
                ua = digits[a]
                ub = digits[b]
                if ua < two_s[a] and ub > 0:
                    amp = coeff[e] * np.sqrt(float((two_s[a] - ua) * (ua + 1))) \
                        * np.sqrt(float(ub * (two_s[b] - ub + 1)))
                    rows[cnt] = _search(codes, c + strides[a] - strides[b])
                    cols[cnt] = idx
                    vals[cnt] = amp
                    cnt += 1
    return rows[:cnt].copy(), cols[:cnt].copy(), vals[:cnt].copy()


@njit(cache=True)
def zz_diagonal_numba(codes, dims, strides, two_s, ei, ej, jz):
    n = codes.shape[0]
    ne = ei.shape[0]
    diag = np.zeros(n)
    for idx in range(n):
        c = codes[idx]
        acc = 0.0
        for e in range(ne):
            a = ei[e]
            b = ej[e]
            ma = (c // strides[a]) % dims[a] - two_s[a] / 2.0
            mb = (c // strides[b]) % dims[b] - two_s[b] / 2.0
            acc -= jz[e] * ma * mb
        diag[idx] = acc
    return diag


if USE_NUMBA:
    sector_codes = sector_codes_numba
    hopping_coo = hopping_coo_numba
    zz_diagonal = zz_diagonal_numba
else:
    sector_codes = sector_codes_numpy
    hopping_coo = hopping_coo_numpy
    zz_diagonal = zz_diagonal_numpy

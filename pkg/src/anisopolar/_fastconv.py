"""Exact multidimensional integer convolution via Kronecker substitution.

Coefficient arrays (Gaussian integers over a common denominator) are
flattened with result-sized strides, packed into huge integers in base
2^b, multiplied with GMP, and unpacked with balanced-digit recovery.
This turns an exact d-dimensional convolution into a handful of big-int
multiplications, which is what makes exact convolution powers of the
bundled examples affordable at n in the dozens.
"""

from __future__ import annotations

import math
from typing import Sequence

import gmpy2


def _slot_strides(widths: Sequence[int]) -> list[int]:
    strides = [1] * len(widths)
    for j in range(len(widths) - 2, -1, -1):
        strides[j] = strides[j + 1] * widths[j + 1]
    return strides


def _flatten(coeffs: dict, mins: Sequence[int], strides: Sequence[int],
             n_slots: int, part: int) -> list[int]:
    out = [0] * n_slots
    for pt, (re, im) in coeffs.items():
        v = re if part == 0 else im
        if v:
            slot = sum((pt[j] - mins[j]) * strides[j] for j in range(len(mins)))
            out[slot] = v
    return out


def _pack(vals: list[int], width: int) -> gmpy2.mpz:
    """Evaluate the integer polynomial at 2^(8*width), signed coefficients."""
    n = len(vals)
    pos = bytearray(n * width)
    neg = bytearray(n * width)
    any_neg = False
    for i, v in enumerate(vals):
        if v > 0:
            nb = (v.bit_length() + 7) // 8
            pos[i * width:i * width + nb] = v.to_bytes(nb, "little")
        elif v < 0:
            any_neg = True
            w = -v
            nb = (w.bit_length() + 7) // 8
            neg[i * width:i * width + nb] = w.to_bytes(nb, "little")
    packed = gmpy2.mpz(int.from_bytes(bytes(pos), "little"))
    if any_neg:
        packed -= gmpy2.mpz(int.from_bytes(bytes(neg), "little"))
    return packed


def _unpack(c, n_slots: int, width: int) -> list[int]:
    """Balanced base-2^(8*width) digits of c; inverse of packed products."""
    c = int(c)
    sign = 1
    if c < 0:
        sign, c = -1, -c
    raw = c.to_bytes(n_slots * width + width + 8, "little")
    half = 1 << (8 * width - 1)
    full = 1 << (8 * width)
    out = [0] * n_slots
    carry = 0
    for k in range(n_slots):
        u = int.from_bytes(raw[k * width:(k + 1) * width], "little") + carry
        if u >= half:
            u -= full
            carry = 1
        else:
            carry = 0
        if u:
            out[k] = sign * u
    return out


def _abs_norms(re: list[int], im: list[int]) -> tuple[int, int]:
    """(l1, linf) of |re_k| + |im_k|."""
    l1 = 0
    linf = 0
    for a, b in zip(re, im):
        m = abs(a) + abs(b)
        l1 += m
        if m > linf:
            linf = m
    return l1, linf


def convolve_gaussian(coeffs_a: dict, coeffs_b: dict):
    """Exact convolution of two sparse Gaussian-integer arrays.

    Inputs map integer points to (re, im) integer pairs; the result is the
    same kind of dict over the Minkowski-sum support (explicit zeros
    dropped).  Uses the 3-multiplication complex Karatsuba split.
    """
    if not coeffs_a or not coeffs_b:
        return {}
    dim = len(next(iter(coeffs_a)))
    mins_a = [min(p[j] for p in coeffs_a) for j in range(dim)]
    maxs_a = [max(p[j] for p in coeffs_a) for j in range(dim)]
    mins_b = [min(p[j] for p in coeffs_b) for j in range(dim)]
    maxs_b = [max(p[j] for p in coeffs_b) for j in range(dim)]
    widths = [(maxs_a[j] - mins_a[j]) + (maxs_b[j] - mins_b[j]) + 1
              for j in range(dim)]
    strides = _slot_strides(widths)
    n_slots = math.prod(widths)

    ar = _flatten(coeffs_a, mins_a, strides, n_slots, 0)
    ai = _flatten(coeffs_a, mins_a, strides, n_slots, 1)
    br = _flatten(coeffs_b, mins_b, strides, n_slots, 0)
    bi = _flatten(coeffs_b, mins_b, strides, n_slots, 1)

    l1a, linfa = _abs_norms(ar, ai)
    l1b, linfb = _abs_norms(br, bi)
    bound = min(l1a * linfb, l1b * linfa)
    width = max(1, (bound.bit_length() + 2 + 7) // 8)

    pr_a, pi_a = _pack(ar, width), _pack(ai, width)
    pr_b, pi_b = _pack(br, width), _pack(bi, width)
    m1 = pr_a * pr_b
    m2 = pi_a * pi_b
    m3 = (pr_a + pi_a) * (pr_b + pi_b)
    cr = _unpack(m1 - m2, n_slots, width)
    ci = _unpack(m3 - m1 - m2, n_slots, width)

    mins_c = [mins_a[j] + mins_b[j] for j in range(dim)]
    out = {}
    for slot in range(n_slots):
        re, im = cr[slot], ci[slot]
        if re or im:
            rem = slot
            pt = []
            for j in range(dim):
                q, rem = divmod(rem, strides[j])
                pt.append(mins_c[j] + q)
            out[tuple(pt)] = (re, im)
    return out


def square_gaussian(coeffs: dict):
    """Exact self-convolution; two big multiplications instead of three."""
    if not coeffs:
        return {}
    dim = len(next(iter(coeffs)))
    mins = [min(p[j] for p in coeffs) for j in range(dim)]
    maxs = [max(p[j] for p in coeffs) for j in range(dim)]
    widths = [2 * (maxs[j] - mins[j]) + 1 for j in range(dim)]
    strides = _slot_strides(widths)
    n_slots = math.prod(widths)

    ar = _flatten(coeffs, mins, strides, n_slots, 0)
    ai = _flatten(coeffs, mins, strides, n_slots, 1)
    l1, linf = _abs_norms(ar, ai)
    bound = l1 * linf
    width = max(1, (bound.bit_length() + 2 + 7) // 8)

    pr, pi = _pack(ar, width), _pack(ai, width)
    # (r + i*i_)^2: re = (r+i_)(r-i_), im = 2 r i_
    m1 = (pr + pi) * (pr - pi)
    m2 = pr * pi
    cr = _unpack(m1, n_slots, width)
    ci = _unpack(2 * m2, n_slots, width)

    mins_c = [2 * m for m in mins]
    out = {}
    for slot in range(n_slots):
        re, im = cr[slot], ci[slot]
        if re or im:
            rem = slot
            pt = []
            for j in range(dim):
                q, rem = divmod(rem, strides[j])
                pt.append(mins_c[j] + q)
            out[tuple(pt)] = (re, im)
    return out

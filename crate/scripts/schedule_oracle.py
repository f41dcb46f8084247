#!/usr/bin/env python3
"""Level schedule of the one-dimensional energy experiment, recomputed with
exact rational arithmetic and written as JSON for the acceptance suite.

Usage: schedule_oracle.py > crates/core/tests/fixtures/schedule_1d.json
"""
import json
import math
from fractions import Fraction

D = 1
H0_LEVEL = 3  # h_0 = 2^-3
R = T = ETA_OBS = ETA_QOI = Fraction(1)
ALPHA1 = 3


def ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def log2_exact(x: Fraction) -> Fraction:
    # only ever called on powers of two
    n, d = x.numerator, x.denominator
    assert n & (n - 1) == 0 and d & (d - 1) == 0
    return Fraction(n.bit_length() - 1) - Fraction(d.bit_length() - 1)


def h(level: int) -> Fraction:
    return Fraction(1, 2 ** (H0_LEVEL + level))


def weight(level: int) -> Fraction:
    # 2 r eta > d for both directions: polynomial weights
    assert 2 * R * ETA_OBS > D and 2 * R * ETA_QOI > D
    return Fraction(level + 1) ** ALPHA1


def pow2(x: Fraction, e: Fraction) -> Fraction:
    # x is a power of two and x**e is an integer power of two here
    k = log2_exact(x) * e
    assert k.denominator == 1
    k = int(k)
    return Fraction(2) ** k if k >= 0 else Fraction(1, 2 ** -k)


def schedule(eps: Fraction) -> dict:
    h0 = h(0)
    L = ceil(-log2_exact(eps) / (ETA_OBS * R) + log2_exact(h0))
    Lq = ceil(L * ETA_OBS / ETA_QOI)
    N = [ceil(-log2_exact(h(l)) * ETA_OBS * R / T) for l in range(L + 1)]
    Nq = [ceil(-log2_exact(h(l)) * ETA_QOI * R / T) for l in range(Lq + 1)]
    a = 2 * R * ETA_OBS
    b = 2 * R * ETA_QOI
    M = []
    for l in range(L + 1):
        row = []
        for lq in range(Lq + 1):
            w = weight(l) * weight(lq)
            if l == 0 and lq == 0:
                m = pow2(h(L), -a) * w
            elif lq == 0:
                m = pow2(h(L), -a) * pow2(h(l), a) * w
            elif l == 0:
                m = pow2(h(L), -a) * pow2(h(lq), b) * w
            else:
                m = pow2(h(L), -a) * pow2(h(l), a) * pow2(h(lq), b) * w
            row.append(ceil(m))
        M.append(row)
    return {
        "epsilon_log2": int(log2_exact(eps)),
        "L": L,
        "L_qoi": Lq,
        "mesh_levels": [H0_LEVEL + l for l in range(L + 1)],
        "truncations": N,
        "qoi_truncations": Nq,
        "samples": M,
    }


def main() -> None:
    out = [schedule(Fraction(1, 2 ** (H0_LEVEL + L))) for L in range(2, 7)]
    assert all(math.isfinite(x) for s in out for row in s["samples"] for x in row)
    print(json.dumps(out, indent=1))


if __name__ == "__main__":
    main()

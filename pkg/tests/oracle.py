"""Independent reference values for the tests.

The blade sign uses the closed-form count: moving every generator of ``b``
left past the larger generators of ``a`` costs one sign each, and each
shared generator contributes ``e_i e_i = -1``.
"""

from __future__ import annotations

import math

import numpy as np


def blade_sign(a: int, b: int) -> int:
    swaps = 0
    for i in range(16):
        if b >> i & 1:
            swaps += bin(a >> (i + 1)).count("1")
    shared = bin(a & b).count("1")
    return -1 if (swaps + shared) % 2 else 1


def dense_product(r: int, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    n = 1 << r
    out = np.zeros(np.broadcast_shapes(A.shape, B.shape))
    for a in range(n):
        for b in range(n):
            out[..., a ^ b] += blade_sign(a, b) * A[..., a] * B[..., b]
    return out


# analytic values, frozen
CATENOID_CONJUGATE_PERIOD = 2 * math.pi  # integral of -*df around the waist
SPHERE_HOPF_MAX = 0.5  # |A_N| = |H| |df| / 2 with |H| = 1 and unit coordinate speed
SPHERE_MEAN_CURVATURE_NORM = 1.0
LAMBDA_CONTROL_RATIO = (1.2**2 - 1) / (1.5**2 - 1)  # 0.44 / 1.25 from (x^2 + y^2 - 1)
LAWSON_SPAN_RANK = 5
DEGREE_TABLE = {(g, r): 2 ** (r - 2) * (g - 1) for g in range(4) for r in (3, 4, 5)}

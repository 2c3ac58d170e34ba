"""Closed-form stationary points used as independent oracles."""

import math


def regular_example1(d1, d2, mu):
    return 3 * math.sqrt(1.5) * d1 / (7 * mu), 21 * d2 / d1


def embedded_example1(d1, d2, mu):
    return 13 * math.sqrt(1.5) * d1 / (8 * mu), -4 * d2 / (3 * d1)


def regular_example2(d1, d2):
    root = math.sqrt(49 * d1**2 - 36 * d1 * d2 + 4 * d2**2)
    nu, nu_t = 7 * d1 - 2 * d2 + root, 7 * d1 + 2 * d2 - root
    return 3 * math.sqrt(6) / (64 * d2) * nu_t, 0.75 * nu


def embedded_example2(d1, d2, branch):
    """Both sign choices of the inner square root; ``branch`` is +1 or -1."""
    inner = math.sqrt(2) * math.sqrt(d1**2 * (8 * d1**2 + 24 * d1 * d2 - 9 * d2**2))
    xi = (3 * d1 * d2 - 4 * d1**2 + branch * inner) / (8 * d1 - 3 * d2)
    A = math.sqrt(1.5) * (3 * d1 - 4 * xi / 3) / (4 * (d2 - 2 * xi / 3))
    return A, 2 * xi / 3

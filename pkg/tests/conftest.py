"""Shared test oracles: hand-rolled determinants and random SPD instances.

The determinant oracle deliberately avoids ``np.linalg`` so the library's
determinant identities are checked against an independent evaluation route.
"""

import numpy as np

from genvarswap import validate_correlation


def laplace_det(m) -> float:
    """Determinant by recursive cofactor (Laplace) expansion along row 0."""
    m = [[float(x) for x in row] for row in np.asarray(m)]
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0.0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        total += (-1.0) ** j * m[0][j] * laplace_det(minor)
    return total


def random_correlation(rng, n=3):
    """Random well-conditioned correlation matrix via a normalized Gram matrix."""
    factors = rng.standard_normal((n, n + 3))
    gram = factors @ factors.T + 0.5 * np.eye(n)
    scale = 1.0 / np.sqrt(np.diag(gram))
    return validate_correlation(gram * np.outer(scale, scale))

"""Compiled inner loops.  Everything here works in eigen-coordinates
``x = S^-1 Y`` where the flow between jumps is diagonal."""
import numpy as np
from numba import njit


@njit(cache=True)
def event_loop(spec, u, w, alpha0, gaps, Z, x0):
    """Flow-then-jump recursion over a jump stream.

    Returns the post-jump states (complex, shape (n, q)) and the
    volatility left limits at each jump.
    """
    n = gaps.shape[0]
    q = spec.shape[0]
    xs = np.empty((n, q), dtype=np.complex128)
    v = np.empty(n)
    x = x0.copy()
    for i in range(n):
        acc = 0.0
        for j in range(q):
            x[j] = x[j] * np.exp(spec[j] * gaps[i])
            acc += (w[j] * x[j]).real
        vi = alpha0 + acc
        v[i] = vi
        kick = vi * Z[i]
        for j in range(q):
            x[j] = x[j] + u[j] * kick
            xs[i, j] = x[j]
    return xs, v

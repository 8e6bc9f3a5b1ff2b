"""Pure-numpy implementation of the hot SGD inner loop.

Used when the compiled extension (weaklearn._accel) is unavailable; both
backends consume pre-sampled directions and labels so a given seed produces
the same trajectory up to floating-point associativity.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def median_sgd_run(a, kxs, ys, us, gammas, lam_reg, Kpp, avg_out):
    """T steps of median-regression SGD with a simulated sign oracle.

    a       (p, m)  coefficients, updated in place
    kxs     (T, p)  kernel row k(x_t, anchors)
    ys      (T, m)  hidden labels
    us      (T, m)  pre-sampled unit directions
    gammas  (T,)    step sizes
    Kpp     (p, p)  anchor Gram (ridge metric), used when lam_reg > 0
    avg_out (p, m)  accumulates the sum of post-update iterates (in place)

    Returns the array of oracle bits (+-1) for logging/replay.
    """
    T = kxs.shape[0]
    eps_out = np.empty(T)
    use_ridge = lam_reg > 0.0
    for t in range(T):
        kx = kxs[t]
        u = us[t]
        f = kx @ a  # (m,)
        inner = float((ys[t] - f) @ u)
        eps = 1.0 if inner >= 0.0 else -1.0
        eps_out[t] = eps
        g = gammas[t]
        a += (g * eps) * np.outer(kx, u)
        if use_ridge:
            a -= (g * lam_reg * 2.0) * (Kpp @ a)
        avg_out += a
    return eps_out

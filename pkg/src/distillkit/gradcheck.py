"""Finite-difference gradient oracle.

Central differences against the analytic reverse-mode gradients, evaluated in
float64. This is the independent check the rest of the stack is validated
against, so it deliberately re-evaluates the full forward function instead of
reusing anything from the tape.
"""

import numpy as np

from .autograd import backprop


def finite_difference_check(fn, params, eps=1e-4, max_coords=20, rng=None):
    """Return the max relative error between analytic and numeric gradients.

    fn(params) must rebuild the graph and return a scalar Tensor. `params` is
    a dict of name -> float64 Tensor with requires_grad set; up to
    `max_coords` coordinates per parameter are probed with central differences
    (fn(w+eps*e) - fn(w-eps*e)) / (2*eps) and compared via
    |a - n| / max(|a|, |n|, 1e-8).
    """
    for name, p in params.items():
        if p.data.dtype != np.float64:
            raise ValueError(
                f"finite_difference_check requires float64 params ({name} "
                f"is {p.data.dtype})")
    if rng is None:
        rng = np.random.default_rng(0)

    loss = fn(params)
    analytic = backprop(loss, params)

    worst = 0.0
    for name, p in params.items():
        flat = p.data.reshape(-1)
        n = flat.shape[0]
        if n <= max_coords:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords, replace=False)
        aflat = analytic[name].reshape(-1)
        for i in coords:
            orig = flat[i]
            flat[i] = orig + eps
            up = fn(params).item()
            flat[i] = orig - eps
            down = fn(params).item()
            flat[i] = orig
            numeric = (up - down) / (2.0 * eps)
            a = aflat[i]
            rel = abs(a - numeric) / max(abs(a), abs(numeric), 1e-8)
            worst = max(worst, rel)
    return worst

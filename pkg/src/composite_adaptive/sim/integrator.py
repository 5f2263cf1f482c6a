"""Classical fixed-step Runge-Kutta integration."""

import numpy as np


class NonFiniteStage(FloatingPointError):
    pass


def rk4_step(rates, t, y, h):
    """One RK4 step of ``y' = rates(t, y)``.

    Raises :class:`NonFiniteStage` if any stage rate is not finite.
    """
    k1 = rates(t, y)
    k2 = rates(t + 0.5 * h, y + (0.5 * h) * k1)
    k3 = rates(t + 0.5 * h, y + (0.5 * h) * k2)
    k4 = rates(t + h, y + h * k3)
    incr = k2 + k3
    incr *= 2.0
    incr += k1
    incr += k4
    # a non-finite stage always poisons the weighted sum
    if not np.isfinite(incr).all():
        bad = [i for i, k in enumerate((k1, k2, k3, k4), 1) if not np.isfinite(k).all()]
        raise NonFiniteStage(f"non-finite rate at RK4 stage(s) {bad}, t={t:.6g}")
    incr *= h / 6.0
    incr += y
    return incr


def integrate(rates, y0, h, n_steps, t0=0.0):
    """Take ``n_steps`` RK4 steps from ``y0``; returns the final state."""
    y = np.array(y0, dtype=float)
    for i in range(n_steps):
        y = rk4_step(rates, t0 + i * h, y, h)
    return y

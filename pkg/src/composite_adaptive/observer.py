"""Dynamics observer giving a second estimate of the drift, and the prediction
error built from it.

The ``f_hat`` update involves the unmeasurable ``d/dt r_tilde``, so ``f_hat``
is never integrated directly. It is rebuilt from

    f_hat(t) = f_hat(0) + k_f (r_tilde(t) - r_tilde(0)) + acc(t),
    d/dt acc = (k_f alpha2 + 1) r_tilde,

with ``acc(0) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ObserverState:
    r_hat: np.ndarray
    accumulator: np.ndarray
    r_tilde_0: np.ndarray
    f_hat_0: np.ndarray

    @classmethod
    def initial(cls, r0, f_hat_0=None, r_hat_0=None) -> "ObserverState":
        """Start with ``r_hat(0) = r(0)`` unless given, and ``f_hat(0) = 0``
        unless given."""
        r0 = np.asarray(r0, dtype=float)
        r_hat = r0.copy() if r_hat_0 is None else np.asarray(r_hat_0, dtype=float)
        f0 = np.zeros_like(r0) if f_hat_0 is None else np.asarray(f_hat_0, dtype=float)
        return cls(r_hat, np.zeros_like(r0), r0 - r_hat, f0)

    def r_tilde(self, r) -> np.ndarray:
        return r - self.r_hat

    def f_hat(self, r, k_f) -> np.ndarray:
        return f_hat_from(self.r_hat, self.accumulator, r, self.r_tilde_0, self.f_hat_0, k_f)


def f_hat_from(r_hat, accumulator, r, r_tilde_0, f_hat_0, k_f) -> np.ndarray:
    return f_hat_0 + k_f * ((r - r_hat) - r_tilde_0) + accumulator


def observer_rates(r_hat, accumulator, r, e, gu, xd_ddot, r_tilde_0, f_hat_0, gains):
    """Rates of ``r_hat`` and of the accumulator.

    ``gu`` is ``g(x, xdot) u``, the applied acceleration input.
    Returns ``(r_hat_dot, acc_dot, f_hat)``.
    """
    r_tilde = r - r_hat
    f_hat = f_hat_0 + gains.k_f * (r_tilde - r_tilde_0) + accumulator
    a1 = gains.alpha1
    r_hat_dot = gu - xd_ddot + a1 * (r - a1 * e) + f_hat + gains.alpha2 * r_tilde
    acc_dot = (gains.k_f * gains.alpha2 + 1.0) * r_tilde
    return r_hat_dot, acc_dot, f_hat


def prediction_error(f_hat, phi_out) -> np.ndarray:
    return np.asarray(f_hat, dtype=float) - np.asarray(phi_out, dtype=float)

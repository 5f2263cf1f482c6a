"""Second-order plants ``xddot = f(x, xdot) + g(x, xdot) u`` and the reference.

The shipped plant is the gravity-free planar two-link arm
``M(x) xddot + V_m(x, xdot) xdot + F_d xdot = tau``, so that
``f = -M^{-1}(V_m + F_d) xdot`` and ``g = M^{-1}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dnn


@dataclass(frozen=True)
class PlantState:
    x: np.ndarray
    xdot: np.ndarray

    @property
    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.xdot])


@dataclass(frozen=True)
class TwoLinkParams:
    p1: float = 3.473
    p2: float = 0.196
    p3: float = 0.242
    fd1: float = 5.3
    fd2: float = 1.1

    @classmethod
    def from_dict(cls, d: dict) -> "TwoLinkParams":
        unknown = set(d) - {"p1", "p2", "p3", "fd1", "fd2"}
        if unknown:
            raise ValueError(f"unknown plant keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return {"p1": self.p1, "p2": self.p2, "p3": self.p3, "fd1": self.fd1, "fd2": self.fd2}


def mass_matrix(params: TwoLinkParams, x) -> np.ndarray:
    c2 = np.cos(x[1])
    off = params.p2 + params.p3 * c2
    return np.array([[params.p1 + 2.0 * params.p3 * c2, off], [off, params.p2]])


def coriolis_matrix(params: TwoLinkParams, x, xdot) -> np.ndarray:
    s2 = params.p3 * np.sin(x[1])
    return np.array(
        [[-s2 * xdot[1], -s2 * (xdot[0] + xdot[1])], [s2 * xdot[0], 0.0]]
    )


class TwoLinkPlant:
    """Planar two-link manipulator with viscous friction (n = m = 2)."""

    n = 2

    def __init__(self, params: TwoLinkParams | None = None):
        self.params = params or TwoLinkParams()
        self._friction = np.diag([self.params.fd1, self.params.fd2])

    def drift(self, x, xdot) -> np.ndarray:
        m = mass_matrix(self.params, x)
        damping = coriolis_matrix(self.params, x, xdot) + self._friction
        return -np.linalg.solve(m, damping @ xdot)

    def effectiveness(self, x, xdot) -> np.ndarray:
        return np.linalg.inv(mass_matrix(self.params, x))

    def effectiveness_pinv(self, x, xdot) -> np.ndarray:
        # g = M^{-1} is square and invertible, so its right pseudo-inverse is M.
        return mass_matrix(self.params, x)

    def drift_and_input_maps(self, x, xdot):
        """``(f, g, g_pinv)`` sharing one mass-matrix evaluation."""
        m = mass_matrix(self.params, x)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if not det > 0:
            raise np.linalg.LinAlgError("mass matrix is not positive definite")
        g = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]) / det
        damping = coriolis_matrix(self.params, x, xdot) + self._friction
        return -g @ (damping @ xdot), g, m


class DnnDriftPlant:
    """Plant whose drift is a fixed DNN ``f(x, xdot) = Phi([x; xdot], theta)``.

    The input map is borrowed from ``base``. Used to check the closed loop in
    the case where the ideal weights are known exactly.
    """

    def __init__(self, spec: dnn.DnnSpec, theta, base=None):
        self.spec = spec
        self.theta = np.array(theta, dtype=float)
        self.base = base or TwoLinkPlant()
        self.n = self.base.n
        if spec.input_size != 2 * self.n or spec.output_size != self.n:
            raise ValueError("drift network must map R^2n to R^n")

    def drift(self, x, xdot) -> np.ndarray:
        return dnn.forward(self.spec, self.theta, np.concatenate([x, xdot]))

    def effectiveness(self, x, xdot) -> np.ndarray:
        return self.base.effectiveness(x, xdot)

    def effectiveness_pinv(self, x, xdot) -> np.ndarray:
        return self.base.effectiveness_pinv(x, xdot)

    def drift_and_input_maps(self, x, xdot):
        return self.drift(x, xdot), self.effectiveness(x, xdot), self.effectiveness_pinv(x, xdot)


def right_pinv(g) -> np.ndarray:
    """``g^T (g g^T)^{-1}`` for a full-row-rank ``g``."""
    g = np.asarray(g, dtype=float)
    return g.T @ np.linalg.inv(g @ g.T)


def desired(t: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reference ``x_d = 0.25 exp(-sin t) [sin t, cos t]`` and two derivatives."""
    s, c = np.sin(t), np.cos(t)
    w = 0.25 * np.exp(-s)
    # d/dt of w = -c w
    xd = w * np.array([s, c])
    d1 = np.array([c - c * s, -s - c * c])
    xd_dot = w * d1
    # d/dt d1 = [-s - (c^2 - s^2), -c + 2 s c]
    d1_dot = np.array([-s - c * c + s * s, -c + 2.0 * s * c])
    xd_ddot = w * (d1_dot - c * d1)
    return xd, xd_dot, xd_ddot

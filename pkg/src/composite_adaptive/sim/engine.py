"""Closed-loop simulation of plant, controller, observer and weight adaptation.

The whole loop is one ODE with state ``(x, xdot, r_hat, acc, theta_hat, Gamma)``
(``Gamma`` only for the composite controller) advanced by fixed-step RK4.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass, field

import numpy as np

from .. import control_law as cl
from .. import dnn
from ..observer import observer_rates
from ..plant import TwoLinkPlant, desired
from .config import SimConfig
from .integrator import NonFiniteStage, rk4_step


class SimulationDiverged(RuntimeError):
    """Raised when a run leaves the blow-up bound; carries the partial log."""

    def __init__(self, message, log=None):
        super().__init__(message)
        self.log = log


VECTOR_SIGNALS = (
    "x", "xdot", "xd", "e", "r", "u", "r_hat", "f_hat", "r_tilde", "acc", "E", "f", "phi",
)
SCALAR_SIGNALS = (
    "lam_max", "lam_min", "beta", "approx_err", "lyapunov", "jac_fro", "theta_norm",
)


@dataclass
class SimLog:
    """Decimated time series of one run. Vector signals have shape ``(rows, n)``."""

    t: np.ndarray
    signals: dict
    theta: np.ndarray
    controller: str
    seed: int
    status: str = "ok"
    message: str = ""
    meta: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.signals[name]

    def __len__(self):
        return len(self.t)

    @property
    def theta_final(self) -> np.ndarray:
        return self.theta[-1]

    def theta_hashes(self) -> list[str]:
        return [hashlib.sha1(th.tobytes()).hexdigest()[:16] for th in self.theta]

    def columns(self) -> list[str]:
        cols = ["t"]
        for name in VECTOR_SIGNALS:
            n = self.signals[name].shape[1]
            cols += [f"{name}{i + 1}" for i in range(n)]
        cols += list(SCALAR_SIGNALS)
        cols.append("theta_hash")
        return cols

    def write_csv(self, path) -> None:
        hashes = self.theta_hashes()
        blocks = [self.t[:, None]]
        blocks += [self.signals[name] for name in VECTOR_SIGNALS]
        blocks += [self.signals[name][:, None] for name in SCALAR_SIGNALS]
        table = np.hstack(blocks)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(self.columns())
            for row, h in zip(table, hashes):
                w.writerow([f"{v:.17g}" for v in row] + [h])


def lyapunov_partial(e, r, r_tilde, f_tilde) -> float:
    """Lyapunov candidate without the weight-error term (ideal weights are unknown)."""
    return 0.5 * float(e @ e + r @ r + r_tilde @ r_tilde + f_tilde @ f_tilde)


class ClosedLoop:
    """Rates and logged signals of the closed loop for one configuration."""

    def __init__(self, cfg: SimConfig, plant=None):
        self.cfg = cfg
        self.gains = cfg.gains
        self.spec = cfg.dnn
        self.plant = plant if plant is not None else TwoLinkPlant(cfg.plant)
        self.n = len(cfg.x0)
        self.p = dnn.param_count(self.spec)
        self.composite = cfg.controller == "composite"
        self.gamma0 = cfg.gains.gamma0 * np.eye(self.p)
        self.beta = 0.0
        self.r_tilde_0 = np.zeros(self.n)
        self.f_hat_0 = np.zeros(self.n)
        self.max_radial_excess = 0.0

    # state packing

    def pack(self, x, xdot, r_hat, acc, theta, gamma=None) -> np.ndarray:
        parts = [x, xdot, r_hat, acc, theta]
        if self.composite:
            parts.append(gamma.reshape(-1))
        return np.concatenate(parts)

    def unpack(self, y):
        n, p = self.n, self.p
        gamma = y[4 * n + p:].reshape(p, p) if self.composite else self.gamma0
        return y[:n], y[n:2 * n], y[2 * n:3 * n], y[3 * n:4 * n], y[4 * n:4 * n + p], gamma

    def initial_state(self, theta0) -> np.ndarray:
        cfg = self.cfg
        x = np.array(cfg.x0, dtype=float)
        xdot = np.array(cfg.xdot0, dtype=float)
        xd, xd_dot, _ = desired(0.0)
        r0 = cl.tracking_errors(x, xdot, xd, xd_dot, self.gains.alpha1).r
        r_hat = r0.copy()
        self.r_tilde_0 = r0 - r_hat
        if isinstance(cfg.f_hat0, str):
            if cfg.f_hat0 == "dnn":
                self.f_hat_0 = dnn.forward(self.spec, theta0, np.concatenate([x, xdot]))
            else:
                self.f_hat_0 = np.zeros(self.n)
        else:
            self.f_hat_0 = np.array(cfg.f_hat0, dtype=float)
        return self.pack(x, xdot, r_hat, np.zeros(self.n), np.asarray(theta0, dtype=float), self.gamma0.copy())

    # dynamics

    def _evaluate(self, t, y):
        g = self.gains
        x, xdot, r_hat, acc, theta, gamma = self.unpack(y)
        xd, xd_dot, xd_ddot = desired(t)
        errs = cl.tracking_errors(x, xdot, xd, xd_dot, g.alpha1)
        f, g_mat, g_pinv = self.plant.drift_and_input_maps(x, xdot)
        phi, jac = dnn.forward_and_jacobian(self.spec, theta, np.concatenate([x, xdot]))
        u = cl.control_input(g_pinv, xd_ddot, errs, phi, g)
        gu = g_mat @ u
        r_hat_dot, acc_dot, f_hat = observer_rates(
            r_hat, acc, errs.r, errs.e, gu, xd_ddot, self.r_tilde_0, self.f_hat_0, g
        )
        pred_err = f_hat - phi
        return dict(
            x=x, xdot=xdot, xd=xd, errs=errs, f=f, phi=phi, jac=jac, u=u, gu=gu,
            r_hat=r_hat, acc=acc, r_hat_dot=r_hat_dot, acc_dot=acc_dot, f_hat=f_hat,
            E=pred_err, theta=theta, gamma=gamma,
        )

    def begin_step(self, y, lam_max=None) -> None:
        """Refresh the forgetting factor; it is held over the coming step."""
        if self.composite:
            if lam_max is None:
                lam_max = cl.top_eigenvalue(self.unpack(y)[5])
            self.beta = cl.forgetting_factor(lam_max, self.gains.beta0, self.gains.kappa0)

    def rates(self, t, y) -> np.ndarray:
        s = self._evaluate(t, y)
        g = self.gains
        theta, gamma, jac, r = s["theta"], s["gamma"], s["jac"], s["errs"].r
        xddot = s["f"] + s["gu"]
        parts = [s["xdot"], xddot, s["r_hat_dot"], s["acc_dot"]]
        if self.composite:
            parts.append(cl.composite_rhs(theta, gamma, jac, r, s["E"], g))
            parts.append(cl.gamma_rate(gamma, jac, self.beta).reshape(-1))
        else:
            parts.append(cl.baseline_rhs(theta, gamma, jac, r, g))
        return np.concatenate(parts)

    def record(self, t, y, exact_eigs=None) -> dict:
        s = self._evaluate(t, y)
        g = self.gains
        errs = s["errs"]
        r_tilde = errs.r - s["r_hat"]
        if exact_eigs is None:
            eigs = np.linalg.eigvalsh(s["gamma"])
            exact_eigs = (eigs[0], eigs[-1])
        lam_min, lam_max = exact_eigs
        beta = cl.forgetting_factor(lam_max, g.beta0, g.kappa0) if self.composite else 0.0
        approx = s["f"] - s["phi"]
        # x, xdot, r_hat, acc and theta are views into y; copy them out
        return dict(
            x=s["x"].copy(), xdot=s["xdot"].copy(), xd=s["xd"], e=errs.e, r=errs.r, u=s["u"],
            r_hat=s["r_hat"].copy(), f_hat=s["f_hat"], r_tilde=r_tilde, acc=s["acc"].copy(), E=s["E"],
            f=s["f"], phi=s["phi"],
            lam_max=lam_max, lam_min=lam_min, beta=beta,
            approx_err=float(np.linalg.norm(approx)),
            lyapunov=lyapunov_partial(errs.e, errs.r, r_tilde, s["f"] - s["f_hat"]),
            jac_fro=float(np.linalg.norm(s["jac"])),
            theta_norm=float(np.linalg.norm(s["theta"])),
            _theta=s["theta"].copy(),
        )

    def finish_step(self, y) -> None:
        """Post-step corrections, applied in place.

        The projection makes the weight rate tangent on the sphere, but a
        finite step along a tangent still leaves the ball by O(h^2); the
        estimate is scaled back onto it. Gamma is re-symmetrized.
        """
        theta = y[4 * self.n:4 * self.n + self.p]
        norm = float(np.linalg.norm(theta))
        bound = self.gains.theta_bar
        if norm > bound:
            self.max_radial_excess = max(self.max_radial_excess, norm - bound)
            theta *= bound / norm
            # rounding can leave the norm an ulp above the bound
            while np.linalg.norm(theta) > bound:
                theta *= 1.0 - 2.0 ** -52
        if self.composite:
            gamma = self.unpack(y)[5]
            gamma[...] = 0.5 * (gamma + gamma.T)

    def state_norm(self, y) -> float:
        x, xdot, r_hat, acc, theta, _ = self.unpack(y)
        return float(max(np.abs(x).max(), np.abs(xdot).max(), np.abs(r_hat).max(), np.abs(acc).max()))


def _assemble(rows, times, cfg, loop, status="ok", message="") -> SimLog:
    signals = {}
    for name in VECTOR_SIGNALS:
        signals[name] = np.array([row[name] for row in rows])
    for name in SCALAR_SIGNALS:
        signals[name] = np.array([row[name] for row in rows], dtype=float)
    theta = np.array([row["_theta"] for row in rows])
    meta = {
        "f_hat_0": loop.f_hat_0.copy(),
        "r_tilde_0": loop.r_tilde_0.copy(),
        "step": cfg.step,
        "max_radial_excess": loop.max_radial_excess,
        "config_hash": cfg.config_hash(),
    }
    return SimLog(np.array(times), signals, theta, cfg.controller, cfg.seed, status, message, meta)


def initial_weights(cfg: SimConfig) -> np.ndarray:
    """Initial estimate drawn from U(-init_scale, init_scale) with ``cfg.seed``."""
    return dnn.init_weights(cfg.dnn, np.random.default_rng(cfg.seed), cfg.init_scale)


def run_simulation(cfg: SimConfig, plant=None, theta0=None, progress=None) -> SimLog:
    """Integrate the closed loop over ``[0, cfg.duration]``.

    ``plant`` defaults to the two-link arm built from ``cfg.plant``; ``theta0``
    defaults to :func:`initial_weights`. Raises :class:`SimulationDiverged`
    (with the partial log attached) if the state leaves ``cfg.blowup`` or a
    rate becomes non-finite.
    """
    loop = ClosedLoop(cfg, plant)
    if theta0 is None:
        theta0 = initial_weights(cfg)
    y = loop.initial_state(theta0)
    h = cfg.step
    # the baseline gain never changes, so its spectrum is computed once
    fixed_eigs = None
    if not loop.composite:
        eigs = np.linalg.eigvalsh(loop.gamma0)
        fixed_eigs = (eigs[0], eigs[-1])

    rows, times = [loop.record(0.0, y, fixed_eigs)], [0.0]
    lam_max = None
    for i in range(1, cfg.n_steps + 1):
        t_prev = (i - 1) * h
        loop.begin_step(y, lam_max)
        lam_max = None
        try:
            y = rk4_step(loop.rates, t_prev, y, h)
        except NonFiniteStage as exc:
            log = _assemble(rows, times, cfg, loop, "diverged", str(exc))
            raise SimulationDiverged(str(exc), log) from exc
        loop.finish_step(y)
        if not np.all(np.isfinite(y)) or loop.state_norm(y) > cfg.blowup:
            msg = f"state left the blow-up bound {cfg.blowup:g} at t={i * h:.6g}"
            log = _assemble(rows, times, cfg, loop, "diverged", msg)
            raise SimulationDiverged(msg, log)
        if i % cfg.decimation == 0:
            t = i * h
            eigs = fixed_eigs
            if loop.composite:
                ev = np.linalg.eigvalsh(loop.unpack(y)[5])
                eigs = (ev[0], ev[-1])
                lam_max = ev[-1]  # reused by the next step
            rows.append(loop.record(t, y, eigs))
            times.append(t)
            if progress is not None:
                progress(t)
    return _assemble(rows, times, cfg, loop)

"""Tracking errors, control input, projection and the two weight-update laws."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class Gains:
    alpha1: float = 5.0
    alpha2: float = 10.0
    alpha3: float = 20.0
    k_r: float = 20.0
    k_f: float = 20.0
    k_theta: float = 1e-4
    beta0: float = 10.0
    kappa0: float = 2.0
    theta_bar: float = 10.0
    gamma0: float = 1.0
    proj_band: float = 0.05

    def __post_init__(self):
        for name, val in asdict(self).items():
            if name == "alpha3":
                if val < 0:
                    raise ValueError("alpha3 must be nonnegative")
            elif name == "k_theta":
                if val < 0:
                    raise ValueError("k_theta must be nonnegative")
            elif not val > 0:
                raise ValueError(f"gain {name} must be positive, got {val}")
        if not self.proj_band < 1:
            raise ValueError("proj_band must lie in (0, 1)")
        if not self.gamma0 < self.kappa0:
            raise ValueError("initial gain must satisfy lambda_max(Gamma(0)) < kappa0")

    @classmethod
    def from_dict(cls, d: dict) -> "Gains":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown gain keys: {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ErrorSignals:
    e: np.ndarray
    r: np.ndarray


def tracking_errors(x, xdot, xd, xd_dot, alpha1) -> ErrorSignals:
    e = np.asarray(x, dtype=float) - xd
    r = (np.asarray(xdot, dtype=float) - xd_dot) + alpha1 * e
    return ErrorSignals(e, r)


def control_input(g_pinv, xd_ddot, errs: ErrorSignals, phi_out, gains: Gains) -> np.ndarray:
    """``u = g^+ (xdd_d - (a1 + k_r) r + (a1^2 - 1) e - Phi)``."""
    phi_out = np.asarray(phi_out, dtype=float)
    if not np.all(np.isfinite(phi_out)):
        raise ValueError("DNN output is not finite")
    a1 = gains.alpha1
    v = xd_ddot - (a1 + gains.k_r) * errs.r + (a1 * a1 - 1.0) * errs.e - phi_out
    return g_pinv @ v


def _band_factor(norm, theta_bar, band):
    inner = theta_bar * (1.0 - band)
    return min(max((norm - inner) / (theta_bar * band), 0.0), 1.0)


def projection(mu, theta_hat, theta_bar, band=0.05) -> np.ndarray:
    """Continuous projection keeping ``theta_hat`` inside the ball of radius
    ``theta_bar``.

    Inside the inner ball of radius ``theta_bar * (1 - band)``, or when ``mu``
    points inward, ``mu`` is returned unchanged. In the band the outward
    radial part of ``mu`` is removed with a weight rising linearly from 0 to
    1, so that on the sphere the result is tangent.
    """
    mu = np.asarray(mu, dtype=float)
    theta_hat = np.asarray(theta_hat, dtype=float)
    sq = float(theta_hat @ theta_hat)
    c = _band_factor(np.sqrt(sq), theta_bar, band)
    radial = float(theta_hat @ mu)
    if c == 0.0 or radial <= 0.0:
        return mu
    return mu - (c * radial / sq) * theta_hat


def gained_projection(gamma, mu, theta_hat, theta_bar, band=0.05) -> np.ndarray:
    """Projected version of the gained rate ``gamma @ mu``.

    Same switching as :func:`projection`, but the removed component is
    ``gamma theta theta^T gamma mu / (theta^T gamma theta)``, which makes
    ``theta_hat^T`` of the result vanish on the sphere for any PD ``gamma``.
    Equals ``gamma @ projection(mu, ...)`` whenever the projection is
    inactive, and for ``gamma = I``.
    """
    rate = gamma @ mu
    theta_hat = np.asarray(theta_hat, dtype=float)
    norm = float(np.linalg.norm(theta_hat))
    c = _band_factor(norm, theta_bar, band)
    radial = float(theta_hat @ rate)
    if c == 0.0 or radial <= 0.0:
        return rate
    g_theta = gamma @ theta_hat
    return rate - (c * radial / float(theta_hat @ g_theta)) * g_theta


def _check_dims(theta_hat, gamma, jac, r):
    p = theta_hat.shape[0]
    if gamma.shape != (p, p):
        raise ValueError(f"Gamma must be {p}x{p}, got {gamma.shape}")
    if jac.shape != (r.shape[0], p):
        raise ValueError(f"Jacobian must be {r.shape[0]}x{p}, got {jac.shape}")


def composite_rhs(theta_hat, gamma, jac, r, pred_err, gains: Gains) -> np.ndarray:
    """Weight rate driven by tracking error ``r`` and prediction error ``E``."""
    theta_hat = np.asarray(theta_hat, dtype=float)
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    jac = np.atleast_2d(np.asarray(jac, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    pred_err = np.atleast_1d(np.asarray(pred_err, dtype=float))
    _check_dims(theta_hat, gamma, jac, r)
    mu = -gains.k_theta * theta_hat + jac.T @ (r + gains.alpha3 * pred_err)
    return gained_projection(gamma, mu, theta_hat, gains.theta_bar, gains.proj_band)


def baseline_rhs(theta_hat, gamma0, jac, r, gains: Gains) -> np.ndarray:
    """Tracking-error-only law: :func:`composite_rhs` with ``alpha3 = 0``.

    The caller keeps ``gamma0`` constant.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    theta_hat = np.asarray(theta_hat, dtype=float)
    gamma0 = np.atleast_2d(np.asarray(gamma0, dtype=float))
    jac = np.atleast_2d(np.asarray(jac, dtype=float))
    _check_dims(theta_hat, gamma0, jac, r)
    mu = -gains.k_theta * theta_hat + jac.T @ r
    return gained_projection(gamma0, mu, theta_hat, gains.theta_bar, gains.proj_band)


def gamma_rate(gamma, jac, beta) -> np.ndarray:
    """Forward form of ``d/dt Gamma^{-1} = -beta Gamma^{-1} + J^T J``:
    ``Gamma_dot = beta Gamma - Gamma J^T J Gamma``."""
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    jac = np.atleast_2d(np.asarray(jac, dtype=float))
    gj = gamma @ jac.T
    return beta * gamma - gj @ gj.T


def forgetting_factor(gamma, beta0, kappa0) -> float:
    """``beta0 (1 - lambda_max(Gamma) / kappa0)``, floored at zero.

    ``gamma`` may be the gain matrix or an already computed ``lambda_max``.
    """
    if np.ndim(gamma) == 2:
        lam_max = top_eigenvalue(gamma)
    else:
        lam_max = float(gamma)
    return max(beta0 * (1.0 - lam_max / kappa0), 0.0)


def top_eigenvalue(a) -> float:
    """Largest eigenvalue of a symmetric matrix."""
    return float(np.linalg.eigvalsh(a)[-1])

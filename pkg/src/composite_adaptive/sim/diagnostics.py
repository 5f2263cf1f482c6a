"""Post-run diagnostics: invariants, observer residuals, excitation and
boundedness statistics computed from a :class:`SimLog`.

These are empirical readings of a single run, not certificates.
"""

from __future__ import annotations

import numpy as np

from .. import dnn
from .engine import lyapunov_partial  # noqa: F401  (re-exported)


def invariant_sweep(log, gains) -> dict:
    """Worst-case value of every per-step invariant over the logged rows."""
    f_tilde = log["f"] - log["f_hat"]
    identity = log["f_hat"] - (
        log.meta["f_hat_0"] + gains.k_f * (log["r_tilde"] - log.meta["r_tilde_0"]) + log["acc"]
    )
    surrogate = (log["E"] + f_tilde) - (log["f"] - log["phi"])
    return {
        "theta_norm_max": float(log["theta_norm"].max()),
        "theta_bar": gains.theta_bar,
        "lam_min_min": float(log["lam_min"].min()),
        "lam_max_max": float(log["lam_max"].max()),
        "kappa0": gains.kappa0,
        "beta_min": float(log["beta"].min()),
        "f_hat_identity_err": float(np.abs(identity).max()),
        "pred_err_surrogate_err": float(np.abs(surrogate).max()),
    }


def invariants_hold(sweep: dict, lam_tol=1e-6, identity_tol=1e-9, surrogate_tol=1e-10) -> bool:
    return (
        sweep["theta_norm_max"] <= sweep["theta_bar"]
        and sweep["lam_min_min"] > 0
        and sweep["lam_max_max"] <= sweep["kappa0"] + lam_tol
        and sweep["beta_min"] >= 0
        and sweep["f_hat_identity_err"] <= identity_tol
        and sweep["pred_err_surrogate_err"] <= surrogate_tol
    )


def _central_diff(t, y):
    dt = (t[2:] - t[:-2])[:, None]
    return (y[2:] - y[:-2]) / dt


def observer_residuals(log, gains, start=0.0) -> dict:
    """Finite-difference check of the observer error dynamics.

    Compares central differences of ``r_tilde`` and ``f_tilde = f - f_hat``
    on the logged grid with ``f_tilde - alpha2 r_tilde`` and
    ``fdot - k_f f_tilde - r_tilde`` (``fdot`` also by central difference).
    Only rows with ``t >= start`` are used. Returns the worst residual norms
    and the largest norm of each right-hand side for scaling.
    """
    t = log.t
    r_tilde = log["r_tilde"]
    f_tilde = log["f"] - log["f_hat"]
    mid = slice(1, -1)
    keep = t[mid] >= start
    rhs16 = (f_tilde - gains.alpha2 * r_tilde)[mid]
    res16 = _central_diff(t, r_tilde) - rhs16
    rhs17 = _central_diff(t, log["f"]) - gains.k_f * f_tilde[mid] - r_tilde[mid]
    res17 = _central_diff(t, f_tilde) - rhs17
    norm = lambda a: np.linalg.norm(a[keep], axis=1)  # noqa: E731
    return {
        "r_tilde_residual": float(norm(res16).max()),
        "r_tilde_rhs_max": float(norm(rhs16).max()),
        "f_tilde_residual": float(norm(res17).max()),
        "f_tilde_rhs_max": float(norm(rhs17).max()),
        "grid_step": float(np.median(np.diff(t))),
    }


def pe_monitor(log, spec: dnn.DnnSpec, window: float, stride: float) -> dict:
    """Extremal eigenvalues of the windowed excitation integral.

    For each window ``[t1, t1 + window]`` (``t1`` advancing by ``stride``) the
    integral of ``J^T J`` is taken by the trapezoid rule over the logged rows,
    with ``J`` rebuilt from the logged state and weight estimate.
    """
    t = log.t
    if window > t[-1] - t[0] + 1e-12:
        raise ValueError(f"window {window} longer than the log ({t[-1] - t[0]})")
    n = spec.output_size
    states = np.hstack([log["x"], log["xdot"]])
    jacs = np.array([dnn.jacobian(spec, th, s) for th, s in zip(log.theta, states)])
    return excitation_spectrum(t, jacs, window, stride)


def excitation_spectrum(t, jacs, window, stride) -> dict:
    """Same as :func:`pe_monitor` for given Jacobian samples ``(rows, n, p)``."""
    t = np.asarray(t, dtype=float)
    starts, lo, hi = [], [], []
    t1 = t[0]
    while t1 + window <= t[-1] + 1e-9:
        sel = np.nonzero((t >= t1 - 1e-9) & (t <= t1 + window + 1e-9))[0]
        ts = t[sel]
        w = np.zeros(len(sel))
        dt = np.diff(ts)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        stacked = (np.sqrt(w)[:, None, None] * jacs[sel]).reshape(-1, jacs.shape[2])
        ev = np.linalg.eigvalsh(stacked.T @ stacked)
        starts.append(t1)
        lo.append(ev[0])
        hi.append(ev[-1])
        t1 += stride
    return {"t_start": np.array(starts), "lam_min": np.array(lo), "lam_max": np.array(hi)}


def lyapunov_trend(log, average=10.0, transient=10.0) -> dict:
    """Moving average of the partial Lyapunov value and its largest rise
    after ``transient`` seconds."""
    t, v = log.t, log["lyapunov"]
    dt = float(np.median(np.diff(t)))
    k = max(int(round(average / dt)), 1)
    if k > len(v):
        raise ValueError("averaging window longer than the log")
    avg = np.convolve(v, np.ones(k) / k, mode="valid")
    t_avg = t[k - 1:]
    after = avg[t_avg >= transient + average]
    rise = float(np.max(np.diff(after))) if len(after) > 1 else 0.0
    return {
        "max": float(v.max()),
        "final_average": float(avg[-1]),
        "t_average": t_avg,
        "average": avg,
        "max_rise_after_transient": rise,
    }


def gain_condition_report(gains, log, transient=10.0) -> dict:
    """Empirical reading of the gain condition of the stability analysis.

    ``gamma3`` is the largest logged Frobenius norm of the weight Jacobian and
    ``gamma2`` the largest finite-difference rate of the true drift. The
    ``(k_theta + beta1)/2 - alpha3 gamma3`` entry uses the smallest logged
    forgetting factor after ``transient`` as a stand-in for ``beta1``; the
    bound of the reconstruction term is not observable and is left out.
    """
    i3 = int(np.argmax(log["jac_fro"]))
    gamma3 = float(log["jac_fro"][i3])
    fdot = np.linalg.norm(_central_diff(log.t, log["f"]), axis=1)
    gamma2 = float(fdot.max()) if len(fdot) else 0.0
    late = log.t >= transient
    beta1 = float(log["beta"][late].min()) if late.any() else float(log["beta"].min())
    theta_term = 0.5 * (gains.k_theta + beta1) - gains.alpha3 * gamma3
    return {
        "empirical": True,
        "alpha3_minus_half": gains.alpha3 - 0.5,
        "alpha3_condition_holds": gains.alpha3 - 0.5 > 0,
        "gamma3": gamma3,
        "gamma3_time": float(log.t[i3]),
        "gamma2": gamma2,
        "beta1_estimate": beta1,
        "observer_term": gains.k_f - 0.5 * (gamma2 + gains.alpha3 * gamma3),
        "weight_term": theta_term,
        "weight_term_note": "needs beta1 >= 0; negative values mean the sufficient "
        "condition is not certified by this run, not that the loop is unstable",
        "alpha1": gains.alpha1,
        "alpha2": gains.alpha2,
    }

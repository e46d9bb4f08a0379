"""Worst-case CVaR reformulation of the task-latency chance constraint.

The latency is linearized in the channel-gain error around the mean gain,
giving an affine loss Θ·Δ + θ⁰ per task. Under a mean-variance ambiguity
set, the worst-case CVaR of an affine loss has the closed form

    θ⁰ + Θ·μ + sqrt(α/(1−α))·|Θ|·σ,

which the production path uses directly. The equivalent second-order-cone
program is kept as a numeric oracle (`cvar_socp_oracle`) for verification:
it minimizes β + (e+s)/(1−α) subject to the cone constraints by nested
bounded 1-D searches after exact partial minimization of β, e, and q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .linkmodel import LinkTables, build_link_tables
from .scenario import Scenario


class ModelingError(ValueError):
    """The linearization is undefined for the given inputs (e.g. zero gain)."""


class OracleError(RuntimeError):
    """The numeric oracle failed to converge (test-infrastructure failure)."""


def risk_multiplier(alpha: float) -> float:
    """sqrt(α/(1−α)), the worst-case standard-deviation multiplier."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return math.sqrt(alpha / (1.0 - alpha))


@dataclass(frozen=True)
class RiskConfig:
    alpha: float
    mu: float
    sigma: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")


@dataclass(frozen=True)
class RiskProfile:
    """Per-task risk arrays with the fraction-of-mean sigma resolved."""

    alpha: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    rho: np.ndarray      # sqrt(alpha/(1-alpha)) per task


def risk_profile(scenario: Scenario, mean_gain: np.ndarray) -> RiskProfile:
    alpha = np.array([t.confidence for t in scenario.tasks])
    mu = np.array([u.mean for u in scenario.uncertainty])
    sigma = np.array([u.resolve_sigma(float(g))
                      for u, g in zip(scenario.uncertainty, mean_gain)])
    return RiskProfile(alpha=alpha, mu=mu, sigma=sigma,
                       rho=np.sqrt(alpha / (1.0 - alpha)))


@dataclass(frozen=True)
class AffineLossCoeffs:
    """Coefficients of the linearized loss Θ·Δ + θ⁰ for one task.

    kappa is the positive delay sensitivity to the gain error, so
    Θ = −f·kappa ≤ 0; θ⁰ collects the deterministic delay terms scaled
    by f minus the deadline term.
    """

    kappa: float
    theta_slope: float       # Θ
    theta0: float
    t_tx: float
    t_fwd: float
    theta0_parts: dict[str, float]


def gain_sensitivity(data_bits: float, mean_gain: float, radio) -> float:
    """kappa: −d(t_up)/d(gain) at the mean gain, seconds per gain unit."""
    if mean_gain <= 0:
        raise ModelingError("linearization undefined at zero mean gain")
    noise = radio.noise_psd * radio.uplink_bandwidth
    snr = radio.gu_tx_power * mean_gain / noise
    return (data_bits * math.log(2.0) / radio.uplink_bandwidth) \
        * radio.gu_tx_power / ((noise + radio.gu_tx_power * mean_gain)
                               * math.log(1.0 + snr) ** 2)


def taylor_loss_coeffs(m: int, lam_m, f_m: float, deployment,
                       scenario: Scenario,
                       tables: LinkTables | None = None) -> AffineLossCoeffs:
    """Linearized-latency coefficients for task m at frequency f_m."""
    if f_m <= 0:
        raise ValueError("f_m must be > 0")
    t = tables or build_link_tables(scenario, deployment)
    gain = float(t.mean_gain[m])
    kappa = gain_sensitivity(float(t.data_bits[m]), gain, scenario.radio)

    lam_arr = np.atleast_1d(np.asarray(lam_m, dtype=float))
    if lam_arr.size == 1:
        t_fwd = float(lam_arr[0]) * float(t.fwd_time[m])
    else:
        t_fwd = float(np.sum(lam_arr * t.data_bits[m] / t.rate_u2h))

    t_tx = float(t.tx_time[m])
    cycles = float(t.cycles_total[m])
    deadline = float(t.deadline[m])
    parts = {"tx": f_m * t_tx, "compute": cycles, "forward": f_m * t_fwd,
             "deadline": -deadline * f_m}
    return AffineLossCoeffs(kappa=kappa, theta_slope=-f_m * kappa,
                            theta0=sum(parts.values()),
                            t_tx=t_tx, t_fwd=t_fwd, theta0_parts=parts)


def worst_case_cvar(theta: float, theta0: float, mu: float, sigma: float,
                    alpha: float) -> float:
    """Closed-form supremum of CVaR_α(Θξ + θ⁰) over all (μ, σ²) laws.

    The constraint holds in the worst case iff the returned value is <= 0.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return theta0 + theta * mu + risk_multiplier(alpha) * abs(theta) * sigma


def cvar_socp_oracle(theta: float, theta0: float, mu: float, sigma: float,
                     alpha: float, tol: float = 1e-12) -> float:
    """Numeric infimum of the worst-case-CVaR cone program (oracle use).

    Exact partial minimization first: the first constraint is active in β,
    e* = 0 because its objective coefficient 1/(1−α) exceeds β's, and q
    sits on the cone boundary q = sqrt(4zs − v²). What remains is a smooth
    convex function of (z, s), minimized by nested bounded scalar searches.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    mean_loss = theta0 + theta * mu
    v = abs(theta) * sigma
    inv = 1.0 / (1.0 - alpha)
    hi = 40.0 * (v + 1.0) * inv

    def reduced(z: float) -> float:
        lo = v * v / (4.0 * z)
        ub = max(hi, 2.0 * lo + 1.0)

        def over_s(s: float) -> float:
            return z + s * inv - math.sqrt(max(4.0 * z * s - v * v, 0.0))

        res = minimize_scalar(over_s, bounds=(lo, ub), method="bounded",
                              options={"xatol": tol, "maxiter": 500})
        return min(float(res.fun), over_s(lo))

    outer = minimize_scalar(reduced, bounds=(1e-13, hi), method="bounded",
                            options={"xatol": tol, "maxiter": 500})
    value = mean_loss + min(float(outer.fun), reduced(1e-13))
    if not math.isfinite(value):
        raise OracleError("cone-program oracle failed to converge")
    return value


def deadline_margin(t_tx: float, t_fwd: float, kappa: float,
                    risk: RiskConfig, deadline: float) -> float:
    """D = T + κμ − t_tx − t_fwd − sqrt(α/(1−α))·κσ (Hz-free form).

    The robust latency constraint is f·(−D) + c·L <= 0, so the minimal
    feasible frequency is c·L/D when D > 0 and none exists otherwise.
    """
    return deadline + kappa * risk.mu - t_tx - t_fwd \
        - risk_multiplier(risk.alpha) * kappa * risk.sigma


def min_frequency_from_parts(t_tx: float, t_fwd: float, kappa: float,
                             risk: RiskConfig, cycles_total: float,
                             deadline: float) -> float:
    margin = deadline_margin(t_tx, t_fwd, kappa, risk, deadline)
    if margin <= 0:
        return math.inf
    return cycles_total / margin


def min_feasible_frequency(m: int, lam_m, deployment, scenario: Scenario,
                           risk: RiskConfig | None = None,
                           tables: LinkTables | None = None) -> float:
    """Smallest CPU frequency meeting task m's robust deadline, or inf.

    Infinity is the Infeasible verdict: no finite frequency satisfies the
    worst-case CVaR latency bound under the given routing.
    """
    t = tables or build_link_tables(scenario, deployment)
    if risk is None:
        profile = risk_profile(scenario, t.mean_gain)
        risk = RiskConfig(alpha=float(profile.alpha[m]),
                          mu=float(profile.mu[m]),
                          sigma=float(profile.sigma[m]))
    coeffs = taylor_loss_coeffs(m, lam_m, 1.0, deployment, scenario, tables=t)
    return min_frequency_from_parts(coeffs.t_tx, coeffs.t_fwd, coeffs.kappa,
                                    risk, float(t.cycles_total[m]),
                                    float(t.deadline[m]))


def batch_margins(lam, tables: LinkTables, profile: RiskProfile,
                  kappa: np.ndarray) -> np.ndarray:
    """Deadline margins D for a batch of reduced forwarding vectors."""
    base = tables.deadline + kappa * profile.mu - tables.tx_time \
        - profile.rho * kappa * profile.sigma
    return base - np.asarray(lam, dtype=float) * tables.fwd_time


def batch_kappa(tables: LinkTables, radio) -> np.ndarray:
    noise = radio.noise_psd * radio.uplink_bandwidth
    snr = radio.gu_tx_power * tables.mean_gain / noise
    return (tables.data_bits * math.log(2.0) / radio.uplink_bandwidth) \
        * radio.gu_tx_power / ((noise + radio.gu_tx_power * tables.mean_gain)
                               * np.log(1.0 + snr) ** 2)

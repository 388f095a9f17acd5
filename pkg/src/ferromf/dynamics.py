"""Interpolated Hamiltonians and the approximate characteristic curve.

The couplings of one distinguished spin (``site``, default 0) are scaled by
``t`` in ``[0, 1]``: at ``t = 1`` this is the original system, at ``t = 0``
the spin is free. Along the curve

    dw_site/dt = -J_site^T m(t, w(t)),    w(1) = h,

(all other field components frozen) the magnetization of that spin changes
only through terms controlled by the holomorphic correlation bounds, which
is what the verifiers below measure.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .core import DomainError, SpinSystem, single_site_bound
from .exact import ENUMERATION_CAP, _check_cap, _configurations, gibbs_exact

__all__ = [
    "interpolate",
    "ExactProvider",
    "Cumulants",
    "cumulants",
    "transport_rhs",
    "CharacteristicTrace",
    "characteristic_curve",
    "verify_lemma1",
    "verify_lemma2",
    "verify_final_bound",
]

# full probability tables are used below this size, gibbs_exact above it
_TABLE_CAP = 16

MagnetizationProvider = Callable[[float, np.ndarray], np.ndarray]


def interpolate(system: SpinSystem, t: float, site: int = 0) -> SpinSystem:
    """Copy of ``system`` with row and column ``site`` of ``J`` scaled by ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    J = np.array(system.couplings)
    J[site, :] *= t
    J[:, site] *= t
    return SpinSystem(J, system.fields)


class ExactProvider:
    """Magnetizations ``m(t, w)`` of the interpolated system, by enumeration.

    The energy splits as ``Q0 + t Q1 + S @ w`` where ``Q1`` collects the
    couplings of ``site``, so each evaluation is a single matrix-vector pass.
    """

    def __init__(self, system: SpinSystem, site: int = 0, cap: int = ENUMERATION_CAP):
        _check_cap(system.n, cap)
        self.system = system
        self.site = site
        self.n = system.n
        if self.n <= _TABLE_CAP:
            S = _configurations(self.n)
            J = system.couplings
            J0 = np.array(J)
            J0[site, :] = 0.0
            J0[:, site] = 0.0
            self._S = S
            self._q0 = 0.5 * np.einsum("ai,ai->a", S @ J0, S)
            self._q1 = S[:, site] * (S @ J[:, site])
        else:
            self._S = None

    def __call__(self, t: float, w) -> np.ndarray:
        w = np.asarray(w, dtype=np.float64)
        if self._S is None:
            sub = interpolate(self.system, t, self.site).with_fields(w)
            return gibbs_exact(sub).m
        logw = self._q0 + t * self._q1 + self._S @ w
        p = np.exp(logw - logw.max())
        return (p @ self._S) / p.sum()


@dataclass(frozen=True)
class Cumulants:
    """Magnetizations, covariance matrix and third joint cumulants of the spins."""

    m: np.ndarray
    cov: np.ndarray
    third: np.ndarray

    def directional(self, s) -> np.ndarray:
        """``d m / d s``: derivative of every ``m_k`` along field direction ``s``."""
        return self.cov @ np.asarray(s, dtype=np.float64)

    def mixed(self, j: int, s) -> np.ndarray:
        """``d^2 m / dh_j ds`` for every ``m_k``."""
        return self.third[:, j, :] @ np.asarray(s, dtype=np.float64)


def cumulants(system: SpinSystem) -> Cumulants:
    n = system.n
    _check_cap(n, _TABLE_CAP)
    S = _configurations(n)
    logw = 0.5 * np.einsum("ai,ai->a", S @ system.couplings, S) + S @ system.fields
    p = np.exp(logw - logw.max())
    p /= p.sum()
    m = p @ S
    X = S - m
    Xp = X * p[:, None]
    cov = Xp.T @ X
    third = np.einsum("ai,aj,ak->ijk", Xp, X, X, optimize=True)
    return Cumulants(m, cov, third)


def transport_rhs(system: SpinSystem, t: float, site: int = 0) -> np.ndarray:
    """Right side of the exact evolution equation for ``d m(t, h) / dt``.

    ``m_site dm/dJ + d^2 m/(dh_site dJ) + (J^T m) dm/dh_site`` with ``J`` the
    original coupling column of ``site`` used as a field direction.
    """
    col = system.couplings[:, site]
    c = cumulants(interpolate(system, t, site))
    return c.m[site] * c.directional(col) + c.mixed(site, col) + (col @ c.m) * c.cov[:, site]


# -- characteristic curve ------------------------------------------------------


@dataclass(frozen=True)
class CharacteristicTrace:
    times: np.ndarray
    w1_values: np.ndarray
    drift_values: np.ndarray
    m1_values: np.ndarray
    m_values: np.ndarray
    site: int = 0

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["t", "w1", "drift", "m1"])
        for row in zip(self.times, self.w1_values, self.drift_values, self.m1_values):
            wr.writerow([f"{x:.17g}" for x in row])
        return buf.getvalue()


def _require_positive_field(system: SpinSystem):
    h_hat = float(system.fields.min())
    if not h_hat > 0:
        raise DomainError(f"minimal field must be positive, got {h_hat}")
    return h_hat


def characteristic_curve(
    system: SpinSystem,
    steps: int = 200,
    site: int = 0,
    provider: MagnetizationProvider = None,
) -> CharacteristicTrace:
    """Integrate the characteristic ODE from ``t = 1`` down to ``t = 0`` with RK4.

    Each of the ``steps`` uniform intervals takes four magnetization
    evaluations from ``provider`` (exact enumeration by default).
    """
    _require_positive_field(system)
    if steps < 1:
        raise ValueError("steps must be positive")
    if provider is None:
        provider = ExactProvider(system, site)
    col = system.couplings[:, site]
    w = np.array(system.fields)

    def evaluate(t, w1):
        w[site] = w1
        return provider(t, w)

    dt = -1.0 / steps
    times = 1.0 + dt * np.arange(steps + 1)
    times[-1] = 0.0
    w1s = np.empty(steps + 1)
    drifts = np.empty(steps + 1)
    ms = np.empty((steps + 1, system.n))

    w1 = float(system.fields[site])
    for k in range(steps + 1):
        t = times[k]
        m = evaluate(t, w1)
        w1s[k], ms[k], drifts[k] = w1, m, col @ m
        if k == steps:
            break
        k1 = -drifts[k]
        k2 = -(col @ evaluate(t + 0.5 * dt, w1 + 0.5 * dt * k1))
        k3 = -(col @ evaluate(t + 0.5 * dt, w1 + 0.5 * dt * k2))
        k4 = -(col @ evaluate(max(t + dt, 0.0), w1 + dt * k3))
        w1 = w1 + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    return CharacteristicTrace(times, w1s, drifts, ms[:, site].copy(), ms, site)


def ode_allowance(steps: int) -> float:
    """Error budget granted to RK4-integrated quantities."""
    return 10.0 * steps**-4.0


# -- verifiers -----------------------------------------------------------------


class Lemma1Check(NamedTuple):
    lhs1: float
    rhs1: float
    lhs2: float
    rhs2: float

    def holds(self, slack: float = 1e-12) -> bool:
        return self.lhs1 <= self.rhs1 + slack and self.lhs2 <= self.rhs2 + slack


def verify_lemma1(system: SpinSystem, s, k: int, t: float, site: int = 0) -> Lemma1Check:
    """First- and second-order correlation bounds for ``m_k`` at time ``t``.

    ``|d m_k / ds| <= |s|_inf / h_hat * m_k`` and
    ``|d^2 m_k / (dh_site ds)| <= |s|_inf / h_hat * m_k / h_site``, both
    sides computed from exact cumulants of the interpolated system.
    """
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (system.n,) or np.any(s < 0):
        raise ValueError("s must be a non-negative vector of length n")
    h_hat = _require_positive_field(system)
    c = cumulants(interpolate(system, t, site))
    factor = float(s.max()) / h_hat
    lhs1 = abs(float(c.directional(s)[k]))
    lhs2 = abs(float(c.mixed(site, s)[k]))
    rhs1 = factor * float(c.m[k])
    rhs2 = rhs1 / float(system.fields[site])
    return Lemma1Check(lhs1, rhs1, lhs2, rhs2)


class Lemma2Check(NamedTuple):
    sup_deviation: float
    bound: float
    allowance: float

    def holds(self) -> bool:
        return self.sup_deviation <= self.bound + self.allowance


def verify_lemma2(system: SpinSystem, s, steps: int = 200, site: int = 0, trace=None) -> Lemma2Check:
    """Drift of the weighted average ``s^T m`` along the characteristic curve."""
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (system.n,) or np.any(s < 0):
        raise ValueError("s must be a non-negative vector of length n")
    h_hat = _require_positive_field(system)
    if trace is None:
        trace = characteristic_curve(system, steps, site)
    avg = trace.m_values @ s
    sup_dev = float(np.abs(avg[0] - avg).max())
    l1 = float(system.couplings[:, site].sum())
    bound = float(s.max()) / h_hat * (l1 + math.log(1.0 + l1 / h_hat))
    return Lemma2Check(sup_dev, bound, ode_allowance(len(trace.times) - 1))


class FinalBoundCheck(NamedTuple):
    lhs: float
    rhs: float
    allowance: float
    site_residual: float
    site_bound: float

    def holds(self, slack: float = 1e-12) -> bool:
        return self.lhs <= self.rhs + self.allowance and self.site_residual <= self.site_bound + slack


def verify_final_bound(system: SpinSystem, steps: int = 200, site: int = 0, trace=None) -> FinalBoundCheck:
    """End-to-end comparison along the curve and the single-site residual bound.

    ``lhs = |m_site(h) - tanh(w_site(0))|`` against ``3 max_i J_i,site / h_hat``,
    plus ``|m_site - tanh(h_site + J_site^T m)|`` against its per-site bound.
    """
    h_hat = _require_positive_field(system)
    if trace is None:
        trace = characteristic_curve(system, steps, site)
    col = system.couplings[:, site]
    lhs = abs(float(trace.m1_values[0]) - math.tanh(trace.w1_values[-1]))
    rhs = 3.0 * float(col.max()) / h_hat
    m = trace.m_values[0]
    site_res = abs(float(m[site]) - math.tanh(system.fields[site] + col @ m))
    return FinalBoundCheck(lhs, rhs, ode_allowance(len(trace.times) - 1), site_res, single_site_bound(col, h_hat))

"""Fixed-point solvers for ``m = tanh(h + J m)``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SpinSystem, norms

__all__ = ["MeanFieldSolution", "fixed_point", "scalar_curie_weiss", "branch_scan"]


@dataclass(frozen=True)
class MeanFieldSolution:
    m_star: np.ndarray
    iterations: int
    final_update_inf: float
    converged: bool
    branch: str  # "positive", "negative" or "unspecified"


def _branch(m: np.ndarray, tol: float) -> str:
    if np.all(m >= -tol) and np.any(m > tol):
        return "positive"
    if np.all(m <= tol) and np.any(m < -tol):
        return "negative"
    return "unspecified"


def fixed_point(
    system: SpinSystem,
    init=None,
    damping: Optional[float] = None,
    tol: float = 1e-12,
    max_iter: int = 100_000,
    callback=None,
) -> MeanFieldSolution:
    """Damped iteration ``m <- (1 - damping) m + damping tanh(h + J m)``.

    Parameters
    ----------
    init : array_like, optional
        Starting point in ``[-1, 1]^n``; defaults to ``tanh(h)``, which lands
        on the positive branch whenever ``h >= 0``.
    damping : float, optional
        In ``(0, 1]``. Defaults to 1 when the column-sum norm of ``J`` is below
        one (the map is then a contraction) and 0.5 otherwise.
    callback : callable, optional
        Called with each new iterate.

    Running out of iterations returns a solution with ``converged=False``.
    """
    J, h = system.couplings, system.fields
    m = np.tanh(h) if init is None else np.array(init, dtype=np.float64)
    if m.shape != (system.n,):
        raise ValueError(f"init has shape {m.shape}, expected ({system.n},)")
    if np.any(np.abs(m) > 1):
        raise ValueError("init entries must lie in [-1, 1]")
    if damping is None:
        damping = 1.0 if norms(system).j_inf_inf < 1 else 0.5
    if not 0 < damping <= 1:
        raise ValueError("damping must be in (0, 1]")

    update = np.inf
    it = 0
    while it < max_iter:
        it += 1
        new = (1.0 - damping) * m + damping * np.tanh(h + J @ m)
        update = float(np.abs(new - m).max())
        m = new
        if callback is not None:
            callback(m)
        if update <= tol:
            break
    converged = update <= tol
    return MeanFieldSolution(m, it, update, converged, _branch(m, 10 * tol))


def scalar_curie_weiss(h: float, beta: float) -> float:
    """Solution of ``m = tanh(h + beta m)``.

    For ``h > 0`` this is the unique positive root, for ``h < 0`` its mirror
    image. At ``h = 0`` it is 0 when ``beta <= 1`` and the positive root
    otherwise. Bisection brackets the root and Newton steps finish it.
    """
    if beta < 0:
        raise ValueError("beta must be non-negative")
    if h < 0:
        return -scalar_curie_weiss(-h, beta)
    if h == 0 and beta <= 1:
        return 0.0

    def g(m):
        return m - math.tanh(h + beta * m)

    lo = math.tanh(h) if h > 0 else 1e-300
    hi = 1.0
    if g(lo) >= 0:
        # beta = 0 or tanh saturated: lo is already the root to working precision
        return lo
    if h == 0:
        # bracket away from the trivial root at zero
        lo = 1e-8
        while g(lo) >= 0:
            lo *= 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10:
            break
    m = 0.5 * (lo + hi)
    for _ in range(50):
        th = math.tanh(h + beta * m)
        step = (m - th) / (1.0 - beta * (1.0 - th * th))
        m_new = min(1.0, max(lo, m - step))
        if abs(m_new - m) <= 1e-14:
            m = m_new
            break
        m = m_new
    return m


def branch_scan(system: SpinSystem, tol: float = 1e-12, max_iter: int = 100_000) -> list:
    """Fixed points reached from the inits ``+1``, ``-1``, ``0`` and ``tanh(h)``.

    Non-converged runs are dropped and solutions closer than ``10 * tol`` in
    the sup norm are merged.
    """
    n = system.n
    inits = [np.ones(n), -np.ones(n), np.zeros(n), np.tanh(system.fields)]
    found = []
    for init in inits:
        sol = fixed_point(system, init, tol=tol, max_iter=max_iter)
        if not sol.converged:
            continue
        if all(np.abs(sol.m_star - other.m_star).max() > 10 * tol for other in found):
            found.append(sol)
    return found

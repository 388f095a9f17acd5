"""Generators for the model families and the structural checks that go with them."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Union

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.special import gamma as gamma_fn

from .core import SpinSystem, norms
from .exact import ENUMERATION_CAP, curie_weiss_exact, gibbs_exact

__all__ = [
    "curie_weiss",
    "KacSpec",
    "kac",
    "DilutedSpec",
    "diluted",
    "diluted_row",
    "diluted_variance_check",
    "rank_one",
    "random_ferromagnet",
    "LowTempResult",
    "low_temp_condition",
    "CurieWeissFamily",
    "GeneratedFamily",
    "positive_state_experiment",
]

KAC_SITE_BUDGET = 20_000


def curie_weiss(n: int, beta: float, h: float) -> SpinSystem:
    if n < 1 or beta < 0:
        raise ValueError("need n >= 1 and beta >= 0")
    J = np.full((n, n), beta / n)
    np.fill_diagonal(J, 0.0)
    return SpinSystem(J, np.full(n, float(h)))


def random_ferromagnet(n: int, rng, j_max: Optional[float] = None, h_range=(0.2, 1.5)) -> SpinSystem:
    """Couplings uniform on ``[0, j_max]`` (default ``2/n``) and fields uniform on ``h_range``."""
    j_max = 2.0 / n if j_max is None else j_max
    J = np.triu(rng.uniform(0.0, j_max, (n, n)), 1)
    return SpinSystem(J + J.T, rng.uniform(*h_range, n))


# -- Kac interactions ----------------------------------------------------------


def _gaussian(x):
    d = x.shape[-1]
    return (2 * math.pi) ** (-d / 2) * np.exp(-0.5 * np.sum(x * x, axis=-1))


def _uniform_ball(x):
    d = x.shape[-1]
    vol = math.pi ** (d / 2) / gamma_fn(d / 2 + 1)
    return (np.sum(x * x, axis=-1) <= 1.0) / vol


_DENSITIES = {"gaussian": (_gaussian, 8.0), "uniform_ball": (_uniform_ball, 1.0)}


@dataclass(frozen=True)
class KacSpec:
    """Kac model on the box ``{0, ..., L-1}^d`` with free boundary.

    ``density`` is ``"gaussian"``, ``"uniform_ball"`` or a vectorized callable
    ``f(x)`` on arrays of shape ``(..., d)``; a callable must be supported in
    the cube of half-width ``support`` for the numerical normalization.
    """

    d: int
    L: int
    lam: float
    beta: float
    h: float
    density: Union[str, Callable] = "gaussian"
    support: Optional[float] = None


def _kernel(spec: KacSpec):
    if callable(spec.density):
        f, radius = spec.density, spec.support
        if radius is None:
            raise ValueError("custom densities need a support half-width")
    else:
        try:
            f, radius = _DENSITIES[spec.density]
        except KeyError:
            raise ValueError(f"unknown density {spec.density!r}") from None
    # midpoint rule on a fine grid
    k = max(16, int(round(4000 ** (1 / spec.d))))
    ax = -radius + (np.arange(k) + 0.5) * (2 * radius / k)
    grid = np.stack(np.meshgrid(*([ax] * spec.d), indexing="ij"), axis=-1)
    integral = float(f(grid).sum()) * (2 * radius / k) ** spec.d
    return f, integral


def kac(spec: KacSpec, return_normalization: bool = False):
    """Couplings ``beta lam^d f(lam (i - j))`` between lattice sites of the box.

    Named densities are normalized analytically; a custom density is divided
    by its numerically computed integral. With ``return_normalization`` the
    absolute deviation of that integral from 1 is returned as well.
    """
    if spec.d < 1 or spec.L < 1 or spec.lam <= 0 or spec.beta < 0 or spec.h <= 0:
        raise ValueError(f"invalid Kac parameters {spec}")
    n = spec.L**spec.d
    if n > KAC_SITE_BUDGET:
        raise ValueError(f"{n} sites exceed the Kac budget of {KAC_SITE_BUDGET}")
    f, integral = _kernel(spec)
    norm = integral if callable(spec.density) else 1.0
    sites = np.array(list(itertools.product(range(spec.L), repeat=spec.d)), dtype=np.float64)
    diff = spec.lam * (sites[:, None, :] - sites[None, :, :])
    J = spec.beta * spec.lam**spec.d * f(diff) / norm
    np.fill_diagonal(J, 0.0)
    system = SpinSystem(J, np.full(n, spec.h))
    if return_normalization:
        return system, abs(integral - 1.0)
    return system


def kac_center(spec: KacSpec) -> int:
    """Index of the site closest to the middle of the box."""
    c = spec.L // 2
    return sum(c * spec.L**a for a in range(spec.d))


# -- diluted model -------------------------------------------------------------


@dataclass(frozen=True)
class DilutedSpec:
    n: int
    beta: float
    p: float
    h: float
    seed: int = 0


def diluted(spec: DilutedSpec) -> SpinSystem:
    """``J_ij = beta / (n p) * eps_ij`` with symmetric Bernoulli(p) ``eps`` and zero diagonal.

    The upper triangle is drawn row by row from a Philox stream keyed on
    ``seed``, so equal seeds give bitwise-identical matrices.
    """
    if not 0 < spec.p <= 1:
        raise ValueError("p must lie in (0, 1]")
    n = spec.n
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    iu = np.triu_indices(n, 1)
    eps = rng.random(iu[0].size) < spec.p
    J = np.zeros((n, n))
    J[iu] = eps * (spec.beta / (n * spec.p))
    return SpinSystem(J + J.T, np.full(n, float(spec.h)))


def diluted_row(spec: DilutedSpec, row: int = 0) -> np.ndarray:
    """Row ``row`` of :func:`diluted` without materializing the matrix.

    Only the prefix of the stream up to the end of ``row`` in the upper
    triangle is drawn, so early rows are cheap.
    """
    n = spec.n
    rng = np.random.Generator(np.random.Philox(key=spec.seed))
    # pairs (i, j), i < j, with i <= row come first in row-major order
    count = row * (n - 1) - row * (row - 1) // 2 + (n - 1 - row)
    eps = rng.random(count) < spec.p
    iu = np.triu_indices(n, 1)
    i_idx, j_idx = iu[0][:count], iu[1][:count]
    mask = (i_idx == row) | (j_idx == row)
    other = np.where(i_idx[mask] == row, j_idx[mask], i_idx[mask])
    out = np.zeros(n)
    out[other] = eps[mask] * (spec.beta / (n * spec.p))
    return out


class VarianceCheck(NamedTuple):
    variance: float
    bound: float
    rel_std_err: float

    def holds(self) -> bool:
        return self.variance <= self.bound * (1.0 + 3.0 * self.rel_std_err)


def diluted_variance_check(n: int = 100, p: float = 0.2, beta: float = 1.0, replicas: int = 10_000, x=None) -> VarianceCheck:
    """Empirical variance of ``J_1^T x - beta/n sum(x)`` over seeded replicas.

    Compared against ``beta^2 |x|_inf^2 / (n p)``; replica ``r`` uses seed ``r``.
    The relative standard error is that of the sample variance itself.
    """
    x = np.ones(n) if x is None else np.asarray(x, dtype=np.float64)
    vals = np.empty(replicas)
    for r in range(replicas):
        vals[r] = diluted_row(DilutedSpec(n, beta, p, 0.0, seed=r)) @ x
    vals -= beta / n * x.sum()
    dev2 = (vals - vals.mean()) ** 2
    var = float(np.var(vals, ddof=1))
    rse = float(dev2.std(ddof=1) / math.sqrt(replicas) / var)
    return VarianceCheck(var, beta**2 * float(np.abs(x).max()) ** 2 / (n * p), rse)


def rank_one(w, h) -> SpinSystem:
    w = np.asarray(w, dtype=np.float64)
    if np.any(w < 0):
        raise ValueError("w must be non-negative")
    J = np.outer(w, w)
    np.fill_diagonal(J, 0.0)
    return SpinSystem(J, np.broadcast_to(np.asarray(h, dtype=np.float64), w.shape))


# -- low-temperature condition -------------------------------------------------


@dataclass(frozen=True)
class LowTempResult:
    """Outcome of the low-temperature test.

    ``holds`` is ``None`` when the Perron-root bracket straddles ``alpha``.
    ``lower``/``upper`` bracket the largest Perron root over all connected
    components; ``components`` lists ``(sites, lower, upper)`` per component.
    """

    holds: Optional[bool]
    lower: float
    upper: float
    components: list = field(default_factory=list)


def _perron_bracket(A: np.ndarray, tol: float, max_iter: int):
    n = A.shape[0]
    if n == 1:
        return float(A[0, 0]), float(A[0, 0]), True
    # the shift makes A + I primitive for irreducible A
    B = A + np.eye(n)
    v = np.ones(n) / n
    lo, hi = 0.0, np.inf
    converged = False
    for _ in range(max_iter):
        Bv = B @ v
        ratio = (A @ v) / v
        lo, hi = float(ratio.min()), float(ratio.max())
        if hi - lo <= tol * max(1.0, hi):
            converged = True
            break
        v = Bv / Bv.sum()
    return lo, hi, converged


def low_temp_condition(system: SpinSystem, alpha: float, tol: float = 1e-10, max_iter: int = 100_000) -> LowTempResult:
    """Decide whether every positive ``x`` has some ``i`` with ``(J x)_i >= alpha x_i``.

    By the Collatz-Wielandt formula this is equivalent to the Perron root
    of ``J`` being at least ``alpha``. Power iteration on each connected
    component gives a rigorous bracket ``min_i (Jv)_i / v_i <= rho <= max_i (Jv)_i / v_i``.
    """
    if not alpha > 1:
        raise ValueError("alpha must exceed 1")
    J = system.couplings
    ncomp, labels = connected_components(J > 0, directed=False)
    comps = []
    lower = upper = 0.0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        lo, hi, _ = _perron_bracket(J[np.ix_(idx, idx)], tol, max_iter)
        comps.append((idx, lo, hi))
        lower, upper = max(lower, lo), max(upper, hi)
    if lower >= alpha:
        holds = True
    elif upper < alpha:
        holds = False
    else:
        holds = None
    return LowTempResult(holds, lower, upper, comps)


# -- positive-state selection --------------------------------------------------


class CurieWeissFamily:
    """Curie-Weiss systems of any size, evaluated with the sector oracle."""

    def __init__(self, beta: float):
        self.beta = beta

    def coupling_max(self, n: int) -> float:
        return self.beta / n

    def max_magnetization(self, n: int, h: float, **_) -> float:
        return curie_weiss_exact(n, self.beta, h)[0]


class GeneratedFamily:
    """Wraps ``make(n, h) -> SpinSystem``.

    Systems up to the enumeration cap are solved exactly; larger ones are
    sampled with heat-bath dynamics.
    """

    def __init__(self, make: Callable[[int, float], SpinSystem], sweeps: int = 20_000, burn_in: int = 2_000, seed: int = 0):
        self.make = make
        self.sweeps, self.burn_in, self.seed = sweeps, burn_in, seed

    def coupling_max(self, n: int) -> float:
        return norms(self.make(n, 1.0)).j_one_inf

    def max_magnetization(self, n: int, h: float, exponent: Optional[float] = None) -> float:
        system = self.make(n, h)
        if exponent is not None:
            expected = norms(system).j_one_inf ** exponent
            if not math.isclose(norms(system).h_hat, expected, rel_tol=1e-9):
                raise ValueError(
                    f"generator gave minimal field {norms(system).h_hat}, prescription requires {expected}"
                )
        if system.n <= ENUMERATION_CAP:
            return float(gibbs_exact(system).m.max())
        from .sampler import glauber_estimate

        return float(glauber_estimate(system, self.sweeps, self.burn_in, self.seed).m_hat.max())


def positive_state_experiment(family, sizes, delta: float) -> list:
    """Largest magnetization when the field is ``max J ** (1/2 - delta)``.

    Returns one dict per size with keys ``n``, ``j_one_inf``, ``h`` and
    ``max_m``.
    """
    if not 0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 1/2)")
    rows = []
    exponent = 0.5 - delta
    for n in sizes:
        j1 = family.coupling_max(n)
        h = j1**exponent
        max_m = family.max_magnetization(n, h, exponent=exponent)
        rows.append({"n": int(n), "j_one_inf": j1, "h": h, "max_m": max_m})
    return rows

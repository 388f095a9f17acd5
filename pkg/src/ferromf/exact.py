"""Brute-force Gibbs oracles.

Everything here is exact up to floating point: sums run over all ``2**n``
configurations and are accumulated in the log domain with a running
maximum, so large couplings or fields cannot overflow.

Observables are vectorized callables: they receive a ``(batch, n)`` float
array of +-1 configurations and return a length-``batch`` array. Use
:func:`spin`, :func:`spin_product`, :func:`constant` and :func:`polynomial`
to build common ones, or :func:`pointwise` to wrap a per-configuration
function.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from scipy.special import gammaln, logsumexp

from .core import SpinSystem

__all__ = [
    "ENUMERATION_CAP",
    "GibbsReport",
    "LeeYangZeros",
    "gibbs_exact",
    "gibbs_expectation",
    "field_derivative",
    "coupling_identity_check",
    "cavity_system",
    "curie_weiss_exact",
    "lee_yang_zeros",
    "spin",
    "spin_product",
    "constant",
    "polynomial",
    "pointwise",
]

ENUMERATION_CAP = 24
LEE_YANG_CAP = 16
_LOW_BITS = 12
_CHUNK_BITS = 14

Observable = Callable[[np.ndarray], np.ndarray]


class CapExceeded(ValueError):
    pass


def _check_cap(n: int, cap: int):
    if n > cap:
        raise CapExceeded(
            f"exact enumeration of {n} spins exceeds the cap of {cap}; "
            "use ferromf.sampler.glauber_estimate for larger systems"
        )


@lru_cache(maxsize=32)
def _configurations(n: int) -> np.ndarray:
    """All 2**n configurations; bit ``i`` of the row index set means spin ``i`` is down."""
    idx = np.arange(2**n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    S = 1.0 - 2.0 * bits
    S.setflags(write=False)
    return S


def _chunks(n: int):
    if n <= _CHUNK_BITS:
        yield _configurations(n)
        return
    step = 2**_CHUNK_BITS
    shifts = np.arange(n, dtype=np.int64)
    for start in range(0, 2**n, step):
        idx = np.arange(start, start + step, dtype=np.int64)
        yield 1.0 - 2.0 * ((idx[:, None] >> shifts) & 1)


def _neg_energy(S: np.ndarray, J: np.ndarray, h: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("ai,ai->a", S @ J, S) + S @ h


# -- observables ---------------------------------------------------------------


def spin(i: int) -> Observable:
    return lambda S: S[:, i]


def spin_product(indices: Sequence[int]) -> Observable:
    idx = list(indices)
    if not idx:
        return constant(1.0)
    return lambda S: np.prod(S[:, idx], axis=1)


def constant(c: float) -> Observable:
    return lambda S: np.full(S.shape[0], float(c))


def polynomial(terms) -> Observable:
    """Sum of ``coef * prod(sigma_i for i in idx)`` over ``(coef, idx)`` pairs."""
    terms = [(float(c), list(idx)) for c, idx in terms]

    def f(S):
        out = np.zeros(S.shape[0])
        for c, idx in terms:
            out += c * (np.prod(S[:, idx], axis=1) if idx else 1.0)
        return out

    return f


def pointwise(func: Callable[[np.ndarray], float]) -> Observable:
    """Wrap a function of a single configuration into a vectorized observable."""
    return lambda S: np.fromiter((func(s) for s in S), dtype=np.float64, count=S.shape[0])


# -- Gibbs oracle --------------------------------------------------------------


@dataclass(frozen=True)
class GibbsReport:
    log_z: float
    m: np.ndarray
    pair_correlations: Optional[np.ndarray] = None

    def to_json(self) -> str:
        doc = {"log_z": self.log_z, "m": self.m.tolist()}
        if self.pair_correlations is not None:
            doc["pairs"] = self.pair_correlations.tolist()
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "GibbsReport":
        doc = json.loads(text)
        pairs = doc.get("pairs")
        return cls(float(doc["log_z"]), np.asarray(doc["m"]), None if pairs is None else np.asarray(pairs))


def gibbs_exact(system: SpinSystem, want_pairs: bool = False, cap: int = ENUMERATION_CAP) -> GibbsReport:
    """Exact log partition function, magnetizations and optionally ``<sigma_i sigma_j>``.

    The spins are split into a low block of at most 12 spins and a high
    block; the energy of a joint configuration is the sum of two block
    energies and a bilinear cross term, so each chunk of high-block
    configurations is handled with a single matrix product.
    """
    n = system.n
    _check_cap(n, cap)
    J, h = system.couplings, system.fields
    k = min(n, _LOW_BITS)
    lo, hi = slice(0, k), slice(k, n)
    S_lo = _configurations(k)
    S_hi = _configurations(n - k)
    a_lo = _neg_energy(S_lo, J[lo, lo], h[lo])
    a_hi = _neg_energy(S_hi, J[hi, hi], h[hi])
    C = S_lo @ J[lo, hi]

    run_max = -np.inf
    z = 0.0
    m_lo = np.zeros(k)
    m_hi = np.zeros(n - k)
    if want_pairs:
        p_ll = np.zeros((k, k))
        p_lh = np.zeros((k, n - k))
        p_hh = np.zeros((n - k, n - k))

    step = max(1, 2 ** (_CHUNK_BITS + 8 - k))
    for start in range(0, S_hi.shape[0], step):
        Sh = S_hi[start : start + step]
        logw = a_lo[:, None] + a_hi[None, start : start + step] + C @ Sh.T
        mx = logw.max()
        if mx > run_max:
            scale = math.exp(run_max - mx) if np.isfinite(run_max) else 0.0
            z *= scale
            m_lo *= scale
            m_hi *= scale
            if want_pairs:
                p_ll *= scale
                p_lh *= scale
                p_hh *= scale
            run_max = mx
        W = np.exp(logw - run_max)
        rows = W.sum(axis=1)
        cols = W.sum(axis=0)
        z += rows.sum()
        m_lo += S_lo.T @ rows
        m_hi += Sh.T @ cols
        if want_pairs:
            p_ll += (S_lo * rows[:, None]).T @ S_lo
            p_lh += S_lo.T @ W @ Sh
            p_hh += (Sh * cols[:, None]).T @ Sh

    log_z = float(run_max + math.log(z))
    m = np.concatenate([m_lo, m_hi]) / z
    pairs = None
    if want_pairs:
        pairs = np.block([[p_ll, p_lh], [p_lh.T, p_hh]]) / z
        pairs = 0.5 * (pairs + pairs.T)
        np.fill_diagonal(pairs, 1.0)
    return GibbsReport(log_z, m, pairs)


def _expectations(system: SpinSystem, observables: Sequence[Observable], cap: int = ENUMERATION_CAP) -> np.ndarray:
    """Gibbs expectations of several observables in one streaming pass."""
    _check_cap(system.n, cap)
    J, h = system.couplings, system.fields
    run_max = -np.inf
    z = 0.0
    acc = np.zeros(len(observables))
    for S in _chunks(system.n):
        logw = _neg_energy(S, J, h)
        mx = logw.max()
        if mx > run_max:
            scale = math.exp(run_max - mx) if np.isfinite(run_max) else 0.0
            z *= scale
            acc *= scale
            run_max = mx
        w = np.exp(logw - run_max)
        z += w.sum()
        for a, f in enumerate(observables):
            acc[a] += w @ np.asarray(f(S), dtype=np.float64)
    return acc / z


def gibbs_expectation(system: SpinSystem, f: Observable, cap: int = ENUMERATION_CAP) -> float:
    return float(_expectations(system, [f], cap)[0])


def _times(f: Observable, *idx: int) -> Observable:
    idx = list(idx)
    return lambda S: f(S) * np.prod(S[:, idx], axis=1)


def field_derivative(system: SpinSystem, f: Observable, j: int) -> float:
    """``d<f>/dh_j`` as the covariance ``<f sigma_j> - <f><sigma_j>``."""
    if not 0 <= j < system.n:
        raise IndexError(f"site {j} out of range for {system.n} spins")
    ef, efs, mj = _expectations(system, [f, _times(f, j), spin(j)])
    return float(efs - ef * mj)


def coupling_identity_check(system: SpinSystem, f: Observable, i: int, j: int):
    """Both sides of the coupling-derivative identity for ``<f>``.

    ``lhs`` is ``d<f>/dJ_ij`` with ``J_ij = J_ji`` varied jointly, i.e.
    ``Cov(f, sigma_i sigma_j)``. ``rhs`` is
    ``m_i d<f>/dh_j + m_j d<f>/dh_i + d^2<f>/dh_i dh_j`` built from
    covariances and the third joint cumulant.
    """
    n = system.n
    if i == j:
        raise ValueError("the identity needs two distinct sites")
    for s in (i, j):
        if not 0 <= s < n:
            raise IndexError(f"site {s} out of range for {n} spins")
    obs = [f, _times(f, i), _times(f, j), _times(f, i, j), spin(i), spin(j), spin_product([i, j])]
    ef, efi, efj, efij, mi, mj, mij = _expectations(system, obs)
    lhs = efij - ef * mij
    d_hi = efi - ef * mi
    d_hj = efj - ef * mj
    d2 = efij - ef * mij - efi * mj - efj * mi + 2.0 * ef * mi * mj
    rhs = mi * d_hj + mj * d_hi + d2
    return float(lhs), float(rhs)


def cavity_system(system: SpinSystem, i: int) -> SpinSystem:
    """The system with spin ``i`` deleted."""
    if system.n < 2:
        raise ValueError("cannot remove the only spin of a one-spin system")
    if not 0 <= i < system.n:
        raise IndexError(f"site {i} out of range for {system.n} spins")
    keep = np.delete(np.arange(system.n), i)
    return SpinSystem(system.couplings[np.ix_(keep, keep)], system.fields[keep])


def curie_weiss_exact(n: int, beta: float, h: float):
    """Exact ``<M>`` and ``log Z`` for the Curie-Weiss model via magnetization sectors.

    Matches :func:`ferromf.models.curie_weiss`, whose couplings are ``beta/n``
    off the diagonal and zero on it; the missing diagonal appears as the
    constant ``-beta/2`` in every sector weight.

    Returns
    -------
    m : float
    log_z : float
    """
    if n < 1 or n > 10**6:
        raise ValueError("n must be in [1, 1e6]")
    k = np.arange(n + 1)
    s = (n - 2 * k).astype(np.float64)
    logw = gammaln(n + 1) - (gammaln(k + 1) + gammaln(n - k + 1)) + beta / (2 * n) * s**2 - beta / 2 + h * s
    log_z = float(logsumexp(logw))
    w = np.exp(logw - log_z)
    # pair k with n - k so the h = 0 symmetry cancels exactly
    half = (n + 1) // 2
    m = float(np.sum((w[:half] - w[::-1][:half]) * s[:half]) / n)
    return m, log_z


# -- Lee-Yang zeros ------------------------------------------------------------


@dataclass(frozen=True)
class LeeYangZeros:
    zeros: np.ndarray
    max_modulus_deviation: float
    log_coefficients: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["re", "im", "modulus"])
        for z in self.zeros:
            w.writerow([f"{z.real:.17g}", f"{z.imag:.17g}", f"{abs(z):.17g}"])
        return buf.getvalue()


def _newton_polish(coeffs, root, steps: int = 60):
    # coeffs low degree first, mp numbers
    z = mpmath.mpc(root)
    for _ in range(steps):
        p = dp = mpmath.mpc(0)
        for c in reversed(coeffs):
            dp = dp * z + p
            p = p * z + c
        if dp == 0:
            break
        dz = p / dp
        z -= dz
        if abs(dz) < mpmath.mpf(10) ** (-(mpmath.mp.dps - 5)):
            break
    return z


def lee_yang_zeros(system: SpinSystem, cap: int = LEE_YANG_CAP, dps: int = 50) -> LeeYangZeros:
    """Zeros of the fugacity polynomial ``P(zeta) = sum_k c_k zeta^k``, ``zeta = exp(-2h)``.

    ``c_k`` sums ``exp(1/2 sigma^T J sigma)`` over configurations with ``k``
    spins down; fields are ignored. Spin-flip symmetry makes ``c_k = c_{n-k}``,
    which is imposed exactly so rounding cannot push simple unit-circle
    roots off the circle. Roots from the companion matrix are refined by
    Newton steps at ``dps`` decimal digits.
    """
    n = system.n
    _check_cap(n, cap)
    S = _configurations(n)
    e = 0.5 * np.einsum("ai,ai->a", S @ system.couplings, S)
    down = ((1.0 - S) / 2).sum(axis=1).astype(np.int64)
    emax = e.max()
    coef = np.empty(n + 1)
    for k in range(n + 1):
        coef[k] = math.fsum(np.exp(e[down == k] - emax))
    coef = 0.5 * (coef + coef[::-1])
    log_c = np.log(coef) + emax

    roots = np.roots(coef[::-1]) if n > 0 else np.array([], dtype=complex)
    with mpmath.workdps(dps):
        mc = [mpmath.mpf(float(c)) for c in coef / coef.max()]
        polished = [_newton_polish(mc, complex(r)) for r in roots]
        dev = max((abs(abs(z) - 1) for z in polished), default=mpmath.mpf(0))
        zeros = np.array([complex(z) for z in polished])
    return LeeYangZeros(zeros, float(dev), log_c)

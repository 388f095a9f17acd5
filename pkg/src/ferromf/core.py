"""Spin-system data model, Hamiltonian, coupling norms and the finite-volume bound.

A ferromagnetic system is described by a symmetric non-negative coupling
matrix ``J`` and a field vector ``h``; its energy is

    H(sigma) = -1/2 sum_ij J_ij sigma_i sigma_j - sum_i h_i sigma_i

with the full symmetric matrix stored, so every unordered pair contributes
``J_ij sigma_i sigma_j`` exactly once.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

__all__ = [
    "SpinSystem",
    "NormTriple",
    "BoundReport",
    "hamiltonian",
    "norms",
    "theorem_bound",
    "single_site_bound",
    "mf_residual",
    "load_system",
    "dump_system",
]

_SYM_TOL = 1e-12


class DomainError(ValueError):
    """Raised when a bound is evaluated outside the region where it is defined."""


@dataclass(frozen=True, eq=False)
class SpinSystem:
    """Ferromagnetic Ising system with couplings ``J`` and fields ``h``.

    The arrays are copied and made read-only on construction. Diagonal
    couplings only shift the energy by a constant and are zeroed (with a
    warning) so they do not inflate the column-sum norm.
    """

    couplings: np.ndarray
    fields: np.ndarray

    def __init__(self, couplings, fields, *, _validate: bool = True):
        J = np.array(couplings, dtype=np.float64)
        h = np.array(fields, dtype=np.float64).reshape(-1)
        if J.ndim != 2 or J.shape[0] != J.shape[1]:
            raise ValueError(f"couplings must be square, got shape {J.shape}")
        if J.shape[0] != h.shape[0]:
            raise ValueError(
                f"couplings are {J.shape[0]}x{J.shape[0]} but fields has length {h.shape[0]}"
            )
        if h.shape[0] < 1:
            raise ValueError("a spin system needs at least one spin")
        if _validate:
            if not (np.all(np.isfinite(J)) and np.all(np.isfinite(h))):
                raise ValueError("couplings and fields must be finite")
            if np.any(J < 0):
                raise ValueError("couplings must be non-negative (ferromagnetic)")
            if not np.allclose(J, J.T, rtol=0.0, atol=_SYM_TOL * max(1.0, np.abs(J).max())):
                raise ValueError("couplings must be symmetric")
            J = 0.5 * (J + J.T)
            if np.any(np.diag(J) != 0):
                warnings.warn("diagonal couplings only shift the energy; setting them to zero")
                np.fill_diagonal(J, 0.0)
        J.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "fields", h)

    @classmethod
    def unchecked(cls, couplings, fields):
        """Build a system without the ferromagnetic checks (negative controls only)."""
        return cls(couplings, fields, _validate=False)

    @property
    def n(self) -> int:
        return self.fields.shape[0]

    @property
    def J(self) -> np.ndarray:
        return self.couplings

    @property
    def h(self) -> np.ndarray:
        return self.fields

    def with_fields(self, fields) -> "SpinSystem":
        return SpinSystem(self.couplings, np.broadcast_to(fields, (self.n,)))

    def scaled(self, c: float) -> "SpinSystem":
        return SpinSystem(c * self.couplings, self.fields)

    def __repr__(self):
        return f"SpinSystem(n={self.n}, max J={self.couplings.max():.4g}, min h={self.fields.min():.4g})"


@dataclass(frozen=True)
class NormTriple:
    h_hat: float
    j_inf_inf: float
    j_one_inf: float


@dataclass(frozen=True)
class BoundReport:
    """Mean-field residual of a magnetization vector and the matching bound.

    ``theorem_rhs`` and ``ratio`` are ``None`` when the minimal field is not
    strictly positive.
    """

    residual_inf: float
    theorem_rhs: Optional[float]
    ratio: Optional[float]
    per_site_residuals: np.ndarray = field(repr=False)

    @property
    def holds(self) -> Optional[bool]:
        if self.theorem_rhs is None:
            return None
        return self.residual_inf <= self.theorem_rhs

    def to_dict(self):
        return {
            "residual_inf": self.residual_inf,
            "theorem_rhs": self.theorem_rhs,
            "ratio": self.ratio,
            "per_site_residuals": self.per_site_residuals.tolist(),
        }


def _as_spins(system: SpinSystem, sigma) -> np.ndarray:
    s = np.asarray(sigma, dtype=np.float64)
    if s.shape[-1] != system.n:
        raise ValueError(f"configuration has length {s.shape[-1]}, system has {system.n} spins")
    if not np.all(np.abs(s) == 1.0):
        raise ValueError("spin entries must be exactly +1 or -1")
    return s


def hamiltonian(system: SpinSystem, sigma) -> float:
    """Energy of a single configuration ``sigma`` in {-1, +1}^n."""
    s = _as_spins(system, sigma)
    if s.ndim != 1:
        raise ValueError("hamiltonian takes a single configuration")
    return float(-0.5 * s @ system.couplings @ s - system.fields @ s)


def norms(system: SpinSystem) -> NormTriple:
    """Minimal field, maximal column sum and maximal entry of ``J``."""
    J = system.couplings
    return NormTriple(
        h_hat=float(system.fields.min()),
        j_inf_inf=float(J.sum(axis=0).max()),
        j_one_inf=float(J.max()),
    )


def theorem_bound(nt: NormTriple) -> float:
    """Right-hand side ``(|J|_1inf / h) (3 + |J|_infinf + log(1 + |J|_infinf / h))``.

    Raises
    ------
    DomainError
        If the minimal field is not strictly positive.
    """
    if not nt.h_hat > 0:
        raise DomainError(f"bound is undefined for minimal field {nt.h_hat} <= 0")
    return (nt.j_one_inf / nt.h_hat) * (3.0 + nt.j_inf_inf + math.log(1.0 + nt.j_inf_inf / nt.h_hat))


def single_site_bound(column, h_hat: float) -> float:
    """Per-site version of the bound using one column of ``J``."""
    col = np.asarray(column, dtype=np.float64)
    if not h_hat > 0:
        raise DomainError(f"bound is undefined for minimal field {h_hat} <= 0")
    l1 = float(col.sum())
    return (float(col.max()) / h_hat) * (3.0 + l1 + math.log(1.0 + l1 / h_hat))


def mf_residual(system: SpinSystem, m) -> BoundReport:
    """Residual ``m - tanh(h + J m)`` together with the finite-volume bound."""
    m = np.asarray(m, dtype=np.float64)
    if m.shape != (system.n,):
        raise ValueError(f"magnetization has shape {m.shape}, expected ({system.n},)")
    r = m - np.tanh(system.fields + system.couplings @ m)
    res = float(np.abs(r).max())
    nt = norms(system)
    rhs = theorem_bound(nt) if nt.h_hat > 0 else None
    ratio = res / rhs if rhs else None
    return BoundReport(res, rhs, ratio, r)


# -- serialization -------------------------------------------------------------


def dump_system(system: SpinSystem, fmt: str = "dense") -> dict:
    """JSON-ready document for ``system`` in ``dense`` or ``coo`` format."""
    J = system.couplings
    if fmt == "dense":
        jdoc = {"format": "dense", "data": J.tolist()}
    elif fmt == "coo":
        iu, ju = np.nonzero(np.triu(J, 1))
        jdoc = {"format": "coo", "entries": [[int(i), int(j), float(J[i, j])] for i, j in zip(iu, ju)]}
    else:
        raise ValueError(f"unknown coupling format {fmt!r}")
    return {"n": system.n, "h": system.fields.tolist(), "j": jdoc}


def load_system(doc) -> SpinSystem:
    """Inverse of :func:`dump_system`; accepts a dict, a JSON string or a path."""
    if isinstance(doc, (str, bytes)) and not str(doc).lstrip().startswith("{"):
        with open(doc) as fh:
            doc = json.load(fh)
    elif isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    if "result" in doc and "n" not in doc:
        # artifact written by the command-line driver
        doc = doc["result"]
    n = int(doc["n"])
    h = np.asarray(doc["h"], dtype=np.float64)
    if h.shape != (n,):
        raise ValueError(f"'h' must have length n={n}")
    jdoc = doc["j"]
    if jdoc["format"] == "dense":
        J = np.asarray(jdoc["data"], dtype=np.float64)
        if J.shape != (n, n):
            raise ValueError(f"dense couplings must be {n}x{n}")
    elif jdoc["format"] == "coo":
        J = np.zeros((n, n))
        for i, j, v in jdoc["entries"]:
            i, j = int(i), int(j)
            if not (0 <= i < j < n):
                raise ValueError(f"coo entry ({i}, {j}) is not in the strict upper triangle")
            J[i, j] = J[j, i] = float(v)
    else:
        raise ValueError(f"unknown coupling format {jdoc['format']!r}")
    return SpinSystem(J, h)

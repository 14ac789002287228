"""Special functions for the Landau/Aharonov-Bohm radial problem.

Log-gamma, digamma, generalized Laguerre polynomials, the normalized radial
eigenfunctions and a quadrature oracle for their inner products.

Units: the physical constants are set to one, only the field strength ``B``
is exposed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy import special
from scipy.special import expit


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class QuadratureError(RuntimeError):
    """Raised when an oracle integral does not converge under node doubling."""


def log_gamma(x: float) -> float:
    """ln Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"log_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def digamma(x: float) -> float:
    """psi(x) = Gamma'(x)/Gamma(x) for x > 0."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"digamma requires x > 0, got {x!r}")
    return float(special.psi(x))


def laguerre(n: int, alpha: float, x):
    """Generalized Laguerre polynomial L_n^(alpha)(x) by upward recurrence.

    Uses (k+1) L_{k+1} = (2k+1+alpha-x) L_k - (k+alpha) L_{k-1}.
    ``x`` may be a scalar or an array.
    """
    if n < 0:
        raise DomainError("laguerre degree must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)


def laguerre_explicit(n: int, alpha: float, x: float) -> float:
    """Explicit alternating sum sum_k (-1)^k binom(n+alpha, n-k) x^k / k!.

    Kept as an independent check of :func:`laguerre`; loses precision for
    large ``n`` through cancellation.
    """
    total = 0.0
    for k in range(n + 1):
        log_binom = (
            special.gammaln(n + alpha + 1)
            - special.gammaln(n - k + 1)
            - special.gammaln(alpha + k + 1)
        )
        total += (-1) ** k * math.exp(log_binom) * x**k / math.factorial(k)
    return total


def log_norm_const(n: int, s: float, B: float) -> float:
    """ln c_n(s) with c_n(s) = (B/2)^((|s|+1)/2) (2 n!/Gamma(n+|s|+1))^(1/2)."""
    a = abs(s)
    return 0.5 * (a + 1) * math.log(B / 2) + 0.5 * (
        math.log(2.0) + special.gammaln(n + 1) - special.gammaln(n + a + 1)
    )


def eigenfunction(n: int, s: float, B: float, r):
    """Normalized radial eigenfunction phi_n(s; r) in L^2(R_+, r dr).

    Evaluated as sign(L) * exp(log c_n + |s| log r - B r^2/4 + log|L|) so that
    large prefactors and the Gaussian never overflow separately; underflow
    gives 0.
    """
    if B <= 0:
        raise DomainError("B must be positive")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("eigenfunction requires r > 0")
    a = abs(s)
    lag = laguerre(n, a, B * r * r / 2)
    with np.errstate(divide="ignore"):
        log_mag = log_norm_const(n, s, B) + a * np.log(r) - B * r * r / 4 + np.log(np.abs(lag))
    out = np.sign(lag) * np.exp(log_mag)
    return out if out.ndim else float(out)


class Scheme(str, Enum):
    GAUSS_LEGENDRE = "gauss_legendre"
    TANH_SINH = "tanh_sinh"


class Weight(str, Enum):
    IDENTITY = "identity"
    HDOT = "Hdot"


def default_r_max(n_max: int, s: float, B: float) -> float:
    """Radial cutoff beyond which exp(-B r^2/2) tails are below 1e-16."""
    return math.sqrt(2 * (4 * n_max + 4 * abs(s) + 60) / B)


@dataclass(frozen=True)
class QuadratureConfig:
    node_count: int = 400
    r_max: float = 20.0
    scheme: Scheme = Scheme.GAUSS_LEGENDRE

    def __post_init__(self):
        if self.node_count < 16:
            raise ValueError("node_count must be >= 16")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    def doubled(self) -> "QuadratureConfig":
        return QuadratureConfig(2 * self.node_count, self.r_max, self.scheme)

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        """Nodes in (0, r_max) and the matching weights."""
        if self.scheme is Scheme.GAUSS_LEGENDRE:
            t, w = _legendre_nodes(self.node_count)
            return 0.5 * self.r_max * (t + 1), 0.5 * self.r_max * w
        return _tanh_sinh_nodes(self.node_count, self.r_max)


@lru_cache(maxsize=16)
def _legendre_nodes(count: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(count)


# Largest |t| of the tanh-sinh grid; the node nearest 0 sits near r_max*1e-37,
# far enough that r^(2|s|-1) tails with |s| > 0 are negligible.
_TS_T_MAX = 4.0


def _tanh_sinh_nodes(count: int, length: float) -> tuple[np.ndarray, np.ndarray]:
    t = np.linspace(-_TS_T_MAX, _TS_T_MAX, count)
    h = t[1] - t[0]
    u = 0.5 * np.pi * np.sinh(t)
    # x = length * (1 + tanh u)/2 written without cancellation near x = 0
    x = length * expit(2 * u)
    w = length * h * 0.5 * np.pi * np.cosh(t) / (2 * np.cosh(u) ** 2)
    keep = (x > 0) & (x < length) & (w > 0)
    return x[keep], w[keep]


def default_quadrature(n_max: int, s: float, B: float, weight: Weight | str = Weight.IDENTITY) -> QuadratureConfig:
    """Gauss-Legendre for the smooth overlap integrals, tanh-sinh for Hdot.

    The Hdot integrand behaves like r^(2|s|-1) at the origin, which defeats
    Gauss-Legendre when |s| < 1.
    """
    weight = Weight(weight)
    r_max = default_r_max(n_max, s, B)
    if weight is Weight.HDOT:
        return QuadratureConfig(800, r_max, Scheme.TANH_SINH)
    return QuadratureConfig(400, r_max, Scheme.GAUSS_LEGENDRE)


def _integrate(m: int, n: int, s: float, B: float, weight: Weight, cfg: QuadratureConfig) -> float:
    r, w = cfg.nodes()
    f = eigenfunction(m, s, B, r) * eigenfunction(n, s, B, r) * r
    if weight is Weight.HDOT:
        f = f * (2 * s / (r * r) + B)
    return float(np.dot(w, f))


def oracle_inner_product(
    m: int,
    n: int,
    s: float,
    B: float,
    weight: Weight | str = Weight.IDENTITY,
    cfg: QuadratureConfig | None = None,
    rtol: float = 1e-6,
) -> float:
    """Quadrature value of int_0^inf phi_m w phi_n r dr, w = 1 or 2s/r^2 + B.

    The integral is evaluated with ``cfg`` and with doubled nodes; the doubled
    value is returned and :class:`QuadratureError` is raised if the two differ
    by more than ``rtol`` (absolute, relative to max(1, |value|)).
    """
    weight = Weight(weight)
    if B <= 0:
        raise DomainError("B must be positive")
    if weight is Weight.HDOT and s == 0:
        raise DomainError("Hdot weight requires s != 0")
    if weight is Weight.HDOT and m == n and abs(s) < 1:
        raise DomainError("diagonal Hdot form is excluded for |s| < 1")
    if cfg is None:
        cfg = default_quadrature(max(m, n), s, B, weight)
    coarse = _integrate(m, n, s, B, weight, cfg)
    fine = _integrate(m, n, s, B, weight, cfg.doubled())
    if abs(fine - coarse) > rtol * max(1.0, abs(fine)):
        raise QuadratureError(
            f"oracle integral ({m},{n},s={s},B={B},{weight.value}) not converged: "
            f"{coarse!r} vs {fine!r}"
        )
    return fine

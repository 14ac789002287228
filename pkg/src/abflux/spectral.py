"""Eigenvalues, dynamical phases and the reparametrization families.

All operators live in the fixed eigenbasis phi_n(0), n = 0, 1, 2, ...
W(s) and Omega(s) are diagonal there and are returned as 1-D arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate


class ZetaFamily(str, Enum):
    IDENTITY = "identity"
    AFFINE = "affine"
    COS_PERTURBED = "cos_perturbed"


@dataclass(frozen=True)
class ZetaSpec:
    """Monotone C^2 time change with zeta(0) = 0.

    identity:       zeta(u) = u
    affine(a):      zeta(u) = a u,                   a > 0
    cos_perturbed:  zeta(u) = u + (a/2)(1 - cos u),  0 <= a < 1
    """

    family: ZetaFamily = ZetaFamily.IDENTITY
    a: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "family", ZetaFamily(self.family))
        if self.family is ZetaFamily.IDENTITY:
            object.__setattr__(self, "a", 1.0)
        elif self.family is ZetaFamily.AFFINE and not self.a > 0:
            raise ValueError("affine zeta needs a > 0")
        elif self.family is ZetaFamily.COS_PERTURBED and not 0 <= self.a < 1:
            raise ValueError("cos_perturbed zeta needs 0 <= a < 1")

    @classmethod
    def parse(cls, text: str) -> "ZetaSpec":
        """Parse ``family`` or ``family:param``, e.g. ``cos_perturbed:0.5``."""
        name, _, param = text.partition(":")
        if param:
            return cls(ZetaFamily(name.strip()), float(param))
        return cls(ZetaFamily(name.strip()))

    def label(self) -> str:
        if self.family is ZetaFamily.IDENTITY:
            return "identity"
        return f"{self.family.value}:{self.a:g}"

    @property
    def is_identity(self) -> bool:
        return self.family is ZetaFamily.IDENTITY or (
            self.family is ZetaFamily.AFFINE and self.a == 1.0
        )

    def __call__(self, u):
        if self.family is ZetaFamily.IDENTITY:
            return u
        if self.family is ZetaFamily.AFFINE:
            return self.a * u
        return u + 0.5 * self.a * (1 - np.cos(u))

    def d1(self, u):
        if self.family is ZetaFamily.IDENTITY:
            return np.ones_like(u) if isinstance(u, np.ndarray) else 1.0
        if self.family is ZetaFamily.AFFINE:
            return self.a * np.ones_like(u) if isinstance(u, np.ndarray) else self.a
        return 1 + 0.5 * self.a * np.sin(u)

    def d2(self, u):
        if self.family is ZetaFamily.COS_PERTURBED:
            return 0.5 * self.a * np.cos(u)
        return np.zeros_like(u) if isinstance(u, np.ndarray) else 0.0

    def check(self, s_max: float, points: int = 1000) -> None:
        """Verify zeta(0) = 0 and zeta' > 0 on a grid over [0, s_max]."""
        if self(0.0) != 0.0:
            raise ValueError(f"zeta(0) != 0 for {self.label()}")
        u = np.linspace(0.0, max(s_max, 0.0), points)
        d = np.asarray(self.d1(u), dtype=float)
        if not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValueError(f"zeta' not positive on [0, {s_max}] for {self.label()}")
        if not np.all(np.isfinite(np.asarray(self.d2(u), dtype=float))):
            raise ValueError(f"zeta'' not finite for {self.label()}")


@dataclass(frozen=True)
class ModelParams:
    B: float = 1.0
    tau: float = 1.0
    N: int = 32
    zeta: ZetaSpec = field(default_factory=ZetaSpec)

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError("B must be positive")
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if int(self.N) != self.N or self.N < 2:
            raise ValueError("N must be an integer >= 2")
        object.__setattr__(self, "N", int(self.N))

    def with_tau(self, tau: float) -> "ModelParams":
        return ModelParams(self.B, tau, self.N, self.zeta)


def eigenvalue(n, s: float, B: float):
    """lambda_n(s) = B (s + |s| + 2n + 1)."""
    return B * (s + abs(s) + 2 * n + 1)


def phase(n, s: float, B: float):
    """omega_n(s) = int_0^s lambda_n(u) du."""
    if s >= 0:
        return B * (s * s + (2 * n + 1) * s)
    return B * (2 * n + 1) * s


def phase_difference_rate(m: int, n: int, B: float) -> float:
    """d/ds (omega_m - omega_n) = 2B(m - n), the same for every s."""
    return 2.0 * B * (m - n)


def W_diag(s: float, N: int, B: float) -> np.ndarray:
    """Diagonal of W(s) in the fixed basis: lambda_n(s), n < N."""
    return eigenvalue(np.arange(N), s, B)


def Omega_diag(s: float, N: int, B: float) -> np.ndarray:
    return phase(np.arange(N), s, B)


def Omega_zeta_diag(s: float, params: ModelParams) -> np.ndarray:
    """Diagonal of Omega^zeta(s), n < N, for s >= 0.

    Uses lambda_n(zeta) = 2B max(zeta, 0) + B(2n+1), so only the common
    part int_0^s max(zeta(u), 0) du needs a quadrature.
    """
    if s < 0:
        raise ValueError("Omega_zeta_diag supports s >= 0 only")
    zeta = params.zeta
    common = 0.0
    if s > 0:
        common, _ = integrate.quad(lambda u: max(float(zeta(u)), 0.0), 0.0, s, epsabs=0.0, epsrel=1e-13)
    n = np.arange(params.N)
    return params.B * (2 * common + (2 * n + 1) * s)


def phase_zeta(n: int, s: float, params: ModelParams, tol: float = 1e-12) -> float:
    """omega_n^zeta(s) = int_0^s lambda_n(zeta(u)) du by adaptive quadrature."""
    if s < 0:
        raise ValueError("phase_zeta supports s >= 0 only")
    if s == 0:
        return 0.0
    zeta = params.zeta
    B = params.B
    value, err = integrate.quad(
        lambda u: eigenvalue(n, float(zeta(u)), B), 0.0, s, epsabs=0.0, epsrel=tol, limit=200
    )
    if not math.isfinite(value) or err > 1e-10 * max(1.0, abs(value)):
        raise ArithmeticError(f"phase_zeta quadrature did not converge (err={err:g})")
    return value

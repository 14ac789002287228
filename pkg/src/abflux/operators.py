"""Matrices in the fixed eigenbasis and norm estimators.

Q, A, X and Xdot are indexed 0..N-1 like the eigenfunctions phi_n(0).
The auxiliary model matrices (``build_section2``) use 1-based indices:
row/column i of the returned array stands for index i + 1.

All builders return dense complex (or real) numpy arrays that are Hermitian
by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate, optimize
from scipy.special import gammaln, psi


class NormConvergenceError(RuntimeError):
    pass


def _require_nonzero(s: float) -> None:
    if s == 0:
        raise ValueError("Q(s), A(s), X(s) are not defined at s = 0")


def log_gamma_row(s: float, N: int) -> np.ndarray:
    """ln gamma_n(s)^2 = ln Gamma(n+|s|+1) - ln n! for n < N."""
    n = np.arange(N, dtype=float)
    return gammaln(n + abs(s) + 1) - gammaln(n + 1)


def gamma_ratio(m: int, n: int, s: float) -> float:
    """min(gamma_m/gamma_n, gamma_n/gamma_m), computed in log space."""
    a = abs(s)
    lo, hi = sorted((m, n))  # fixed evaluation order keeps the result symmetric
    lg = gammaln(hi + a + 1) - gammaln(lo + a + 1) - gammaln(hi + 1) + gammaln(lo + 1)
    return math.exp(-abs(lg) / 2)


def gamma_ratio_matrix(s: float, N: int) -> np.ndarray:
    g = log_gamma_row(s, N)
    return np.exp(-0.5 * np.abs(g[:, None] - g[None, :]))


def _index_difference(N: int) -> np.ndarray:
    """d[m, n] = n - m with zeros on the diagonal replaced by 1."""
    idx = np.arange(N)
    d = (idx[None, :] - idx[:, None]).astype(float)
    np.fill_diagonal(d, 1.0)
    return d


def build_Q(s: float, N: int) -> np.ndarray:
    """Q(s)_mn = i sgn(s) / (2(n-m)) min(gamma_m/gamma_n, gamma_n/gamma_m)."""
    _require_nonzero(s)
    Q = 1j * math.copysign(1.0, s) * gamma_ratio_matrix(s, N) / (2 * _index_difference(N))
    np.fill_diagonal(Q, 0)
    return Q


def build_A_approx(s: float, N: int) -> np.ndarray:
    """Large-index model of Q(s): gamma ratios replaced by ((m+1)/(n+1))^(|s|/2)."""
    _require_nonzero(s)
    k = np.arange(1, N + 1, dtype=float)
    lk = np.log(k)
    ratio = np.exp(-0.5 * abs(s) * np.abs(lk[:, None] - lk[None, :]))
    A = 1j * math.copysign(1.0, s) * ratio / (2 * _index_difference(N))
    np.fill_diagonal(A, 0)
    return A


def build_X(s: float, N: int, B: float) -> np.ndarray:
    """Off-diagonal solution of Q = i[W, X]; real symmetric, zero diagonal."""
    _require_nonzero(s)
    d = _index_difference(N)
    X = -math.copysign(1.0, s) * gamma_ratio_matrix(s, N) / (4 * B * d * d)
    np.fill_diagonal(X, 0)
    return X


def build_Xdot(s: float, N: int, B: float) -> np.ndarray:
    """Entrywise s-derivative of X(s), via digamma.

    For lo = min(m, n), hi = max(m, n):
    d/ds X_mn = -ratio * (psi(lo+|s|+1) - psi(hi+|s|+1)) / (8 B (n-m)^2),
    which is even in s.
    """
    _require_nonzero(s)
    a = abs(s)
    p = psi(np.arange(N) + a + 1)
    # psi is increasing, so psi(lo) - psi(hi) = -|p_m - p_n|
    dpsi = -np.abs(p[:, None] - p[None, :])
    d = _index_difference(N)
    Xd = -gamma_ratio_matrix(s, N) * dpsi / (8 * B * d * d)
    np.fill_diagonal(Xd, 0)
    return Xd


def commutator_with_W(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """i [W, X] for diagonal W given as a vector."""
    return 1j * (W[:, None] - W[None, :]) * X


class Section2Variant(str, Enum):
    POWER = "power"
    F_SIGMA = "f_sigma"
    COMBINED = "combined"


def f_sigma(u, sigma: float):
    """f_sigma(u) = (1 - u^sigma) / (1 - u) on (0, 1)."""
    u = np.asarray(u, dtype=float)
    return -np.expm1(sigma * np.log(u)) / (1 - u)


def build_section2(variant: Section2Variant | str, sigma: float, N: int) -> np.ndarray:
    """Auxiliary l^2(N) matrices with 1-based indices m, n = 1..N.

    power:    -(i/n)(m/n)^sigma for m < n
    f_sigma:  -(i/n) f_sigma(m/n) for m < n, sigma in [0, 1]
    combined: (i/(n-m)) min((m/n)^sigma, (n/m)^sigma)
    The lower triangle follows from Hermiticity; the diagonal is zero.
    """
    variant = Section2Variant(variant)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if variant is Section2Variant.F_SIGMA and not 0 <= sigma <= 1:
        raise ValueError("f_sigma variant requires sigma in [0, 1]")
    k = np.arange(1, N + 1, dtype=float)
    m = k[:, None]
    n = k[None, :]
    upper = m < n
    with np.errstate(divide="ignore", invalid="ignore"):
        if variant is Section2Variant.POWER:
            U = -1j / n * (m / n) ** sigma
        elif variant is Section2Variant.F_SIGMA:
            U = -1j / n * f_sigma(np.where(upper, m / n, 0.5), sigma)
        else:
            U = 1j / (n - m) * (m / n) ** sigma
    U = np.where(upper, U, 0)
    return U + U.conj().T


def operator_norm(
    M: np.ndarray,
    tol: float = 1e-12,
    seed: int = 42,
    restarts: int = 2,
    max_iter: int = 100_000,
    squarings: int = 3,
) -> float:
    """Largest singular value of ``M`` by power iteration on G = M^H M.

    For Hermitian M this is the spectral radius. The iteration multiplies by
    G^(2^squarings) (formed once by repeated squaring of the normalized Gram
    matrix) and tracks the Rayleigh quotient of G itself, so the estimate is
    always a lower bound on the true norm. Stops when successive quotients
    differ by at most ``tol`` relative; repeats from ``restarts`` random
    starts and keeps the largest.
    """
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("operator_norm expects a square matrix")
    if not np.any(M):
        return 0.0
    # Real or purely imaginary input (every builder here) iterates in real
    # arithmetic on the Gram matrix.
    if np.iscomplexobj(M) and not np.any(M.real):
        M = M.imag
    elif np.iscomplexobj(M) and not np.any(M.imag):
        M = M.real
    M = np.ascontiguousarray(M)
    G = M.conj().T @ M
    P = G / np.linalg.norm(G)
    for _ in range(squarings):
        P = P @ P
        P /= np.linalg.norm(P)
    rng = np.random.default_rng(seed)
    best = 0.0
    dim = M.shape[0]
    for _ in range(max(1, restarts)):
        v = rng.standard_normal(dim)
        if np.iscomplexobj(G):
            v = v + 1j * rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        rq = 0.0
        for _it in range(max_iter):
            new = float(np.vdot(v, G @ v).real)
            w = P @ v
            nw = np.linalg.norm(w)
            if nw == 0.0:
                break
            v = w / nw
            if abs(new - rq) <= tol * new:
                rq = new
                break
            rq = new
        else:
            raise NormConvergenceError(f"power iteration did not converge in {max_iter} steps")
        best = max(best, rq)
    return math.sqrt(best)


def operator_norm_exact(M: np.ndarray) -> float:
    """Spectral norm by dense SVD; reference for :func:`operator_norm`."""
    return float(np.linalg.norm(M, 2))


def hs_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, "fro"))


def sh_norm(M: np.ndarray) -> float:
    """Schur-Holmgren norm: largest absolute row sum."""
    return float(np.max(np.sum(np.abs(M), axis=1)))


@dataclass(frozen=True)
class KernelNorm:
    value: float  # exact value for the power kernel, numeric sup otherwise
    numeric: float  # sup_z |q(z)| found by quadrature + golden-section search
    argmax: float


def _kernel(variant: Section2Variant, sigma: float):
    if variant is Section2Variant.POWER:
        return lambda y: np.exp(-(sigma + 0.5) * y)

    def k(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            f = np.where(y > 0, np.expm1(-sigma * y) / np.expm1(-y), sigma)
        return f * np.exp(-0.5 * y)

    return k


KERNEL_Y_MAX = 90.0


def kernel_symbol(variant: Section2Variant | str, sigma: float, z: float) -> float:
    """|q(z)| = |int e^{izy} sgn(y) k(|y|) dy| = 2 |int_0^inf sin(zy) k(y) dy|."""
    variant = Section2Variant(variant)
    if z == 0:
        return 0.0
    # both kernels are bounded by exp(-y/2), so the tail beyond KERNEL_Y_MAX is < 1e-19
    value, err = integrate.quad(
        _kernel(variant, sigma), 0.0, KERNEL_Y_MAX, weight="sin", wvar=abs(z),
        epsabs=1e-15, epsrel=1e-13, limit=2000,
    )
    if not math.isfinite(value) or err > 1e-11:
        raise NormConvergenceError(f"kernel symbol quadrature failed at z={z!r} (err={err:g})")
    return 2 * abs(value)


def kernel_symbol_norm(variant: Section2Variant | str, sigma: float) -> KernelNorm:
    """sup_z |q(z)| of the convolution kernel behind the section-2 bounds.

    For the power kernel exp(-(sigma+1/2)|y|) the sup is 1/(sigma+1/2)
    exactly; the numeric search is returned alongside as a check.
    """
    variant = Section2Variant(variant)
    if variant is Section2Variant.F_SIGMA and not 0 <= sigma <= 1:
        raise ValueError("f_sigma kernel requires sigma in [0, 1]")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if variant is Section2Variant.F_SIGMA and sigma == 0:
        return KernelNorm(0.0, 0.0, 0.0)

    def neg(logz):
        return -kernel_symbol(variant, sigma, math.exp(logz))

    grid = np.linspace(math.log(1e-3), math.log(1e3), 121)
    vals = np.array([neg(t) for t in grid])
    i = int(np.argmin(vals))
    if i == 0 or i == len(grid) - 1:
        raise NormConvergenceError("kernel symbol maximum not bracketed")
    res = optimize.minimize_scalar(
        neg, bracket=(grid[i - 1], grid[i], grid[i + 1]), method="golden", tol=1e-10
    )
    if not res.success:
        raise NormConvergenceError(f"golden-section search failed: {res.message}")
    numeric = -float(res.fun)
    if variant is Section2Variant.POWER:
        return KernelNorm(1.0 / (sigma + 0.5), numeric, math.exp(res.x))
    return KernelNorm(numeric, numeric, math.exp(res.x))

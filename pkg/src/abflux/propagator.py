"""Interaction-frame propagator C(s, 0) and the adiabatic error.

C solves dC/ds = i Q_tau(s) C with C(s0, s0) = I, where
Q_tau(s)_mn = exp(2iB tau (m-n) s) zeta'(s) Q(zeta(s))_mn.
The adiabatic error ||U_tau(s,0) - U_AD(s,0)|| equals ||C(s,0) - I||, so
nothing outside the fixed eigenbasis is ever represented.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import legendre

from . import bounds
from .operators import build_Q, operator_norm
from .spectral import ModelParams, Omega_zeta_diag


class UnitarityWarning(RuntimeWarning):
    pass


class DysonDivergenceWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class StepControl:
    k_res: int = 24  # RK4 samples per period of the fastest phase
    reunitarize_every: int = 1000
    unitarity_tol: float = 1e-8
    trajectory_stride: int = 0  # 0 disables trajectory recording
    fast_phase: bool = True


@dataclass
class PropagationResult:
    C: np.ndarray
    s_end: float
    steps: int
    unitarity_defect: float
    error_norm: float
    method: str = "rk4"
    s_start: float = 0.0
    flagged: bool = False
    trajectory: list[tuple[float, float, float]] = field(default_factory=list)


class QtauField:
    """Q_tau^zeta(s) in the fixed basis, with a small memo keyed on s."""

    def __init__(self, params: ModelParams, fast_phase: bool = True):
        self.params = params
        self.fast_phase = fast_phase
        self._n = np.arange(params.N)
        self._memo: dict[float, np.ndarray] = {}

    def __call__(self, s: float) -> np.ndarray:
        hit = self._memo.get(s)
        if hit is not None:
            return hit
        if len(self._memo) >= 4:
            self._memo.pop(next(iter(self._memo)))
        out = self._memo[s] = self.matrix(s)
        return out

    def matrix(self, s: float) -> np.ndarray:
        if s <= 0:
            raise ValueError("Q_tau is evaluated only for s > 0")
        p = self.params
        zeta = p.zeta
        Q = build_Q(float(zeta(s)), p.N)
        if not zeta.is_identity:
            Q = float(zeta.d1(s)) * Q
        if self.fast_phase:
            d = np.exp(2j * p.B * p.tau * s * self._n)
        else:
            d = np.exp(1j * p.tau * Omega_zeta_diag(s, p))
        return d[:, None] * Q * d.conj()[None, :]


def qtau_entry(m: int, n: int, s: float, params: ModelParams) -> complex:
    if s <= 0:
        raise ValueError("qtau_entry requires s > 0")
    return complex(QtauField(params).matrix(s)[m, n])


def max_phase_rate(params: ModelParams) -> float:
    """Fastest Bohr frequency 2 B tau (N-1) of the interaction frame."""
    return 2.0 * params.B * params.tau * (params.N - 1)


def _polar(C: np.ndarray) -> np.ndarray:
    W, _, Vh = np.linalg.svd(C)
    return W @ Vh


def _defect(C: np.ndarray) -> float:
    return float(np.linalg.norm(C.conj().T @ C - np.eye(C.shape[0]), 2))


def _expm_hermitian(H: np.ndarray, t: float) -> np.ndarray:
    """exp(i t H) for Hermitian H."""
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * t * w)) @ V.conj().T


def integrate_C(
    s_end: float,
    params: ModelParams,
    control: StepControl | None = None,
    s_start: float = 0.0,
) -> PropagationResult:
    """C(s_end, s_start) by fixed-step RK4 on dC/ds = i Q_tau(s) C.

    The step satisfies h * 2B tau (N-1) <= 2 pi / k_res. When s_start = 0 the
    first half step [0, h/2] is an exponential midpoint step, so Q is never
    evaluated at the discontinuity s = 0. The polar (closest unitary)
    projection is applied every ``reunitarize_every`` steps; the defect
    removed at each projection is added to the reported unitarity defect.
    """
    control = control or StepControl()
    if not s_end > 0:
        raise ValueError("s_end must be positive")
    if not 0 <= s_start < s_end:
        raise ValueError("need 0 <= s_start < s_end")
    params.zeta.check(s_end)
    field_ = QtauField(params, control.fast_phase)
    N = params.N
    h_max = 2 * math.pi / (control.k_res * max_phase_rate(params))
    C = np.eye(N, dtype=complex)
    s = s_start
    steps = 0
    if s_start == 0.0:
        n_total = max(2, math.ceil(s_end / h_max))
        h0 = 0.5 * s_end / n_total
        C = _expm_hermitian(field_(0.5 * h0), h0) @ C
        s = h0
        steps = 1
    length = s_end - s
    n_rk = max(1, math.ceil(length / h_max))
    h = length / n_rk
    defect_total = 0.0
    trajectory = []
    stride = control.trajectory_stride
    ident = np.eye(N)
    for k in range(n_rk):
        a = s
        q0 = field_(a)
        qm = field_(a + 0.5 * h)
        q1 = field_(a + h)
        k1 = 1j * (q0 @ C)
        k2 = 1j * (qm @ (C + 0.5 * h * k1))
        k3 = 1j * (qm @ (C + 0.5 * h * k2))
        k4 = 1j * (q1 @ (C + h * k3))
        C = C + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        s = s_end if k == n_rk - 1 else a + h
        steps += 1
        if (k + 1) % control.reunitarize_every == 0:
            defect_total += _defect(C)
            C = _polar(C)
        if stride and (k + 1) % stride == 0:
            trajectory.append((s, float(np.linalg.norm(C - ident, 2)), defect_total + _defect(C)))
    defect_total += _defect(C)
    err = operator_norm(C - ident)
    flagged = defect_total > control.unitarity_tol
    if flagged:
        warnings.warn(
            f"unitarity defect {defect_total:.3e} exceeds {control.unitarity_tol:.1e}",
            UnitarityWarning,
            stacklevel=2,
        )
    return PropagationResult(
        C=C,
        s_end=s_end,
        steps=steps,
        unitarity_defect=defect_total,
        error_norm=err,
        method="rk4",
        s_start=s_start,
        flagged=flagged,
        trajectory=trajectory,
    )


def _panel_rule(points: int):
    """Gauss-Legendre nodes/weights on [-1, 1] and the cumulative
    integration matrix S[i, j] = int_{-1}^{x_i} l_j(x) dx."""
    x, w = legendre.leggauss(points)
    V = legendre.legvander(x, points - 1)
    coeffs = np.linalg.inv(V)
    S = np.empty((points, points))
    for j in range(points):
        S[:, j] = legendre.legval(x, legendre.legint(coeffs[:, j], lbnd=-1))
    return x, w, S


def _panels(s_start: float, s_end: float, params: ModelParams, min_panels: int = 16):
    """Panel edges with each panel spanning at most half a period of the
    fastest phase."""
    width = math.pi / max_phase_rate(params)
    count = max(min_panels, math.ceil((s_end - s_start) / width))
    return np.linspace(s_start, s_end, count + 1)


def dyson_partial(
    s_end: float,
    order: int,
    params: ModelParams,
    points: int = 16,
    return_terms: bool = False,
):
    """Order-K Dyson partial sum I + T_1 + ... + T_K of C(s_end, 0).

    T_k(s) = i int_0^s Q_tau(u) T_{k-1}(u) du is evaluated on a shared
    composite Gauss-Legendre grid, with Legendre collocation giving T_k at
    the interior nodes of each panel. Warns when ||T_K|| > ||T_{K-1}||.
    """
    if not s_end > 0:
        raise ValueError("s_end must be positive")
    if order < 1:
        raise ValueError("order must be >= 1")
    params.zeta.check(s_end)
    N = params.N
    x, w, S = _panel_rule(points)
    edges = _panels(0.0, s_end, params)
    field_ = QtauField(params)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1)).ravel()
    Qn = np.stack([field_.matrix(u) for u in nodes]).reshape(len(half), points, N, N)

    total = np.eye(N, dtype=complex)
    prev = np.broadcast_to(np.eye(N, dtype=complex), Qn.shape)
    norms = []
    for _k in range(order):
        F = 1j * np.einsum("pjab,pjbc->pjac", Qn, prev)
        cur = np.empty_like(F)
        start = np.zeros((N, N), dtype=complex)
        for p in range(len(half)):
            cur[p] = start + half[p] * np.einsum("ij,jab->iab", S, F[p])
            start = start + half[p] * np.einsum("j,jab->ab", w, F[p])
        norms.append(float(np.linalg.norm(start, 2)))
        total = total + start
        prev = cur
    if len(norms) >= 2 and norms[-1] > norms[-2]:
        warnings.warn(
            f"Dyson term {order} has norm {norms[-1]:.3e} > {norms[-2]:.3e}",
            DysonDivergenceWarning,
            stacklevel=2,
        )
    if return_terms:
        return total, norms
    return total


def integrate_Qtau(
    s_end: float,
    params: ModelParams,
    points: int = 16,
) -> np.ndarray:
    """Entrywise int_0^s_end Q_tau(u) du by composite Gauss-Legendre quadrature.

    Panels span at most half a period of the fastest phase (16 nodes each,
    i.e. >= 32 nodes per period), so the oscillatory integrands are resolved.
    """
    if not s_end > 0:
        raise ValueError("s_end must be positive")
    params.zeta.check(s_end)
    x, w, _ = _panel_rule(points)
    edges = _panels(0.0, s_end, params)
    field_ = QtauField(params)
    half = 0.5 * np.diff(edges)
    nodes = (edges[:-1, None] + half[:, None] * (x[None, :] + 1)).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    total = np.zeros((params.N, params.N), dtype=complex)
    for u, wt in zip(nodes, weights):
        total += wt * field_.matrix(u)
    return total


@dataclass
class SweepResult:
    s_end: float
    taus: list[float]
    error_norms: list[float]
    bound_values: list[float]
    unitarity_defects: list[float]
    flagged: list[bool]
    slope: float

    @property
    def all_below_bound(self) -> bool:
        return all(e <= b for e, b in zip(self.error_norms, self.bound_values))

    def rows(self):
        return list(zip(self.taus, self.error_norms, self.bound_values))


def adiabatic_error_bound(s: float, params: ModelParams) -> float:
    """Adiabatic error bound for identity zeta, the reparametrized bound otherwise."""
    if params.zeta.is_identity:
        return bounds.adiabatic_bound(s, params.B, params.tau)
    return bounds.zeta_adiabatic_bound(s, params)


def _sweep_job(args):
    s_end, params, control = args
    res = integrate_C(s_end, params, control)
    return res.error_norm, res.unitarity_defect, res.flagged


def loglog_slope(taus, errors) -> float:
    slope, _ = np.polyfit(np.log(taus), np.log(errors), 1)
    return float(slope)


def tau_sweep(
    s_end: float,
    taus,
    params: ModelParams,
    control: StepControl | None = None,
    workers: int = 1,
) -> SweepResult:
    """Adiabatic error ||C(s_end,0) - I|| over a list of tau values.

    ``params.tau`` is ignored. Returns errors, bounds and the least-squares
    slope of log(error) against log(tau).
    """
    taus = [float(t) for t in taus]
    if len(taus) < 3:
        raise ValueError("tau_sweep needs at least 3 tau values")
    if any(b <= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly increasing")
    control = control or StepControl()
    jobs = [(s_end, params.with_tau(t), control) for t in taus]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]
    errors = [r[0] for r in results]
    return SweepResult(
        s_end=s_end,
        taus=taus,
        error_norms=errors,
        bound_values=[adiabatic_error_bound(s_end, p) for _, p, _ in jobs],
        unitarity_defects=[r[1] for r in results],
        flagged=[r[2] for r in results],
        slope=loglog_slope(taus, errors),
    )

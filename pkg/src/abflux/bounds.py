"""Closed-form norm bounds and the certificate engine.

Each certificate compares a truncated-matrix numeric (a lower bound on the
infinite-dimensional quantity) against the exact bound formula, so a pass is
one-sided by construction and the margin shows how loose the bound is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar

from .spectral import ModelParams, ZetaSpec

SQRT2 = math.sqrt(2.0)
PASS_SLACK = 1e-12


def _exp(x: float) -> float:
    """exp that returns inf instead of raising; an infinite bound is vacuous but valid."""
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def M_of_s(s: float) -> float:
    """pi/2 + 12|s| + |s|(1+|s|)^((3+|s|)/2) / 2."""
    a = abs(s)
    return math.pi / 2 + 12 * a + 0.5 * a * (1 + a) ** ((3 + a) / 2)


def q_minus_a_hs_bound(s: float) -> float:
    a = abs(s)
    return 0.5 * a * (1 + a) ** ((3 + a) / 2)


def section2_power_bound() -> float:
    return 24.0


def section2_f_sigma_bound(sigma: float) -> float:
    return (SQRT2 / 3 + 4) * math.pi**2 * sigma


def section2_combined_bound(sigma: float) -> float:
    return math.pi + (SQRT2 / 3 + 4) * math.pi**2 * sigma


def x_sh_bound(B: float) -> float:
    return math.pi**2 / (12 * B)


def xdot_hs_bound(B: float) -> float:
    return (1 + SQRT2) * math.pi**2 / (48 * B)


def int_Qtau_bound(s: float, B: float, tau: float) -> float:
    """(1 + (1+sqrt2)|s|/8) pi^2 / (6 B tau)."""
    return (1 + (1 + SQRT2) / 8 * abs(s)) * math.pi**2 / (6 * B * tau)


def adiabatic_bound(s: float, B: float, tau: float) -> float:
    """M(s) exp(|s| M(s)) pi / (3 B tau)."""
    M = M_of_s(s)
    return M * _exp(abs(s) * M) * math.pi / (3 * B * tau)


def q_zeta(s: float, zeta: ZetaSpec) -> float:
    """pi^2/12 (zeta'(0) + sup zeta' + int|zeta''| + (1+sqrt2)/4 int zeta'^2) on [0, s]."""
    if s < 0:
        raise ValueError("q_zeta supports s >= 0 only")
    zeta.check(s)
    d0 = float(zeta.d1(0.0))
    if s == 0:
        return math.pi**2 / 12 * 2 * d0
    grid = np.linspace(0.0, s, 2001)
    sup_d1 = float(np.max(zeta.d1(grid)))
    # refine the grid maximum with a bounded local search around it
    i = int(np.argmax(zeta.d1(grid)))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if hi > lo:
        res = minimize_scalar(lambda u: -float(zeta.d1(u)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        sup_d1 = max(sup_d1, -float(res.fun))
    abs_d2, e1 = integrate.quad(lambda u: abs(float(zeta.d2(u))), 0.0, s, epsabs=1e-14, epsrel=1e-10, limit=200)
    sq_d1, e2 = integrate.quad(lambda u: float(zeta.d1(u)) ** 2, 0.0, s, epsabs=1e-14, epsrel=1e-10, limit=200)
    if e1 > 1e-8 * max(1.0, abs_d2) or e2 > 1e-8 * max(1.0, sq_d1):
        raise ArithmeticError("q_zeta quadrature did not converge")
    return math.pi**2 / 12 * (d0 + sup_d1 + abs_d2 + (1 + SQRT2) / 4 * sq_d1)


def integral_M(upper: float) -> float:
    """int_0^upper M(v) dv."""
    if upper == 0:
        return 0.0
    value, err = integrate.quad(M_of_s, 0.0, upper, epsabs=0.0, epsrel=1e-12)
    if err > 1e-9 * max(1.0, abs(value)):
        raise ArithmeticError("integral of M did not converge")
    return value


def zeta_adiabatic_bound(s: float, params: ModelParams) -> float:
    """exp(int_0^zeta(s) M) q^zeta(s) / (B tau), the explicit form of the
    reparametrized adiabatic estimate."""
    zeta = params.zeta
    return _exp(integral_M(float(zeta(s)))) * q_zeta(s, zeta) / (params.B * params.tau)


@dataclass
class BoundCertificate:
    name: str
    numeric_value: float
    bound_value: float
    context: dict = field(default_factory=dict)
    reason: str = ""

    @property
    def margin(self) -> float:
        return self.bound_value - self.numeric_value

    @property
    def passed(self) -> bool:
        return (
            not self.reason
            and math.isfinite(self.numeric_value)
            and self.numeric_value <= self.bound_value + PASS_SLACK
        )

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "context": self.context,
            "numeric_value": self.numeric_value,
            "bound_value": self.bound_value,
            "margin": self.margin,
            "pass": self.passed,
        }
        if self.reason:
            out["reason"] = self.reason
        return out


class Suite(str, Enum):
    SECTION2 = "section2"
    Q_NORM = "q_norm"
    HS_DIFFERENCE = "hs_difference"
    X_NORMS = "x_norms"
    INT_QTAU = "int_qtau"
    ADIABATIC = "adiabatic"
    ZETA = "zeta"


DEFAULT_S_GRID = (0.25, 0.5, 1.0, 1.5, 2.0, 3.0)
DEFAULT_SIGMA_GRID = (0.0, 0.1, 0.5, 1.0, 5.0, 10.0)
DEFAULT_B_GRID = (0.5, 1.0, 2.0)
DEFAULT_N_GRID = (64, 256, 1024)
DEFAULT_TAUS = (20.0, 40.0, 80.0, 160.0, 320.0)


@dataclass
class Grids:
    s_grid: tuple = DEFAULT_S_GRID
    sigma_grid: tuple = DEFAULT_SIGMA_GRID
    B_grid: tuple = DEFAULT_B_GRID
    N: int = 1024
    taus: tuple = DEFAULT_TAUS
    int_qtau_taus: tuple = (10.0, 40.0, 160.0)
    int_qtau_N: int = 32
    sweep_N: int = 48
    s_end: float = 1.0
    seed: int = 42


def _context_key(cert: BoundCertificate):
    return (cert.name, sorted((k, str(v)) for k, v in cert.context.items()))


def _guard(name: str, context: dict, bound, fn) -> BoundCertificate:
    """Run ``fn`` for the numeric value; failures become failed certificates."""
    try:
        bound_value = float(bound())
    except Exception as exc:  # noqa: BLE001
        return BoundCertificate(name, math.nan, math.nan, context, f"{type(exc).__name__}: {exc}")
    try:
        value = float(fn())
    except Exception as exc:  # noqa: BLE001
        return BoundCertificate(name, math.nan, bound_value, context, f"{type(exc).__name__}: {exc}")
    return BoundCertificate(name, value, bound_value, context)


def _tasks(suite: Suite, params: ModelParams, grids: Grids):
    """(name, context, bound thunk, numeric thunk) for every grid point."""
    from . import operators as ops
    from . import propagator as prop

    seed = grids.seed
    N = grids.N
    tasks = []
    if suite is Suite.SECTION2:
        for sigma in grids.sigma_grid:
            ctx = {"sigma": sigma, "N": N, "seed": seed}
            tasks.append(("section2_power", ctx, section2_power_bound,
                          lambda sigma=sigma: ops.operator_norm(ops.build_section2("power", sigma, N), seed=seed)))
            if 0 <= sigma <= 1:
                tasks.append(("section2_f_sigma", ctx, lambda sigma=sigma: section2_f_sigma_bound(sigma),
                              lambda sigma=sigma: ops.operator_norm(ops.build_section2("f_sigma", sigma, N), seed=seed)))
            tasks.append(("section2_combined", ctx, lambda sigma=sigma: section2_combined_bound(sigma),
                          lambda sigma=sigma: ops.operator_norm(ops.build_section2("combined", sigma, N), seed=seed)))
        tasks.append(("section2_combined_sigma0_pi", {"sigma": 0.0, "N": N, "seed": seed}, lambda: math.pi,
                      lambda: ops.operator_norm(ops.build_section2("combined", 0.0, N), seed=seed)))
    elif suite is Suite.Q_NORM:
        for s in grids.s_grid:
            tasks.append(("q_norm", {"s": s, "N": N, "seed": seed}, lambda s=s: M_of_s(s),
                          lambda s=s: ops.operator_norm(ops.build_Q(s, N), seed=seed)))
    elif suite is Suite.HS_DIFFERENCE:
        for s in grids.s_grid:
            tasks.append(("q_minus_a_hs", {"s": s, "N": N}, lambda s=s: q_minus_a_hs_bound(s),
                          lambda s=s: ops.hs_norm(ops.build_Q(s, N) - ops.build_A_approx(s, N))))
    elif suite is Suite.X_NORMS:
        for B in grids.B_grid:
            for s in grids.s_grid:
                ctx = {"B": B, "s": s, "N": N}
                tasks.append(("x_sh", ctx, lambda B=B: x_sh_bound(B),
                              lambda s=s, B=B: ops.sh_norm(ops.build_X(s, N, B))))
                tasks.append(("xdot_hs", ctx, lambda B=B: xdot_hs_bound(B),
                              lambda s=s, B=B: ops.hs_norm(ops.build_Xdot(s, N, B))))
    elif suite is Suite.INT_QTAU:
        s = grids.s_end
        for tau in grids.int_qtau_taus:
            p = ModelParams(params.B, tau, grids.int_qtau_N, params.zeta)
            tasks.append(("int_qtau", {"s": s, "B": p.B, "tau": tau, "N": p.N, "seed": seed},
                          lambda tau=tau: int_Qtau_bound(s, params.B, tau),
                          lambda p=p: ops.operator_norm(prop.integrate_Qtau(s, p), seed=seed)))
    elif suite in (Suite.ADIABATIC, Suite.ZETA):
        zeta = params.zeta if suite is Suite.ZETA else ZetaSpec()
        for tau in grids.taus:
            p = ModelParams(params.B, tau, grids.sweep_N, zeta)
            name = "adiabatic" if suite is Suite.ADIABATIC else "zeta_adiabatic"
            tasks.append((name, {"s": grids.s_end, "B": p.B, "tau": tau, "N": p.N, "zeta": zeta.label()},
                          lambda p=p: prop.adiabatic_error_bound(grids.s_end, p),
                          lambda p=p: prop.integrate_C(grids.s_end, p).error_norm))
    return tasks


def _run_task(task) -> BoundCertificate:
    name, ctx, bound, fn = task
    return _guard(name, ctx, bound, fn)


def certify(
    suite: Suite | str,
    params: ModelParams | None = None,
    grids: Grids | None = None,
    workers: int = 1,
) -> list[BoundCertificate]:
    """One certificate per grid point of ``suite``, sorted by name and context.

    Errors raised while building or estimating are recorded as failed
    certificates with a reason rather than propagated.
    """
    suite = Suite(suite)
    params = params or ModelParams()
    grids = grids or Grids()
    if suite in (Suite.Q_NORM, Suite.HS_DIFFERENCE, Suite.X_NORMS) and not grids.s_grid:
        raise ValueError("empty s grid")
    if suite is Suite.SECTION2 and not grids.sigma_grid:
        raise ValueError("empty sigma grid")
    if suite is Suite.X_NORMS and not grids.B_grid:
        raise ValueError("empty B grid")
    if suite in (Suite.ADIABATIC, Suite.ZETA) and not grids.taus:
        raise ValueError("empty tau list")
    if suite is Suite.INT_QTAU and not grids.int_qtau_taus:
        raise ValueError("empty tau list")
    tasks = _tasks(suite, params, grids)
    if workers > 1:
        # thunks are closures, so parallel runs use threads; numpy releases the GIL
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            certs = list(pool.map(_run_task, tasks))
    else:
        certs = [_run_task(t) for t in tasks]
    return sorted(certs, key=_context_key)


def report(certs: list[BoundCertificate]) -> list[dict]:
    return [c.to_dict() for c in certs]


def all_pass(certs: list[BoundCertificate]) -> bool:
    return bool(certs) and all(c.passed for c in certs)


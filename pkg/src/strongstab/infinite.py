"""Search for a stable suboptimal controller via a first-order free parameter.

Used when the optimal/central controllers carry an infinite chain of unstable
poles: sweep the admissible high-frequency gains u_inf (optionally with
first-order pole/zero grids), keep the candidates whose L_1U polynomial is
Hurwitz, rank them by how early and how weakly the loop gain exceeds one, and
certify the best candidates with the argument-principle scan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rational import FrequencyGrid, poly_roots
from .stability import (
    AsymptoticData,
    PeakData,
    RegionScan,
    admissible_uinf,
    asymptotics,
    peak_data,
    rhp_zero_scan,
    scan_window_for,
)
from .synthesis import (
    CertificateContradiction,
    Controller,
    SynthesisContext,
    UParam,
    build_context,
    build_controller,
    verify_performance,
)

__all__ = [
    "InfSearchConfig",
    "InfSearchResult",
    "SearchExhausted",
    "l1u_stability_range",
    "stabilize_infinite",
    "sweep_report",
]


class SearchExhausted(RuntimeError):
    def __init__(self, reason, frontier=None):
        super().__init__(reason)
        self.reason = reason
        self.frontier = frontier or []


@dataclass
class InfSearchConfig:
    rho: float
    uinf_step: float = 1e-3
    up_grid: tuple = (0.0,)
    uz_grid: tuple = (0.0,)
    scan_budget: int = 25
    interp_a: float = 1.0
    grid: FrequencyGrid = field(default_factory=FrequencyGrid)


@dataclass
class InfSearchResult:
    u: UParam
    peak: PeakData
    scan: RegionScan
    verified_norm: float
    stable: bool
    candidates_tried: int
    asym: AsymptoticData
    ctx: SynthesisContext
    controller: Controller


def l1u_stability_range(ctx: SynthesisContext, step=1e-3):
    """Largest interval of constant u_inf in [-1, 1] keeping L_1U Hurwitz."""
    us = np.arange(-1.0, 1.0 + step / 2, step)
    ok = np.zeros(len(us), dtype=bool)
    L1, L2m = ctx.L1, ctx.L2.mirror()
    for i, u in enumerate(us):
        p = L1 + L2m * float(u)
        if p.degree == 0:
            ok[i] = p.c[0] != 0.0
            continue
        ok[i] = all(r.real < 0 for r in poly_roots(p).expanded())
    if not ok.any():
        return None
    runs = []
    start = None
    for i, good in enumerate(ok):
        if good and start is None:
            start = i
        if not good and start is not None:
            runs.append((start, i - 1))
            start = None
    if start is not None:
        runs.append((start, len(us) - 1))
    lo, hi = max(runs, key=lambda r: r[1] - r[0])
    return float(us[lo]), float(us[hi])


def _interval_grid(intervals, step):
    # march on round multiples of the step, keeping both endpoints
    pts = []
    for lo, hi in intervals:
        start = np.ceil(lo / step) * step
        pts.append(lo)
        k = 0
        while start + k * step < hi - 1e-15:
            pts.append(start + k * step)
            k += 1
        pts.append(hi)
    return np.array(sorted(set(np.round(pts, 12))))


def _lu_den_stable(ctx, u: UParam):
    from .stability import _cleared_lu_polys

    _, L1U = _cleared_lu_polys(ctx, u)
    if L1U.is_zero:
        return False
    if L1U.degree == 0:
        return True
    return all(r.real < 0 for r in poly_roots(L1U).expanded())


def _rank_key(entry):
    u, pk = entry
    wm = pk.omega_max if pk.omega_max is not None else 0.0
    return (wm, pk.eta_max, abs(u.u_inf), u.u_p)


def stabilize_infinite(plant, weights, cfg: InfSearchConfig,
                       ctx: SynthesisContext | None = None) -> InfSearchResult:
    """Run the full first-order-U search at level cfg.rho.

    Raises SearchExhausted when no admissible u_inf exists or when every
    scanned candidate has residual right-half-plane zeros; the frontier of the
    best (omega_max, eta_max) candidates is attached for diagnosis.
    """
    ctx = ctx or build_context(plant, weights, cfg.rho, "suboptimal", cfg.interp_a)
    asym = asymptotics(ctx)
    intervals = admissible_uinf(asym)
    if not intervals:
        raise SearchExhausted(
            "empty admissible set: no high-frequency gain keeps the "
            "unstable-pole count finite"
        )

    candidates = []
    for up in cfg.up_grid:
        for uz in cfg.uz_grid:
            for ui in _interval_grid(intervals, cfg.uinf_step):
                u = UParam(float(ui), float(uz), float(up))
                if u.sup_norm() > 1.0:
                    continue
                if not _lu_den_stable(ctx, u):
                    continue
                pk = peak_data(ctx, u)
                if pk.omega_max is not None and not np.isfinite(pk.omega_max):
                    continue
                candidates.append((u, pk))
    if not candidates:
        raise SearchExhausted("no candidate passed the L_1U stability filter")

    candidates.sort(key=_rank_key)
    frontier = []
    for u, pk in candidates[: cfg.scan_budget]:
        controller = build_controller(plant, weights, ctx, u)
        sig_max, om_bound = scan_window_for(ctx, plant, u, pk)
        # truncation soundness: the delay term must contract the loop gain
        # below one along the right edge of the window
        for _ in range(6):
            edge = sig_max + 1j * np.linspace(0.0, om_bound, 400)
            gain = np.abs(plant.mn(edge) * ctx.F(edge) * controller.L_U(edge))
            if gain.max() < 1.0:
                break
            sig_max *= 2.0
        excluded = (
            [complex(b) for b in ctx.betas]
            + [complex(np.conj(b)) for b in ctx.betas if b.imag != 0]
            + [complex(al) for al in ctx.alphas]
            + [complex(np.conj(al)) for al in ctx.alphas if al.imag != 0]
        )
        scan = rhp_zero_scan(
            controller.loop_denominator, sig_max, om_bound, excluded=excluded
        )
        frontier.append((u, pk, len(scan.zeros)))
        if scan.zeros:
            continue
        norm, ok = verify_performance(controller, weights, cfg.grid)
        if not ok:
            raise CertificateContradiction(
                f"scan certified stability at u_inf={u.u_inf:.4g} but the "
                f"closed-loop norm {norm:.6g} exceeded the level"
            )
        return InfSearchResult(
            u=u, peak=pk, scan=scan, verified_norm=norm, stable=True,
            candidates_tried=len(frontier), asym=asym, ctx=ctx,
            controller=controller,
        )
    raise SearchExhausted(
        "all scanned candidates kept right-half-plane zeros",
        frontier=[(u.u_inf, pk.omega_max, pk.eta_max, nz) for u, pk, nz in frontier],
    )


def sweep_report(plant, weights, cfg: InfSearchConfig,
                 ctx: SynthesisContext | None = None):
    """(u_inf, omega_max, eta_max) over the admissible constant-U range."""
    ctx = ctx or build_context(plant, weights, cfg.rho, "suboptimal", cfg.interp_a)
    asym = asymptotics(ctx)
    rows = []
    for lo, hi in admissible_uinf(asym):
        for ui in _interval_grid([(lo, hi)], cfg.uinf_step):
            u = UParam(float(ui))
            if u.sup_norm() > 1.0:
                continue
            pk = peak_data(ctx, u)
            wm = pk.omega_max
            rows.append((float(ui), None if wm is None else float(wm), pk.eta_max))
    return rows

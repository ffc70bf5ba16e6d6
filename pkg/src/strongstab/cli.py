"""Command-line pipeline: optimal-level computation, stabilization, re-verification.

Exit codes: 0 success, 2 input/problem error, 3 search exhausted,
4 certificate contradiction (a correctness alarm: the norm condition and the
zero scan disagreed).  Reports are deterministic JSON; plot data goes to CSV.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import report as rpt
from .config import ConfigError, load_problem
from .finite import (
    FiniteSearchError,
    PickProblem,
    build_p1p2,
    build_U,
    certify_u_norm,
    mu_opt_search,
    np_interpolant,
    pick_points,
    stabilize_finite,
)
from .infinite import InfSearchConfig, SearchExhausted, stabilize_infinite, sweep_report
from .rational import FrequencyGrid
from .stability import finitely_many_poles, peak_data, properness_criterion, rhp_zero_scan, scan_window_for
from .synthesis import (
    CertificateContradiction,
    GammaSearchError,
    UParam,
    build_context,
    build_controller,
    gamma_opt,
    verify_performance,
)

__all__ = ["main"]


def _default_bracket(weights, grid: FrequencyGrid):
    om = grid.omegas()
    mags = np.abs(weights.W1(1j * om))
    lo, hi = float(mags.min()), float(mags.max())
    if hi / lo < 1.01:
        raise GammaSearchError(
            "weight magnitude is nearly flat; supply options.gamma_bracket"
        )
    return lo * 1.02, hi * 0.98


def _excluded_of(ctx):
    out = [complex(b) for b in ctx.betas]
    out += [complex(np.conj(b)) for b in ctx.betas if b.imag != 0]
    out += [complex(a) for a in ctx.alphas]
    out += [complex(np.conj(a)) for a in ctx.alphas if a.imag != 0]
    return out


def _complex_pairs(zs):
    return [[z.real, z.imag] for z in zs]


def cmd_gamma_opt(args):
    plant, weights, opts = load_problem(args.config)
    bracket = opts.gamma_bracket or _default_bracket(weights, opts.grid)
    res = gamma_opt(plant, weights, bracket)
    doc = {
        "schema": rpt.SCHEMA,
        "command": "gamma-opt",
        "gamma_opt": res.gamma,
        "sigma_min": res.sigma_min,
        "L_opt": {"L1": list(res.L1.c), "L2": list(res.L2.c)},
        "bracket": list(res.diagnostics["bracket"]),
        "dips_inspected": res.diagnostics["dips"],
        "infeasible_points": [
            {"gamma": g, "reason": why} for g, why in res.infeasible_points
        ],
    }
    print(rpt.render_json(doc))
    return 0


def _run_infinite(plant, weights, opts, rho, ctx, emit_dir):
    cfg = InfSearchConfig(
        rho=rho, uinf_step=opts.uinf_step, up_grid=opts.up_grid,
        uz_grid=opts.uz_grid, scan_budget=opts.scan_budget,
        interp_a=opts.interp_a, grid=opts.grid,
    )
    res = stabilize_infinite(plant, weights, cfg, ctx=ctx)
    payload = {
        "u_inf": res.u.u_inf,
        "u_z": res.u.u_z,
        "u_p": res.u.u_p,
        "omega_max": res.peak.omega_max,
        "eta_max": res.peak.eta_max,
        "f_inf": res.asym.f_inf,
        "k": res.asym.k,
        "scan_sigma_max": res.scan.sigma_max,
        "scan_omega_bound": res.scan.omega_bound,
        "excluded_zeros": _complex_pairs(res.scan.excluded),
        "residual_zeros": _complex_pairs(res.scan.zeros),
        "candidates_tried": res.candidates_tried,
        "U_norm": res.u.sup_norm(),
        "verified_norm": res.verified_norm,
        "stable": res.stable,
    }
    if emit_dir:
        rows = sweep_report(plant, weights, cfg, ctx=ctx)
        rpt.write_fig1_sweep(emit_dir, rows)
        rpt.write_fig2_zgrid(
            emit_dir, res.controller.loop_denominator,
            res.scan.sigma_max, res.scan.omega_bound,
        )
    return payload


def _run_finite(plant, weights, opts, rho, emit_dir):
    q_grid = np.arange(-1.0, 1.0 + opts.q_step / 2, opts.q_step)
    res = stabilize_finite(
        plant, weights, [rho], mu_schedule=opts.mu_schedule, q_grid=q_grid,
        integer_bound=opts.integer_bound, a=opts.a, interp_a=opts.interp_a,
        grid=opts.grid,
    )
    payload = {
        "central": res.central,
        "mu": res.mu,
        "integers": list(res.integers),
        "q": res.q if np.isscalar(res.q) else None,
        "conformal_a": opts.a,
        "U_norm": res.U_norm,
        "verified_norm": res.verified_norm,
        "stable": res.stable,
        "p_roots": _complex_pairs(res.p1p2.p_roots if res.p1p2 else []),
        "s_roots": _complex_pairs(res.p1p2.s_roots if res.p1p2 else []),
        "node_roots": _complex_pairs(res.p1p2.node_roots or [] if res.p1p2 else []),
        "artifact_roots": _complex_pairs(
            res.p1p2.artifact_roots or [] if res.p1p2 else []
        ),
        "scan_sigma_max": res.scan.sigma_max,
        "scan_omega_bound": res.scan.omega_bound,
        "residual_zeros": _complex_pairs(res.scan.zeros),
    }
    if res.p1p2 and res.p1p2.s_roots:
        z, w = pick_points(res.p1p2, opts.a)
        payload["z_points"] = _complex_pairs(z)
        payload["w_points"] = _complex_pairs(w)
        mu_opt_val, _, _ = mu_opt_search(z, w, opts.integer_bound)
        payload["mu_opt"] = mu_opt_val
    if emit_dir:
        rpt.write_fig2_zgrid(
            emit_dir, res.controller.loop_denominator,
            res.scan.sigma_max, res.scan.omega_bound,
        )
        if res.p1p2 and res.p1p2.s_roots:
            from .finite import fig3_tuples

            z, w = pick_points(res.p1p2, opts.a)
            bound = opts.integer_bound
            _, _, table = mu_opt_search(
                z, w, bound, feasibility_tuples=fig3_tuples(z, bound)
            )
            rpt.write_fig3_mu(emit_dir, table)
            if res.U is not None:
                rpt.write_fig4_umag(emit_dir, res.U, opts.grid)
            rows = []
            mu_opt_val = payload.get("mu_opt", res.mu)
            for mult in (1.02, 1.05, 1.1, 1.2, 1.5, 2.0):
                mu = mu_opt_val * mult
                pp = PickProblem(a=opts.a, z=z, w=w, n=res.integers or (0, 0), mu=mu)
                try:
                    interp = np_interpolant(pp)
                except FiniteSearchError:
                    continue
                for ui in np.arange(-1.0, 1.0001, 0.02):
                    U = build_U(res.p1p2, interp, mu, float(ui), opts.a)
                    try:
                        un = certify_u_norm(U, opts.grid)
                    except FiniteSearchError:
                        continue
                    rows.append((mu, float(ui), un, un <= 1.0))
            rpt.write_fig5_ranges(emit_dir, rows)
    return payload


def cmd_stabilize(args):
    plant, weights, opts = load_problem(args.config)
    t0 = time.monotonic()
    bracket = opts.gamma_bracket or _default_bracket(weights, opts.grid)
    gres = gamma_opt(plant, weights, bracket)
    if args.rho <= gres.gamma:
        print(
            f"input error: rho={args.rho:g} must exceed the optimal level "
            f"{gres.gamma:.6g}",
            file=sys.stderr,
        )
        return 2
    ctx = build_context(plant, weights, args.rho, "suboptimal", opts.interp_a)
    crit = properness_criterion(weights, plant)
    central_finite = finitely_many_poles(ctx, UParam(0.0))
    pole_class = "finite" if central_finite else "infinite"
    if args.method == "auto":
        branch = "finite" if (crit == "guaranteed-finite" or central_finite) else "infinite"
    else:
        branch = args.method
    emit_dir = args.emit_plots
    if emit_dir:
        os.makedirs(emit_dir, exist_ok=True)
    if branch == "infinite":
        payload = _run_infinite(plant, weights, opts, args.rho, ctx, emit_dir)
        branch_name = "infinite-search"
    else:
        payload = _run_finite(plant, weights, opts, args.rho, emit_dir)
        branch_name = "central-stable" if payload.get("central") else "finite-search"
    doc = {
        "schema": rpt.SCHEMA,
        "command": "stabilize",
        "rho": args.rho,
        "gamma_opt": gres.gamma,
        "pole_class": pole_class,
        "properness": crit,
        "branch": branch_name,
        "result": payload,
        "certificates": {
            "scan_clean": len(payload["residual_zeros"]) == 0,
            "norm_ok": payload["verified_norm"] <= args.rho * (1 + 1e-3),
            "norm_slack": 1e-3,
        },
    }
    if args.timing:
        doc["timing_s"] = round(time.monotonic() - t0, 3)
    text = rpt.render_json(doc)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def cmd_verify(args):
    plant, weights, opts = load_problem(args.config)
    with open(args.report) as fh:
        rep = json.load(fh)
    rho = float(rep["rho"])
    branch = rep["branch"]
    result = rep["result"]
    dense = FrequencyGrid(opts.grid.lo, opts.grid.hi, opts.grid.points * 2)
    ctx = build_context(plant, weights, rho, "suboptimal", opts.interp_a)
    failures = []
    if branch == "infinite-search":
        u = UParam(float(result["u_inf"]), float(result["u_z"]), float(result["u_p"]))
        if not finitely_many_poles(ctx, u):
            print("fail: stored U lies in the infinite-pole class "
                  "(limit of |F L_U| exceeds one)")
            return 1
        controller = build_controller(plant, weights, ctx, u)
        pk = peak_data(ctx, u)
        sig, om = scan_window_for(ctx, plant, u, pk)
        scan = rhp_zero_scan(
            controller.loop_denominator, sig * 2, om * 2,
            excluded=_excluded_of(ctx),
        )
    elif branch in ("finite-search", "central-stable"):
        if branch == "central-stable":
            ucall = UParam(0.0)
        else:
            p1p2 = build_p1p2(plant, ctx)
            z, w = pick_points(p1p2, float(result["conformal_a"]))
            pp = PickProblem(
                a=float(result["conformal_a"]), z=z, w=w,
                n=tuple(result["integers"]), mu=float(result["mu"]),
            )
            interp = np_interpolant(pp)
            ucall = build_U(p1p2, interp, pp.mu, float(result["q"]), pp.a)
            un = certify_u_norm(ucall, dense)
            if un > 1.0 + 1e-6:
                failures.append(f"free-parameter norm re-check failed: {un:.6f}")
        controller = build_controller(plant, weights, ctx, ucall)
        sig = float(result["scan_sigma_max"]) * 2
        om = float(result["scan_omega_bound"]) * 2
        scan = rhp_zero_scan(
            controller.loop_denominator, sig, om, excluded=_excluded_of(ctx)
        )
    else:
        print(f"fail: unknown branch {branch!r}")
        return 1
    if scan.zeros:
        failures.append(f"scan found {len(scan.zeros)} residual RHP zero(s)")
    norm, ok = verify_performance(controller, weights, dense)
    if not ok:
        failures.append(f"performance norm {norm:.6f} exceeds {rho * 1.001:.6f}")
    if failures:
        print("fail: " + "; ".join(failures))
        return 1
    print(f"pass: scan clean, norm {norm:.6f} <= {rho * 1.001:.6f}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="strongstab",
        description="Stable suboptimal H-infinity controller synthesis for "
                    "SISO dead-time plants",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)
    g = sub.add_parser("gamma-opt", help="compute the optimal performance level")
    g.add_argument("config")
    s = sub.add_parser("stabilize", help="search for a stable suboptimal controller")
    s.add_argument("config")
    s.add_argument("--rho", type=float, required=True,
                   help="suboptimal performance level (> gamma_opt)")
    s.add_argument("--method", choices=("auto", "infinite", "finite"), default="auto")
    s.add_argument("--emit-plots", metavar="DIR", default=None)
    s.add_argument("--out", metavar="FILE", default=None)
    s.add_argument("--timing", action="store_true")
    v = sub.add_parser("verify", help="re-certify a stabilize report from scratch")
    v.add_argument("config")
    v.add_argument("--report", required=True)
    args = parser.parse_args(argv)
    try:
        if args.cmd == "gamma-opt":
            return cmd_gamma_opt(args)
        if args.cmd == "stabilize":
            return cmd_stabilize(args)
        return cmd_verify(args)
    except ConfigError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (SearchExhausted, FiniteSearchError) as exc:
        print(f"search exhausted: {exc}", file=sys.stderr)
        frontier = getattr(exc, "frontier", None)
        if frontier:
            for row in frontier[:10]:
                print(f"  frontier: {row}", file=sys.stderr)
        return 3
    except CertificateContradiction as exc:
        print(f"certificate contradiction: {exc}", file=sys.stderr)
        return 4
    except GammaSearchError as exc:
        print(f"gamma search failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

"""Unstable-pole analysis for the delay loop 1 + e^{-hs} M F L_U.

Three layers: leading-coefficient asymptotics (finite/infinite pole class and
the admissible range of the free parameter's high-frequency gain), exact
crossing/peak data for |F L_U| on the imaginary axis, and a rigorous
argument-principle scan that counts and locates right-half-plane zeros of an
analytic callable on a rectangle, with known cancelling zeros deflated out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rational import Poly, poly_roots
from .synthesis import DelayPlant, SynthesisContext, UParam, WeightPair

__all__ = [
    "AsymptoticData",
    "PeakData",
    "RegionScan",
    "ScanError",
    "asymptotics",
    "fl_limit_at_infinity",
    "finitely_many_poles",
    "admissible_uinf",
    "peak_data",
    "chain_abscissa",
    "properness_criterion",
    "rhp_zero_scan",
    "scan_window_for",
]


class ScanError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# asymptotics
# ---------------------------------------------------------------------------

@dataclass
class AsymptoticData:
    f_inf: float
    k: float               # may be +-inf when deg L2 > deg L1
    parity_odd: bool       # parity of n1 + l (the suboptimal L degree)
    degree: int


def _f_infinity(ctx: SynthesisContext) -> float:
    """lim |F(jw)| from the spectral ratio's leading coefficients."""
    num_x = ctx.R.num.even_part_coeffs()
    den_x = ctx.R.den.even_part_coeffs()
    dn, dd = len(num_x) - 1, len(den_x) - 1
    # |F|^2 = den_R / num_R on the axis
    if dd < dn:
        return 0.0
    if dd > dn:
        return float(np.inf)
    return float(np.sqrt(abs(den_x[-1] / num_x[-1])))


def asymptotics(ctx: SynthesisContext) -> AsymptoticData:
    if ctx.L1.is_zero:
        raise ValueError("L1 is identically zero")
    degree = max(ctx.L1.degree, ctx.L2.degree)
    c1 = ctx.L1.c[degree] if ctx.L1.degree == degree else 0.0
    c2 = ctx.L2.c[degree] if ctx.L2.degree == degree else 0.0
    if c1 == 0.0:
        k = np.inf if c2 > 0 else -np.inf
    else:
        k = c2 / c1
    return AsymptoticData(
        f_inf=_f_infinity(ctx), k=float(k),
        parity_odd=(ctx.n1 + ctx.ell) % 2 == 1, degree=degree,
    )


def _cleared_lu_polys(ctx: SynthesisContext, u: UParam):
    """(L2U, L1U) as polynomials after clearing the U denominator."""
    L1, L2 = ctx.L1, ctx.L2
    if u.is_constant:
        return (L2 + L1.mirror() * u.u_inf, L1 + L2.mirror() * u.u_inf)
    up = Poly([u.u_p, 1.0])
    uz = Poly([u.u_z, 1.0]) * u.u_inf
    return (L2 * up + L1.mirror() * uz, L1 * up + L2.mirror() * uz)


def fl_limit_at_infinity(ctx: SynthesisContext, u: UParam) -> float:
    """lim_{w->inf} |F(jw) L_U(jw)| from leading coefficients only."""
    f_inf = _f_infinity(ctx)
    L2U, L1U = _cleared_lu_polys(ctx, u)
    d = max(L2U.degree, L1U.degree)
    c2 = L2U.c[d] if L2U.degree == d else 0.0
    c1 = L1U.c[d] if L1U.degree == d else 0.0
    if c1 == 0.0:
        return float(np.inf) if c2 != 0 else f_inf  # degenerate both-zero: d lowers
    return f_inf * abs(c2 / c1)


def finitely_many_poles(ctx: SynthesisContext, u: UParam) -> bool:
    return fl_limit_at_infinity(ctx, u) <= 1.0 + 1e-12


def admissible_uinf(asym: AsymptoticData):
    """Intervals of u_inf in [-1, 1] giving finitely many unstable poles.

    Solves f_inf |k + v| <= |1 + k v| with v = (-1)^degree * u_inf; squaring
    gives a single quadratic whose discriminant is the perfect square
    (f_inf (1 - k^2))^2, so the admissible set is one or two exact intervals.
    """
    f = asym.f_inf
    if f <= 1.0:
        return [(-1.0, 1.0)]
    k = asym.k
    if not np.isfinite(k):
        return []  # |v| >= f_inf > 1 has no admissible point in [-1, 1]
    a = f * f - k * k
    b = 2.0 * k * (f * f - 1.0)
    c = f * f * k * k - 1.0
    # discriminant b^2 - 4ac collapses to (2 f (1 - k^2))^2 exactly
    sq = 2.0 * f * abs(1.0 - k * k)
    if abs(a) < 1e-14:
        # linear: b v + c <= 0
        if abs(b) < 1e-14:
            return [(-1.0, 1.0)] if c <= 0 else []
        vcut = -c / b
        vints = [(-np.inf, vcut)] if b > 0 else [(vcut, np.inf)]
    else:
        v1 = (-b - sq) / (2 * a)
        v2 = (-b + sq) / (2 * a)
        vlo, vhi = min(v1, v2), max(v1, v2)
        if a > 0:
            vints = [(vlo, vhi)]
        else:
            vints = [(-np.inf, vlo), (vhi, np.inf)]
    sigma = -1.0 if asym.degree % 2 == 1 else 1.0
    out = []
    for lo, hi in vints:
        ulo, uhi = sorted((sigma * lo, sigma * hi))
        ulo, uhi = max(ulo, -1.0), min(uhi, 1.0)
        if ulo <= uhi:
            out.append((float(ulo), float(uhi)))
    return sorted(out)


# ---------------------------------------------------------------------------
# peak data (exact crossings of |F L_U| through 1)
# ---------------------------------------------------------------------------

@dataclass
class PeakData:
    omega_max: float | None
    eta_max: float


def _even_to_x(p: Poly):
    """p even in s -> q with p(jw) = q(w^2)."""
    cx = p.even_part_coeffs()
    return Poly(cx * (-1.0) ** np.arange(len(cx)))


def _abs2_to_x(p: Poly):
    """|p(jw)|^2 as a polynomial in x = w^2."""
    return _even_to_x(p * p.mirror())


def peak_data(ctx: SynthesisContext, u: UParam, grid=None) -> PeakData:
    """Largest |F L_U| = 1 crossing and the supremum over [0, inf).

    Everything is rational on the axis, so crossings and stationary points are
    polynomial roots in x = w^2; no frequency grid is involved.  When the
    controller has infinitely many unstable poles the crossing frequency is
    reported as +inf.
    """
    L2U, L1U = _cleared_lu_polys(ctx, u)
    numR_x = _even_to_x(ctx.R.num)
    denR_x = _even_to_x(ctx.R.den)
    N_x = denR_x * _abs2_to_x(L2U)     # |F L_U|^2 = N_x / D_x
    D_x = numR_x * _abs2_to_x(L1U)

    def mag2(x):
        return N_x(x).real / D_x(x).real

    lim = fl_limit_at_infinity(ctx, u)

    # crossings: sign changes of N - D
    T = N_x - D_x
    crossings = []
    if not T.is_zero and T.degree > 0:
        for r in poly_roots(T).roots:
            if abs(r.imag) < 1e-7 * (1 + abs(r)) and r.real > 1e-12:
                x = r.real
                dx = 1e-6 * (1 + x)
                if (T(x - dx).real) * (T(x + dx).real) < 0:
                    crossings.append(np.sqrt(x))
    omega_max = max(crossings) if crossings else None
    if lim > 1.0 + 1e-12:
        omega_max = float(np.inf)

    # supremum: stationary points of N/D plus x = 0 and the limit
    cands = [0.0]
    Q = N_x.deriv() * D_x - N_x * D_x.deriv()
    if not Q.is_zero and Q.degree > 0:
        for r in poly_roots(Q).roots:
            if abs(r.imag) < 1e-7 * (1 + abs(r)) and r.real > 0:
                cands.append(r.real)
    eta = max(np.sqrt(max(mag2(x), 0.0)) for x in cands)
    eta = max(eta, lim)
    return PeakData(
        omega_max=float(omega_max) if omega_max is not None else None,
        eta_max=float(eta),
    )


def chain_abscissa(h: float, fl_limit: float):
    """Abscissa of the asymptotic unstable-zero chain: e^{-h s}|FL| = 1."""
    if fl_limit <= 1.0 or h <= 0:
        return None
    return float(np.log(fl_limit) / h)


def properness_criterion(weights: WeightPair, plant: DelayPlant) -> str:
    """'guaranteed-finite' when F must be strictly proper, else 'possibly-infinite'."""
    if weights.W1.relative_degree() < 0:
        return "possibly-infinite"
    if weights.W2.is_zero:
        phi_plant = (
            plant.M.relative_degree()
            + plant.N_o.relative_degree()
            - plant.m_d.relative_degree()
        )
        return "guaranteed-finite" if phi_plant > 0 else "possibly-infinite"
    return "guaranteed-finite" if weights.W2.relative_degree() < 0 else "possibly-infinite"


# ---------------------------------------------------------------------------
# argument-principle scan
# ---------------------------------------------------------------------------

@dataclass
class RegionScan:
    sigma_max: float
    omega_bound: float
    zeros: list
    excluded: list
    winding_total: int
    cells_scanned: int = 0
    notes: list = field(default_factory=list)


def _edge_arg_change(f, z0, z1, init_n=64, max_n=60000, small_tol=1e-9):
    """Total argument change of f along the straight segment z0 -> z1."""
    ts = np.linspace(0.0, 1.0, init_n)
    vals = np.asarray(f(z0 + (z1 - z0) * ts), dtype=complex)
    for _ in range(40):
        mags = np.abs(vals)
        if np.any(~np.isfinite(mags)) or mags.min() <= small_tol * max(mags.max(), 1e-30):
            at = z0 + (z1 - z0) * ts[int(np.argmin(mags))]
            raise ScanError(f"contour passes too close to a zero near s={at:.6g}")
        dph = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(dph) > np.pi / 2
        if not bad.any():
            return float(dph.sum())
        if len(ts) > max_n:
            raise ScanError("edge refinement exceeded the sample budget")
        mid_ts = 0.5 * (ts[:-1][bad] + ts[1:][bad])
        mid_vals = np.asarray(f(z0 + (z1 - z0) * mid_ts), dtype=complex)
        idx = np.searchsorted(ts, mid_ts)
        ts = np.insert(ts, idx, mid_ts)
        vals = np.insert(vals, idx, mid_vals)
    raise ScanError("edge refinement did not settle")


def _winding_rect(f, slo, shi, wlo, whi):
    corners = [
        (complex(slo, wlo), complex(shi, wlo)),
        (complex(shi, wlo), complex(shi, whi)),
        (complex(shi, whi), complex(slo, whi)),
        (complex(slo, whi), complex(slo, wlo)),
    ]
    total = sum(_edge_arg_change(f, a, b) for a, b in corners)
    w = total / (2 * np.pi)
    wi = int(np.rint(w))
    if abs(w - wi) > 0.1:
        raise ScanError(f"winding number did not converge to an integer: {w:.4f}")
    return wi


def _newton_zero(f, z0, tol=1e-11, iters=80):
    z = z0
    for _ in range(iters):
        dz = 1e-7 * (1.0 + abs(z))
        d = (f(np.array([z + dz]))[0] - f(np.array([z - dz]))[0]) / (2 * dz)
        if d == 0:
            break
        step = f(np.array([z]))[0] / d
        z = z - step
        if abs(step) < tol * (1 + abs(z)):
            return z
    return z


def _safe_cut(f, lo, hi, fixed, vertical, avoid=()):
    """Pick a cut coordinate between lo and hi whose line the phase march can
    traverse; the march itself aborts when a zero sits on the line, so a
    successful traversal certifies the cut.  Coordinates near `avoid` values
    are skipped: on such lines (the real axis, where a real-coefficient
    function is real-valued) an even number of zeros between samples produces
    no observable phase change, defeating the refinement criterion."""
    for frac in (0.5, 0.45, 0.55, 0.4, 0.6, 0.35, 0.65, 0.3, 0.7):
        cut = lo + frac * (hi - lo)
        if any(abs(cut - av) < 0.02 * (hi - lo) for av in avoid):
            continue
        if vertical:
            z0, z1 = complex(cut, fixed[0]), complex(cut, fixed[1])
        else:
            z0, z1 = complex(fixed[0], cut), complex(fixed[1], cut)
        try:
            _edge_arg_change(f, z0, z1)
        except ScanError:
            continue
        return cut
    raise ScanError("could not place a subdivision cut away from zeros")


def _subdivide(f, slo, shi, wlo, whi, depth, out, counter, loc_tol=1e-6, max_depth=60):
    wind = _winding_rect(f, slo, shi, wlo, whi)
    counter[0] += 1
    if wind < 0:
        raise ScanError("negative winding: the function has poles in the region")
    if wind == 0:
        return
    if max(shi - slo, whi - wlo) < loc_tol or (wind >= 1 and max(shi - slo, whi - wlo) < 1e-4):
        z0 = complex(0.5 * (slo + shi), 0.5 * (wlo + whi))
        z = _newton_zero(f, z0)
        out.extend([z] * wind)
        return
    if depth > max_depth:
        raise ScanError("subdivision depth exceeded")
    if (shi - slo) >= (whi - wlo):
        cut = _safe_cut(f, slo, shi, (wlo, whi), vertical=True)
        _subdivide(f, slo, cut, wlo, whi, depth + 1, out, counter, loc_tol, max_depth)
        _subdivide(f, cut, shi, wlo, whi, depth + 1, out, counter, loc_tol, max_depth)
    else:
        avoid = (0.0,) if wlo < 0.0 < whi else ()
        cut = _safe_cut(f, wlo, whi, (slo, shi), vertical=False, avoid=avoid)
        _subdivide(f, slo, shi, wlo, cut, depth + 1, out, counter, loc_tol, max_depth)
        _subdivide(f, slo, shi, cut, whi, depth + 1, out, counter, loc_tol, max_depth)


def rhp_zero_scan(f, sigma_max: float, omega_bound: float, excluded=(),
                  sigma_min: float = 0.0, omega_min: float | None = None,
                  window_check=None) -> RegionScan:
    """Count and locate zeros of `f` in [sigma_min, sigma_max] x [om_min, om_bound].

    `excluded` lists known zeros (for example the cancelled zeros of E and m_d
    on or near the contour); they are divided out pointwise before the winding
    computation, which both removes them from the count and keeps the contour
    away from vanishing values.  `window_check`, when given, is called with the
    window and may raise to veto an unsound truncation.
    """
    if omega_min is None:
        omega_min = -omega_bound
    excluded = [complex(z) for z in excluded]
    if window_check is not None:
        window_check(sigma_max, omega_bound)

    def fd(s):
        s = np.asarray(s, dtype=complex)
        v = np.asarray(f(s), dtype=complex)
        for z0 in excluded:
            v = v / (s - z0)
        return v

    zeros = []
    counter = [0]
    _subdivide(fd, sigma_min, sigma_max, omega_min, omega_bound, 0, zeros, counter)
    inside = [
        z for z in excluded
        if sigma_min < z.real < sigma_max and omega_min < z.imag < omega_bound
    ]
    return RegionScan(
        sigma_max=sigma_max, omega_bound=omega_bound,
        zeros=sorted(zeros, key=lambda z: (z.real, z.imag)),
        excluded=excluded, winding_total=len(zeros) + len(inside),
        cells_scanned=counter[0],
    )


def scan_window_for(ctx: SynthesisContext, plant: DelayPlant, u: UParam,
                    peak: PeakData | None = None):
    """Sound truncation window for the loop-denominator scan.

    Beyond sigma_max the delay factor contracts the loop gain below one, and
    beyond the omega bound |F L_U| stays below one, so no zeros are lost.
    """
    peak = peak or peak_data(ctx, u)
    if peak.omega_max is not None and not np.isfinite(peak.omega_max):
        raise ScanError("infinitely many unstable poles: no finite window exists")
    eta = max(peak.eta_max, 1.0)
    h = plant.h
    if h > 0:
        sigma_max = max(5.0, 3.0 * np.log(eta) / h + 1.0)
        omega_bound = (peak.omega_max or 0.0) * 1.1 + 2 * np.pi / h + 2.0
    else:
        sigma_max = 5.0 + 10.0 * eta
        omega_bound = (peak.omega_max or 0.0) * 1.1 + 10.0
    return float(sigma_max), float(omega_bound)

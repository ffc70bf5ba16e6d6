"""Strong stabilization through a logarithmic Nevanlinna-Pick problem.

When F is strictly proper the controller's unstable poles are the finitely
many right-half-plane zeros of P1 + P2 U.  Those zeros are relocated by the
choice of U: the problem converts to interpolating a positive-real-part disk
function g at the images of P2's unstable zeros, with the logarithm's branch
freedom carried by explicit integers, a feasibility level mu bounded below by
the Pick matrix, and a residual Schur-class parameter searched until the
resulting U fits inside the unit ball.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rational import FrequencyGrid, Poly, RationalFn, blaschke, poly_roots
from .stability import RegionScan, rhp_zero_scan
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
    "P1P2",
    "PickProblem",
    "NPInterpolant",
    "FinSearchResult",
    "FiniteSearchError",
    "build_p1p2",
    "pick_points",
    "pick_matrix",
    "pick_min_eig",
    "mu_opt_search",
    "np_interpolant",
    "build_U",
    "certify_u_norm",
    "stabilize_finite",
]


class FiniteSearchError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# P1 / P2
# ---------------------------------------------------------------------------

@dataclass
class QuasiPoly:
    """A(s) + B(s) e^{-hs}; the numerator form of P1 and P2."""

    A: Poly
    B: Poly
    h: float

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        return self.A(s) + self.B(s) * np.exp(-self.h * s)

    def _tail_radius(self):
        """R with |B(s)/A(s)| < 0.9 whenever |s| >= R, from coefficient bounds."""
        a, b = self.A.c, self.B.c
        n, m = len(a) - 1, len(b) - 1
        R = 1.0 + max(np.abs(a).max(), np.abs(b).max()) / abs(a[-1])
        for _ in range(200):
            lower_a = abs(a[-1]) * R**n - sum(abs(a[i]) * R**i for i in range(n))
            upper_b = sum(abs(b[i]) * R**i for i in range(m + 1))
            if lower_a > 0 and upper_b < 0.9 * lower_a:
                return R
            R *= 1.5
        raise FiniteSearchError("could not bound the quasipolynomial tail")

    def scan_window(self):
        """Rectangle guaranteed to hold every RHP zero.

        Requires deg A > deg B (F strictly proper).  Zeros satisfy
        |B/A| e^{-h sigma} = 1, so none exist where that product is < 1:
        outside |s| >= R the coefficient tail bound applies for every sigma;
        to the right of a line beyond all RHP zeros of A, B/A is analytic and
        its half-plane supremum sits on the line (it decays at infinity), so a
        verified sub-unity line maximum rules out everything beyond it.
        """
        if self.A.degree <= self.B.degree:
            raise FiniteSearchError("quasipolynomial is not delay-dominated")
        R = self._tail_radius()
        sig0 = 0.0
        if self.A.degree > 0:
            sig0 = max(
                [0.0] + [r.real for r in poly_roots(self.A).expanded()]
            ) + 0.25
        om = np.concatenate([np.linspace(0.0, R, 4000), [R * 1.0001]])
        sigma_max = None
        for sig in (sig0, sig0 + 0.5, sig0 + 1.0, sig0 + 2.0, sig0 + 4.0,
                    sig0 + 8.0, sig0 + 16.0):
            s = sig + 1j * om
            ratio = np.abs(self.B(s) / self.A(s)) * np.exp(-self.h * sig)
            if ratio.max() < 0.95:
                sigma_max = max(sig, 0.5)
                break
        if sigma_max is None:
            raise FiniteSearchError("could not bound the zero region in sigma")
        return float(sigma_max), float(max(R, 5.0))

    def rhp_zeros(self, excluded):
        sig_max, om_bound = self.scan_window()
        scan = rhp_zero_scan(self, sig_max, om_bound, excluded=excluded)
        return scan.zeros, scan


@dataclass
class P1P2:
    p1: QuasiPoly
    p2: QuasiPoly
    den: QuasiPoly | None       # shared denominator factor (nE * nm_d * dF), unused in ratios
    p_roots: list               # RHP zeros of P1
    s_roots: list               # all RHP zeros of P2
    M_tilde_d: RationalFn
    scans: tuple
    node_roots: list | None = None      # P2 zeros used as interpolation nodes
    artifact_roots: list | None = None  # parameterization artifacts near interp_a

    def ratio(self, s):
        """(P1/P2)(s); the common denominators cancel exactly."""
        return self.p1(s) / self.p2(s)


def build_p1p2(plant, ctx: SynthesisContext) -> P1P2:
    """Numerator quasipolynomials of P1, P2 and their right-half-plane zeros.

    P1num = L1 * dF * dM + L2 * nF * nM e^{-hs}, and P2num is its mirror-image
    combination.  The interpolation conditions make both vanish at the RHP
    zeros of E and of m_d, so those points are passed to the scanner as
    expected cancellations.
    """
    L1, L2 = ctx.L1, ctx.L2
    nF, dF = ctx.F.num, ctx.F.den
    nM, dM = plant.M.num, plant.M.den
    A1 = L1 * dF * dM
    B1 = L2 * nF * nM
    A2 = L2.mirror() * dF * dM
    B2 = L1.mirror() * nF * nM
    q1 = QuasiPoly(A1, B1, plant.h)
    q2 = QuasiPoly(A2, B2, plant.h)
    excluded = (
        [complex(b) for b in ctx.betas]
        + [complex(np.conj(b)) for b in ctx.betas if b.imag != 0]
        + [complex(a) for a in ctx.alphas]
        + [complex(np.conj(a)) for a in ctx.alphas if a.imag != 0]
    )
    p_roots, scan1 = q1.rhp_zeros(excluded)
    s_roots, scan2 = q2.rhp_zeros(excluded)
    Mtd = blaschke(p_roots) if p_roots else RationalFn.one()

    # The extra interpolation condition pins L2(-interp_a) up to an e^{-h a}
    # remainder, which plants a P2 zero within O(e^{-h a}) of interp_a.  At
    # such a zero P1 + P2 U equals P1 != 0 for any U value, so it can never
    # become a closed-loop pole and is excluded from the node set (the final
    # certification scan independently guards this classification).
    nodes, artifacts = [], []
    ai = ctx.interp_a
    for r in s_roots:
        near_a = ai is not None and abs(r - ai) < 0.05 * (1.0 + abs(ai))
        if near_a and abs(q1(r)) > 1e-6 * (q1.A.scale_at(r) + q1.B.scale_at(r)):
            artifacts.append(r)
        else:
            nodes.append(r)
    return P1P2(
        p1=q1, p2=q2, den=None, p_roots=p_roots, s_roots=s_roots,
        M_tilde_d=Mtd, scans=(scan1, scan2),
        node_roots=nodes, artifact_roots=artifacts,
    )


# ---------------------------------------------------------------------------
# Pick problem
# ---------------------------------------------------------------------------

@dataclass
class PickProblem:
    a: float
    z: np.ndarray           # disk points, conjugate-closed, Im>0 first
    w: np.ndarray           # 1 / M_tilde_d(s_i)
    n: tuple                # branch integers
    mu: float

    def targets(self):
        return -np.log(self.w / self.mu) - 1j * 2 * np.pi * np.asarray(self.n)


def pick_points(p1p2: P1P2, a: float = 1.0):
    """Disk images z_i = (s_i - a)/(s_i + a) and targets w_i = 1/M_tilde_d(s_i)."""
    sset = p1p2.node_roots if p1p2.node_roots is not None else p1p2.s_roots
    if not sset:
        raise FiniteSearchError("P2 has no right-half-plane zeros to interpolate")
    if a <= 0:
        raise ValueError("conformal parameter a must be positive")
    s = np.array(sorted(sset, key=lambda r: (-r.imag, r.real)), dtype=complex)
    for si in s:
        for pi in p1p2.p_roots:
            if abs(si - pi) < 1e-9 * (1 + abs(si)):
                raise FiniteSearchError(
                    f"degenerate data: P1 and P2 share the zero {si:.6g}"
                )
    z = (s - a) / (s + a)
    w = 1.0 / p1p2.M_tilde_d(s)
    return z, w


def pick_matrix(pp: PickProblem) -> np.ndarray:
    if np.any(pp.w == 0):
        raise FiniteSearchError("w_i = 0 makes the logarithmic data singular")
    b = pp.targets()
    z = pp.z
    n = len(z)
    Q = np.empty((n, n), dtype=complex)
    for i in range(n):
        for k in range(n):
            Q[i, k] = (b[i] + np.conj(b[k])) / (1.0 - z[i] * np.conj(z[k]))
    return Q


def pick_min_eig(pp: PickProblem) -> float:
    return float(np.linalg.eigvalsh(pick_matrix(pp)).min())


def _classify_points(z):
    """Indices of conjugate pairs and of real points in the node list."""
    z = np.asarray(z)
    used = np.zeros(len(z), dtype=bool)
    pairs, reals = [], []
    for i in range(len(z)):
        if used[i]:
            continue
        if abs(z[i].imag) < 1e-12 * (1 + abs(z[i])):
            reals.append(i)
            used[i] = True
            continue
        partner = None
        for j in range(i + 1, len(z)):
            if not used[j] and abs(z[j] - np.conj(z[i])) < 1e-9 * (1 + abs(z[i])):
                partner = j
                break
        if partner is None:
            raise FiniteSearchError("interpolation nodes not conjugate-closed")
        pairs.append((i, partner))
        used[i] = used[partner] = True
    return pairs, reals


def _design_tuples(z, bound):
    """Branch-integer tuples compatible with a real-coefficient design.

    A conjugate node pair carries opposite integers (n, -n); real nodes carry
    zero (their targets must stay real).
    """
    from itertools import product

    pairs, _ = _classify_points(z)
    if len(pairs) == 0:
        return [tuple([0] * len(z))]
    if len(pairs) > 2:
        bound = min(bound, 3)  # keep the product enumeration tractable
    tuples = []
    for combo in product(range(-bound, bound + 1), repeat=len(pairs)):
        n = [0] * len(z)
        for (i, j), nv in zip(pairs, combo):
            n[i], n[j] = nv, -nv
        tuples.append(tuple(n))
    return tuples


def fig3_tuples(z, bound):
    """(0, n2, 0, ...) feasibility tuples sweeping the second node's integer."""
    npts = len(np.asarray(z))
    out = []
    for n2 in range(-bound, bound + 1):
        n = [0] * npts
        if npts >= 2:
            n[1] = n2
        out.append(tuple(n))
    return out


def mu_opt_search(z, w, integer_bound=20, feasibility_tuples=None):
    """Smallest mu making the Pick matrix PSD over the admitted integer tuples.

    Returns (mu_opt, best_tuple, table) where table holds (tuple, mu_min or
    None) for every candidate, for reporting.  The search bisects in mu for
    each tuple; tuples that stay indefinite up to the cap are recorded as
    infeasible.
    """
    tuples = feasibility_tuples
    if tuples is None:
        tuples = _design_tuples(z, integer_bound)
    wmax = float(np.abs(w).max())
    cap = wmax * np.exp(2 * np.pi * (integer_bound + 2))
    table = []
    best = (np.inf, None)
    for tup in tuples:
        lo, hi = wmax, wmax * 4.0
        def eig(mu):
            return pick_min_eig(PickProblem(a=1.0, z=z, w=w, n=tup, mu=mu))
        while eig(hi) < -1e-10 and hi < cap:
            hi *= 4.0
        if eig(hi) < -1e-10:
            table.append((tup, None))
            continue
        for _ in range(200):
            mid = np.sqrt(lo * hi)
            if eig(mid) >= -1e-10:
                hi = mid
            else:
                lo = mid
            if hi - lo < 1e-6 * hi:
                break
        table.append((tup, float(hi)))
        if hi < best[0]:
            best = (float(hi), tup)
    if best[1] is None:
        raise FiniteSearchError("no integer tuple admits a PSD Pick matrix")
    return best[0], best[1], table


# ---------------------------------------------------------------------------
# Nevanlinna-Pick interpolant
# ---------------------------------------------------------------------------

def _blaschke_disk(z, z0):
    return (z - z0) / (1.0 - np.conj(z0) * z)


@dataclass
class NPInterpolant:
    """Chart g(z, q) of positive-real-part interpolants on the disk.

    Built by the Schur reduction of the Cayley-transformed data, then
    conjugate-symmetrized so that real parameters q give real-coefficient
    (conjugate-symmetric) interpolants.  When the Pick matrix is singular at
    the working level, the interpolant is unique and q is ignored.
    """

    z: np.ndarray
    targets: np.ndarray
    sigmas: list
    points_used: list
    unique: bool

    def _g_raw(self, zz, qv):
        t = qv
        for z0, sig in zip(reversed(self.points_used), reversed(self.sigmas)):
            if sig is None:
                continue
            B = _blaschke_disk(zz, z0)
            t = (sig + B * t) / (1.0 + np.conj(sig) * B * t)
        return (1.0 - t) / (1.0 + t)

    def g(self, zz, q):
        """Evaluate g at zz (array ok) for the free parameter q.

        `q` is a real constant or a callable on disk points with values in the
        closed unit disk.  Conjugate symmetry g(conj z) = conj g(z) is enforced
        by averaging the raw chart with its reflected copy.
        """
        zz = np.asarray(zz, dtype=complex)
        if self.unique:
            qa = np.zeros_like(zz)
            qb = np.zeros_like(zz)
        elif callable(q):
            qa = np.asarray(q(zz), dtype=complex)
            qb = np.asarray(q(np.conj(zz)), dtype=complex)
        else:
            qa = np.full_like(zz, complex(q))
            qb = qa
        return 0.5 * (self._g_raw(zz, qa) + np.conj(self._g_raw(np.conj(zz), qb)))

    def boundary_min_real(self, q, n=2048):
        th = np.linspace(0.0, 2 * np.pi, n, endpoint=False)
        zb = (1.0 - 1e-9) * np.exp(1j * th)
        return float(self.g(zb, q).real.min())


def np_interpolant(pp: PickProblem) -> NPInterpolant:
    b = pp.targets()
    if np.any(b.real < -1e-12):
        raise FiniteSearchError("targets have negative real part: mu below |w_i|")
    z = np.asarray(pp.z, dtype=complex)
    # Schur data: sigma = (1-b)/(1+b) in the open unit disk
    cur_pts = list(z)
    cur_vals = list((1.0 - b) / (1.0 + b))
    sigmas, points_used = [], []
    unique = False
    while cur_pts:
        z0 = cur_pts[0]
        s0 = cur_vals[0]
        points_used.append(z0)
        if abs(s0) >= 1.0 - 1e-9:
            if abs(s0) > 1.0 + 1e-9:
                raise FiniteSearchError("interpolation data left the Schur class")
            # boundary value: the interpolant is unique (Pick singular)
            sigmas.append(complex(s0 / abs(s0)))
            unique = True
            break
        sigmas.append(complex(s0))
        nxt_pts, nxt_vals = [], []
        for zz, vv in zip(cur_pts[1:], cur_vals[1:]):
            B = _blaschke_disk(zz, z0)
            nxt_pts.append(zz)
            nxt_vals.append((vv - s0) / (B * (1.0 - np.conj(s0) * vv)))
        cur_pts, cur_vals = nxt_pts, nxt_vals
    interp = NPInterpolant(
        z=z, targets=b, sigmas=sigmas, points_used=points_used, unique=unique
    )
    if unique:
        # nothing left to choose; the terminal unimodular constant closes the chart
        def graw_unique(zz, qv):
            t = np.full_like(np.asarray(zz, dtype=complex), interp.sigmas[-1])
            for z0, sig in zip(reversed(interp.points_used[:-1]),
                               reversed(interp.sigmas[:-1])):
                B = _blaschke_disk(zz, z0)
                t = (sig + B * t) / (1.0 + np.conj(sig) * B * t)
            return (1.0 - t) / (1.0 + t)

        interp._g_raw = graw_unique
    resid = np.abs(interp.g(z, 0.0) - b)
    if resid.max() > 1e-7 * (1 + np.abs(b).max()):
        raise FiniteSearchError(f"interpolation residual too large: {resid.max():.3e}")
    return interp


# ---------------------------------------------------------------------------
# U construction and certification
# ---------------------------------------------------------------------------

class UComposite:
    """U(s) = (e^{G(s)}/(mu M~_d(s)) - 1) (P1/P2)(s) with G = g((s-a)/(s+a), q)."""

    def __init__(self, p1p2: P1P2, interp: NPInterpolant, mu, q, a):
        self.p1p2 = p1p2
        self.interp = interp
        self.mu = float(mu)
        self.q = q
        self.a = float(a)

    def G(self, s):
        zz = (np.asarray(s, dtype=complex) - self.a) / (np.asarray(s) + self.a)
        return self.interp.g(zz, self.q)

    def inv_SU(self, s):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return np.exp(self.G(s)) / (self.mu * self.p1p2.M_tilde_d(s))

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        with np.errstate(over="ignore", invalid="ignore"):
            return (self.inv_SU(s) - 1.0) * self.p1p2.ratio(s)

    @property
    def limit_at_infinity(self):
        # z -> 1, M~_d -> 1, P1/P2 -> ratio of leading coefficients
        g1 = complex(self.interp.g(np.array([1.0 - 1e-12 + 0j]), self.q)[0])
        lead = self.p1p2.p1.A.c[-1] / self.p1p2.p2.A.c[-1]
        with np.errstate(over="ignore", invalid="ignore"):
            return (np.exp(g1) / self.mu - 1.0) * lead


def build_U(p1p2: P1P2, interp: NPInterpolant, mu, Q, a=1.0) -> UComposite:
    if isinstance(Q, UParam):
        Q.validate()
        qc = Q.u_inf if Q.is_constant else (
            lambda zz: Q((1.0 + zz) / (1.0 - zz) * a)   # back through the disk map
        )
    else:
        qc = Q
    return UComposite(p1p2, interp, mu, qc, a)


def certify_u_norm(U: UComposite, grid: FrequencyGrid | None = None):
    """Grid-certified sup of |U(jw)| including the asymptotic tail value."""
    grid = grid or FrequencyGrid()
    om = grid.omegas()
    vals = np.abs(U(1j * om))
    if not np.all(np.isfinite(vals)):
        bad = om[~np.isfinite(vals)][0]
        raise FiniteSearchError(f"U evaluation failed at omega={bad:g}")
    i = int(np.argmax(vals))
    lo, hi = om[max(i - 1, 0)], om[min(i + 1, len(om) - 1)]
    from .rational import golden_max

    _, v = golden_max(lambda w: float(np.abs(U(np.array([1j * w]))[0])), lo, hi)
    return max(float(vals[i]), float(v), abs(U.limit_at_infinity))


def _coarse_norm_sweep(p1p2, interp, mu, q_grid, a, om):
    """Grid-only sup of |U| for every candidate q (no peak refinement)."""
    s = 1j * om
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = p1p2.ratio(s)
        mtd = p1p2.M_tilde_d(s)
    zz = (s - a) / (s + a)
    out = np.full(len(q_grid), np.inf)
    for i, qv in enumerate(q_grid):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            G = interp.g(zz, float(qv))
            vals = np.abs((np.exp(G) / (mu * mtd) - 1.0) * ratio)
        if np.all(np.isfinite(vals)):
            out[i] = vals.max()
    return out


# ---------------------------------------------------------------------------
# the search
# ---------------------------------------------------------------------------

@dataclass
class FinSearchResult:
    rho: float
    mu: float
    integers: tuple
    q: object
    U: UComposite | None
    U_norm: float
    stable: bool
    verified_norm: float
    scan: RegionScan | None
    ctx: SynthesisContext
    p1p2: P1P2 | None
    controller: Controller
    central: bool = False
    mu_table: list = field(default_factory=list)


def _default_mu_schedule(mu_opt):
    return [mu_opt * f for f in (1.02, 1.05, 1.1, 1.2, 1.5, 2.0)]


def _final_certify(plant, weights, ctx, u_callable, grid):
    controller = build_controller(plant, weights, ctx, u_callable)
    om_probe = np.logspace(-3, 4, 1500)
    mag = np.abs(
        plant.mn(1j * om_probe) * ctx.F(1j * om_probe)
        * controller.L_U(1j * om_probe)
    )
    above = np.nonzero(mag >= 0.95)[0]
    om_bound = om_probe[above[-1]] * 1.5 + 5.0 if len(above) else 5.0
    sig_max = 5.0
    # truncation soundness: delay contraction along the right edge
    for _ in range(6):
        edge = sig_max + 1j * np.linspace(0.0, om_bound, 400)
        with np.errstate(over="ignore", invalid="ignore"):
            gain = np.abs(plant.mn(edge) * ctx.F(edge) * controller.L_U(edge))
        if np.all(np.isfinite(gain)) and gain.max() < 1.0:
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
    norm, ok = verify_performance(controller, weights, grid)
    return controller, scan, norm, ok


def stabilize_finite(plant, weights, rho_schedule, mu_schedule=None,
                     q_grid=None, integer_bound=20, a=1.0, interp_a=1.0,
                     grid: FrequencyGrid | None = None) -> FinSearchResult:
    """Escalating search: levels rho, then mu above the Pick optimum, then the
    residual parameter Q, certifying the first design whose U fits the unit
    ball; the accepted controller is re-certified by an independent scan and a
    closed-loop norm check."""
    grid = grid or FrequencyGrid()
    if q_grid is None:
        q_grid = np.arange(-1.0, 1.0 + 5e-4, 1e-3)
    last_exc = None
    for rho in rho_schedule:
        ctx = build_context(plant, weights, rho, "suboptimal", interp_a)
        p1p2 = build_p1p2(plant, ctx)
        if not p1p2.p_roots:
            controller, scan, norm, ok = _final_certify(
                plant, weights, ctx, UParam(0.0), grid
            )
            if scan.zeros or not ok:
                raise FiniteSearchError(
                    "central controller expected stable but certification failed"
                )
            return FinSearchResult(
                rho=rho, mu=np.nan, integers=(), q=0.0, U=None, U_norm=0.0,
                stable=True, verified_norm=norm, scan=scan, ctx=ctx, p1p2=p1p2,
                controller=controller, central=True,
            )
        z, w = pick_points(p1p2, a)
        mu_opt, best_tuple, table = mu_opt_search(z, w, integer_bound)

        # unique interpolant exactly at the optimum
        try:
            pp0 = PickProblem(a=a, z=z, w=w, n=best_tuple, mu=mu_opt * (1 + 1e-9))
            interp0 = np_interpolant(pp0)
            U0 = build_U(p1p2, interp0, pp0.mu, 0.0, a)
            n0 = certify_u_norm(U0, grid)
            if n0 <= 1.0 + 1e-9:
                controller, scan, vnorm, ok = _final_certify(plant, weights, ctx, U0, grid)
                if not scan.zeros and ok:
                    return FinSearchResult(
                        rho=rho, mu=pp0.mu, integers=best_tuple, q=0.0, U=U0,
                        U_norm=n0, stable=True, verified_norm=vnorm, scan=scan,
                        ctx=ctx, p1p2=p1p2, controller=controller, mu_table=table,
                    )
        except FiniteSearchError as exc:
            last_exc = exc

        om_coarse = grid.omegas()
        for mu in (mu_schedule or _default_mu_schedule(mu_opt)):
            if mu <= mu_opt:
                continue
            feasible_tuples = [
                tup for tup, mu_min in table if mu_min is not None and mu_min < mu
            ] or [best_tuple]
            for tup in feasible_tuples:
                pp = PickProblem(a=a, z=z, w=w, n=tup, mu=mu)
                try:
                    interp = np_interpolant(pp)
                except FiniteSearchError as exc:
                    last_exc = exc
                    continue
                # coarse vectorized sweep first, then fully certify candidates
                # in order of increasing grid norm: the accepted design carries
                # the largest margin the sweep can offer
                coarse = _coarse_norm_sweep(p1p2, interp, mu, q_grid, a, om_coarse)
                order = np.argsort(coarse)
                for idx in order:
                    if coarse[idx] > 1.0 + 1e-9:
                        break
                    qv = float(q_grid[idx])
                    U = build_U(p1p2, interp, mu, qv, a)
                    try:
                        un = certify_u_norm(U, grid)
                    except FiniteSearchError as exc:
                        last_exc = exc
                        continue
                    if un > 1.0 + 1e-9:
                        continue
                    controller, scan, vnorm, ok = _final_certify(
                        plant, weights, ctx, U, grid
                    )
                    if scan.zeros or not ok:
                        raise CertificateContradiction(
                            "the free-parameter norm condition held but the "
                            f"independent certification failed (mu={mu:.6g}, "
                            f"q={qv:.4g}, residual zeros={len(scan.zeros)}, "
                            f"norm ok={ok})"
                        )
                    return FinSearchResult(
                        rho=rho, mu=float(mu), integers=tup, q=qv, U=U,
                        U_norm=un, stable=True, verified_norm=vnorm, scan=scan,
                        ctx=ctx, p1p2=p1p2, controller=controller, mu_table=table,
                    )
    raise FiniteSearchError(
        "schedules exhausted: this method fails to provide a stable controller"
        + (f" (last issue: {last_exc})" if last_exc else "")
    )

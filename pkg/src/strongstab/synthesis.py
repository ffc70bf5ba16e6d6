"""Level-parameterized synthesis objects for the weighted mixed-sensitivity problem.

Given a dead-time plant and the weight pair, this module builds, at a chosen
performance level, the auxiliary function E, the stable minimum-phase spectral
factor G of (1 - (W2 W2~/level^2 - 1) E)^(-1), the all-pass-completed factor F,
and the polynomial pair (L1, L2) fixed by the interpolation conditions at the
right-half-plane zeros of E and poles of the plant.  The optimal level is the
largest one at which the homogeneous interpolation system becomes singular.

Sign convention: `spectral_factor` returns G with G(0) > 0, but the completed
factor F is normalized so that F(0) > 0 (the sign is carried jointly by G and
F).  Both benchmark problems print their data in this orientation, and the
downstream search coordinates (k, u_inf ranges) depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rational import (
    FrequencyGrid,
    Poly,
    RationalFn,
    blaschke,
    golden_max,
    poly_from_roots,
    poly_roots,
)

__all__ = [
    "PlantValidationError",
    "FactorizationError",
    "InterpolationError",
    "GammaSearchError",
    "CertificateContradiction",
    "DelayPlant",
    "WeightPair",
    "UParam",
    "SynthesisContext",
    "Controller",
    "build_E",
    "spectral_ratio",
    "spectral_factor",
    "build_F",
    "eta_mirror_poles",
    "beta_zeros",
    "interpolation_rows",
    "solve_interpolation",
    "build_context",
    "gamma_opt",
    "GammaOptResult",
    "build_controller",
    "verify_performance",
]


class PlantValidationError(ValueError):
    def __init__(self, check, msg):
        super().__init__(f"{check}: {msg}")
        self.check = check


class FactorizationError(RuntimeError):
    pass


class InterpolationError(RuntimeError):
    pass


class GammaSearchError(RuntimeError):
    pass


class CertificateContradiction(RuntimeError):
    """The analytic sufficient condition and the independent scan disagreed."""


# ---------------------------------------------------------------------------
# plant and weights
# ---------------------------------------------------------------------------

def _is_inner(f: RationalFn, grid: FrequencyGrid, tol=1e-8):
    om = grid.omegas()
    vals = np.abs(f(1j * om))
    return np.abs(vals - 1.0).max() <= tol


def _roots_strictly_lhp(p: Poly):
    if p.degree == 0:
        return True
    return all(r.real < 0 for r in poly_roots(p).expanded())


@dataclass
class DelayPlant:
    """P(s) = e^{-h s} M(s) N_o(s) / m_d(s): delay, inner factors, outer factor."""

    h: float
    M: RationalFn
    m_d: RationalFn
    N_o: RationalFn

    def validate(self, weights=None, grid: FrequencyGrid | None = None):
        grid = grid or FrequencyGrid()
        if self.h < 0:
            raise PlantValidationError("plant.h", "delay must be nonnegative")
        for name, f in (("plant.M", self.M), ("plant.m_d", self.m_d)):
            if not _roots_strictly_lhp(f.den):
                raise PlantValidationError(name, "inner factor has unstable poles")
            if not _is_inner(f, grid):
                raise PlantValidationError(name, "|f(jw)| deviates from 1 on the grid")
        if not (_roots_strictly_lhp(self.N_o.num) and _roots_strictly_lhp(self.N_o.den)):
            raise PlantValidationError(
                "plant.N_o", "outer factor must have poles and zeros in Re s < 0"
            )
        if weights is not None and not weights.W2.is_zero:
            prod = weights.W2 * self.N_o
            if not (_roots_strictly_lhp(prod.num) and _roots_strictly_lhp(prod.den)):
                raise PlantValidationError(
                    "weights.W2", "W2*N_o or its inverse is not stable"
                )
        return self

    def mn(self, s):
        """e^{-hs} M(s)."""
        return np.exp(-self.h * np.asarray(s)) * self.M(s)

    def alpha_roots(self):
        """Right-half-plane poles of the plant (= RHP zeros of m_d)."""
        if self.m_d.num.degree == 0:
            return []
        return [r for r in poly_roots(self.m_d.num).expanded() if r.real > 0]


@dataclass
class WeightPair:
    W1: RationalFn
    W2: RationalFn

    def validate(self):
        if self.W1.is_zero:
            raise PlantValidationError("weights.W1", "W1 must be nonzero")
        if self.W1.relative_degree() < 0:
            raise PlantValidationError("weights.W1", "W1 must be proper")
        if not self.W2.is_zero and self.W2.relative_degree() > 0:
            raise PlantValidationError(
                "weights.W2", "W2 must be biproper or improper when nonzero"
            )
        return self


# ---------------------------------------------------------------------------
# E, G, F
# ---------------------------------------------------------------------------

def build_E(level: float, W1: RationalFn) -> RationalFn:
    """E = W1(-s) W1(s) / level^2 - 1, reduced over a common denominator."""
    if level <= 0:
        raise ValueError("level must be positive")
    para = RationalFn(W1.num * W1.num.mirror(), W1.den * W1.den.mirror())
    num = para.num - Poly(para.den.c * level**2)
    return RationalFn(num, Poly(para.den.c * level**2))


def spectral_ratio(level: float, W1: RationalFn, W2: RationalFn) -> RationalFn:
    """R = 1 - (W2(-s)W2(s)/level^2 - 1) E; G G(-s) = 1/R."""
    E = build_E(level, W1)
    if W2.is_zero:
        return RationalFn(E.num + E.den, E.den)
    w2para = RationalFn(W2.num * W2.num.mirror(), W2.den * W2.den.mirror())
    V = RationalFn(
        w2para.num - Poly(w2para.den.c * level**2), Poly(w2para.den.c * level**2)
    )
    VE = V * E
    return RationalFn(VE.den - VE.num, VE.den)


def _stable_half(even_poly: Poly, what: str):
    """Stable (Re < 0) half of the roots of an even polynomial in s.

    Roots are found in x = s^2; each x-root contributes the pair +-sqrt(x).
    Purely imaginary pairs (x < 0) cannot be split and raise, except when the
    x-multiplicity is even, in which case half goes to each side.
    """
    xs = even_poly.even_part_coeffs()
    px = Poly(xs)
    if px.degree == 0:
        return []
    stable = []
    rs = poly_roots(px)
    for x, mult in zip(rs.roots, rs.multiplicities):
        # x < 0 means the s-pair sits on the imaginary axis
        if x.imag == 0 and x.real < 0:
            if mult % 2 != 0:
                raise FactorizationError(
                    f"{what}: imaginary-axis zero pair at s=+-{np.sqrt(-x.real):.6g}j "
                    "of odd multiplicity obstructs the factorization"
                )
            w = np.sqrt(-x.real)
            stable.extend([1j * w] * (mult // 2))
            stable.extend([-1j * w] * (mult // 2))
            continue
        s = np.sqrt(complex(x))
        if s.real > 0:
            s = -s
        if s.real == 0:
            # numerically ambiguous; treat as axis obstruction
            raise FactorizationError(f"{what}: zero pair on the imaginary axis")
        stable.extend([s] * mult)
    return stable


def spectral_factor(level: float, W1: RationalFn, W2: RationalFn) -> RationalFn:
    """Stable, minimum-phase G with G(s)G(-s) = R(s)^{-1} and G(0) > 0."""
    R = spectral_ratio(level, W1, W2)
    num_stab = _stable_half(R.den, "spectral factor numerator")
    den_stab = _stable_half(R.num, "spectral factor denominator")
    gnum = poly_from_roots([complex(r) for r in num_stab], 1.0)
    gden = poly_from_roots([complex(r) for r in den_stab], 1.0)
    G = RationalFn(gnum, gden)
    # fix the gain from R at a point away from roots of everything
    s0 = 0.0
    try:
        target = 1.0 / R(s0)
        g0 = G(s0)
    except ZeroDivisionError:
        s0 = 0.37913
        target = 1.0 / R(s0)
        g0 = G(s0)
    c2 = (target / g0**2).real
    if c2 <= 0 or abs((target / g0**2).imag) > 1e-6 * abs(c2):
        raise FactorizationError("factorization produced a non-real gain")
    G = G * float(np.sqrt(c2))
    if G(0.0).real < 0:
        G = G * -1.0
    return G


def eta_mirror_poles(W1: RationalFn):
    """RHP poles of W1(-s): the mirrored (stable) poles of the weight."""
    if W1.den.degree == 0:
        return []
    return [-r for r in poly_roots(W1.den).expanded()]


def beta_zeros(E: RationalFn):
    """One representative per mirror pair of RHP zeros of E (Im >= 0 on axis)."""
    if E.num.degree == 0:
        return []
    reps = []
    for r in poly_roots(E.num).expanded():
        if r.real > 1e-9 * (1 + abs(r)):
            reps.append(r)
        elif abs(r.real) <= 1e-9 * (1 + abs(r)) and r.imag > 0:
            reps.append(complex(0.0, r.imag))
    return reps


def build_F(level: float, W1: RationalFn, W2: RationalFn):
    """(F, etas, G): F = G * prod (s - eta)/(s + eta), oriented so F(0) > 0."""
    G = spectral_factor(level, W1, W2)
    etas = eta_mirror_poles(W1)
    F = (G * blaschke(etas)).reduced() if etas else G
    if F(0.0).real < 0:
        F = F * -1.0
        G = G * -1.0
    return F, etas, G


# ---------------------------------------------------------------------------
# interpolation system
# ---------------------------------------------------------------------------

def _reject_repeated(points, what):
    for i, a in enumerate(points):
        for b in points[i + 1 :]:
            if abs(a - b) <= 1e-8 * (1 + abs(a)):
                raise InterpolationError(
                    f"repeated interpolation point {a:.6g} in {what}; "
                    "multiplicity > 1 is not supported"
                )


def interpolation_rows(plant: DelayPlant, F: RationalFn, E: RationalFn,
                       level: float, degree: int, extra_a: float | None):
    """Real matrix of the homogeneous interpolation conditions.

    Unknown vector: [L1 coefficients (ascending), L2 coefficients], each of
    length degree+1.  Complex conditions contribute their real and imaginary
    parts as separate rows; redundant conjugate rows are harmless since the
    solve goes through an SVD.
    """
    betas = beta_zeros(E)
    alphas = plant.alpha_roots()
    _reject_repeated(betas, "E zeros")
    _reject_repeated(alphas, "plant poles")
    n = degree + 1
    rows = []

    def add_complex_row(cl1, cl2):
        row = np.concatenate([cl1, cl2])
        rows.append(row.real)
        if np.abs(row.imag).max() > 0:
            rows.append(row.imag)

    def powvec(s):
        return np.array([s**k for k in range(n)], dtype=complex)

    for pt in betas + alphas:
        w = plant.mn(pt) * F(pt)
        add_complex_row(powvec(pt), w * powvec(pt))           # L1(p) + w L2(p) = 0
        add_complex_row(w * powvec(-pt), powvec(-pt))         # L2(-p) + w L1(-p) = 0

    if extra_a is not None:
        a = float(extra_a)
        Ep1 = RationalFn(E.num + E.den, E.den)
        N = ((Ep1 * F).reduced())(a) * plant.mn(a)
        if abs(N.imag) > 1e-9 * (1 + abs(N)):
            raise InterpolationError("extra condition evaluated to a non-real value")
        add_complex_row(N.real * powvec(-a), powvec(-a))      # L2(-a) + N L1(-a) = 0

    if not rows:
        raise InterpolationError("no interpolation conditions: degenerate problem")
    return np.array(rows), betas, alphas


def _nullvector(A):
    # scale the whole system by its largest row so sigma_min is dimensionless;
    # per-row normalization would hide rows that vanish at the singular level
    scale = np.linalg.norm(A, axis=1).max()
    An = A / (scale if scale > 0 else 1.0)
    _, svals, vt = np.linalg.svd(An)
    ncols = A.shape[1]
    smin = float(svals[ncols - 1]) if A.shape[0] >= ncols else 0.0
    return smin, vt[-1]


def solve_interpolation(plant, F, E, level, degree, extra_a):
    """(L1, L2, sigma_min, residual) with L1 normalized monic."""
    A, betas, alphas = interpolation_rows(plant, F, E, level, degree, extra_a)
    smin, v = _nullvector(A)
    n = degree + 1
    l1c, l2c = v[:n], v[n:]
    if abs(l1c[-1]) < 1e-10 * np.abs(v).max():
        raise InterpolationError(
            "interpolation null vector has a degenerate leading L1 coefficient"
        )
    l2c = l2c / l1c[-1]
    l1c = l1c / l1c[-1]
    L1, L2 = Poly(l1c), Poly(l2c)
    resid = float(np.abs(A @ np.concatenate([L1_pad(L1, n), L1_pad(L2, n)])).max())
    scale = float(np.abs(A).max() * max(np.abs(l1c).max(), np.abs(l2c).max()))
    rel = resid / max(scale, 1e-300)
    if extra_a is not None and abs(L1(-float(extra_a))) < 1e-9 * (1 + np.abs(l1c).max()):
        raise InterpolationError("side constraint L1(-a) != 0 violated")
    return L1, L2, smin, rel, betas, alphas


def L1_pad(p: Poly, n):
    out = np.zeros(n)
    out[: len(p.c)] = p.c
    return out


# ---------------------------------------------------------------------------
# context
# ---------------------------------------------------------------------------

@dataclass
class SynthesisContext:
    """All level-dependent synthesis data for one problem instance."""

    level: float
    mode: str                 # "optimal" | "suboptimal"
    E: RationalFn
    G: RationalFn
    F: RationalFn
    R: RationalFn             # G G(-s) = 1/R; |F(jw)|^2 = 1/R(jw)
    betas: list
    alphas: list
    etas: list
    L1: Poly
    L2: Poly
    interp_a: float | None
    sigma_min: float
    residual: float

    @property
    def n1(self):
        return len(self.betas)

    @property
    def ell(self):
        return len(self.alphas)


def build_context(plant: DelayPlant, weights: WeightPair, level: float,
                  mode="suboptimal", interp_a=1.0) -> SynthesisContext:
    E = build_E(level, weights.W1)
    R = spectral_ratio(level, weights.W1, weights.W2)
    F, etas, G = build_F(level, weights.W1, weights.W2)
    betas = beta_zeros(E)
    alphas = plant.alpha_roots()
    n1l = len(betas) + len(alphas)
    if mode == "optimal":
        degree, extra = n1l - 1, None
    elif mode == "suboptimal":
        degree, extra = n1l, float(interp_a)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    L1, L2, smin, rel, betas, alphas = solve_interpolation(
        plant, F, E, level, degree, extra
    )
    return SynthesisContext(
        level=float(level), mode=mode, E=E, G=G, F=F, R=R,
        betas=betas, alphas=alphas, etas=etas,
        L1=L1, L2=L2, interp_a=extra, sigma_min=smin, residual=rel,
    )


# ---------------------------------------------------------------------------
# optimal level search
# ---------------------------------------------------------------------------

@dataclass
class GammaOptResult:
    gamma: float
    L1: Poly
    L2: Poly
    sigma_min: float
    infeasible_points: list
    diagnostics: dict


def _sigma_min_at(plant, weights, gamma):
    E = build_E(gamma, weights.W1)
    F, _, _ = build_F(gamma, weights.W1, weights.W2)
    betas = beta_zeros(E)
    alphas = plant.alpha_roots()
    degree = len(betas) + len(alphas) - 1
    if degree < 0:
        raise InterpolationError("no interpolation conditions at this level")
    A, _, _ = interpolation_rows(plant, F, E, gamma, degree, None)
    smin, v = _nullvector(A)
    return smin, v, degree


def gamma_opt(plant: DelayPlant, weights: WeightPair, bracket, coarse=200,
              rel_tol=1e-6) -> GammaOptResult:
    """Largest level in the bracket at which the optimal system is singular.

    Scans the smallest singular value of the homogeneous system on a coarse
    grid, then golden-section refines every dip starting from the largest
    level.  Factorization obstructions and interpolation degeneracies at scan
    points are collected rather than fatal, so the caller can tell which
    failure mode ended the search.
    """
    glo, ghi = bracket
    if not (0 < glo < ghi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    gs = np.linspace(glo, ghi, coarse)
    vals = np.full(coarse, np.nan)
    infeasible = []
    for i, g in enumerate(gs):
        try:
            vals[i], _, _ = _sigma_min_at(plant, weights, g)
        except (FactorizationError, InterpolationError) as exc:
            infeasible.append((float(g), str(exc)))
    dips = []
    for i in range(1, coarse - 1):
        if np.isnan(vals[i]):
            continue
        left = vals[i - 1] if not np.isnan(vals[i - 1]) else np.inf
        right = vals[i + 1] if not np.isnan(vals[i + 1]) else np.inf
        if vals[i] <= left and vals[i] <= right:
            dips.append(i)
    # refine tighter than the reporting tolerance so the singular value can
    # actually reach its floor (it grows linearly away from the dip)
    inner_tol = min(rel_tol, 1e-9)
    for i in sorted(dips, key=lambda i: -gs[i]):
        a, b = gs[max(i - 1, 0)], gs[min(i + 1, coarse - 1)]
        def negsig(g):
            try:
                return -_sigma_min_at(plant, weights, g)[0]
            except (FactorizationError, InterpolationError):
                return -np.inf
        while (b - a) > inner_tol * gs[i]:
            m1, m2 = a + (b - a) / 3, b - (b - a) / 3
            if negsig(m1) > negsig(m2):
                b = m2
            else:
                a = m1
        gstar = 0.5 * (a + b)
        try:
            smin, v, degree = _sigma_min_at(plant, weights, gstar)
        except (FactorizationError, InterpolationError) as exc:
            infeasible.append((float(gstar), str(exc)))
            continue
        if smin < 1e-6:
            n = degree + 1
            l1c, l2c = v[:n], v[n:]
            if abs(l1c[-1]) > 1e-9 * np.abs(v).max():
                l2c = l2c / l1c[-1]
                l1c = l1c / l1c[-1]
            return GammaOptResult(
                gamma=float(gstar), L1=Poly(l1c), L2=Poly(l2c), sigma_min=float(smin),
                infeasible_points=infeasible,
                diagnostics={"bracket": (float(glo), float(ghi)), "dips": len(dips)},
            )
    raise GammaSearchError(
        "no singular level found in bracket; widen the bracket "
        f"(dips tried: {len(dips)}, infeasible points: {len(infeasible)})"
    )


# ---------------------------------------------------------------------------
# free parameter and controller
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UParam:
    """U(s) = u_inf (u_z + s)/(u_p + s); u_z = u_p = 0 means the constant u_inf."""

    u_inf: float
    u_z: float = 0.0
    u_p: float = 0.0

    @property
    def is_constant(self):
        return self.u_z == 0.0 and self.u_p == 0.0

    def validate(self):
        if self.is_constant:
            if abs(self.u_inf) > 1.0 + 1e-12:
                raise ValueError("constant U must satisfy |u_inf| <= 1")
            return self
        if self.u_p <= 0:
            raise ValueError("first-order U needs u_p > 0")
        if self.sup_norm() > 1.0 + 1e-12:
            raise ValueError("first-order U must satisfy ||U||_inf <= 1")
        return self

    def sup_norm(self):
        if self.is_constant:
            return abs(self.u_inf)
        if self.u_p <= 0:
            return float("inf")
        return max(abs(self.u_inf), abs(self.u_inf * self.u_z) / self.u_p)

    def __call__(self, s):
        if self.is_constant:
            return self.u_inf * np.ones_like(np.asarray(s, dtype=complex))
        return self.u_inf * (self.u_z + np.asarray(s)) / (self.u_p + np.asarray(s))

    @property
    def limit_at_infinity(self):
        return self.u_inf


class Controller:
    """Suboptimal controller C = E m_d N_o^{-1} F L_U / (1 + m_n F L_U)."""

    def __init__(self, plant: DelayPlant, ctx: SynthesisContext, u):
        self.plant = plant
        self.ctx = ctx
        self.u = u  # callable s-array -> complex array (UParam or composite)

    def _lu(self, s):
        s = np.asarray(s, dtype=complex)
        uv = self.u(s)
        L1, L2 = self.ctx.L1, self.ctx.L2
        num = L2(s) + L1.mirror()(s) * uv
        den = L1(s) + L2.mirror()(s) * uv
        return num, den

    def L_U(self, s):
        num, den = self._lu(s)
        return num / den

    def loop_denominator(self, s):
        """1 + m_n F L_U, cleared of the L_U denominator's zeros: returns
        (L1 + L2~ U) + m_n F (L2 + L1~ U), whose RHP zeros are the controller
        poles (the L_U denominator is checked stable separately)."""
        s = np.asarray(s, dtype=complex)
        num, den = self._lu(s)
        return den + self.plant.mn(s) * self.ctx.F(s) * num

    def sensitivity_pair(self, omegas):
        """(S, T) on the imaginary axis via the internally cancelled forms."""
        s = 1j * np.asarray(omegas, dtype=float)
        x = self.plant.mn(s) * self.ctx.F(s) * self.L_U(s)
        Ev = self.ctx.E(s)
        D = 1.0 + x * (1.0 + Ev)
        small = np.abs(D) < 1e-10
        if np.any(small):
            w = np.asarray(omegas)[small][0]
            raise RuntimeError(
                f"closed-loop denominator nearly singular at omega={w:g}; "
                "the loop is unstable or marginal"
            )
        return (1.0 + x) / D, Ev * x / D

    def C(self, s):
        s = np.asarray(s, dtype=complex)
        num, den = self._lu(s)
        lead = self.ctx.E(s) * self.plant.m_d(s) * self.ctx.F(s) / self.plant.N_o(s)
        return lead * num / (den + self.plant.mn(s) * self.ctx.F(s) * num)


def build_controller(plant, weights, ctx: SynthesisContext, u,
                     gamma_opt_value=None) -> Controller:
    if isinstance(u, UParam):
        u.validate()
    if ctx.mode == "suboptimal" and gamma_opt_value is not None:
        if ctx.level <= gamma_opt_value:
            raise ValueError(
                f"suboptimal level {ctx.level} must exceed the optimal level "
                f"{gamma_opt_value}"
            )
    return Controller(plant, ctx, u if callable(u) else UParam(float(u)))


def verify_performance(controller: Controller, weights: WeightPair,
                       grid: FrequencyGrid | None = None, slack=1e-3):
    """Sup over the grid of sqrt(|W1 S|^2 + |W2 T|^2) and the level check."""
    grid = grid or FrequencyGrid()
    om = grid.omegas()
    S, T = controller.sensitivity_pair(om)
    w1 = weights.W1(1j * om)
    w2 = 0.0 if weights.W2.is_zero else weights.W2(1j * om)
    stack = np.sqrt(np.abs(w1 * S) ** 2 + np.abs(w2 * T) ** 2)
    i = int(np.argmax(stack))

    def f(w):
        Sw, Tw = controller.sensitivity_pair(np.array([w]))
        a = weights.W1(np.array([1j * w]))[0] * Sw[0]
        b = 0.0 if weights.W2.is_zero else weights.W2(np.array([1j * w]))[0] * Tw[0]
        return float(np.sqrt(abs(a) ** 2 + abs(b) ** 2))

    lo, hi = om[max(i - 1, 0)], om[min(i + 1, len(om) - 1)]
    _, v = golden_max(f, lo, hi)
    norm = max(float(stack[i]), float(v))
    return norm, norm <= controller.ctx.level * (1.0 + slack)

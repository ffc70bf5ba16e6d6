"""Real-coefficient polynomial and rational-function algebra.

Everything downstream (weighting filters, inner/outer plant factors, spectral
factors, interpolation data) is carried by `Poly` and `RationalFn`.  Polynomial
coefficients are stored in ascending order, so ``Poly([1.0, 0.6])`` is
``1 + 0.6 s``.  Root extraction uses a simultaneous Aberth-Ehrlich iteration,
which keeps the package free of external eigensolvers; degrees in this problem
class never exceed roughly a dozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Poly",
    "RationalFn",
    "RootSet",
    "FrequencyGrid",
    "RootConvergenceError",
    "PoleEvaluationError",
    "poly_roots",
    "poly_from_roots",
    "blaschke",
    "mirror",
    "relative_degree",
    "sup_norm_on_grid",
    "golden_max",
]

# Two roots are "the same" when they differ by less than this, relative to
# their size.  Example data in this domain is printed at four decimals, so the
# tolerance is far tighter than anything that has to be matched.
ROOT_MATCH_TOL = 1e-8
# Roots with a relatively tiny imaginary part are snapped to the real axis so
# reconstructed coefficients stay real.
REAL_SNAP_TOL = 1e-9


class RootConvergenceError(RuntimeError):
    """Aberth iteration failed; carries the worst residual seen."""

    def __init__(self, msg, worst_residual=None):
        super().__init__(msg)
        self.worst_residual = worst_residual


class PoleEvaluationError(ZeroDivisionError):
    """Rational evaluation requested too close to a pole."""

    def __init__(self, msg, at=None):
        super().__init__(msg)
        self.at = at


class Poly:
    """Real polynomial with ascending coefficients, trailing zeros trimmed."""

    __slots__ = ("c",)

    def __init__(self, coeffs):
        c = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        nz = np.nonzero(c)[0]
        if len(nz) == 0:
            c = np.zeros(1)
        else:
            c = c[: nz[-1] + 1]
        self.c = c

    # -- basic structure ---------------------------------------------------
    @property
    def degree(self):
        return len(self.c) - 1

    @property
    def is_zero(self):
        return len(self.c) == 1 and self.c[0] == 0.0

    def __call__(self, s):
        s = np.asarray(s)
        r = np.zeros_like(s, dtype=complex)
        for a in self.c[::-1]:
            r = r * s + a
        return r if r.ndim else complex(r)

    def scale_at(self, s):
        """Sum of |c_k| |s|^k, the natural magnitude for residual tests."""
        a = np.abs(np.asarray(s))
        r = np.zeros_like(a, dtype=float)
        for ck in np.abs(self.c[::-1]):
            r = r * a + ck
        return r if r.ndim else float(r)

    def deriv(self):
        if self.degree == 0:
            return Poly([0.0])
        return Poly(self.c[1:] * np.arange(1, len(self.c)))

    def mirror(self):
        """p(-s)."""
        signs = (-1.0) ** np.arange(len(self.c))
        return Poly(self.c * signs)

    def monic(self):
        return Poly(self.c / self.c[-1])

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        a, b = self.c, _as_poly(other).c
        n = max(len(a), len(b))
        out = np.zeros(n)
        out[: len(a)] += a
        out[: len(b)] += b
        return Poly(out)

    def __sub__(self, other):
        return self + (_as_poly(other) * -1.0)

    def __mul__(self, other):
        if np.isscalar(other):
            return Poly(self.c * float(other))
        b = _as_poly(other).c
        return Poly(np.convolve(self.c, b))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"Poly({list(self.c)})"

    def even_part_coeffs(self):
        """Coefficients in x = s^2 for an even polynomial; error otherwise."""
        scale = np.abs(self.c).max()
        odd = self.c[1::2]
        if len(odd) and np.abs(odd).max() > 1e-9 * max(scale, 1.0):
            raise ValueError("polynomial is not even in s")
        return np.array(self.c[0::2])


def _as_poly(p):
    if isinstance(p, Poly):
        return p
    if np.isscalar(p):
        return Poly([float(p)])
    return Poly(p)


@dataclass
class RootSet:
    """Roots of a real polynomial; complex roots occur in conjugate pairs."""

    roots: list
    multiplicities: list = field(default_factory=list)

    def __post_init__(self):
        if not self.multiplicities:
            self.multiplicities = [1] * len(self.roots)

    def expanded(self):
        out = []
        for r, m in zip(self.roots, self.multiplicities):
            out.extend([r] * m)
        return out

    def to_poly(self, leading=1.0):
        return poly_from_roots(self.expanded(), leading)

    def __len__(self):
        return len(self.roots)


def poly_from_roots(roots, leading=1.0):
    """Expand a conjugate-closed root list into a real monic-times-leading Poly."""
    c = np.array([1.0 + 0.0j])
    for r in roots:
        c = np.convolve(c, np.array([-r, 1.0 + 0.0j]))
    if np.abs(c.imag).max() > 1e-8 * max(1.0, np.abs(c).max()):
        raise ValueError("root list is not closed under conjugation")
    return Poly(c.real * leading)


def _aberth(c, tol_root, max_iter):
    """All roots of the monic complex polynomial with ascending coeffs `c`."""
    n = len(c) - 1
    if n == 0:
        return np.array([], dtype=complex)
    if n == 1:
        return np.array([-c[0] / c[1]], dtype=complex)
    cm = c / c[-1]
    # Cauchy-style inclusion radius with a deterministic, asymmetric spread of
    # initial guesses (symmetric starts can stall on symmetric polynomials).
    radius = 1.0 + np.abs(cm[:-1]).max()
    k = np.arange(n)
    z = radius * np.exp(1j * (2 * np.pi * k / n + 0.4)) * (1 + 0.05 * ((k % 3) - 1))

    dm = cm[1:] * np.arange(1, n + 1)

    def val(x, coeffs):
        r = np.zeros_like(x)
        for a in coeffs[::-1]:
            r = r * x + a
        return r

    for _ in range(max_iter):
        pv = val(z, cm)
        dv = val(z, dm)
        dv = np.where(dv == 0, 1e-300, dv)
        w = pv / dv
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, np.inf)
        corr = 1.0 - w * np.sum(1.0 / diff, axis=1)
        corr = np.where(np.abs(corr) < 1e-12, 1e-12, corr)
        step = w / corr
        z = z - step
        if np.max(np.abs(step) / (1.0 + np.abs(z))) < 1e-15:
            break

    # Newton polish against the original (non-normalized) polynomial.
    d = c[1:] * np.arange(1, n + 1)
    for _ in range(3):
        pv = val(z, c)
        dv = val(z, d)
        mask = np.abs(dv) > 0
        z = np.where(mask, z - pv / np.where(mask, dv, 1.0), z)

    scale = np.array([np.sum(np.abs(c) * np.abs(zi) ** np.arange(n + 1)) for zi in z])
    resid = np.abs(val(z, c)) / np.maximum(scale, 1e-300)
    worst = float(resid.max())
    if worst > tol_root * 1e3:
        raise RootConvergenceError(
            f"root iteration did not converge (worst residual {worst:.3e})", worst
        )
    return z


def poly_roots(p: Poly, tol_root=1e-12, max_iter=200) -> RootSet:
    """Roots of `p` with conjugate symmetry enforced by explicit pairing."""
    if p.is_zero:
        raise ValueError("cannot extract roots of the zero polynomial")
    z = _aberth(p.c.astype(complex), tol_root, max_iter)
    # snap near-real roots
    z = np.where(np.abs(z.imag) < REAL_SNAP_TOL * (1 + np.abs(z.real)), z.real + 0j, z)

    # pair complex roots with their conjugates and average the pair
    used = np.zeros(len(z), dtype=bool)
    roots = []
    order = np.argsort([(zi.real, abs(zi.imag)) for zi in z], axis=0)[:, 0]
    for i in order:
        if used[i]:
            continue
        zi = z[i]
        if zi.imag == 0:
            roots.append(complex(zi))
            used[i] = True
            continue
        # find closest conjugate partner
        best, bestd = -1, np.inf
        for j in range(len(z)):
            if j == i or used[j] or z[j].imag == 0:
                continue
            d = abs(z[j] - np.conj(zi))
            if d < bestd:
                best, bestd = j, d
        if best < 0 or bestd > 1e-6 * (1 + abs(zi)):
            # clustered (multiple) real roots split across the axis by the
            # iteration's noise floor; absorb them rather than failing
            if abs(zi.imag) < 1e-6 * (1 + abs(zi)):
                roots.append(complex(zi.real))
                used[i] = True
                continue
            raise RootConvergenceError(
                f"conjugate pairing failed for root {zi}", bestd
            )
        paired = 0.5 * (zi + np.conj(z[best]))
        roots.append(complex(paired))
        roots.append(complex(np.conj(paired)))
        used[i] = used[best] = True

    # cluster for multiplicities
    out_roots, out_mult = [], []
    for r in roots:
        for k, rr in enumerate(out_roots):
            if abs(r - rr) <= ROOT_MATCH_TOL * (1 + abs(rr)):
                out_mult[k] += 1
                break
        else:
            out_roots.append(r)
            out_mult.append(1)
    return RootSet(out_roots, out_mult)


class RationalFn:
    """Ratio of two real polynomials, stored with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, num, den=None, normalize=True):
        num = _as_poly(num)
        den = _as_poly(den if den is not None else [1.0])
        if den.is_zero:
            raise ZeroDivisionError("denominator is identically zero")
        if normalize and not num.is_zero:
            lead = den.c[-1]
            num = Poly(num.c / lead)
            den = Poly(den.c / lead)
        self.num = num
        self.den = den

    @classmethod
    def zero(cls):
        return cls([0.0], [1.0])

    @classmethod
    def one(cls):
        return cls([1.0], [1.0])

    @property
    def is_zero(self):
        return self.num.is_zero

    def __call__(self, s):
        dv = self.den(s)
        scale = self.den.scale_at(s)
        bad = np.abs(np.asarray(dv)) <= 1e-12 * np.maximum(np.asarray(scale), 1e-300)
        if np.any(bad):
            at = np.asarray(s)[bad] if np.asarray(s).ndim else s
            raise PoleEvaluationError(f"evaluation at/near a pole: s={at}", at)
        return self.num(s) / dv

    def __mul__(self, other):
        if np.isscalar(other):
            return RationalFn(self.num * float(other), self.den, normalize=False)
        other = _as_rational(other)
        return RationalFn(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other.num.is_zero:
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFn(self.num * other.den, self.den * other.num)

    def __add__(self, other):
        other = _as_rational(other)
        return RationalFn(
            self.num * other.den + other.num * self.den, self.den * other.den
        )

    def __sub__(self, other):
        return self + (_as_rational(other) * -1.0)

    def __neg__(self):
        return self * -1.0

    def inverse(self):
        if self.num.is_zero:
            raise ZeroDivisionError("inverse of the zero rational function")
        return RationalFn(self.den, self.num)

    def mirror(self):
        return RationalFn(self.num.mirror(), self.den.mirror())

    def relative_degree(self):
        if self.num.is_zero:
            raise ValueError("relative degree of the zero function is undefined")
        return self.den.degree - self.num.degree

    def zeros(self):
        if self.num.degree == 0:
            return RootSet([], [])
        return poly_roots(self.num)

    def poles(self):
        if self.den.degree == 0:
            return RootSet([], [])
        return poly_roots(self.den)

    def reduced(self, tol=ROOT_MATCH_TOL):
        """Cancel common num/den roots within the matching tolerance."""
        if self.num.is_zero or self.num.degree == 0 or self.den.degree == 0:
            return self
        zn = poly_roots(self.num).expanded()
        zd = poly_roots(self.den).expanded()
        keep_n = list(zn)
        keep_d = []
        for rd in zd:
            hit = None
            for k, rn in enumerate(keep_n):
                if abs(rd - rn) <= tol * (1 + abs(rd)):
                    hit = k
                    break
            if hit is None:
                keep_d.append(rd)
            else:
                keep_n.pop(hit)
        if len(keep_d) == len(zd):
            return self
        lead = self.num.c[-1] / self.den.c[-1]
        num = poly_from_roots(_reclose(keep_n), lead)
        den = poly_from_roots(_reclose(keep_d), 1.0)
        return RationalFn(num, den)

    def __repr__(self):
        return f"RationalFn({list(self.num.c)}, {list(self.den.c)})"


def _reclose(roots):
    """Force a nearly conjugate-closed root list to be exactly closed."""
    roots = sorted(roots, key=lambda r: (round(r.real, 12), abs(r.imag), r.imag))
    out, used = [], [False] * len(roots)
    for i, r in enumerate(roots):
        if used[i]:
            continue
        if abs(r.imag) < REAL_SNAP_TOL * (1 + abs(r.real)):
            out.append(complex(r.real))
            used[i] = True
            continue
        best, bestd = -1, np.inf
        for j in range(i + 1, len(roots)):
            if used[j]:
                continue
            d = abs(roots[j] - np.conj(r))
            if d < bestd:
                best, bestd = j, d
        if best < 0:
            raise ValueError("cannot close root list under conjugation")
        rr = 0.5 * (r + np.conj(roots[best]))
        out.extend([rr, np.conj(rr)])
        used[i] = used[best] = True
    return out


def _as_rational(f):
    if isinstance(f, RationalFn):
        return f
    if isinstance(f, Poly):
        return RationalFn(f, [1.0])
    if np.isscalar(f):
        return RationalFn([float(f)], [1.0])
    raise TypeError(f"cannot interpret {f!r} as a rational function")


def mirror(f: RationalFn) -> RationalFn:
    """s -> -s composition."""
    return f.mirror()


def relative_degree(f: RationalFn) -> int:
    return f.relative_degree()


def blaschke(roots) -> RationalFn:
    """Inner product of factors (s - r)/(s + r) over a conjugate-closed set.

    The denominator is built as the mirrored numerator so that the modulus on
    the imaginary axis is one to machine precision.
    """
    roots = list(roots)
    num = poly_from_roots(roots, 1.0)
    den = num.mirror() * ((-1.0) ** len(roots))
    return RationalFn(num, den)


@dataclass(frozen=True)
class FrequencyGrid:
    """Logarithmic frequency grid with golden-section peak refinement."""

    lo: float = 1e-3
    hi: float = 1e4
    points: int = 4000

    def omegas(self):
        return np.logspace(np.log10(self.lo), np.log10(self.hi), self.points)


def golden_max(fun, a, b, iters=50):
    """Golden-section maximization of a scalar function on [a, b]."""
    gr = (np.sqrt(5.0) - 1) / 2
    x1 = b - gr * (b - a)
    x2 = a + gr * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + gr * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - gr * (b - a)
            f1 = fun(x1)
    x = 0.5 * (a + b)
    return x, fun(x)


def sup_norm_on_grid(evaluator, grid: FrequencyGrid):
    """Sup of |evaluator(j omega)| over the grid, refined around the peak.

    `evaluator` receives an ndarray of complex points j*omega and must return
    the complex response array.  Failures propagate with the offending
    frequency attached.
    """
    om = grid.omegas()
    try:
        vals = np.abs(evaluator(1j * om))
    except PoleEvaluationError:
        raise
    except Exception as exc:  # re-raise, attaching what we were doing
        raise RuntimeError(f"frequency response evaluation failed on grid: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        bad = om[~np.isfinite(vals)][0]
        raise RuntimeError(f"frequency response not finite at omega={bad:g}")
    i = int(np.argmax(vals))
    lo = om[max(i - 1, 0)]
    hi = om[min(i + 1, len(om) - 1)]

    def f(w):
        return float(np.abs(evaluator(np.array([1j * w]))[0]))

    w, v = golden_max(f, lo, hi)
    if v >= vals[i]:
        return float(v), float(w)
    return float(vals[i]), float(om[i])

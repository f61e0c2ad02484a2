"""Positive homogeneous functions P: rP(x) = P(r^E x) for a contracting r^E.

Three built-in kinds: powers of the Euclidean norm, semi-elliptic
polynomials with even weights, and the composite construction
P(x) = Q(x) f(Q(x)^-E x) that produces continuous non-smooth examples.
Evaluators are vectorized: they accept (n, d) arrays and return (n,).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .dilation import (DilationGroup, Endomorphism, as_endomorphism,
                       diag_exponent, is_contracting)


class HomogeneityError(ValueError):
    pass


def _as_batch(x, dim):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != dim:
            raise HomogeneityError(f"point has dim {x.shape[0]}, expected {dim}")
        return x[None, :], True
    if x.ndim != 2 or x.shape[1] != dim:
        raise HomogeneityError(f"batch shape {x.shape} incompatible with dim {dim}")
    return x, False


@dataclass
class PosHomFunction:
    """A positive homogeneous function with one designated exponent."""

    dim: int
    kind: str
    evaluator: Callable[[np.ndarray], np.ndarray]
    exponent: Endomorphism
    order_exact: Optional[Fraction] = None
    terms: Optional[dict] = None        # semi_elliptic: multi-index -> Fraction
    weights: Optional[tuple] = None     # semi_elliptic weight tuple n
    label: str = ""

    def __post_init__(self):
        rep = is_contracting(self.exponent)
        if not rep.contracting:
            raise HomogeneityError(
                f"designated exponent is not contracting (min Re = {rep.min_real_part:.3g})")
        self.group = DilationGroup(self.exponent)

    @property
    def order(self) -> float:
        """Homogeneous order mu = tr E; the radial weight is r^(mu-1) dr."""
        return self.exponent.trace

    def __call__(self, x):
        xb, single = _as_batch(x, self.dim)
        v = np.asarray(self.evaluator(xb), dtype=float)
        return float(v[0]) if single else v

    def eval_exact(self, x) -> Fraction:
        """Exact rational value; only the semi_elliptic kind supports this."""
        if self.kind != "semi_elliptic":
            raise HomogeneityError(f"no exact path for kind {self.kind!r}")
        xf = [Fraction(c) for c in x]
        total = Fraction(0)
        for alpha, coef in self.terms.items():
            term = coef
            for xi, ai in zip(xf, alpha):
                term *= xi ** ai
            total += term
        return total

    def project_to_sphere(self, x: np.ndarray) -> np.ndarray:
        """P(x)^-E x, a point of the unital level set S (batched)."""
        xb, single = _as_batch(x, self.dim)
        r = self(xb)
        if np.any(r <= 0):
            raise HomogeneityError("cannot project points with P(x) <= 0")
        eta = self.group.apply_scales(1.0 / r, xb)
        return eta[0] if single else eta


def eval(P: PosHomFunction, x):  # noqa: A001 - spec operation name
    return P(x)


def norm_power(dim: int, alpha: float = 1.0, skew: np.ndarray | None = None) -> PosHomFunction:
    """P(x) = |x|^alpha.  Any E = I/alpha + skew-symmetric works as exponent."""
    if alpha <= 0:
        raise HomogeneityError("alpha must be positive")
    e = np.eye(dim) / alpha
    if skew is not None:
        skew = np.asarray(skew, dtype=float)
        if not np.allclose(skew, -skew.T):
            raise HomogeneityError("skew part must be antisymmetric")
        e = e + skew
    alpha_f = float(alpha)

    def ev(xb):
        return np.linalg.norm(xb, axis=1) ** alpha_f

    frac_order = None
    try:
        frac_order = Fraction(dim) / Fraction(alpha)
    except (TypeError, ValueError):
        pass
    return PosHomFunction(dim=dim, kind="norm_power", evaluator=ev,
                          exponent=Endomorphism(e), order_exact=frac_order,
                          label=f"|x|^{alpha:g} (d={dim})")


def semi_elliptic(terms: dict, weights: Sequence[int], label: str = "") -> PosHomFunction:
    """Sum of a_alpha x^alpha over multi-indices with |alpha : n| = 1.

    `terms` maps multi-index tuples to rational coefficients, `weights`
    is the tuple n of even positive integers.  Terms off the |alpha:n|=1
    surface are rejected.
    """
    weights = tuple(int(w) for w in weights)
    if any(w <= 0 or w % 2 for w in weights):
        raise HomogeneityError(f"weights must be even positive integers, got {weights}")
    dim = len(weights)
    clean = {}
    for alpha, coef in terms.items():
        alpha = tuple(int(a) for a in alpha)
        if len(alpha) != dim or any(a < 0 for a in alpha):
            raise HomogeneityError(f"bad multi-index {alpha}")
        w = sum(Fraction(a, n) for a, n in zip(alpha, weights))
        if w != 1:
            raise HomogeneityError(f"term {alpha} has |alpha:n| = {w}, need 1")
        clean[alpha] = Fraction(coef)
    if not clean:
        raise HomogeneityError("empty coefficient table")
    exps = np.array(sorted(clean), dtype=float)
    coefs = np.array([float(clean[tuple(int(a) for a in alpha)]) for alpha in sorted(clean)])

    def ev(xb):
        return (coefs[None, :] * np.prod(xb[:, None, :] ** exps[None, :, :], axis=2)).sum(axis=1)

    order_exact = sum(Fraction(1, n) for n in weights)
    return PosHomFunction(dim=dim, kind="semi_elliptic", evaluator=ev,
                          exponent=diag_exponent(weights), order_exact=order_exact,
                          terms=clean, weights=weights,
                          label=label or f"semi-elliptic n={weights}")


def make_weierstrass(Q: PosHomFunction, f: Callable[[np.ndarray], np.ndarray],
                     probe: int = 512, seed: int = 0, label: str = "") -> PosHomFunction:
    """P(x) = Q(x) f(Q(x)^-E x) with f continuous and positive on S_Q.

    Positivity of f is probed on a grid of S_Q; the exponent is inherited
    from Q.  P(0) = 0 by definition.
    """
    grid = sphere_grid(Q, probe, seed=seed)
    vals = np.asarray(f(grid), dtype=float)
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
        raise HomogeneityError("f must be finite and strictly positive on S_Q")

    def ev(xb):
        q = Q(xb)
        out = np.zeros(len(xb))
        mask = q > 0
        if np.any(mask):
            eta = Q.group.apply_scales(1.0 / q[mask], xb[mask])
            out[mask] = q[mask] * np.asarray(f(eta), dtype=float)
        return out

    return PosHomFunction(dim=Q.dim, kind="weierstrass", evaluator=ev,
                          exponent=Q.exponent, order_exact=Q.order_exact,
                          label=label or f"weierstrass over {Q.label}")


def weierstrass_wave(n_terms: int = 26) -> Callable[[np.ndarray], np.ndarray]:
    """w(t) + 3 on the circle, w(t) = sum 2^-n cos(3^n t), truncated.

    The tail beyond n=25 is below 2^-25, invisible at float64 scale.
    """
    ns = np.arange(n_terms)
    amps = 0.5 ** ns
    freqs = 3.0 ** ns

    def f(eta):
        t = np.arctan2(eta[:, 1], eta[:, 0])
        return (amps[None, :] * np.cos(freqs[None, :] * t[:, None])).sum(axis=1) + 3.0

    return f


# ---------------------------------------------------------------------------
# polar coordinates

def polar_decompose(P: PosHomFunction, x):
    """(r, eta) with r = P(x) and eta = P(x)^-E x on S."""
    xb, single = _as_batch(x, P.dim)
    if np.any(np.all(xb == 0, axis=1)):
        raise HomogeneityError("polar_decompose: x must be nonzero")
    r = P(xb)
    r = np.atleast_1d(r)
    if np.any(r <= 0):
        raise HomogeneityError("P(x) = 0 at a nonzero x: positive definiteness is broken")
    eta = P.group.apply_scales(1.0 / r, xb)
    if single:
        return float(r[0]), eta[0]
    return r, eta


def polar_compose(P: PosHomFunction, r, eta, tol: float = 1e-6):
    """r^E eta for eta on S; rejects eta off the level set beyond tol."""
    eb, single = _as_batch(eta, P.dim)
    rv = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(rv <= 0):
        raise HomogeneityError("polar_compose needs r > 0")
    resid = np.abs(P(eb) - 1.0)
    if np.any(resid > tol):
        raise HomogeneityError(f"eta off the unital level set: |P(eta)-1| = {resid.max():.3g}")
    if rv.shape == (1,) and len(eb) > 1:
        rv = np.full(len(eb), rv[0])
    out = P.group.apply_scales(rv, eb)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# probing grids

def direction_grid(dim: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic low-discrepancy directions on the Euclidean sphere."""
    from scipy.stats import qmc

    import math as _math
    m = 1 << max(3, int(_math.ceil(_math.log2(max(int(n), 2)))))
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    u = sampler.random_base2(int(_math.log2(m)))
    g = _norm_ppf(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.linalg.norm(g, axis=1)
    good = norms > 1e-12
    g = g[good] / norms[good, None]
    axes = np.concatenate([np.eye(dim), -np.eye(dim)])
    return np.concatenate([axes, g])[:n + 2 * dim]


def _norm_ppf(u):
    from scipy.special import ndtri
    return ndtri(u)


def probe_points(dim: int, n: int, seed: int = 0,
                 radii=(0.5, 2.0)) -> np.ndarray:
    """Sphere directions spread over a radius band; a generic test grid."""
    dirs = direction_grid(dim, n, seed)
    r = np.linspace(radii[0], radii[1], len(dirs))
    return dirs * r[:, None]


def sphere_grid(P: PosHomFunction, n: int, seed: int = 0) -> np.ndarray:
    """Points on S = {P = 1}, by projecting Euclidean directions."""
    return P.project_to_sphere(direction_grid(P.dim, n, seed))


# ---------------------------------------------------------------------------
# checks

def homogeneity_residual(P: PosHomFunction, e=None, n: int = 100,
                         seed: int = 0) -> float:
    """max over random (r, x) of |P(r^E x) - r P(x)| / (1 + r P(x))."""
    e = P.exponent if e is None else as_endomorphism(e)
    group = DilationGroup(e)
    rng = np.random.default_rng(seed)
    x = probe_points(P.dim, n, seed)
    r = np.exp(rng.uniform(math.log(0.05), math.log(20.0), len(x)))
    lhs = P(group.apply_scales(r, x))
    rhs = r * P(x)
    return float(np.max(np.abs(lhs - rhs) / (1.0 + np.abs(rhs))))


def is_exponent(P: PosHomFunction, e, tol: float = 1e-7, n: int = 200,
                seed: int = 0) -> bool:
    return homogeneity_residual(P, e, n=n, seed=seed) <= tol


def validate_pos_hom(P: PosHomFunction, n: int = 2000, seed: int = 0,
                     tol: float = 1e-9) -> dict:
    """Probe positive definiteness and homogeneity; raises on failure."""
    pts = probe_points(P.dim, n, seed)
    vals = P(pts)
    if np.any(vals <= 0):
        raise HomogeneityError("P vanishes or is negative at a nonzero probe point")
    if abs(P(np.zeros(P.dim))) > tol:
        raise HomogeneityError("P(0) != 0")
    resid = homogeneity_residual(P, n=min(n, 200), seed=seed)
    if resid > tol:
        raise HomogeneityError(f"homogeneity residual {resid:.3g} exceeds {tol:g}")
    return {"min_probe": float(vals.min()), "homogeneity_residual": resid}


@dataclass(frozen=True)
class SymCheckResult:
    ok: bool
    max_residual: float
    orthogonality_residual: float

    def __bool__(self):
        return self.ok


def sym_check(P: PosHomFunction, o: np.ndarray, grid: np.ndarray | None = None,
              tol: float = 1e-9) -> SymCheckResult:
    """Does O preserve P?  max |P(Ox) - P(x)|/(1+P(x)) over the grid."""
    o = np.asarray(o, dtype=float)
    if o.shape != (P.dim, P.dim):
        raise HomogeneityError(f"candidate has shape {o.shape}, expected {(P.dim, P.dim)}")
    if grid is None:
        grid = probe_points(P.dim, 512, seed=1)
    vals = P(grid)
    moved = P(grid @ o.T)
    resid = float(np.max(np.abs(moved - vals) / (1.0 + np.abs(vals))))
    orth = float(np.linalg.norm(o.T @ o - np.eye(P.dim)))
    return SymCheckResult(ok=resid <= tol, max_residual=resid,
                          orthogonality_residual=orth)


def subhom_check(qtilde: Callable[[np.ndarray], np.ndarray], e, k_box,
                 eps: float, order: int = 0, dim: int | None = None,
                 r_points: int = 16, grid_per_axis: int = 5,
                 min_delta: float = 2.0 ** -40):
    """Search the largest delta (halving from 1) that witnesses subhomogeneity.

    Checks |r^j d^j/dr^j qtilde(r^E xi)| <= eps*r for j = 0..order on an
    (r, xi) grid with r in [delta/100, delta] and xi in the box grid.
    Derivatives are central finite differences in r.  Returns (pass, delta).
    """
    if eps <= 0:
        raise HomogeneityError("eps must be positive")
    e = as_endomorphism(e)
    group = DilationGroup(e)
    d = e.dim if dim is None else dim
    if np.isscalar(k_box):
        bounds = [(-float(k_box), float(k_box))] * d
    else:
        bounds = [(float(lo), float(hi)) for lo, hi in k_box]
    axes = [np.linspace(lo, hi, grid_per_axis) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    xi = np.stack([m.ravel() for m in mesh], axis=1)

    def g(r_scalar, pts):
        vals = np.asarray(qtilde(group.apply_scales(np.full(len(pts), r_scalar), pts)))
        if np.any(~np.isfinite(vals)):
            raise HomogeneityError("non-finite evaluation in subhom_check")
        return vals

    def bound_holds(delta):
        rs = np.geomspace(delta / 100.0, delta, r_points)
        for r in rs:
            if np.any(np.abs(g(r, xi)) > eps * r):
                return False
            if order >= 1:
                h = r * 1e-5
                d1 = (g(r + h, xi) - g(r - h, xi)) / (2 * h)
                if np.any(np.abs(r * d1) > eps * r):
                    return False
            if order >= 2:
                h = r * 1e-4
                d2 = (g(r + h, xi) - 2 * g(r, xi) + g(r - h, xi)) / (h * h)
                if np.any(np.abs(r * r * d2) > eps * r):
                    return False
        return True

    delta = 1.0
    while delta >= min_delta:
        if bound_holds(delta):
            return True, delta
        delta /= 2.0
    return False, min_delta


# ---------------------------------------------------------------------------
# named instances from the worked examples

def p1() -> PosHomFunction:
    """x^2 + y^4 on R^2 (weights (2, 4))."""
    return semi_elliptic({(2, 0): 1, (0, 4): 1}, (2, 4), label="x^2+y^4")


def p2() -> PosHomFunction:
    """x^2 + (3/2) x y^2 + y^4 on R^2; non-convex unit ball."""
    return semi_elliptic({(2, 0): 1, (1, 2): Fraction(3, 2), (0, 4): 1}, (2, 4),
                         label="x^2+(3/2)xy^2+y^4")


def parse_semi_elliptic(term_spec: str, weight_spec: str) -> PosHomFunction:
    """Config-file form: terms "2 0 1; 1 2 3/2; 0 4 1", weights "2 4"."""
    weights = tuple(int(w) for w in weight_spec.split())
    terms = {}
    for chunk in term_spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = chunk.split()
        if len(parts) != len(weights) + 1:
            raise HomogeneityError(f"bad term {chunk!r}: need {len(weights)} indices + coefficient")
        alpha = tuple(int(p) for p in parts[:-1])
        terms[alpha] = Fraction(parts[-1])
    return semi_elliptic(terms, weights)

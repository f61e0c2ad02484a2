"""Monte-Carlo construction of the surface measure and its identity tests.

sigma_P(F) = mu_P * Lebesgue volume of the quasi-cone {r^E eta : 0<r<1,
eta in F}, estimated with scrambled Sobol points over a bounding box.
Every estimate carries a standard error, and every check in this module
states its tolerance as a multiple of the measured errors, never as an
absolute constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dilation import as_endomorphism
from .homogeneous import PosHomFunction, is_exponent

TWO_PI = 2.0 * math.pi


class MeasureError(ValueError):
    pass


@dataclass
class SurfaceRegion:
    """Predicate-defined subset of the unital level set S."""

    predicate: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, eta: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(eta), dtype=bool)


def region_all() -> SurfaceRegion:
    return SurfaceRegion(lambda eta: np.ones(len(eta), dtype=bool), "all of S")


def region_empty() -> SurfaceRegion:
    return SurfaceRegion(lambda eta: np.zeros(len(eta), dtype=bool), "empty")


def region_halfspace(axis: int = 0, positive: bool = True) -> SurfaceRegion:
    sign = 1.0 if positive else -1.0
    return SurfaceRegion(lambda eta: sign * eta[:, axis] > 0,
                         f"eta[{axis}] {'>' if positive else '<'} 0")


def region_transform(region: SurfaceRegion, o: np.ndarray) -> SurfaceRegion:
    """The image region O F: membership of eta tests F at O^-1 eta."""
    o_inv = np.linalg.inv(np.asarray(o, dtype=float))
    return SurfaceRegion(lambda eta: region(eta @ o_inv.T),
                         f"image of ({region.description})")


@dataclass
class SigmaEstimate:
    value: float
    stderr: float
    samples_used: int
    seed: int

    def __iter__(self):
        yield self.value
        yield self.stderr


@dataclass
class ComplexEstimate:
    value: complex
    stderr: float
    samples_used: int
    seed: int


@dataclass(frozen=True)
class RadialMeasure:
    """The radial weight r^(order-1) dr on (0, inf)."""

    order: float

    def __post_init__(self):
        if not self.order > 0:
            raise MeasureError(f"radial order must be positive, got {self.order}")

    def mass(self, a: float, b: float) -> float:
        return (b ** self.order - a ** self.order) / self.order

    def quadrature(self, cutoff: float, nodes: int):
        """Gauss-Legendre nodes/weights absorbing the r^(order-1) factor."""
        return _radial_rule(self.order, cutoff, nodes)


# ---------------------------------------------------------------------------
# sampling engine

def _boundary_grid(dim: int, halfwidth: float) -> np.ndarray:
    """d * 2^d * 32 probe points spread over the faces of the box."""
    per_face = max(2 ** (dim - 1) * 32, 8)
    from scipy.stats import qmc
    pts = []
    sampler = qmc.Sobol(d=max(dim - 1, 1), scramble=False)
    base = sampler.random_base2(int(math.ceil(math.log2(per_face))))[:per_face]
    for axis in range(dim):
        for sign in (-1.0, 1.0):
            face = np.empty((per_face, dim))
            face[:, axis] = sign * halfwidth
            others = [j for j in range(dim) if j != axis]
            face[:, others] = (2.0 * base[:, :len(others)] - 1.0) * halfwidth
            pts.append(face)
    return np.concatenate(pts)


def bounding_halfwidth(P: PosHomFunction, level: float = 1.0,
                       max_doublings: int = 60) -> float:
    """Smallest tested 2^k with min P > level on the box boundary grid.

    Termination is guaranteed for positive homogeneous P (the sublevel set
    is bounded); hitting the doubling cap signals a broken input.
    """
    h = 1.0
    for _ in range(max_doublings):
        if float(np.min(P(_boundary_grid(P.dim, h)))) > level:
            return h
        h *= 2.0
    raise MeasureError(
        f"bounding box search exceeded {max_doublings} doublings; "
        f"the sublevel set of {P.label or 'P'} looks unbounded")


@dataclass
class SampleCloud:
    """Shared Sobol sample set over the bounding box of {P < 1}."""

    points: np.ndarray
    box_volume: float
    values: np.ndarray
    hits: np.ndarray
    eta: np.ndarray          # projections of the hit points onto S
    seed: int

    @property
    def n(self) -> int:
        return len(self.points)


def sample_cloud(P: PosHomFunction, n: int, seed: int,
                 halfwidth: Optional[float] = None) -> SampleCloud:
    if n < 10 ** 3:
        raise MeasureError("need at least 10^3 samples")
    from scipy.stats import qmc
    m = 1 << int(math.ceil(math.log2(n)))
    h = bounding_halfwidth(P) if halfwidth is None else halfwidth
    sampler = qmc.Sobol(d=P.dim, scramble=True, seed=seed)
    pts = (2.0 * sampler.random_base2(int(math.log2(m))) - 1.0) * h
    vals = P(pts)
    hits = (vals > 0) & (vals < 1)
    eta = np.zeros_like(pts)
    if np.any(hits):
        eta[hits] = P.group.apply_scales(1.0 / vals[hits], pts[hits])
    return SampleCloud(points=pts, box_volume=(2.0 * h) ** P.dim,
                       values=vals, hits=hits, eta=eta, seed=seed)


def _mean_se(weights: np.ndarray) -> tuple:
    m = len(weights)
    mean = float(np.mean(weights))
    se = float(np.std(weights) / math.sqrt(m))
    return mean, se


def _mean_se_complex(weights: np.ndarray) -> tuple:
    m = len(weights)
    mean = complex(np.mean(weights))
    se_re = float(np.std(weights.real) / math.sqrt(m))
    se_im = float(np.std(weights.imag) / math.sqrt(m))
    return mean, math.hypot(se_re, se_im)


# ---------------------------------------------------------------------------
# sigma and surface integrals

def quasi_cone_volume(P: PosHomFunction, region: SurfaceRegion, n: int,
                      seed: int, cloud: Optional[SampleCloud] = None) -> SigmaEstimate:
    """Lebesgue volume of {x : 0 < P(x) < 1, P(x)^-E x in F}."""
    c = cloud if cloud is not None else sample_cloud(P, n, seed)
    w = np.zeros(c.n)
    if np.any(c.hits):
        w[c.hits] = np.where(region(c.eta[c.hits]), c.box_volume, 0.0)
    mean, se = _mean_se(w)
    return SigmaEstimate(mean, se, c.n, seed)


def sigma(P: PosHomFunction, region: SurfaceRegion, n: int, seed: int,
          cloud: Optional[SampleCloud] = None) -> SigmaEstimate:
    """sigma_P(F) = mu_P * quasi-cone volume."""
    est = quasi_cone_volume(P, region, n, seed, cloud=cloud)
    mu = P.order
    return SigmaEstimate(mu * est.value, mu * est.stderr, est.samples_used, seed)


def sigma_with_exponent(P: PosHomFunction, e, region: SurfaceRegion,
                        n: int, seed: int) -> SigmaEstimate:
    """sigma computed through a different member of the exponent set."""
    e = as_endomorphism(e)
    if not is_exponent(P, e):
        raise MeasureError("supplied matrix fails the homogeneity residual for P")
    clone = PosHomFunction(dim=P.dim, kind=P.kind, evaluator=P.evaluator,
                           exponent=e, order_exact=P.order_exact,
                           terms=P.terms, weights=P.weights, label=P.label)
    return sigma(clone, region, n, seed)


def integrate_on_S(P: PosHomFunction, g: Callable[[np.ndarray], np.ndarray],
                   n: int, seed: int, cloud: Optional[SampleCloud] = None):
    """integral of g over S against sigma_P, through the quasi-cone volume.

    Returns a SigmaEstimate, or a ComplexEstimate when g produces complex
    values.  Non-finite g values raise.
    """
    c = cloud if cloud is not None else sample_cloud(P, n, seed)
    mu = P.order
    gv = np.asarray(g(c.eta[c.hits]))
    if not np.all(np.isfinite(gv.real)) or not np.all(np.isfinite(np.imag(gv))):
        raise MeasureError("non-finite values of g on S")
    if np.iscomplexobj(gv):
        w = np.zeros(c.n, dtype=complex)
        w[c.hits] = c.box_volume * mu * gv
        mean, se = _mean_se_complex(w)
        return ComplexEstimate(mean, se, c.n, seed)
    w = np.zeros(c.n)
    w[c.hits] = c.box_volume * mu * gv
    mean, se = _mean_se(w)
    return SigmaEstimate(mean, se, c.n, seed)


# ---------------------------------------------------------------------------
# the polar-coordinate integration formula

def _radial_rule(mu: float, cutoff: float, nodes: int):
    """Gauss-Legendre nodes for int_0^cutoff . r^(mu-1) dr via u = r^mu.

    The substitution absorbs the r^(mu-1) weight exactly, removing the
    integrable endpoint singularity when mu < 1.
    """
    x, w = np.polynomial.legendre.leggauss(nodes)
    umax = cutoff ** mu
    u = 0.5 * umax * (x + 1.0)
    r = u ** (1.0 / mu)
    return r, 0.5 * umax * w / mu


@dataclass
class PolarEstimate:
    value: float
    stderr: float
    quad_error: float
    samples_used: int
    seed: int

    @property
    def total_error(self) -> float:
        return 3.0 * self.stderr + self.quad_error


def polar_integrate(P: PosHomFunction, f: Callable[[np.ndarray], np.ndarray],
                    radial_cutoff: float, n: int, seed: int,
                    radial_nodes: int = 64, order: str = "radial_outer",
                    cloud: Optional[SampleCloud] = None) -> PolarEstimate:
    """int f dx as the iterated radial/surface integral.

    Outer Gauss-Legendre in the radial variable composed with the
    Monte-Carlo surface integral; the caller asserts f has negligible mass
    outside {P < radial_cutoff}.  `order` swaps which integral is the
    outer sum (the two must agree; that is a Fubini consistency probe).
    """
    if order not in ("radial_outer", "surface_outer"):
        raise MeasureError(f"unknown order {order!r}")
    c = cloud if cloud is not None else sample_cloud(P, n, seed)
    mu = P.order
    radial = RadialMeasure(mu)

    def accumulate(nodes: int) -> np.ndarray:
        r, wr = radial.quadrature(radial_cutoff, nodes)
        eta = c.eta[c.hits]
        acc = np.zeros(eta.shape[0])
        if order == "radial_outer":
            for rj, wj in zip(r, wr):
                fv = np.asarray(f(P.group.apply_scales(np.full(len(eta), rj), eta)),
                                dtype=float)
                if not np.all(np.isfinite(fv)):
                    raise MeasureError("non-finite integrand value")
                acc += wj * fv
        else:
            for i in range(eta.shape[0]):
                pts = P.group.apply_scales(r, np.repeat(eta[i:i + 1], len(r), axis=0))
                acc[i] = float(np.dot(wr, np.asarray(f(pts), dtype=float)))
        return acc

    inner = accumulate(radial_nodes)
    w = np.zeros(c.n)
    w[c.hits] = c.box_volume * mu * inner
    mean, se = _mean_se(w)
    coarse = accumulate(max(radial_nodes // 2, 4))
    wc = np.zeros(c.n)
    wc[c.hits] = c.box_volume * mu * coarse
    quad_err = abs(mean - float(np.mean(wc)))
    return PolarEstimate(mean, se, quad_err, c.n, seed)


def mc_box_integral(f: Callable[[np.ndarray], np.ndarray], dim: int,
                    halfwidth: float, n: int, seed: int):
    """Plain Sobol Monte Carlo of f over [-h, h]^dim (real or complex f)."""
    from scipy.stats import qmc
    m = 1 << int(math.ceil(math.log2(max(n, 1024))))
    sampler = qmc.Sobol(d=dim, scramble=True, seed=seed)
    pts = (2.0 * sampler.random_base2(int(math.log2(m))) - 1.0) * halfwidth
    vals = np.asarray(f(pts))
    vol = (2.0 * halfwidth) ** dim
    if np.iscomplexobj(vals):
        mean, se = _mean_se_complex(vol * vals)
        return ComplexEstimate(mean, se, m, seed)
    mean, se = _mean_se(vol * vals)
    return SigmaEstimate(mean, se, m, seed)


def decay_box_halfwidth(P: PosHomFunction, scale: float,
                        tail_exponent: float = 34.0) -> float:
    """Half-width beyond which exp(-scale * P) is below e^-tail."""
    h = 1.0
    for _ in range(200):
        if scale * float(np.min(P(_boundary_grid(P.dim, h)))) > tail_exponent:
            return h
        h *= 2.0
    raise MeasureError("integrand tail never became negligible")


# ---------------------------------------------------------------------------
# identity tests

@dataclass
class AgreementReport:
    lhs: float
    rhs: float
    stderr_lhs: float
    stderr_rhs: float
    tolerance: float
    passed: bool
    label: str = ""

    def csv_row(self, seed: int, n: int) -> str:
        return (f"{self.label},{self.lhs!r},{self.rhs!r},{self.stderr_lhs!r},"
                f"{self.stderr_rhs!r},{int(self.passed)},{seed},{n}")


def _agree(lhs, rhs, se_l, se_r, label, extra_tol=0.0, sigmas=3.0) -> AgreementReport:
    tol = sigmas * math.hypot(se_l, se_r) + extra_tol
    return AgreementReport(lhs=lhs, rhs=rhs, stderr_lhs=se_l, stderr_rhs=se_r,
                           tolerance=tol, passed=abs(lhs - rhs) <= tol, label=label)


def e_independence_test(P: PosHomFunction, e1, e2, region: SurfaceRegion,
                        n: int, seed: int) -> AgreementReport:
    """sigma through two exponent-set members must agree statistically."""
    a = sigma_with_exponent(P, e1, region, n, seed)
    b = sigma_with_exponent(P, e2, region, n, seed + 1)
    return _agree(a.value, b.value, a.stderr, b.stderr, "e_independence")


def sym_invariance_test(P: PosHomFunction, o: np.ndarray, region: SurfaceRegion,
                        n: int, seed: int) -> AgreementReport:
    """sigma(O F) = sigma(F) for a verified symmetry O."""
    from .homogeneous import sym_check
    res = sym_check(P, o)
    if not res.ok:
        raise MeasureError(f"candidate fails sym_check (residual {res.max_residual:.3g})")
    a = sigma(P, region_transform(region, o), n, seed)
    b = sigma(P, region, n, seed + 1)
    return _agree(a.value, b.value, a.stderr, b.stderr, "sym_invariance")


def shell_derivative_check(P: PosHomFunction, f, r0: float, h: float,
                           n: int = 2 ** 18, seed: int = 0) -> AgreementReport:
    """d/dr of int_{P<r} f dx at r0 against r0^(mu-1) int_S f(r0^E eta) dsigma."""
    mu = P.order
    hw = bounding_halfwidth(P, level=r0 + h)
    from scipy.stats import qmc
    m = 1 << int(math.ceil(math.log2(n)))
    sampler = qmc.Sobol(d=P.dim, scramble=True, seed=seed)
    pts = (2.0 * sampler.random_base2(int(math.log2(m))) - 1.0) * hw
    vol = (2.0 * hw) ** P.dim
    vals = P(pts)
    shell = ((vals < r0 + h).astype(float) - (vals < r0 - h).astype(float))
    w = vol * np.asarray(f(pts), dtype=float) * shell / (2.0 * h)
    lhs, se_l = _mean_se(w)
    rhs_est = integrate_on_S(
        P, lambda eta: np.asarray(f(P.group.apply_scales(np.full(len(eta), r0), eta)),
                                  dtype=float),
        n, seed + 1)
    rhs = r0 ** (mu - 1.0) * rhs_est.value
    se_r = r0 ** (mu - 1.0) * rhs_est.stderr
    extra = 5.0 * h * h * (1.0 + abs(rhs))
    return _agree(lhs, rhs, se_l, se_r, "shell_derivative", extra_tol=extra)


def surface_ft(P: PosHomFunction, x, n: int, seed: int,
               cloud: Optional[SampleCloud] = None) -> ComplexEstimate:
    """Fourier transform of sigma_P at x, normalized by (2 pi)^-d."""
    x = np.asarray(x, dtype=float)
    norm = TWO_PI ** P.dim
    return integrate_on_S(P, lambda eta: np.exp(-1j * (eta @ x)) / norm,
                          n, seed, cloud=cloud)


def ft_relation_check(P: PosHomFunction, x, n: int, seed: int,
                      radial_nodes: int = 64) -> AgreementReport:
    """chi_B^(x) against the radial integral of surface transforms.

    Left side: Monte Carlo of (2 pi)^-d int_B e^(-i xi.x) dxi.  Right
    side: Gauss-Legendre over r of sigma_P^((r^E*) x) r^(mu-1) dr with an
    independent sample cloud.  Both sides are complex; agreement is tested
    in modulus of the difference.
    """
    x = np.asarray(x, dtype=float)
    norm = TWO_PI ** P.dim
    hw = bounding_halfwidth(P)
    lhs_est = mc_box_integral(
        lambda pts: np.where(P(pts) < 1.0, np.exp(-1j * (pts @ x)), 0.0) / norm,
        P.dim, hw, n, seed)
    c = sample_cloud(P, n, seed + 1)
    mu = P.order
    r, wr = _radial_rule(mu, 1.0, radial_nodes)
    eta = c.eta[c.hits]
    acc = np.zeros(eta.shape[0], dtype=complex)
    for rj, wj in zip(r, wr):
        y = P.group.dilate(rj).T @ x
        acc += wj * np.exp(-1j * (eta @ y)) / norm
    w = np.zeros(c.n, dtype=complex)
    w[c.hits] = c.box_volume * mu * acc
    rhs, se_r = _mean_se_complex(w)
    diff = abs(lhs_est.value - rhs)
    tol = 3.0 * math.hypot(lhs_est.stderr, se_r)
    return AgreementReport(lhs=abs(lhs_est.value), rhs=abs(rhs),
                           stderr_lhs=lhs_est.stderr, stderr_rhs=se_r,
                           tolerance=tol, passed=diff <= tol,
                           label="ft_relation")

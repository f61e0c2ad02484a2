"""Truncated multivariate series of log(phi^(xi0+xi)/phi^(xi0)) and the
classification of maximum-modulus points by their dominant strata.

All arithmetic is exact (complex rationals) when xi0 is a quarter-turn
point, which covers every bundled example; other xi0 fall back to
high-precision floats.  Strata are measured by |beta : 2m| for a weight
tuple m, the drift is the imaginary linear term, Q/R are the leading
imaginary/real strata and Q~/R~ their tails.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .lattice import LatticeFunction
from .rational import QC, qc_ipow


class ExpansionError(ValueError):
    pass


class DecompositionError(ExpansionError):
    """The supplied weights cannot absorb every series coefficient."""


def _multi_indices(dim, max_degree):
    for total in range(max_degree + 1):
        for beta in itertools.product(range(total + 1), repeat=dim):
            if sum(beta) == total:
                yield beta


@dataclass
class PowerSeries:
    """Truncated power series; coefficients are QC (exact) or complex."""

    dim: int
    max_degree: int
    coeffs: dict = field(default_factory=dict)
    exact: bool = True

    def __post_init__(self):
        clean = {}
        for beta, c in self.coeffs.items():
            beta = tuple(int(b) for b in beta)
            if sum(beta) > self.max_degree:
                continue
            if self.exact and not isinstance(c, QC):
                c = QC.coerce(c)
            if (self.exact and c) or (not self.exact and complex(c) != 0):
                clean[beta] = c
        self.coeffs = clean

    def _zero(self):
        return QC(0, 0) if self.exact else 0j

    def __getitem__(self, beta):
        return self.coeffs.get(tuple(beta), self._zero())

    def constant_term(self):
        return self[(0,) * self.dim]

    def __add__(self, other):
        out = dict(self.coeffs)
        for b, c in other.coeffs.items():
            out[b] = out.get(b, self._zero()) + c
        return PowerSeries(self.dim, self.max_degree, out, self.exact)

    def __sub__(self, other):
        out = dict(self.coeffs)
        for b, c in other.coeffs.items():
            out[b] = out.get(b, self._zero()) - c
        return PowerSeries(self.dim, self.max_degree, out, self.exact)

    def __mul__(self, other):
        if not isinstance(other, PowerSeries):
            out = {b: c * other for b, c in self.coeffs.items()}
            return PowerSeries(self.dim, self.max_degree, out, self.exact)
        out = {}
        for b1, c1 in self.coeffs.items():
            d1 = sum(b1)
            for b2, c2 in other.coeffs.items():
                if d1 + sum(b2) > self.max_degree:
                    continue
                b = tuple(x + y for x, y in zip(b1, b2))
                prod = c1 * c2
                out[b] = out.get(b, self._zero()) + prod
        return PowerSeries(self.dim, self.max_degree, out, self.exact)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, PowerSeries):
            return NotImplemented
        keys = set(self.coeffs) | set(other.coeffs)
        return all(self[k] == other[k] for k in keys)


def taylor_at(phi: LatticeFunction, xi0, max_degree: int = 12,
              mp_dps: int = 40) -> PowerSeries:
    """Series of phi^(xi0 + xi) around xi = 0.

    Coefficient at beta is i^|beta|/beta! * sum_x phi(x) x^beta e^(i x.xi0).
    Exact when every entry of xi0 is an integer multiple of pi/2 and phi is
    exact; otherwise evaluated in mpmath precision and returned as floats.
    """
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    quarters = np.round(xi0 / (np.pi / 2)).astype(int)
    special = np.allclose(xi0, quarters * np.pi / 2, rtol=0.0, atol=1e-12)
    d = phi.dim
    if special and phi.exact:
        weights = {pt: c * qc_ipow(int(np.dot(pt, quarters)))
                   for pt, c in phi.coeffs.items()}
        coeffs = {}
        for beta in _multi_indices(d, max_degree):
            s = QC(0, 0)
            for pt, w in weights.items():
                mono = 1
                for x, b in zip(pt, beta):
                    mono *= x ** b
                if mono:
                    s = s + w * mono
            if s:
                fact = math.prod(math.factorial(b) for b in beta)
                coeffs[beta] = s * qc_ipow(sum(beta)) * QC(Fraction(1, fact), 0)
        return PowerSeries(d, max_degree, coeffs, exact=True)

    import mpmath
    with mpmath.workdps(mp_dps):
        coeffs = {}
        phases = {pt: mpmath.expjpi(mpmath.fdot(pt, xi0) / mpmath.pi)
                  for pt in phi.coeffs}
        for beta in _multi_indices(d, max_degree):
            s = mpmath.mpc(0)
            for pt, c in phi.coeffs.items():
                mono = math.prod(x ** b for x, b in zip(pt, beta))
                if mono:
                    cc = complex(c)
                    s += mpmath.mpc(cc.real, cc.imag) * phases[pt] * mono
            fact = math.prod(math.factorial(b) for b in beta)
            val = complex(s * mpmath.mpc(0, 1) ** sum(beta) / fact)
            if val != 0:
                coeffs[beta] = val
    return PowerSeries(d, max_degree, coeffs, exact=False)


def log_series(s: PowerSeries, max_degree: Optional[int] = None) -> PowerSeries:
    """Formal log of a series with constant term 1."""
    max_degree = s.max_degree if max_degree is None else max_degree
    one = QC(1, 0) if s.exact else 1 + 0j
    c0 = s.constant_term()
    if c0 != one:
        raise ExpansionError(f"log_series needs constant term 1, got {c0}")
    u = s - PowerSeries(s.dim, max_degree, {(0,) * s.dim: one}, s.exact)
    acc = PowerSeries(s.dim, max_degree, {}, s.exact)
    upow = PowerSeries(s.dim, max_degree, {(0,) * s.dim: one}, s.exact)
    for j in range(1, max_degree + 1):
        upow = upow * u
        if not upow.coeffs:
            break
        coef = QC(Fraction((-1) ** (j + 1), j), 0) if s.exact else ((-1) ** (j + 1)) / j
        acc = acc + upow * coef
    return acc


def exp_series(t: PowerSeries, max_degree: Optional[int] = None) -> PowerSeries:
    """Formal exp of a series with constant term 0."""
    max_degree = t.max_degree if max_degree is None else max_degree
    if t.constant_term() != (QC(0, 0) if t.exact else 0j):
        raise ExpansionError("exp_series needs constant term 0")
    one = QC(1, 0) if t.exact else 1 + 0j
    acc = PowerSeries(t.dim, max_degree, {(0,) * t.dim: one}, t.exact)
    tpow = PowerSeries(t.dim, max_degree, {(0,) * t.dim: one}, t.exact)
    for j in range(1, max_degree + 1):
        tpow = tpow * t
        if not tpow.coeffs:
            break
        coef = QC(Fraction(1, math.factorial(j)), 0) if t.exact else 1.0 / math.factorial(j)
        acc = acc + tpow * coef
    return acc


def gamma_series(phi: LatticeFunction, xi0, max_degree: int = 12) -> PowerSeries:
    """log(phi^(xi0+xi)/phi^(xi0)) as a truncated series; Gamma(0) = 0."""
    s = taylor_at(phi, xi0, max_degree)
    c0 = s.constant_term()
    if s.exact:
        if c0.abs2() == 0:
            raise ExpansionError("phi^(xi0) = 0")
        inv = QC(1, 0) / c0
    else:
        if complex(c0) == 0:
            raise ExpansionError("phi^(xi0) = 0")
        inv = 1.0 / complex(c0)
    return log_series(s * inv)


# ---------------------------------------------------------------------------
# classification

@dataclass
class PointClassification:
    xi0: np.ndarray
    type: str                      # positive_homogeneous | imaginary_homogeneous | unclassified
    drift: list                    # per-axis drift entries (Fraction or float)
    m: tuple
    k: Fraction
    mu: Fraction
    q_table: dict
    r_table: dict
    q_tail: dict
    r_tail: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def drift_is_zero(self) -> bool:
        return all(v == 0 for v in self.drift)

    def drift_float(self) -> np.ndarray:
        return np.array([float(v) for v in self.drift])


def _stratum(beta, m) -> Fraction:
    return sum(Fraction(b, 2 * mm) for b, mm in zip(beta, m))


def _parts(c, exact):
    if exact:
        return c.re, c.im
    z = complex(c)
    return z.real, z.imag


def decompose(gamma: PowerSeries, m, k) -> PointClassification:
    """Split the series into drift, leading strata, and tails.

    drift: imaginary linear part (the real linear part must vanish, since
    the expansion is taken at a modulus maximum); Q/Q~ from -Im at strata
    == 1 / > 1; R/R~ from -Re at strata == k / > k.  Any nonzero
    coefficient below its leading stratum invalidates the weights.
    """
    m = tuple(int(v) for v in m)
    k = Fraction(k)
    d = gamma.dim
    zero_tol = 0 if gamma.exact else 1e-12
    if abs(complex(gamma.constant_term())) > 1e-14:
        raise DecompositionError("series must vanish at 0")
    drift = [Fraction(0) if gamma.exact else 0.0] * d
    q_table, r_table, q_tail, r_tail = {}, {}, {}, {}
    for beta, c in gamma.coeffs.items():
        re, im = _parts(c, gamma.exact)
        if sum(beta) == 0:
            continue
        if sum(beta) == 1:
            if (gamma.exact and re != 0) or (not gamma.exact and abs(re) > zero_tol):
                raise DecompositionError(
                    f"nonvanishing real linear part at {beta}: {re} "
                    "(xi0 is not a modulus maximum)")
            axis = beta.index(1)
            drift[axis] = im
            continue
        w = _stratum(beta, m)
        if (gamma.exact and im != 0) or (not gamma.exact and abs(im) > zero_tol):
            if w == 1:
                q_table[beta] = -im
            elif w > 1:
                q_tail[beta] = -im
            else:
                raise DecompositionError(
                    f"imaginary coefficient at {beta} sits below stratum 1 "
                    f"(|beta:2m| = {w}) for m = {m}")
        if (gamma.exact and re != 0) or (not gamma.exact and abs(re) > zero_tol):
            if w == k:
                r_table[beta] = -re
            elif w > k:
                r_tail[beta] = -re
            else:
                raise DecompositionError(
                    f"real coefficient at {beta} sits below stratum k = {k} "
                    f"(|beta:2m| = {w}) for m = {m}")
    mu = sum(Fraction(1, 2 * mm) for mm in m)
    return PointClassification(
        xi0=np.zeros(d), type="unclassified", drift=drift, m=m, k=k, mu=mu,
        q_table=q_table, r_table=r_table, q_tail=q_tail, r_tail=r_tail)


def infer_weights(gamma: PowerSeries, search_bound: int = 6):
    """Enumerate weight tuples whose leading strata normalize to 1.

    Returns admissible (m, k) pairs ordered by sum 1/(2 m_j) descending.
    A series with no imaginary part is admitted on the k = 1 route only.
    """
    d = gamma.dim
    zero_tol = 0 if gamma.exact else 1e-12
    im_betas, re_betas = [], []
    for beta, c in gamma.coeffs.items():
        if sum(beta) < 2:
            continue
        re, im = _parts(c, gamma.exact)
        if (gamma.exact and im != 0) or (not gamma.exact and abs(im) > zero_tol):
            im_betas.append(beta)
        if (gamma.exact and re != 0) or (not gamma.exact and abs(re) > zero_tol):
            re_betas.append(beta)
    found = []
    strata_seen = []
    for m in itertools.product(range(1, search_bound + 1), repeat=d):
        w_im = min((_stratum(b, m) for b in im_betas), default=None)
        w_re = min((_stratum(b, m) for b in re_betas), default=None)
        strata_seen.append((m, w_im, w_re))
        if w_re is None:
            continue
        if w_im is None:
            if w_re == 1:
                found.append((m, Fraction(1)))
            continue
        if w_im == 1 and w_re >= 1:
            found.append((m, w_re))
    if not found:
        raise ExpansionError(f"no admissible weights up to {search_bound}; "
                             f"strata: {strata_seen}")
    found.sort(key=lambda mk: (-sum(Fraction(1, 2 * mm) for mm in mk[0]), mk[0]))
    return found


def weighted_sphere_grid(m, n: int, seed: int = 0) -> np.ndarray:
    """Quasi-uniform points on {sum |xi_j|^(2 m_j) = 1}."""
    from .homogeneous import direction_grid
    dirs = direction_grid(len(m), n, seed)
    powers = np.array([2 * mm for mm in m], dtype=float)
    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), 1.0)
    val = np.abs(dirs) ** powers[None, :]
    for _ in range(60):
        s = (val * hi[:, None] ** powers[None, :]).sum(axis=1)
        if np.all(s >= 1):
            break
        hi = np.where(s < 1, hi * 2, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        s = (val * mid[:, None] ** powers[None, :]).sum(axis=1)
        lo = np.where(s < 1, mid, lo)
        hi = np.where(s < 1, hi, mid)
    t = 0.5 * (lo + hi)
    return dirs * t[:, None]


def poly_eval(table: dict, X: np.ndarray) -> np.ndarray:
    """Evaluate a multi-index coefficient table at rows of X."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(len(X))
    for beta, coef in table.items():
        out += float(coef) * np.prod(X ** np.asarray(beta, dtype=float)[None, :], axis=1)
    return out


def classify(gamma: PowerSeries, m, k, grid_n: int = 10 ** 4,
             threshold: float = 1e-9, seed: int = 0) -> PointClassification:
    """Decide the type of a decomposed expansion on a weighted sphere grid.

    k = 1: positive homogeneous when R is positive definite there.
    k > 1: imaginary homogeneous when both |Q| and R stay positive.
    Anything else comes back 'unclassified' with the measured minima.
    """
    pc = decompose(gamma, m, k)
    grid = weighted_sphere_grid(pc.m, grid_n, seed)
    r_min = float(poly_eval(pc.r_table, grid).min()) if pc.r_table else 0.0
    q_min = float(np.abs(poly_eval(pc.q_table, grid)).min()) if pc.q_table else 0.0
    pc.diagnostics = {"min_R_on_grid": r_min, "min_absQ_on_grid": q_min,
                      "grid_points": len(grid)}
    if pc.k == 1:
        if r_min > threshold:
            pc.type = "positive_homogeneous"
    else:
        if r_min > threshold and q_min > threshold:
            pc.type = "imaginary_homogeneous"
    return pc


def classify_point(phi: LatticeFunction, xi0, max_degree: int = 12,
                   search_bound: int = 6, grid_n: int = 10 ** 4,
                   seed: int = 0) -> PointClassification:
    """Full pipeline at one maximum: series, weight inference, grid test."""
    gamma = gamma_series(phi, xi0, max_degree)
    last = None
    for m, k in infer_weights(gamma, search_bound):
        try:
            pc = classify(gamma, m, k, grid_n=grid_n, seed=seed)
        except DecompositionError:
            continue
        pc.xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
        if pc.type != "unclassified":
            return pc
        last = pc
    if last is None:
        raise ExpansionError(f"no weight choice decomposes the series at {xi0}")
    return last


def mu_phi(classifications) -> Fraction:
    """min of the homogeneous orders; every point must be classified."""
    if not classifications:
        raise ExpansionError("empty classification list")
    for pc in classifications:
        if pc.type == "unclassified":
            raise ExpansionError(f"unclassified point {pc.xi0}: {pc.diagnostics}")
    return min(pc.mu for pc in classifications)


# ---------------------------------------------------------------------------
# serialization

def classification_to_text(pc: PointClassification) -> str:
    lines = [
        f"xi0 {' '.join(repr(float(v)) for v in pc.xi0)}",
        f"type {pc.type}",
        f"drift {' '.join(str(v) for v in pc.drift)}",
        f"m {' '.join(str(v) for v in pc.m)}",
        f"k {pc.k}",
        f"mu {pc.mu}",
    ]
    for name, table in (("Q", pc.q_table), ("R", pc.r_table),
                        ("Qtail", pc.q_tail), ("Rtail", pc.r_tail)):
        for beta in sorted(table):
            f = Fraction(table[beta]) if not isinstance(table[beta], float) \
                else Fraction(table[beta]).limit_denominator(10 ** 12)
            idx = " ".join(str(b) for b in beta)
            lines.append(f"{name} {idx} {f.numerator} {f.denominator}")
    return "\n".join(lines) + "\n"


def classification_from_text(text: str) -> PointClassification:
    fields = {"Q": {}, "R": {}, "Qtail": {}, "Rtail": {}}
    meta = {}
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        key = parts[0]
        if key in fields:
            beta = tuple(int(v) for v in parts[1:-2])
            fields[key][beta] = Fraction(int(parts[-2]), int(parts[-1]))
        else:
            meta[key] = parts[1:]
    return PointClassification(
        xi0=np.array([float(v) for v in meta["xi0"]]),
        type=meta["type"][0],
        drift=[Fraction(v) for v in meta["drift"]],
        m=tuple(int(v) for v in meta["m"]),
        k=Fraction(meta["k"][0]),
        mu=Fraction(meta["mu"][0]),
        q_table=fields["Q"], r_table=fields["R"],
        q_tail=fields["Qtail"], r_tail=fields["Rtail"])

"""Finitely supported complex functions on Z^d and their convolution powers.

Exact coefficients are complex rationals (QC); the fft path works in
float64 on a padded grid.  The Fourier transform here is the trig
polynomial sum_x phi(x) e^(i x.xi) on the torus (-pi, pi]^d.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

from . import _fastconv
from .rational import QC, qc_ipow


class LatticeError(ValueError):
    pass


class DegenerateOmega(LatticeError):
    """|phi^| has (numerically) a continuum of maxima, not finitely many."""


MEMORY_GUARD_CELLS = 2 ** 30


def _lcm(a: int, b: int) -> int:
    return a // math.gcd(a, b) * b


@dataclass
class LatticeFunction:
    """Sparse map from integer points to coefficients.

    exact=True stores QC values; exact=False stores Python complex.
    Explicit zeros are dropped on construction.
    """

    dim: int
    coeffs: dict
    exact: bool = True

    def __post_init__(self):
        clean = {}
        for pt, c in self.coeffs.items():
            pt = tuple(int(v) for v in pt)
            if len(pt) != self.dim:
                raise LatticeError(f"point {pt} has wrong dimension")
            if self.exact:
                c = QC.coerce(c) if not isinstance(c, QC) else c
                if c:
                    clean[pt] = c
            else:
                c = complex(c)
                if c != 0:
                    clean[pt] = c
        self.coeffs = clean

    # -- basic structure ---------------------------------------------------
    def __len__(self):
        return len(self.coeffs)

    def support_box(self):
        if not self.coeffs:
            return [(0, 0)] * self.dim
        return [(min(p[j] for p in self.coeffs), max(p[j] for p in self.coeffs))
                for j in range(self.dim)]

    def diameters(self):
        return [hi - lo for lo, hi in self.support_box()]

    def l1_norm(self) -> float:
        return float(sum(abs(complex(c)) for c in self.coeffs.values()))

    def total_mass(self):
        if self.exact:
            s = QC(0, 0)
            for c in self.coeffs.values():
                s = s + c
            return s
        return sum(self.coeffs.values(), 0j)

    def to_float(self) -> "LatticeFunction":
        if not self.exact:
            return self
        return LatticeFunction(self.dim, {p: complex(c) for p, c in self.coeffs.items()},
                               exact=False)

    def __getitem__(self, pt):
        pt = tuple(int(v) for v in pt)
        if pt in self.coeffs:
            return self.coeffs[pt]
        return QC(0, 0) if self.exact else 0j

    # -- exact internals ---------------------------------------------------
    def _gaussian_parts(self):
        """(denominator, {pt: (re_num, im_num)}) over a common denominator."""
        if not self.exact:
            raise LatticeError("float-valued function has no exact parts")
        den = 1
        for c in self.coeffs.values():
            den = _lcm(den, _lcm(c.re.denominator, c.im.denominator))
        nums = {}
        for pt, c in self.coeffs.items():
            nums[pt] = (int(c.re * den), int(c.im * den))
        return den, nums

    @staticmethod
    def _from_gaussian(dim, den, nums) -> "LatticeFunction":
        coeffs = {pt: QC(Fraction(re, den), Fraction(im, den))
                  for pt, (re, im) in nums.items()}
        return LatticeFunction(dim, coeffs, exact=True)


def delta(dim: int, at=None) -> LatticeFunction:
    at = tuple([0] * dim) if at is None else tuple(at)
    return LatticeFunction(dim, {at: QC(1, 0)})


def from_pairs(dim: int, pairs, exact: bool = True) -> LatticeFunction:
    return LatticeFunction(dim, dict(pairs), exact=exact)


# ---------------------------------------------------------------------------
# convolution

def convolve(phi: LatticeFunction, psi: LatticeFunction) -> LatticeFunction:
    if phi.dim != psi.dim:
        raise LatticeError(f"dimension mismatch {phi.dim} vs {psi.dim}")
    if phi.exact and psi.exact:
        den_a, na = phi._gaussian_parts()
        den_b, nb = psi._gaussian_parts()
        prod = _fastconv.convolve_gaussian(na, nb)
        return LatticeFunction._from_gaussian(phi.dim, den_a * den_b, prod)
    a, b = phi.to_float(), psi.to_float()
    out = {}
    small, big = (a, b) if len(a) <= len(b) else (b, a)
    for ps, cs in small.coeffs.items():
        for pb, cb in big.coeffs.items():
            pt = tuple(ps[j] + pb[j] for j in range(a.dim))
            out[pt] = out.get(pt, 0j) + cs * cb
    return LatticeFunction(a.dim, out, exact=False)


def _square(phi: LatticeFunction) -> LatticeFunction:
    if phi.exact:
        den, nums = phi._gaussian_parts()
        return LatticeFunction._from_gaussian(phi.dim, den * den,
                                              _fastconv.square_gaussian(nums))
    return convolve(phi, phi)


def conv_power(phi: LatticeFunction, n: int, method: str = "direct",
               grid_padding=None, window=None,
               allow_truncation: bool = False) -> LatticeFunction:
    """The n-fold convolution power.

    direct: exact square-and-multiply on rational coefficients.
    fft: pointwise n-th power of the padded-grid DFT; float64 output.  The
    grid must resolve the full support of phi^(n) unless truncation is
    explicitly requested, in which case values are periodized (aliased)
    and a window must be supplied.
    """
    if n < 1:
        raise LatticeError("n must be >= 1")
    if method == "direct":
        result = None
        base = phi
        k = n
        while k:
            if k & 1:
                result = base if result is None else convolve(result, base)
            k >>= 1
            if k:
                base = _square(base)
        return result
    if method == "fft":
        return _conv_power_fft(phi, n, grid_padding, window, allow_truncation)
    raise LatticeError(f"unknown method {method!r}")


def _next_pow2(v: int) -> int:
    return 1 << max(0, (int(v) - 1)).bit_length()


def _conv_power_fft(phi, n, grid_padding, window, allow_truncation):
    box = phi.support_box()
    need = [n * (hi - lo) + 1 for lo, hi in box]
    if grid_padding is None:
        grid = [_next_pow2(v) for v in need]
    elif np.isscalar(grid_padding):
        grid = [int(grid_padding)] * phi.dim
    else:
        grid = [int(g) for g in grid_padding]
    cells = math.prod(grid)
    if cells > MEMORY_GUARD_CELLS:
        raise LatticeError(
            f"fft grid of {cells} cells exceeds the guard; pass grid_padding "
            f"and a window to accept truncation")
    truncated = any(g < v for g, v in zip(grid, need))
    if truncated and not allow_truncation:
        raise LatticeError(
            f"fft grid {grid} is smaller than the support requirement {need}; "
            f"pass allow_truncation=True (values will be periodized) or enlarge")
    arr = grid_embed(phi, grid)
    spec = np.fft.fftn(arr)
    vals = np.fft.ifftn(spec ** n)
    if window is None:
        lo = [n * b[0] for b in box]
        hi = [n * b[1] for b in box]
        if truncated:
            raise LatticeError("truncated fft power needs an explicit window")
    else:
        lo = [int(w[0]) for w in window]
        hi = [int(w[1]) for w in window]
    out = {}
    for pt in np.ndindex(*[h - l + 1 for l, h in zip(lo, hi)]):
        p = tuple(pt[j] + lo[j] for j in range(phi.dim))
        v = complex(vals[tuple(p[j] % grid[j] for j in range(phi.dim))])
        if v != 0:
            out[p] = v
    return LatticeFunction(phi.dim, out, exact=False)


def grid_embed(phi: LatticeFunction, grid) -> np.ndarray:
    arr = np.zeros(tuple(grid), dtype=complex)
    for pt, c in phi.to_float().coeffs.items():
        arr[tuple(p % g for p, g in zip(pt, grid))] += c
    return arr


# ---------------------------------------------------------------------------
# Fourier transform

def fourier_eval(phi: LatticeFunction, xi) -> complex:
    """phi^(xi) = sum phi(x) e^(i x.xi), compensated summation."""
    xi = np.asarray(xi, dtype=float)
    re_terms = []
    im_terms = []
    for pt, c in phi.coeffs.items():
        z = complex(c) * np.exp(1j * float(np.dot(pt, xi)))
        re_terms.append(z.real)
        im_terms.append(z.imag)
    return complex(math.fsum(re_terms), math.fsum(im_terms))


def fourier_grid(phi: LatticeFunction, axes) -> np.ndarray:
    """phi^ on a tensor grid; axes is a list of 1-d arrays of angles."""
    shape = tuple(len(a) for a in axes)
    out = np.zeros(shape, dtype=complex)
    for pt, c in phi.coeffs.items():
        factors = [np.exp(1j * pt[j] * np.asarray(axes[j])) for j in range(phi.dim)]
        out += complex(c) * reduce(np.multiply.outer, factors)
    return out


def fourier_eval_exact(phi: LatticeFunction, quarter_turns) -> QC:
    """Exact phi^ at xi = (pi/2) * k for an integer vector k."""
    if not phi.exact:
        raise LatticeError("exact evaluation needs exact coefficients")
    total = QC(0, 0)
    for pt, c in phi.coeffs.items():
        total = total + c * qc_ipow(int(np.dot(pt, quarter_turns)))
    return total


@dataclass
class TrigPolynomial:
    """Callable view of phi^ as a 2*pi-periodic function."""

    backing: LatticeFunction

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.ndim == 1:
            return fourier_eval(self.backing, xi)
        out = np.zeros(len(xi), dtype=complex)
        for pt, c in self.backing.coeffs.items():
            out += complex(c) * np.exp(1j * (xi @ np.asarray(pt, dtype=float)))
        return out


# ---------------------------------------------------------------------------
# maximum-modulus set

@dataclass
class MaxModulusSet:
    points: list                 # list of length-d float arrays
    residuals: list              # |1 - |phi^(point)||
    torus_shift: np.ndarray      # xi_phi: the torus is (-pi, pi]^d + shift
    certified: list = field(default_factory=list)  # exact |phi^|=1 proofs

    def __len__(self):
        return len(self.points)


def _torus_dist(a, b):
    d = np.abs(np.asarray(a) - np.asarray(b)) % (2 * np.pi)
    return float(np.max(np.minimum(d, 2 * np.pi - d)))


def _canonical(xi):
    """Map angles into (-pi, pi]."""
    out = (np.asarray(xi, dtype=float) + np.pi) % (2 * np.pi) - np.pi
    out[np.isclose(out, -np.pi, atol=1e-12)] = np.pi
    return out


def find_omega(phi: LatticeFunction, coarse_per_axis: int = 64,
               refine_tol: float = 1e-13, residual_tol: float = 1e-9,
               merge_tol: float = 1e-6) -> MaxModulusSet:
    """Locate the points of the torus where |phi^| attains its sup of 1.

    Coarse scan, Newton ascent on |phi^|^2 from grid local maxima, plateau
    clustering, and snapping onto quarter-turn points when that is
    certified exactly.  Raises if sup exceeds 1 beyond tolerance (input
    not normalized) or if maxima are not isolated (e.g. a delta function).
    """
    d = phi.dim
    axes = [np.linspace(-np.pi, np.pi, coarse_per_axis, endpoint=False) +
            np.pi / coarse_per_axis for _ in range(d)]
    fgrid = fourier_grid(phi, axes)
    mod2 = np.abs(fgrid) ** 2
    top = float(mod2.max())
    if top > (1.0 + 1e-9) ** 2:
        raise LatticeError(f"sup|phi^| = {math.sqrt(top):.12f} > 1: input not normalized")
    near = mod2 > (1.0 - 1e-3) ** 2
    if near.mean() > 0.25:
        raise DegenerateOmega("|phi^| is ~1 on a large fraction of the torus; "
                              "not finitely many maxima")

    spacing = 2 * np.pi / coarse_per_axis
    starts = []
    for idx in zip(*np.nonzero(mod2 >= (1.0 - 0.01) ** 2)):
        if _is_grid_local_max(mod2, idx):
            starts.append(np.array([axes[j][idx[j]] for j in range(d)]))
    if not starts:
        raise LatticeError("no grid point reaches |phi^| > 0.99; nothing to refine")

    converged = [_ascend(phi, s, spacing, refine_tol) for s in starts]
    clusters = _cluster([c for c in converged if c is not None], 2.5 * spacing)
    points, residuals, certified = [], [], []
    for cluster in clusters:
        rep = max(cluster, key=lambda p: abs(fourier_eval(phi, p)))
        rep, cert = _snap_special(phi, rep, residual_tol)
        resid = abs(1.0 - abs(fourier_eval(phi, rep)))
        if resid <= residual_tol:
            points.append(_canonical(rep))
            residuals.append(resid)
            certified.append(cert)
    if not points:
        raise LatticeError("ascent found no point with |phi^| within tolerance of 1")
    dedup = []
    for p, r, c in zip(points, residuals, certified):
        if all(_torus_dist(p, q[0]) > merge_tol for q in dedup):
            dedup.append((p, r, c))
    points = [p for p, _, _ in dedup]
    residuals = [r for _, r, _ in dedup]
    certified = [c for _, _, c in dedup]
    shift = _choose_shift(points, d)
    return MaxModulusSet(points=points, residuals=residuals,
                         torus_shift=shift, certified=certified)


def _is_grid_local_max(mod2, idx):
    here = mod2[idx]
    for j in range(mod2.ndim):
        for step in (-1, 1):
            nb = list(idx)
            nb[j] = (nb[j] + step) % mod2.shape[j]
            if mod2[tuple(nb)] > here:
                return False
    return True


def _fourier_derivs(phi, xi):
    f = 0j
    grad = np.zeros(phi.dim, dtype=complex)
    hess = np.zeros((phi.dim, phi.dim), dtype=complex)
    for pt, c in phi.coeffs.items():
        x = np.asarray(pt, dtype=float)
        z = complex(c) * np.exp(1j * float(x @ xi))
        f += z
        grad += 1j * x * z
        hess += -np.outer(x, x) * z
    return f, grad, hess


def _ascend(phi, xi0, trust, tol, max_iter=120):
    """Safeguarded Newton ascent on F = |phi^|^2."""
    xi = np.array(xi0, dtype=float)

    def fval(x):
        return abs(fourier_eval(phi, x)) ** 2

    fx = fval(xi)
    for _ in range(max_iter):
        f, grad_c, hess_c = _fourier_derivs(phi, xi)
        grad = 2 * np.real(np.conj(f) * grad_c)
        hess = 2 * np.real(np.outer(grad_c, np.conj(grad_c)).T +
                           np.conj(f) * hess_c)
        if np.linalg.norm(grad) < tol:
            return xi
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = grad
        if np.dot(step, grad) <= 0:
            step = grad
        norm = np.linalg.norm(step)
        if norm > trust:
            step *= trust / norm
        moved = False
        for _ in range(40):
            cand = xi + step
            fc = fval(cand)
            if fc > fx:
                xi, fx = cand, fc
                moved = True
                break
            step *= 0.5
            if np.linalg.norm(step) < 1e-16:
                break
        if not moved:
            return xi
    return xi


def _cluster(points, tol):
    clusters = []
    for p in points:
        placed = False
        for cl in clusters:
            if any(_torus_dist(p, q) <= tol for q in cl):
                cl.append(p)
                placed = True
                break
        if not placed:
            clusters.append([p])
    merged = True
    while merged:
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if any(_torus_dist(p, q) <= tol for p in clusters[i] for q in clusters[j]):
                    clusters[i].extend(clusters.pop(j))
                    merged = True
                    break
            if merged:
                break
    return clusters


def _snap_special(phi, xi, residual_tol):
    """Snap onto the nearest quarter-turn lattice point when certified."""
    quarter = np.round(np.asarray(xi) / (np.pi / 2)).astype(int)
    snapped = quarter * (np.pi / 2)
    if float(np.max(np.abs(snapped - xi))) > np.pi / 4 + 1e-9:
        return np.asarray(xi), False
    if phi.exact:
        val = fourier_eval_exact(phi, quarter)
        if val.abs2() == 1:
            return snapped, True
    if abs(1.0 - abs(fourier_eval(phi, snapped))) <= residual_tol:
        return snapped, False
    return np.asarray(xi), False


def _choose_shift(points, d):
    shift = np.zeros(d)
    candidates = np.array([0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi])
    for j in range(d):
        coords = np.array([p[j] for p in points])
        best, best_margin = 0.0, -1.0
        for s in candidates:
            rel = (coords - s + np.pi) % (2 * np.pi) - np.pi
            margin = float(np.min(np.pi - np.abs(rel)))
            if margin > best_margin + 1e-12:
                best, best_margin = s, margin
        shift[j] = best
    return shift


# ---------------------------------------------------------------------------
# inversion check

def inversion_check(phi: LatticeFunction, n: int, x_list,
                    quad_nodes=None) -> dict:
    """Compare conv_power against torus quadrature of phi^^n e^(-i x.xi).

    The trapezoid rule on a full period is exact for trig polynomials once
    the node count per axis exceeds the bandwidth, so the residual is
    roundoff-level by construction.
    """
    x_list = [tuple(int(v) for v in x) for x in np.atleast_2d(x_list)]
    box = phi.support_box()
    if quad_nodes is None:
        quad_nodes = [n * (hi - lo) + 2 * max(abs(x[j]) for x in x_list) + 1
                      for j, (lo, hi) in enumerate(box)]
    elif np.isscalar(quad_nodes):
        quad_nodes = [int(quad_nodes)] * phi.dim
    axes = [np.linspace(-np.pi, np.pi, int(m), endpoint=False) for m in quad_nodes]
    fn = fourier_grid(phi, axes) ** n
    power = conv_power(phi, n, method="direct")
    rows = []
    worst = 0.0
    for x in x_list:
        phase = reduce(np.multiply.outer,
                       [np.exp(-1j * x[j] * axes[j]) for j in range(phi.dim)])
        quad = complex((fn * phase).mean())
        direct = complex(power[x])
        resid = abs(quad - direct)
        worst = max(worst, resid)
        rows.append({"x": x, "quadrature": quad, "direct": direct, "residual": resid})
    return {"rows": rows, "max_residual": worst, "nodes": list(quad_nodes)}

"""One-parameter dilation groups r^E and their generators.

A matrix E generates the group T_r = exp((ln r) E).  The group is
contracting when every eigenvalue of E has positive real part; those are
the groups positive homogeneous functions dilate along.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DilationError(ValueError):
    pass


class IndeterminateSpectrum(DilationError):
    """Eigenvalue solver failure: contracting status cannot be decided."""


def _mat_exp_with_det(a: np.ndarray):
    """exp(A) by scaling-and-squaring, plus det(exp A) via the core.

    The input is scaled by 2**s so its 1-norm is at most 0.5, the series
    is summed to machine-precision convergence, and the result is squared
    s times.  The determinant is det(core)**(2**s): the core is always
    well conditioned, so this stays accurate even when exp(A) itself is
    too ill conditioned for a meaningful LU determinant.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DilationError(f"mat_exp needs a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DilationError("mat_exp: non-finite entries")
    d = a.shape[0]
    norm = np.linalg.norm(a, 1)
    s = 0 if norm <= 0.5 else int(math.ceil(math.log2(norm / 0.5)))
    b = a / (2.0 ** s)
    result = np.eye(d)
    term = np.eye(d)
    for k in range(1, 40):
        term = term @ b / k
        result = result + term
        if np.linalg.norm(term, 1) < 1e-18 * np.linalg.norm(result, 1):
            break
    core_logdet = float(np.linalg.slogdet(result)[1])
    for _ in range(s):
        result = result @ result
    return result, math.exp(core_logdet * 2 ** s)


def mat_exp(a: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring with a Taylor core."""
    return _mat_exp_with_det(a)[0]


@dataclass(frozen=True)
class Endomorphism:
    """A d x d real matrix viewed as the generator of a dilation group."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DilationError(f"square matrix required, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise DilationError("non-finite entries")
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "_eig", None)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    @property
    def eigenvalues(self) -> np.ndarray:
        if self._eig is None:
            try:
                ev = np.linalg.eigvals(self.entries)
            except np.linalg.LinAlgError as exc:
                raise IndeterminateSpectrum(str(exc)) from exc
            object.__setattr__(self, "_eig", ev)
        return self._eig

    def char_poly_residual(self) -> float:
        """max_i |det(E - lambda_i I)|, a sanity check on the solver."""
        return max(
            abs(np.linalg.det(self.entries - lam * np.eye(self.dim)))
            for lam in self.eigenvalues
        )

    def __mul__(self, c: float) -> "Endomorphism":
        return Endomorphism(self.entries * c)

    __rmul__ = __mul__

    def __truediv__(self, c: float) -> "Endomorphism":
        return Endomorphism(self.entries / c)

    def __neg__(self) -> "Endomorphism":
        return Endomorphism(-self.entries)


def as_endomorphism(e) -> Endomorphism:
    if isinstance(e, Endomorphism):
        return e
    return Endomorphism(np.asarray(e, dtype=float))


def diag_exponent(weights) -> Endomorphism:
    """Endomorphism diag(1/n_1, ..., 1/n_d) for a weight tuple n."""
    return Endomorphism(np.diag([1.0 / float(w) for w in weights]))


@dataclass
class DilationGroup:
    """The one-parameter group r^E together with fast batched application."""

    generator: Endomorphism
    _diag: np.ndarray | None = field(default=None, repr=False)
    _eigvecs: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.generator = as_endomorphism(self.generator)
        e = self.generator.entries
        if np.count_nonzero(e - np.diag(np.diagonal(e))) == 0:
            self._diag = np.diagonal(e).copy()
        else:
            try:
                lam, v = np.linalg.eig(e)
                if np.linalg.cond(v) < 1e8:
                    self._eigvecs = (lam, v, np.linalg.inv(v))
            except np.linalg.LinAlgError:
                pass

    @property
    def dim(self) -> int:
        return self.generator.dim

    def dilate(self, r: float) -> np.ndarray:
        """The matrix r^E = exp((ln r) E); requires r > 0."""
        if not (r > 0):
            raise DilationError(f"dilate needs r > 0, got {r}")
        if self._diag is not None:
            return np.diag(np.power(float(r), self._diag))
        return mat_exp(math.log(r) * self.generator.entries)

    def apply(self, r: float, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float) @ self.dilate(r).T

    def apply_scales(self, r: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Rows of the output are r_i^E x_i for per-sample scales r_i.

        Diagonal generators use elementwise powers; diagonalizable ones an
        eigenbasis; anything defective falls back to per-sample mat_exp.
        """
        r = np.asarray(r, dtype=float)
        x = np.asarray(x, dtype=float)
        if np.any(r <= 0):
            raise DilationError("apply_scales needs strictly positive scales")
        if self._diag is not None:
            return x * np.power(r[:, None], self._diag[None, :])
        if self._eigvecs is not None:
            lam, v, vinv = self._eigvecs
            y = x.astype(complex) @ vinv.T
            y *= np.exp(np.log(r)[:, None] * lam[None, :])
            out = y @ v.T
            return np.ascontiguousarray(out.real)
        e = self.generator.entries
        out = np.empty_like(x)
        for i, ri in enumerate(r):
            out[i] = mat_exp(math.log(ri) * e) @ x[i]
        return out


def dilate(group: DilationGroup | Endomorphism | np.ndarray, r: float) -> np.ndarray:
    g = group if isinstance(group, DilationGroup) else DilationGroup(as_endomorphism(group))
    return g.dilate(r)


_SPECTRAL_TOL = 1e-10


@dataclass(frozen=True)
class ContractingReport:
    contracting: bool
    min_real_part: float
    probe_norm: float  # max |r^E eta| over a unit grid at r = 1e-6
    char_poly_residual: float


def is_contracting(e) -> ContractingReport:
    """Decide whether {r^E} is contracting.

    Decision rule: contracting iff min Re(spec E) > 1e-10.  A numeric
    probe of |r^E eta| at r=1e-6 over a unit-vector grid is attached as a
    diagnostic; solver failure raises IndeterminateSpectrum rather than
    returning a silent boolean.
    """
    e = as_endomorphism(e)
    ev = e.eigenvalues
    min_re = float(np.min(ev.real))
    group = DilationGroup(e)
    t = mat_exp(math.log(1e-6) * e.entries)
    grid = _unit_grid(e.dim, 64)
    probe = float(np.max(np.linalg.norm(grid @ t.T, axis=1)))
    return ContractingReport(
        contracting=min_re > _SPECTRAL_TOL,
        min_real_part=min_re,
        probe_norm=probe,
        char_poly_residual=e.char_poly_residual(),
    )


def _unit_grid(d: int, n: int, seed: int = 0) -> np.ndarray:
    """Deterministic quasi-uniform points on the Euclidean unit sphere."""
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    axes = np.concatenate([np.eye(d), -np.eye(d)])
    return np.concatenate([axes, pts])


@dataclass(frozen=True)
class GroupLawReport:
    identity_residual: float
    product_residual: float
    inverse_residual: float
    determinant_residual: float

    @property
    def max_residual(self) -> float:
        return max(self.identity_residual, self.product_residual,
                   self.inverse_residual, self.determinant_residual)

    def passes(self, tol: float = 1e-9) -> bool:
        return self.max_residual <= tol


def group_laws_report(e, samples) -> GroupLawReport:
    """Residuals of 1^E=I, (st)^E=s^E t^E, (t^E)^-1=t^-E, det t^E=t^tr E.

    Product and inverse residuals are normalized by the factor norms (the
    backward-relative scaling; dividing by the result norm would just
    measure the conditioning of the cancellation, not of the law).  The
    determinant uses the structurally computed det of the exponential.
    """
    e = as_endomorphism(e)
    g = DilationGroup(e)
    d = e.dim
    ident = np.linalg.norm(g.dilate(1.0) - np.eye(d)) / math.sqrt(d)
    prod_res = inv_res = det_res = 0.0
    for s, t in samples:
        if not (s > 0 and t > 0):
            raise DilationError("group law samples need s, t > 0")
        ts, tt, tst = g.dilate(s), g.dilate(t), g.dilate(s * t)
        prod_res = max(prod_res, np.linalg.norm(tst - ts @ tt) /
                       (np.linalg.norm(ts) * np.linalg.norm(tt)))
        tinv = g.dilate(1.0 / t)
        inv_res = max(inv_res,
                      np.linalg.norm(tt @ tinv - np.eye(d)) /
                      (np.linalg.norm(tt) * np.linalg.norm(tinv)))
        _, det_t = _mat_exp_with_det(math.log(t) * e.entries)
        want = t ** e.trace
        det_res = max(det_res, abs(det_t - want) / abs(want))
    return GroupLawReport(ident, prod_res, inv_res, det_res)


def scale_to_unit_sphere(group: DilationGroup, x: np.ndarray,
                         tol: float = 1e-12) -> float:
    """The r > 0 with |r^-E x| = 1, found by bracketing and bisection."""
    x = np.asarray(x, dtype=float)
    if np.allclose(x, 0):
        raise DilationError("x must be nonzero")

    def f(r):
        return float(np.linalg.norm(group.apply(1.0 / r, x))) - 1.0

    # contracting group: f > 0 for small r, f < 0 for large r
    lo = hi = 1.0
    for _ in range(200):
        if f(lo) > 0:
            break
        lo /= 2.0
    for _ in range(200):
        if f(hi) < 0:
            break
        hi *= 2.0
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi / lo - 1.0 < tol:
            break
    return math.sqrt(lo * hi)

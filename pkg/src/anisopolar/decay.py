"""Sup-norm decay of convolution powers and the oscillatory-integral checks.

The harness verifies the hypotheses at every maximum-modulus point (each
must classify, and imaginary-type points need zero drift and order < 1),
then measures f(n) = max over a box of |phi^(n)| and fits the log-log
slope against the predicted -mu.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import expansion, lattice
from .dilation import DilationGroup, diag_exponent
from .homogeneous import semi_elliptic
from .lattice import LatticeFunction


class GateError(ValueError):
    """The decay theorem's hypotheses fail for this input."""


@dataclass
class DecayRecord:
    n: int
    f_n: float
    method: str
    runtime_ms: int


@dataclass
class OscillatoryInstance:
    """Phase/amplitude pair with certified derivative bounds.

    lambda1, lambda2 bound |f'| and |f''| from below on [a, b]; sup_g and
    l1_gprime bound the amplitude norms from above, so the inequality
    tested in van_der_corput_check is implied by the analytic one.
    """

    phase: Callable[[np.ndarray], np.ndarray]
    amplitude: Callable[[np.ndarray], np.ndarray]
    a: float
    b: float
    lambda1: float
    lambda2: float
    sup_g: float
    l1_gprime: float
    label: str = ""


# ---------------------------------------------------------------------------
# hypothesis gate

def hypothesis_gate(phi: LatticeFunction, coarse_per_axis: int = 64,
                    max_degree: int = 12):
    """find_omega + classify everything + check the imaginary-type side
    conditions.  Returns (omega, classifications, mu_phi)."""
    omega = lattice.find_omega(phi, coarse_per_axis=coarse_per_axis)
    pcs = []
    for pt in omega.points:
        pc = expansion.classify_point(phi, pt, max_degree=max_degree)
        if pc.type == "unclassified":
            raise GateError(f"point {pt} did not classify: {pc.diagnostics}")
        if pc.type == "imaginary_homogeneous":
            if not pc.drift_is_zero:
                raise GateError(f"imaginary-type point {pt} has nonzero drift "
                                f"{pc.drift}; the estimate does not apply")
            if not pc.mu < 1:
                raise GateError(f"imaginary-type point {pt} has order {pc.mu} >= 1")
        pcs.append(pc)
    return omega, pcs, expansion.mu_phi(pcs)


# ---------------------------------------------------------------------------
# decay curves

def _box_max(vals: np.ndarray, k_box: Optional[int]) -> float:
    if k_box is None:
        return float(np.abs(vals).max())
    idx = [np.arange(-k_box, k_box + 1) % m for m in vals.shape]
    return float(np.abs(vals[np.ix_(*idx)]).max())


def decay_curve(phi: LatticeFunction, k_box: Optional[int], n_schedule,
                method: str = "fft", grid_cap: int = 2048,
                skip_gate: bool = False) -> list:
    """f(n) = max over [-k, k]^d of |phi^(n)| for each scheduled n.

    The fft path reuses one padded-grid transform for the whole schedule;
    grids are capped at grid_cap per axis, which periodizes the far tail
    of phi^(n) once n * diameter exceeds the cap (use aliasing_probe to
    measure the effect; it is far below the box maxima for the bundled
    examples).
    """
    if not skip_gate:
        hypothesis_gate(phi)
    schedule = sorted(int(n) for n in n_schedule)
    if schedule[0] < 1:
        raise GateError("schedule entries must be positive")
    records = []
    if method == "fft":
        diam = max(phi.diameters())
        m = min(_next_pow2(schedule[-1] * diam + 1), grid_cap)
        grid = [m] * phi.dim
        spec = np.fft.fftn(lattice.grid_embed(phi, grid))
        for n in schedule:
            t0 = time.perf_counter()
            vals = np.fft.ifftn(spec ** n)
            f_n = _box_max(vals, k_box)
            records.append(DecayRecord(n, f_n, "fft",
                                       int(1000 * (time.perf_counter() - t0))))
    elif method == "direct":
        cache = {1: phi}
        for n in schedule:
            t0 = time.perf_counter()
            power = _cached_power(phi, n, cache)
            f_n = 0.0
            for pt, c in power.coeffs.items():
                if k_box is None or all(abs(v) <= k_box for v in pt):
                    f_n = max(f_n, abs(complex(c)))
            records.append(DecayRecord(n, f_n, "direct",
                                       int(1000 * (time.perf_counter() - t0))))
    else:
        raise GateError(f"unknown method {method!r}")
    return records


def _next_pow2(v: int) -> int:
    return 1 << max(0, int(v) - 1).bit_length()


def _cached_power(phi, n, cache):
    """Square-and-multiply with shared power-of-two squarings."""
    if n in cache:
        return cache[n]
    p = 1
    while 2 * p <= n:
        if 2 * p not in cache:
            cache[2 * p] = lattice._square(cache[p])
        p *= 2
    result = cache[p]
    rem = n - p
    while rem:
        q = 1
        while 2 * q <= rem:
            q *= 2
        result = lattice.convolve(result, cache[q])
        rem -= q
    cache[n] = result
    return result


def aliasing_probe(phi: LatticeFunction, n: int, k_box: int,
                   grid_cap: int = 2048) -> float:
    """Relative change of f(n) when the capped fft grid is halved."""
    a = decay_curve(phi, k_box, [n], method="fft", grid_cap=grid_cap,
                    skip_gate=True)[0].f_n
    b = decay_curve(phi, k_box, [n], method="fft", grid_cap=grid_cap // 2,
                    skip_gate=True)[0].f_n
    return abs(a - b) / max(a, 1e-300)


def geometric_schedule(n_min: int = 16, n_max: int = 1024,
                       per_octave: int = 2) -> list:
    out = []
    k = per_octave * int(round(math.log2(n_min)))
    while True:
        n = int(round(2.0 ** (k / per_octave)))
        if n > n_max:
            break
        if n >= n_min and (not out or n > out[-1]):
            out.append(n)
        k += 1
    return out


def slope_fit(records, window: Optional[int] = None):
    """OLS slope of log f against log n over the trailing window.

    Returns (slope, stderr).  Default window: the top half of the schedule
    in log space.
    """
    records = sorted(records, key=lambda r: r.n)
    if window is None:
        window = max(4, (len(records) + 1) // 2)
    tail = records[-window:]
    if len(tail) < 4:
        raise ValueError("need at least 4 records in the fit window")
    if any(r.f_n <= 0 for r in tail):
        raise ValueError("zero values in the fit window")
    x = np.log([r.n for r in tail])
    y = np.log([r.f_n for r in tail])
    xc = x - x.mean()
    slope = float(np.dot(xc, y) / np.dot(xc, xc))
    resid = y - (y.mean() + slope * xc)
    dof = len(tail) - 2
    se = float(math.sqrt(np.dot(resid, resid) / max(dof, 1) / np.dot(xc, xc)))
    return slope, se


def theorem_bound_check(records, mu) -> tuple:
    """C_hat = max f(n) n^mu; passes when the running max has stabilized
    (the last quarter contributes at most 5% above the overall max)."""
    if not records:
        raise ValueError("no records")
    mu = float(mu)
    vals = [(r.n, r.f_n * r.n ** mu) for r in sorted(records, key=lambda r: r.n)]
    c_hat = max(v for _, v in vals)
    quarter = vals[3 * len(vals) // 4:] or vals[-1:]
    c_tail = max(v for _, v in quarter)
    earlier = vals[:3 * len(vals) // 4] or vals[:1]
    c_head = max(v for _, v in earlier)
    passed = c_tail <= 1.05 * c_head
    return c_hat, passed


# ---------------------------------------------------------------------------
# localized inversion integrals

def localization_report(phi: LatticeFunction, n: int, x, radius: float = 0.5,
                        nodes_per_axis: Optional[int] = None,
                        reference: str = "fft") -> dict:
    """Split the inversion integral into Omega-neighborhoods + complement.

    All pieces are Riemann sums on one shared tensor grid over the shifted
    torus, so their total telescopes to the full quadrature, which is
    exact for the trig polynomial phi^^n; the reference phi^(n)(x) comes
    from conv_power.  Also measures s = sup of |phi^| over the complement.
    """
    omega = lattice.find_omega(phi)
    x = tuple(int(v) for v in np.atleast_1d(x))
    pts = omega.points
    if len(pts) > 1:
        min_dist = min(lattice._torus_dist(pts[i], pts[j])
                       for i in range(len(pts)) for j in range(i + 1, len(pts)))
        radius = min(radius, min_dist / 3.0)
    box = phi.support_box()
    if nodes_per_axis is None:
        nodes_per_axis = [n * (hi - lo) + 2 * abs(x[j]) + 1
                          for j, (lo, hi) in enumerate(box)]
    elif np.isscalar(nodes_per_axis):
        nodes_per_axis = [int(nodes_per_axis)] * phi.dim
    axes = [omega.torus_shift[j] - np.pi +
            2 * np.pi * (np.arange(m) + 0.5) / m
            for j, m in enumerate(nodes_per_axis)]
    fgrid = lattice.fourier_grid(phi, axes)
    integrand = fgrid ** n
    phase_axes = [np.exp(-1j * x[j] * axes[j]) for j in range(phi.dim)]
    from functools import reduce
    phase = reduce(np.multiply.outer, phase_axes)
    cell = integrand * phase

    mesh = np.meshgrid(*axes, indexing="ij")
    masks = []
    for pt in pts:
        dist2 = np.zeros_like(mesh[0])
        for j in range(phi.dim):
            dj = np.abs(mesh[j] - pt[j]) % (2 * np.pi)
            dist2 += np.minimum(dj, 2 * np.pi - dj) ** 2
        masks.append(dist2 <= radius * radius)
    overlap = np.zeros_like(masks[0], dtype=int)
    for m_ in masks:
        overlap += m_
    if np.any(overlap > 1):
        raise GateError("maximum-point neighborhoods overlap; shrink the radius")
    complement = overlap == 0

    total_cells = cell.size
    localized = [complex(cell[m_].sum() / total_cells) for m_ in masks]
    comp_value = complex(cell[complement].sum() / total_cells)
    s = float(np.abs(fgrid[complement]).max()) if np.any(complement) else 0.0
    reference_val = complex(lattice.conv_power(phi, n, method=reference)[x]) \
        if reference == "direct" else _fft_value(phi, n, x)
    return {
        "x": x, "n": n, "radius": radius, "points": pts,
        "localized": localized, "complement": comp_value,
        "total": sum(localized) + comp_value,
        "reference": reference_val,
        "residual": abs(sum(localized) + comp_value - reference_val),
        "complement_sup": s,
    }


def _fft_value(phi, n, x):
    box = phi.support_box()
    window = [(int(v), int(v)) for v in x]
    grid = [_next_pow2(n * (hi - lo) + 1) for lo, hi in box]
    power = lattice.conv_power(phi, n, method="fft", grid_padding=grid,
                               window=window, allow_truncation=False)
    return complex(power[x])


def localized_integral(phi: LatticeFunction, xi0, radius: float, n: int, x,
                       nodes_per_axis=None) -> complex:
    """The neighborhood contribution at one maximum point."""
    rep = localization_report(phi, n, x, radius=radius,
                              nodes_per_axis=nodes_per_axis)
    dists = [lattice._torus_dist(p, xi0) for p in rep["points"]]
    j = int(np.argmin(dists))
    if dists[j] > 1e-6:
        raise GateError(f"{xi0} is not a located maximum point")
    return rep["localized"][j]


# ---------------------------------------------------------------------------
# Van der Corput

def _osc_integral(f, g, a, b, rel_tol: float = 1e-11, max_level: int = 14,
                  start_panels: int = 8):
    x16, w16 = np.polynomial.legendre.leggauss(16)
    prev = None
    panels = start_panels
    for _ in range(max_level):
        edges = np.linspace(a, b, panels + 1)
        half = 0.5 * (edges[1] - edges[0])
        centers = 0.5 * (edges[:-1] + edges[1:])
        pts = (centers[:, None] + half * x16[None, :]).ravel()
        wts = np.tile(half * w16, panels)
        vals = np.exp(1j * np.asarray(f(pts))) * np.asarray(g(pts))
        total = complex(np.dot(wts, vals))
        if prev is not None and abs(total - prev) <= rel_tol * (1.0 + abs(total)):
            return total, abs(total - prev)
        prev = total
        panels *= 2
    return prev, abs(total - prev) if prev is not None else float("nan")


def van_der_corput_check(inst: OscillatoryInstance, rel_tol: float = 1e-11) -> dict:
    """|int e^(i f) g| against min(4/l1, 8/sqrt(l2)) (sup g + int |g'|)."""
    if inst.lambda1 <= 0 and inst.lambda2 <= 0:
        raise ValueError("need a positive lower bound on f' or f''")
    value, quad_err = _osc_integral(inst.phase, inst.amplitude, inst.a, inst.b,
                                    rel_tol=rel_tol)
    terms = []
    if inst.lambda1 > 0:
        terms.append(4.0 / inst.lambda1)
    if inst.lambda2 > 0:
        terms.append(8.0 / math.sqrt(inst.lambda2))
    bound = min(terms) * (inst.sup_g + inst.l1_gprime)
    ok = abs(value) <= bound + 3.0 * quad_err + 1e-12
    return {"value": abs(value), "bound": bound, "quad_error": quad_err,
            "passed": ok, "label": inst.label}


def random_vdc_instances(count: int, seed: int = 0) -> list:
    """Quadratic and cubic phases with sinusoidal amplitudes; all constants
    certified by construction rather than estimated."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        kind = rng.integers(0, 3)
        c0 = float(rng.uniform(-2, 2))
        c1 = float(rng.uniform(-2, 2))
        om = float(rng.uniform(0.3, 8.0))
        ph = float(rng.uniform(0, 2 * np.pi))

        def g(x, c0=c0, c1=c1, om=om, ph=ph):
            return c0 + c1 * np.sin(om * x + ph)

        if kind == 0:  # convex quadratic, critical point outside
            lam = float(rng.uniform(5, 500))
            c = float(rng.uniform(-3, -0.5))
            a, b = 0.0, float(rng.uniform(0.5, 3.0))

            def f(x, lam=lam, c=c):
                return 0.5 * lam * (x - c) ** 2
            lam1 = lam * (a - c)
            lam2 = lam
            label = f"quadratic offset {i}"
        elif kind == 1:  # quadratic with interior critical point
            lam = float(rng.uniform(5, 500))
            c = float(rng.uniform(0.3, 0.7))
            a, b = 0.0, 1.0

            def f(x, lam=lam, c=c):
                return 0.5 * lam * (x - c) ** 2
            lam1 = 0.0
            lam2 = lam
            label = f"quadratic stationary {i}"
        else:  # cubic on an interval away from the inflection
            aa = float(rng.uniform(2, 80))
            a = float(rng.uniform(0.2, 1.0))
            b = a + float(rng.uniform(0.5, 2.0))

            def f(x, aa=aa):
                return aa * x ** 3 / 3.0
            lam1 = aa * a * a
            lam2 = 2.0 * aa * a
            label = f"cubic {i}"
        sup_g = abs(c0) + abs(c1)
        l1_gp = abs(c1) * om * (b - a)
        out.append(OscillatoryInstance(phase=f, amplitude=g, a=a, b=b,
                                       lambda1=lam1, lambda2=lam2,
                                       sup_g=sup_g, l1_gprime=l1_gp,
                                       label=label))
    return out


# ---------------------------------------------------------------------------
# phase/amplitude families at an imaginary-type point

def _r_function(pc) -> "semi_elliptic":
    """The leading real stratum as a positive homogeneous function.

    R is homogeneous for E/k, i.e. semi-elliptic with weights 2 m_j k;
    only integer-even weight products are representable here.
    """
    weights = []
    for mm in pc.m:
        w = Fraction(2 * mm) * pc.k
        if w.denominator != 1 or w.numerator % 2:
            raise GateError(f"R weights {w} not even integers; cannot build the level set")
        weights.append(int(w))
    return semi_elliptic({b: Fraction(c) for b, c in pc.r_table.items()},
                         tuple(weights), label="leading real stratum")


def phase_family_check(phi: LatticeFunction, pc, n: int, x,
                       n_eta: int = 24, n_theta: int = 48,
                       delta_floor: float = 2.0 ** -8, seed: int = 0) -> dict:
    """Verify |d/dtheta f_(n,eta,x)| >= (rho/mu) n^mu on the working grid.

    f(theta) = n Im Gamma(theta^F eta) - x . theta^F eta with eta on the
    level set {R = 1}, F = diag(1/(2 m mu)), rho = inf |Q| / 3 on that
    set.  delta is found by halving until the bound holds for
    theta in [n^-mu, delta^mu].
    """
    from .homogeneous import sphere_grid
    if pc.type != "imaginary_homogeneous":
        raise GateError("phase family needs an imaginary-type point")
    mu = float(pc.mu)
    rfun = _r_function(pc)
    etas = sphere_grid(rfun, n_eta, seed=seed)
    q_on_s = np.abs(expansion.poly_eval(pc.q_table, etas))
    rho = float(q_on_s.min()) / 3.0
    f_group = DilationGroup(diag_exponent([2 * mm * mu for mm in pc.m]))
    xi0 = np.asarray(pc.xi0, dtype=float)
    x = np.asarray(x, dtype=float)
    phat0 = lattice.fourier_eval(phi, xi0)

    def phase_theta(theta_vals, eta):
        pts = f_group.apply_scales(theta_vals, np.repeat(eta[None, :],
                                                         len(theta_vals), axis=0))
        vals = np.array([lattice.fourier_eval(phi, xi0 + p) for p in pts])
        gamma_im = np.angle(vals / phat0)
        return n * gamma_im - pts @ x

    target = rho / mu * n ** mu
    delta = 0.5
    while delta >= delta_floor:
        lo, hi = n ** (-mu), delta ** mu
        if lo >= hi:
            delta /= 2.0
            continue
        thetas = np.geomspace(lo, hi, n_theta)
        ok = True
        for eta in etas:
            h = 1e-6 * thetas
            d1 = (phase_theta(thetas + h, eta) - phase_theta(thetas - h, eta)) / (2 * h)
            if np.any(np.abs(d1) < target):
                ok = False
                break
        if ok:
            return {"passed": True, "delta": delta, "rho": rho, "target": target}
        delta /= 2.0
    return {"passed": False, "delta": delta, "rho": rho, "target": target}


def amplitude_bounds_check(phi: LatticeFunction, pc, n_list, delta: float,
                           beta: float = 3.0, n_eta: int = 16,
                           n_theta: int = 200, seed: int = 0) -> dict:
    """sup |g| <= 1 and int |g'| <= beta for g(theta) = |phi^(xi0+theta^F eta)|^n."""
    from .homogeneous import sphere_grid
    mu = float(pc.mu)
    rfun = _r_function(pc)
    etas = sphere_grid(rfun, n_eta, seed=seed)
    f_group = DilationGroup(diag_exponent([2 * mm * mu for mm in pc.m]))
    xi0 = np.asarray(pc.xi0, dtype=float)
    worst_sup = 0.0
    worst_l1 = 0.0
    for n in n_list:
        for eta in etas:
            thetas = np.linspace(delta ** mu / n_theta, delta ** mu, n_theta)
            pts = f_group.apply_scales(thetas, np.repeat(eta[None, :],
                                                         len(thetas), axis=0))
            mods = np.array([abs(lattice.fourier_eval(phi, xi0 + p)) for p in pts])
            g = mods ** n
            worst_sup = max(worst_sup, float(g.max()))
            trap = getattr(np, "trapezoid", None) or np.trapz
            l1 = float(trap(np.abs(np.gradient(g, thetas)), thetas))
            worst_l1 = max(worst_l1, l1)
    return {"sup": worst_sup, "l1_gprime": worst_l1,
            "passed": worst_sup <= 1.0 + 1e-12 and worst_l1 <= beta}


# ---------------------------------------------------------------------------
# CSV / plot emission

def decay_csv(records, mu, path) -> None:
    mu = float(mu)
    lines = ["n,f_n,f_n_times_n_mu,method,runtime_ms"]
    for r in sorted(records, key=lambda r: r.n):
        lines.append(f"{r.n},{r.f_n!r},{r.f_n * r.n ** mu!r},{r.method},{r.runtime_ms}")
    from pathlib import Path
    Path(path).write_text("\n".join(lines) + "\n")


def gnuplot_script(csv_name: str, mu, out_name: str = "decay.png") -> str:
    mu = float(mu)
    return "\n".join([
        "set terminal pngcairo size 900,600",
        f"set output '{out_name}'",
        "set datafile separator ','",
        "set logscale xy 2",
        "set xlabel 'n'",
        "set ylabel 'f(n)'",
        f"plot '{csv_name}' every ::1 using 1:2 with linespoints title 'f(n)', \\",
        f"     '{csv_name}' every ::1 using 1:($1**(-{mu})) with lines "
        f"title 'n^-{mu:g}'",
        "",
    ])

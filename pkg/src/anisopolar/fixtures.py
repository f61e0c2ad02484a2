"""Bundled lattice functions and the plain-text exchange format.

File format: one support point per line, "x1 ... xd re_num/re_den
im_num/im_den"; '#' starts a comment.  The three worked Z^2 examples ship
as data files and are also constructed here programmatically; tests pin
the two representations against each other.
"""

from __future__ import annotations

from fractions import Fraction
from importlib import resources
from pathlib import Path

from .homogeneous import PosHomFunction, norm_power, p1, p2
from .lattice import LatticeFunction
from .rational import QC


def _sym(table, den):
    """Expand {(x, y): (re, im)} with +- symmetry markers into QC coeffs.

    Keys are (x, y, mode): mode '' exact point, 'sx' also (-x, y),
    'sy' also (x, -y), 'sxy' all four sign combinations of nonzero coords.
    """
    out = {}

    def add(pt, re, im):
        c = QC(Fraction(re, den), Fraction(im, den))
        if pt in out:
            out[pt] = out[pt] + c
        else:
            out[pt] = c

    for (x, y, mode), (re, im) in table.items():
        pts = {(x, y)}
        if mode in ("sx", "sxy") and x != 0:
            pts.add((-x, y))
        if mode in ("sy", "sxy") and y != 0:
            pts.add((x, -y))
        if mode == "sxy" and x != 0 and y != 0:
            pts.add((-x, -y))
        for p in sorted(pts):
            add(p, re, im)
    return out


def example1() -> LatticeFunction:
    """Single maximum at the origin; decay exponent 1/2."""
    t = {
        (0, 0, ""): (372, -96),
        (1, 0, "sx"): (56, 32), (0, 1, "sy"): (56, 32),
        (2, 0, "sx"): (-28, -8), (0, 2, "sy"): (-28, -8),
        (3, 0, "sx"): (8, 0), (0, 3, "sy"): (8, 0),
        (4, 0, "sx"): (-1, 0), (0, 4, "sy"): (-1, 0),
    }
    return LatticeFunction(2, _sym(t, 512))


def example2() -> LatticeFunction:
    """Single maximum, mixed weights (1,2); decay exponent 3/4."""
    t = {
        (0, 0, ""): (602, -112),
        (0, 1, "sy"): (56, 32),
        (-1, 0, ""): (56, 32),
        (1, 0, ""): (72, 32),
        (0, 2, "sy"): (-28, -8),
        (2, 0, "sx"): (-16, 0),
        (0, 3, "sy"): (8, 0),
        (0, 4, "sy"): (-1, 0),
        (-1, 1, "sy"): (4, 0),
        (1, 1, "sy"): (-4, 0),
    }
    return LatticeFunction(2, _sym(t, 768))


def example3() -> LatticeFunction:
    """Two maxima: imaginary type (order 2/3) at 0, positive type at (pi,pi)."""
    phi1 = {
        (1, 0, "sx"): (15, 15),
        (0, 1, "sy"): (16, 16),
        (3, 0, "sx"): (1, 1),
    }
    phi2 = {
        (0, 0, ""): (682, 0),
        (2, 0, "sx"): (152, 0), (4, 0, "sx"): (-28, 0),
        (6, 0, "sx"): (8, 0), (8, 0, "sx"): (-1, 0),
        (0, 2, "sy"): (60, 0), (0, 4, "sy"): (-24, 0), (0, 6, "sy"): (4, 0),
    }
    phi3 = {
        (0, 0, ""): (1387004, 0),
        (2, 0, "sx"): (-106722, 0), (4, 0, "sx"): (3960, 0),
        (6, 0, "sx"): (-1045, 0), (8, 0, "sx"): (138, 0),
        (10, 0, "sx"): (-9, 0),
        (0, 2, "sy"): (-65536, 0),
    }
    a = _sym(phi1, 2 ** 7)
    b = _sym(phi2, 2 ** 11)
    c = _sym(phi3, 2 ** 21)
    coeffs = {}
    for part, factor in ((a, QC(1, 0)), (b, QC(0, -1)), (c, QC(1, 0))):
        for pt, v in part.items():
            coeffs[pt] = coeffs.get(pt, QC(0, 0)) + factor * v
    return LatticeFunction(2, coeffs)


def lazy_walk_2d() -> LatticeFunction:
    """Tensor square of (delta_-1 + 2 delta_0 + delta_1)/4; classical n^-1 decay."""
    one_d = {-1: Fraction(1, 4), 0: Fraction(1, 2), 1: Fraction(1, 4)}
    coeffs = {(x, y): QC(cx * cy, 0)
              for x, cx in one_d.items() for y, cy in one_d.items()}
    return LatticeFunction(2, coeffs)


def bernoulli_1d() -> LatticeFunction:
    return LatticeFunction(1, {(0,): QC(Fraction(1, 2), 0), (1,): QC(Fraction(1, 2), 0)})


LATTICE_FIXTURES = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "lazy2d": lazy_walk_2d,
}

FUNCTION_FIXTURES = {
    "euclid2": lambda: norm_power(2, 1.0),
    "euclid2_sq": lambda: norm_power(2, 2.0),
    "euclid3_sq": lambda: norm_power(3, 2.0),
    "p1": p1,
    "p2": p2,
}


def get_lattice_fixture(name: str) -> LatticeFunction:
    if name in LATTICE_FIXTURES:
        return LATTICE_FIXTURES[name]()
    path = Path(name)
    if path.exists():
        return load_lattice(path)
    raise KeyError(f"unknown lattice fixture {name!r}")


def get_function_fixture(name: str) -> PosHomFunction:
    if name in FUNCTION_FIXTURES:
        return FUNCTION_FIXTURES[name]()
    raise KeyError(f"unknown function fixture {name!r}")


# ---------------------------------------------------------------------------
# file format

def _fmt_frac(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def dump_lattice(phi: LatticeFunction, path) -> None:
    lines = [f"# dim={phi.dim} entries={len(phi)}"]
    for pt in sorted(phi.coeffs):
        c = phi.coeffs[pt]
        if not phi.exact:
            raise ValueError("only exact lattice functions are serialized")
        coords = " ".join(str(v) for v in pt)
        lines.append(f"{coords}  {_fmt_frac(c.re)}  {_fmt_frac(c.im)}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_lattice(path) -> LatticeFunction:
    coeffs = {}
    dim = None
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 3:
            raise ValueError(f"bad lattice line: {raw!r}")
        pt = tuple(int(v) for v in parts[:-2])
        if dim is None:
            dim = len(pt)
        elif len(pt) != dim:
            raise ValueError(f"inconsistent dimension in {raw!r}")
        coeffs[pt] = QC(Fraction(parts[-2]), Fraction(parts[-1]))
    if dim is None:
        raise ValueError("empty lattice file")
    return LatticeFunction(dim, coeffs)


def packaged_lattice(name: str) -> LatticeFunction:
    """Load one of the data files shipped inside the package."""
    ref = resources.files("anisopolar").joinpath(f"data/{name}.txt")
    with resources.as_file(ref) as path:
        return load_lattice(path)

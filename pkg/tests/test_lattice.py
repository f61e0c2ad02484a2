import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisopolar import fixtures, lattice
from anisopolar.lattice import (DegenerateOmega, LatticeError, LatticeFunction,
                                TrigPolynomial, conv_power, convolve, delta,
                                find_omega, fourier_eval, fourier_eval_exact,
                                inversion_check)
from anisopolar.rational import QC


def bernoulli_pair():
    return LatticeFunction(1, {(0,): QC(Fraction(1, 2)), (1,): QC(Fraction(1, 2))})


def naive_convolve(a, b):
    out = {}
    for pa, ca in a.coeffs.items():
        for pb, cb in b.coeffs.items():
            pt = tuple(x + y for x, y in zip(pa, pb))
            out[pt] = out.get(pt, QC(0, 0)) + ca * cb
    return out


def test_delta_is_identity_for_convolution():
    phi = fixtures.example1()
    assert convolve(delta(2), phi).coeffs == phi.coeffs


def test_binomial_square():
    sq = convolve(bernoulli_pair(), bernoulli_pair())
    assert sq.coeffs == {(0,): QC(Fraction(1, 4)), (1,): QC(Fraction(1, 2)),
                         (2,): QC(Fraction(1, 4))}


def test_convolve_rejects_dim_mismatch():
    with pytest.raises(LatticeError):
        convolve(bernoulli_pair(), fixtures.example1())


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_kronecker_matches_naive_and_young(seed):
    rng = np.random.default_rng(seed)
    def random_fn():
        coeffs = {}
        for _ in range(rng.integers(1, 8)):
            pt = (int(rng.integers(-4, 5)), int(rng.integers(-4, 5)))
            coeffs[pt] = QC(Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 9))),
                            Fraction(int(rng.integers(-20, 21)), int(rng.integers(1, 9))))
        return LatticeFunction(2, coeffs)
    a, b = random_fn(), random_fn()
    got = convolve(a, b)
    assert got.coeffs == {k: v for k, v in naive_convolve(a, b).items() if v}
    assert got.l1_norm() <= a.l1_norm() * b.l1_norm() + 1e-9


def test_conv_power_one_is_identity():
    phi = fixtures.example2()
    assert conv_power(phi, 1).coeffs == phi.coeffs


def test_conv_power_binomial_closed_form():
    p = conv_power(bernoulli_pair(), 10)
    for k in range(11):
        assert p[(k,)] == QC(Fraction(math.comb(10, k), 2 ** 10))


def test_conv_power_total_mass_identity():
    phi = fixtures.example3()
    p = conv_power(phi, 6)
    mass = phi.total_mass()
    acc = QC(1, 0)
    for _ in range(6):
        acc = acc * mass
    assert p.total_mass() == acc


def test_conv_power_fft_matches_direct_example1():
    phi = fixtures.example1()
    direct = conv_power(phi, 8).to_float()
    fast = conv_power(phi, 8, method="fft")
    worst = 0.0
    for pt in set(direct.coeffs) | set(fast.coeffs):
        worst = max(worst, abs(direct[pt] - fast[pt]))
    assert worst <= 1e-10 * phi.l1_norm() ** 8


def test_conv_power_fft_guard_and_truncation():
    phi = fixtures.example1()
    with pytest.raises(LatticeError):
        conv_power(phi, 64, method="fft", grid_padding=64)
    # explicit truncation with a window is allowed
    out = conv_power(phi, 64, method="fft", grid_padding=256,
                     window=[(0, 0), (0, 0)], allow_truncation=True)
    assert len(out) <= 1


def test_sup_norm_decrease():
    phi = fixtures.example1()
    l1 = phi.l1_norm()
    prev = max(abs(complex(c)) for c in phi.coeffs.values())
    for n in range(2, 6):
        cur = max(abs(complex(c)) for c in conv_power(phi, n).coeffs.values())
        assert cur <= l1 * prev + 1e-12
        prev = cur


def test_fourier_morphism():
    phi = fixtures.example2()
    xi = np.array([0.37, -1.2])
    base = fourier_eval(phi, xi)
    for n in (2, 5, 16):
        lhs = fourier_eval(conv_power(phi, n), xi)
        assert abs(lhs - base ** n) <= 1e-9


def test_fourier_eval_delta_and_symmetry():
    d2 = delta(2)
    for xi in ([0.0, 0.0], [1.0, -2.0]):
        assert fourier_eval(d2, xi) == pytest.approx(1.0)
    real = fixtures.lazy_walk_2d()
    xi = np.array([0.9, 0.4])
    assert fourier_eval(real, -xi) == pytest.approx(np.conj(fourier_eval(real, xi)))


def test_fourier_eval_example1_at_zero_exact():
    phi = fixtures.example1()
    assert fourier_eval_exact(phi, (0, 0)) == QC(1, 0)
    assert fourier_eval(phi, [0.0, 0.0]) == pytest.approx(1.0, abs=1e-15)


def test_trig_polynomial_periodicity():
    tp = TrigPolynomial(fixtures.example2())
    xi = np.array([0.31, -2.7])
    shift = xi + 2 * np.pi * np.array([2.0, -1.0])
    assert abs(tp(xi) - tp(shift)) <= 1e-12


def test_find_omega_single_max_fixtures():
    for name in ("example1", "example2", "lazy2d"):
        om = find_omega(fixtures.get_lattice_fixture(name))
        assert len(om) == 1
        assert np.allclose(om.points[0], [0.0, 0.0], atol=1e-9)
        assert om.residuals[0] <= 1e-9


def test_find_omega_example3_two_maxima():
    om = find_omega(fixtures.example3())
    assert len(om) == 2
    pts = sorted(om.points, key=lambda p: p[0])
    assert np.allclose(pts[0], [0.0, 0.0], atol=1e-9)
    assert np.allclose(pts[1], [np.pi, np.pi], atol=1e-9)
    assert max(om.residuals) <= 1e-9
    # every located point is interior to the shifted torus
    for p in om.points:
        rel = (p - om.torus_shift + np.pi) % (2 * np.pi) - np.pi
        assert np.all(np.abs(rel) < np.pi - 0.5)


def test_find_omega_rejects_delta():
    with pytest.raises(DegenerateOmega):
        find_omega(delta(2))


def test_find_omega_rejects_unnormalized():
    phi = LatticeFunction(2, {(0, 0): QC(2, 0)})
    with pytest.raises(LatticeError):
        find_omega(phi)


def test_inversion_check_delta():
    rep = inversion_check(delta(1), 1, [(0,)], quad_nodes=8)
    assert rep["max_residual"] <= 1e-12


def test_inversion_check_binomial():
    rep = inversion_check(bernoulli_pair(), 6, [(3,)])
    assert rep["max_residual"] <= 1e-12
    row = rep["rows"][0]
    assert row["direct"] == pytest.approx(20 / 64)


def test_inversion_check_example1():
    rep = inversion_check(fixtures.example1(), 4, [(1, 1), (0, 0), (-2, 3)])
    assert rep["max_residual"] <= 1e-9


def test_file_roundtrip(tmp_path):
    phi = fixtures.example3()
    path = tmp_path / "phi.txt"
    fixtures.dump_lattice(phi, path)
    back = fixtures.load_lattice(path)
    assert back.coeffs == phi.coeffs


def test_packaged_fixtures_match_definitions():
    for name in ("example1", "example2", "example3", "lazy2d"):
        assert fixtures.packaged_lattice(name).coeffs == \
            fixtures.get_lattice_fixture(name).coeffs


def test_find_omega_non_special_maximum():
    # modulating by e^(i a.x) translates the transform, moving the maximum
    # to a point that is not a quarter-turn lattice point; ascent must
    # still localize it and must not snap it anywhere else
    a = np.pi / 3
    base = fixtures.lazy_walk_2d()
    coeffs = {pt: complex(c) * np.exp(1j * a * pt[0])
              for pt, c in base.coeffs.items()}
    phi = LatticeFunction(2, coeffs, exact=False)
    om = find_omega(phi)
    assert len(om) == 1
    assert np.allclose(om.points[0], [-a, 0.0], atol=1e-7)
    assert om.residuals[0] <= 1e-9
    assert not om.certified[0]


def test_conv_power_rejects_nonpositive_n():
    with pytest.raises(LatticeError):
        conv_power(fixtures.example1(), 0)

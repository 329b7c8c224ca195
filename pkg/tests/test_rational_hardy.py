import json

import mpmath
import numpy as np
import pytest

from bolab.exceptions import UnsupportedMultiplicityError
from bolab.rational_hardy import (
    AntiHardyPart,
    PolePoint,
    RationalHardy,
    apply_xstar,
    derivative,
    dumps,
    evaluate,
    fourier_transform,
    i_plus,
    inner_product,
    l2_norm_sq,
    loads,
    multiply,
    project_szego,
    sobolev_norm,
)

from oracles import cauchy_projection, fourier, quad_line, quad_tan

rng = np.random.default_rng(20240611)


def simple(*qs, coefs=None):
    qs = np.asarray(qs, dtype=complex)
    c = 1j * np.ones(len(qs)) if coefs is None else coefs
    return RationalHardy(c, qs)


def random_hardy(n, double=False):
    q = rng.uniform(-3, 3, n) + 1j * rng.uniform(0.5, 3, n)
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    m = rng.integers(1, 3, n) if double else np.ones(n, dtype=int)
    return RationalHardy(c, q, m)


class TestConstruction:
    def test_rejects_lower_half_plane(self):
        with pytest.raises(ValueError):
            RationalHardy([1.0], [-1j])
        with pytest.raises(ValueError):
            PolePoint(0.5 - 1e-3j)

    def test_multiplicity_cap(self):
        with pytest.raises(UnsupportedMultiplicityError):
            RationalHardy([1.0], [1j], [3])
        with pytest.raises(UnsupportedMultiplicityError):
            PolePoint(1j, 3)

    def test_canonical_merge_and_drop(self):
        f = RationalHardy([1.0, 2.0, 5.0, -5.0], [1j, 1j + 1e-14, 2j, 2j])
        assert len(f) == 1
        assert f.coefs[0] == 3.0

    def test_immutable(self):
        f = simple(1j, 2j)
        with pytest.raises(ValueError):
            f.coefs[0] = 0

    def test_anti_part_sign(self):
        with pytest.raises(ValueError):
            AntiHardyPart([1.0], [1j])

    def test_from_terms_roundtrip(self):
        f = random_hardy(4, double=True)
        assert inner_product(RationalHardy.from_terms(f.terms) - f, RationalHardy.from_terms(f.terms) - f) == pytest.approx(0, abs=1e-24)


class TestMultiply:
    def test_square_single_term(self):
        h, a = multiply(simple(1j), simple(1j))
        assert len(a) == 0
        assert len(h) == 1 and h.mults[0] == 2
        assert h.coefs[0] == pytest.approx(-1)
        assert h.params[0] == pytest.approx(1j)

    def test_two_poles_pointwise(self):
        f, g = simple(1j), simple(2j)
        h, a = multiply(f, g)
        assert len(a) == 0
        assert sorted(h.params.imag) == pytest.approx([1, 2])
        assert h(0.0) == pytest.approx(0.5)
        x = rng.normal(size=20) * 3
        assert np.allclose(h(x), f(x) * g(x), rtol=1e-13, atol=0)

    def test_random_products_pointwise(self):
        for _ in range(10):
            f, g = random_hardy(3), random_hardy(2)
            h, a = multiply(f, g)
            x = rng.normal(size=30) * 4
            assert np.allclose(h(x) + a(x), f(x) * g(x), rtol=1e-11, atol=1e-13)

    def test_overflow_reported(self):
        with pytest.raises(UnsupportedMultiplicityError):
            multiply(RationalHardy([1.0], [1j], [2]), simple(1j))


class TestProjectSzego:
    def test_single_soliton_against_cauchy_integral(self):
        f = simple(1j)
        out = project_szego(f, [1j])
        # two terms: -1/(x+i)^2 and +(1/2) i/(x+i)
        expect = RationalHardy([-1.0, 0.5j], [1j, 1j], [2, 1])
        d = out - expect
        assert l2_norm_sq(d) < 1e-28
        prod = lambda x: f(x) * 2 / (x * x + 1)
        for z in (0.3 + 0.5j, -1 + 2j, 2 + 0.1j):
            assert out(z) == pytest.approx(cauchy_projection(prod, z), rel=1e-9)

    @pytest.mark.parametrize("q,pts", [(2j, [1j]), (0.5 + 1j, [1j, 1 + 2j]), (-1 + 0.7j, [0.3 + 1.5j])])
    def test_against_cauchy_integral(self, q, pts):
        f = simple(q)
        out = project_szego(f, pts)
        u0 = lambda x: sum(2 * p.imag / abs(x + p) ** 2 for p in pts)
        brk = [-p.real for p in pts] + [-q.real]
        for z in (0.2 + 0.4j, 1.5 + 1j, -2 + 0.3j):
            ref = cauchy_projection(lambda x: f(x) * u0(x), z, breaks=brk)
            assert out(z) == pytest.approx(ref, rel=1e-8)

    def test_zero(self):
        assert len(project_szego(RationalHardy.zero(), [1j, 2j])) == 0

    def test_output_is_hardy(self):
        out = project_szego(random_hardy(3), [1j, 0.5 + 2j])
        assert np.all(out.params.imag > 0)
        for xi in (-0.5, -2.0):
            assert abs(fourier(out, xi)) < 1e-8 * np.sqrt(l2_norm_sq(out))


class TestInnerProduct:
    def test_single(self):
        assert inner_product(simple(1j), simple(1j)) == pytest.approx(np.pi)

    def test_cross_against_quadrature(self):
        val = inner_product(simple(1j), simple(2j))
        assert val == pytest.approx(2 * np.pi / 3, rel=1e-14)
        ref = quad_tan(lambda x: simple(1j)(x) * np.conj(simple(2j)(x)))
        assert abs(val - ref) < 1e-10

    def test_zero(self):
        assert inner_product(simple(1j), RationalHardy.zero()) == 0

    def test_random_with_double_poles(self):
        for _ in range(5):
            f, g = random_hardy(3, True), random_hardy(2, True)
            ref = quad_line(lambda x: f(x) * np.conj(g(x)), breaks=[-q.real for q in np.r_[f.params, g.params]])
            assert inner_product(f, g) == pytest.approx(ref, rel=1e-9, abs=1e-12)

    def test_conjugate_symmetry_and_positivity(self):
        for _ in range(10):
            f, g = random_hardy(4, True), random_hardy(3, True)
            assert inner_product(f, g) == pytest.approx(np.conj(inner_product(g, f)), rel=1e-13)
            v = inner_product(f, f)
            assert abs(v.imag) < 1e-12 * abs(v) and v.real > 0


class TestXstar:
    def test_eigenvector(self):
        out = apply_xstar(simple(1j))
        assert out.coefs[0] == pytest.approx(-1j * 1j)

    def test_double_pole(self):
        out = apply_xstar(RationalHardy([1.0], [1j], [2]))
        expect = RationalHardy([1.0, -1j], [1j, 1j], [1, 2])
        assert l2_norm_sq(out - expect) < 1e-28

    def test_fourier_side_derivative(self):
        # X* f has transform i d/dxi f^; differentiate the quadrature transform by central differences
        f = RationalHardy([1.0, 0.5j], [1j, 0.5 + 2j], [2, 1])
        out = apply_xstar(f)
        h = 1e-3
        for xi in (0.4, 1.3):
            d = (fourier(f, xi + h) - fourier(f, xi - h)) / (2 * h)
            assert fourier_transform(out, xi) == pytest.approx(1j * d, rel=1e-5)

    def test_zero(self):
        assert len(apply_xstar(RationalHardy.zero())) == 0

    def test_adjointness(self):
        # <X* f, g> = int x f conj(g) dx for double-pole pairs (absolutely convergent)
        for _ in range(3):
            f = RationalHardy(rng.normal(size=2) + 0j, rng.uniform(-1, 1, 2) + 1j * rng.uniform(0.5, 2, 2), [2, 2])
            g = RationalHardy(rng.normal(size=2) + 0j, rng.uniform(-1, 1, 2) + 1j * rng.uniform(0.5, 2, 2), [2, 2])
            ref = quad_line(lambda x: x * f(x) * np.conj(g(x)), breaks=[-q.real for q in np.r_[f.params, g.params]])
            assert inner_product(apply_xstar(f), g) == pytest.approx(ref, rel=1e-8, abs=1e-10)


class TestIPlus:
    @pytest.mark.parametrize("p", [1j, 2 + 0.5j, -1 + 3j])
    def test_soliton(self, p):
        assert i_plus(simple(p)) == pytest.approx(2 * np.pi)

    def test_double_pole(self):
        assert i_plus(RationalHardy([1.0], [1j], [2])) == 0

    def test_difference_against_transform_limit(self):
        f = RationalHardy([1j, -1j], [1j, 3j])
        assert abs(i_plus(f)) < 1e-15
        g = RationalHardy([1j, 0.5], [1j, 1 + 2j])
        # extrapolate the quadrature transform to 0+ from small positive frequencies
        f1, f2, f3 = (fourier(g, k * 1e-3) for k in (1, 2, 3))
        lim = 3 * f1 - 3 * f2 + f3
        assert lim == pytest.approx(i_plus(g), rel=1e-6)

    def test_transform_support(self):
        f = random_hardy(3, True)
        scale = np.sqrt(l2_norm_sq(f))
        for xi in (-0.3, -1.0, -4.0):
            assert abs(fourier(f, xi)) < 1e-8 * scale
        for xi in (0.3, 1.0):
            assert fourier(f, xi) == pytest.approx(fourier_transform(f, xi), rel=1e-8)


class TestSobolev:
    def test_soliton_half(self):
        # the Plancherel-normalized value; one quarter of twice this is pi/4
        assert sobolev_norm(simple(1j), 0.5) == pytest.approx(np.pi / 2)

    def test_s_zero_is_l2(self):
        f = random_hardy(4)
        assert sobolev_norm(f, 0.0) == pytest.approx(l2_norm_sq(f), rel=1e-12)

    def test_two_pole_against_quadrature(self):
        # s = 1 is int |f'|^2 dx by Plancherel; f' summed termwise on the line
        f = RationalHardy([1j, 0.5 - 0.2j], [1j, 1 + 2j])
        df = lambda x: sum(-c / (x + q) ** 2 for c, q in zip(f.coefs, f.params))
        ref = quad_line(lambda x: abs(df(x)) ** 2, breaks=[0.0, -1.0]).real
        assert sobolev_norm(f, 1.0) == pytest.approx(ref, rel=1e-8)

    def test_double_pole_unsupported(self):
        with pytest.raises(UnsupportedMultiplicityError):
            sobolev_norm(RationalHardy([1.0], [1j], [2]), 1.0)


class TestEvaluate:
    def test_soliton_at_zero(self):
        f = simple(1j)
        assert evaluate(f, 0.0) == pytest.approx(1.0)
        assert 2 * evaluate(f, 0.0).real == pytest.approx(2.0)

    def test_zero(self):
        assert evaluate(RationalHardy.zero(), 1 + 1j) == 0

    def test_extended_precision(self):
        f = random_hardy(3, True)
        x = rng.normal(size=10) * 5
        with mpmath.workdps(40):
            for xv, val in zip(x, evaluate(f, x)):
                ref = sum(mpmath.mpc(c) / (mpmath.mpf(xv) + mpmath.mpc(q)) ** int(m) for c, q, m in zip(f.coefs, f.params, f.mults))
                assert abs(complex(ref) - val) <= 1e-12 * abs(complex(ref))

    def test_lower_half_plane_refused(self):
        with pytest.raises(ValueError):
            evaluate(simple(1j), -1j)


def test_derivative():
    f = simple(1j, 2 + 1j)
    d = derivative(f)
    x, h = 0.7, 1e-5
    assert d(x) == pytest.approx((f(x + h) - f(x - h)) / (2 * h), rel=1e-8)
    with pytest.raises(UnsupportedMultiplicityError):
        derivative(d)


def test_json_roundtrip():
    f = random_hardy(4, True)
    text = dumps(f)
    assert set(json.loads(text)[0]) == {"re_c", "im_c", "re_q", "im_q", "mult"}
    g = loads(text)
    assert np.array_equal(g.coefs, f.coefs) and np.array_equal(g.params, f.params) and np.array_equal(g.mults, f.mults)

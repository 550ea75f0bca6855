"""Core ring arithmetic: O_F elements, u-series, residue series."""

import random

import pytest
from hypothesis import given, settings, strategies as st

from crysred.arith import (
    OFElem,
    PrimeContext,
    ResidueSeries,
    USeries,
    find_residue_poly,
    of_invert,
    of_valuation,
    useries_frobenius,
)
from crysred.errors import NotAUnit, NotIntegral, PrecisionExhausted

from conftest import random_of, random_useries


def naive_conv2(ctx, a, b, mod, out_len):
    """Schoolbook reference for the packed convolution kernel."""
    from crysred.arith import _fold_w, _of_mul_raw

    out = [(0,) * ctx.r for _ in range(out_len)]
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            if i + j >= out_len:
                continue
            prod = _of_mul_raw(ctx, x, y, mod)
            out[i + j] = tuple((u + v) % mod for u, v in zip(out[i + j], prod))
    return out


class TestResiduePoly:
    def test_degree_one(self):
        assert find_residue_poly(5, 1) == (0, 1)

    @pytest.mark.parametrize("p,r", [(3, 2), (5, 2), (5, 3), (7, 2), (3, 4)])
    def test_is_monic_and_irreducible(self, p, r):
        from crysred.arith import _is_irreducible

        g = find_residue_poly(p, r)
        assert len(g) == r + 1 and g[-1] == 1
        assert _is_irreducible(list(g), p)

    def test_deterministic(self):
        assert find_residue_poly(5, 2) == find_residue_poly(5, 2)


class TestOFElem:
    def test_valuation_unit(self, ctx5):
        assert of_valuation(OFElem.one(ctx5)) == 0

    def test_valuation_p_power_times_unit(self, ctx5):
        x = OFElem.from_int(ctx5, 25 * 3, 5)
        assert of_valuation(x) == 2

    def test_valuation_zero(self, ctx5):
        x = OFElem.zero(ctx5, 4)
        assert of_valuation(x) is None  # ">= 4"

    def test_invert_one(self, ctx5):
        assert of_invert(OFElem.one(ctx5)) == OFElem.one(ctx5)

    def test_invert_known_value(self):
        # p=5, r=1, N=3: 2 * 63 = 126 = 1 mod 125
        ctx = PrimeContext(p=5, f=1, n=3, m=4, nwork=3)
        x = OFElem.from_int(ctx, 2, 3)
        inv = of_invert(x)
        assert inv.c[0] == 63

    def test_invert_extended_euclid_oracle(self, ctx5, rng):
        # cross-check Newton lifting against brute force over Z/p^N
        for _ in range(20):
            x = random_of(ctx5, rng, unit=True)
            assert (x * of_invert(x)) == OFElem.one(ctx5)

    def test_invert_nonunit(self, ctx5):
        with pytest.raises(NotAUnit):
            of_invert(OFElem.from_int(ctx5, 5))

    def test_div_p_pow(self, ctx5):
        x = OFElem.from_int(ctx5, 50, 6)
        y = x.div_p_pow(2)
        assert y.prec == 4 and y.c[0] == 2

    def test_div_p_pow_not_divisible(self, ctx5):
        with pytest.raises(NotIntegral):
            OFElem.from_int(ctx5, 7, 6).div_p_pow(1)

    def test_div_p_pow_precision_guard(self, ctx5):
        with pytest.raises(PrecisionExhausted):
            OFElem.from_int(ctx5, 25, 2).div_p_pow(2)

    @given(data=st.data())
    @settings(max_examples=40, deadline=None)
    def test_ring_axioms(self, ctx5r2, data):
        ctx = ctx5r2
        mod = ctx.ppow(ctx.n)
        elems = data.draw(st.lists(
            st.lists(st.integers(0, mod - 1), min_size=ctx.r, max_size=ctx.r),
            min_size=3, max_size=3))
        x, y, z = (OFElem(ctx, e, ctx.n) for e in elems)
        assert (x + y) + z == x + (y + z)
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z
        assert x * y == y * x

    def test_valuation_multiplicative(self, ctx5r2, rng):
        ctx = ctx5r2
        for _ in range(30):
            x = random_of(ctx, rng) * OFElem.from_int(ctx, ctx.p ** rng.randrange(3))
            y = random_of(ctx, rng) * OFElem.from_int(ctx, ctx.p ** rng.randrange(3))
            vx, vy = x.valuation(), y.valuation()
            if vx is None or vy is None or vx + vy >= ctx.n:
                continue
            assert (x * y).valuation() == vx + vy


class TestPackedConvolution:
    @pytest.mark.parametrize("r", [1, 2, 3])
    def test_matches_naive(self, r, rng):
        from crysred.arith import conv_series

        ctx = PrimeContext(p=5, f=1, n=6, m=12, r=r)
        mod = ctx.ppow(ctx.nwork)
        for _ in range(5):
            a = [tuple(rng.randrange(mod) for _ in range(r)) for _ in range(ctx.m)]
            b = [tuple(rng.randrange(mod) for _ in range(r)) for _ in range(ctx.m)]
            got = conv_series(ctx, a, b, mod, ctx.m)
            assert got == naive_conv2(ctx, a, b, mod, ctx.m)


class TestUSeries:
    def test_mul_truncates(self, ctx5):
        u = USeries.u_pow(ctx5, ctx5.m - 1)
        assert (u * u).is_zero()

    def test_frobenius_on_u(self, ctx5):
        u = USeries.u_pow(ctx5, 1)
        assert useries_frobenius(u) == USeries.u_pow(ctx5, ctx5.p)

    def test_frobenius_fixes_constants(self, ctx5, rng):
        c = USeries(ctx5, [random_of(ctx5, rng)])
        assert useries_frobenius(c) == c

    def test_frobenius_on_eisenstein(self, ctx5):
        e = USeries.eisenstein(ctx5)
        expected = USeries(ctx5, [ctx5.p] + [0] * (ctx5.p - 1) + [1])
        assert useries_frobenius(e) == expected

    def test_frobenius_is_ring_hom(self, ctx5r2, rng):
        for _ in range(5):
            s, t = random_useries(ctx5r2, rng), random_useries(ctx5r2, rng)
            assert useries_frobenius(s * t) == useries_frobenius(s) * useries_frobenius(t)

    @given(data=st.data())
    @settings(max_examples=15, deadline=None)
    def test_ring_axioms(self, ctx3, data):
        ctx = ctx3
        mod = ctx.ppow(ctx.n)
        coeffs = data.draw(st.lists(
            st.lists(st.integers(0, mod - 1), min_size=ctx.m, max_size=ctx.m),
            min_size=3, max_size=3))
        x, y, z = (USeries(ctx, [(v,) for v in cs], ctx.n) for cs in coeffs)
        assert (x * y) * z == x * (y * z)
        assert x * (y + z) == x * y + x * z

    def test_residue_commutes_with_mul(self, ctx5r2, rng):
        for _ in range(5):
            s, t = random_useries(ctx5r2, rng), random_useries(ctx5r2, rng)
            assert (s * t).residue() == s.residue() * t.residue()


class TestResidueSeries:
    def test_u_order(self, ctx5):
        s = ResidueSeries(ctx5, [0, 0, 3])
        assert s.u_order() == 2
        assert s.leading_unit() == (3,)

    def test_frobenius(self, ctx5):
        s = ResidueSeries(ctx5, [0, 1])
        assert s.frobenius() == ResidueSeries(ctx5, [0] * ctx5.p + [1])

"""Canonical-form arithmetic in S_F = O_F[[u, E^p/p]] and its helpers.

An element is stored in the canonical expansion

    x  =  p^(-d) * sum_j  c_j * E^j / p^floor(j/p),      c_j in O_F,

truncated at E-precision M.  The exponent d >= 0 tracks bounded
denominators (x in p^(-d) S_F); d = 0 is the ring itself.  Canonical
coefficients multiply by plain convolution with a carry factor
p^(floor((i+j)/p) - floor(i/p) - floor(j/p)) in {1, p}, which depends only
on (i mod p, j mod p), so products decompose into p^2 carry-free blocks.

The Frobenius phi fixes coefficients, sends u to u^p, and therefore sends
E^j/p^floor(j/p) to p^(j - floor(j/p)) * gamma^j with gamma = phi(E)/p.
Writing gamma = 1 + w with w = u^p/p, phi becomes a finite linear
combination of cached powers of w, which is how it is evaluated here.

Zexponents of the unit lambda_b live in Z[phi] (PhiExpPoly).
"""

from __future__ import annotations

from typing import Iterable, List, Optional, Sequence, Tuple

from .arith import (
    OFElem,
    PrimeContext,
    USeries,
    _of_add_raw,
    _of_mul_raw,
    _of_scale_raw,
    _of_sub_raw,
    _of_val_raw,
    _conv2_raw,
    _fold_w,
)
from .errors import NotAUnit, NotIntegral, NotInIdeal, PrecisionExhausted


class PhiExpPoly:
    """Integer polynomial in the formal Frobenius symbol phi.

    Records exponent data like g(phi) in identities g^(f(phi)) =
    prod_j phi^j(g)^(c_j); all operations are exact integer arithmetic.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable[int] = ()):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        self.c = tuple(c)

    @classmethod
    def const(cls, n: int) -> "PhiExpPoly":
        return cls((n,))

    @classmethod
    def phi_power(cls, j: int, scale: int = 1) -> "PhiExpPoly":
        return cls((0,) * j + (scale,))

    def __add__(self, other):
        n = max(len(self.c), len(other.c))
        a = list(self.c) + [0] * (n - len(self.c))
        b = list(other.c) + [0] * (n - len(other.c))
        return PhiExpPoly(x + y for x, y in zip(a, b))

    def __sub__(self, other):
        n = max(len(self.c), len(other.c))
        a = list(self.c) + [0] * (n - len(self.c))
        b = list(other.c) + [0] * (n - len(other.c))
        return PhiExpPoly(x - y for x, y in zip(a, b))

    def __neg__(self):
        return PhiExpPoly(-x for x in self.c)

    def scaled(self, n: int) -> "PhiExpPoly":
        return PhiExpPoly(n * x for x in self.c)

    def phi_shifted(self, j: int = 1) -> "PhiExpPoly":
        """Multiply by phi^j (composition with the Frobenius shift)."""
        if not self.c:
            return self
        return PhiExpPoly((0,) * j + self.c)

    def __eq__(self, other):
        return isinstance(other, PhiExpPoly) and self.c == other.c

    def __hash__(self):
        return hash(self.c)

    def is_zero(self) -> bool:
        return not self.c

    def terms(self) -> List[Tuple[int, int]]:
        return [(j, cj) for j, cj in enumerate(self.c) if cj]

    def serial(self) -> list:
        return list(self.c)

    def __repr__(self):
        if not self.c:
            return "PhiExpPoly(0)"
        parts = []
        for j, cj in self.terms():
            if j == 0:
                parts.append(str(cj))
            else:
                e = "phi" if j == 1 else f"phi^{j}"
                parts.append(f"{cj}*{e}" if cj != 1 else e)
        return "PhiExpPoly(" + " + ".join(parts) + ")"


# ---------------------------------------------------------------------------
# SElem
# ---------------------------------------------------------------------------


def _zero_coeffs(ctx):
    return [(0,) * ctx.r] * ctx.m


class SElem:
    """Element of p^(-d) S_F in canonical E-expansion at precision (M, prec)."""

    __slots__ = ("ctx", "c", "d", "prec")

    def __init__(self, ctx: PrimeContext, coeffs, d: int = 0, prec: Optional[int] = None):
        self.ctx = ctx
        self.d = d
        self.prec = ctx.nwork if prec is None else prec
        if self.prec < 1:
            raise PrecisionExhausted("SElem constructed at precision < 1")
        if d < 0:
            raise ValueError("denominator exponent must be >= 0")
        mod = ctx.ppow(self.prec)
        out = []
        for j in range(ctx.m):
            if j < len(coeffs):
                cj = coeffs[j]
                if isinstance(cj, OFElem):
                    cj = cj.c
                elif isinstance(cj, int):
                    cj = (cj,) + (0,) * (ctx.r - 1)
                out.append(tuple(v % mod for v in cj))
            else:
                out.append((0,) * ctx.r)
        self.c = tuple(out)

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, ctx, prec=None):
        return cls(ctx, (), 0, prec)

    @classmethod
    def one(cls, ctx, prec=None):
        return cls(ctx, (1,), 0, prec)

    @classmethod
    def from_int(cls, ctx, n, prec=None):
        return cls(ctx, (n,), 0, prec)

    @classmethod
    def from_of(cls, ctx, x: OFElem):
        return cls(ctx, (x,), 0, x.prec)

    @classmethod
    def e_pow(cls, ctx, k: int, prec=None):
        """Canonical form of E^k: coefficient p^floor(k/p) in slot k."""
        if k >= ctx.m:
            return cls.zero(ctx, prec)
        coeffs = [0] * k + [ctx.ppow(k // ctx.p)]
        return cls(ctx, coeffs, 0, prec)

    @classmethod
    def from_useries(cls, x: USeries) -> "SElem":
        """Embed O_F[[u]] into S_F (E-expansion; multiplies up, no division)."""
        ctx = x.ctx
        mod = ctx.ppow(x.prec)
        # b_j = sum_{l>=j} binom(l, j) (-p)^(l-j) a_l ; c_j = b_j p^floor(j/p)
        out = []
        for j in range(ctx.m):
            acc = (0,) * ctx.r
            sign = 1
            ppow = 1
            for l in range(j, ctx.m):
                a = x.c[l]
                if any(a):
                    s = (ctx.binom(l, j) * sign * ppow) % mod
                    if s:
                        acc = _of_add_raw(acc, _of_scale_raw(a, s, mod), mod)
                sign = -sign
                ppow *= ctx.p
                if ppow % mod == 0 and l >= j + x.prec:
                    break
            scale = ctx.ppow(j // ctx.p)
            out.append(_of_scale_raw(acc, scale, mod))
        return cls(ctx, out, 0, x.prec)

    # -- basic queries -------------------------------------------------------

    def coeff(self, j: int) -> OFElem:
        return OFElem(self.ctx, self.c[j], self.prec)

    def is_zero(self) -> bool:
        mod = self.ctx.ppow(self.prec)
        return all(all(v % mod == 0 for v in x) for x in self.c)

    def slot_val(self, j: int) -> Optional[int]:
        """p-adic valuation of the canonical coefficient c_j (None = >= prec)."""
        return _of_val_raw(self.ctx, self.c[j], self.prec)

    def slot_val_at_least(self, j: int, t: int) -> bool:
        """True when c_j is indistinguishable from a p^t-multiple."""
        q = min(t, self.prec)
        mod = self.ctx.ppow(q)
        return all(v % mod == 0 for v in self.c[j])

    def is_unit(self) -> bool:
        return self.d == 0 and self.slot_val(0) == 0

    def is_integral(self, margin: int = 0) -> bool:
        """Membership test for p^margin * O_F[[u]] inside p^(-d) S_F."""
        for j in range(self.ctx.m):
            if not self.slot_val_at_least(j, j // self.ctx.p + self.d + margin):
                return False
        return True

    # -- arithmetic ----------------------------------------------------------

    def _lift_d(self, d_new: int) -> "SElem":
        """Rescale the numerator so the element is expressed over p^(-d_new)."""
        if d_new == self.d:
            return self
        if d_new < self.d:
            raise ValueError("use normalize_d to lower d")
        t = d_new - self.d
        s = self.ctx.ppow(t)
        prec = self.prec + t
        mod = self.ctx.ppow(prec)
        return SElem(self.ctx, [tuple((v * s) % mod for v in x) for x in self.c],
                     d_new, prec)

    def __add__(self, other):
        if isinstance(other, int):
            other = SElem.from_int(self.ctx, other, self.prec)
        if not isinstance(other, SElem):
            return NotImplemented
        d = max(self.d, other.d)
        a, b = self._lift_d(d), other._lift_d(d)
        prec = min(a.prec, b.prec)
        mod = self.ctx.ppow(prec)
        return SElem(self.ctx, [_of_add_raw(x, y, mod) for x, y in zip(a.c, b.c)],
                     d, prec)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, int):
            other = SElem.from_int(self.ctx, other, self.prec)
        if not isinstance(other, SElem):
            return NotImplemented
        d = max(self.d, other.d)
        a, b = self._lift_d(d), other._lift_d(d)
        prec = min(a.prec, b.prec)
        mod = self.ctx.ppow(prec)
        return SElem(self.ctx, [_of_sub_raw(x, y, mod) for x, y in zip(a.c, b.c)],
                     d, prec)

    def __neg__(self):
        mod = self.ctx.ppow(self.prec)
        return SElem(self.ctx, [tuple((-v) % mod for v in x) for x in self.c],
                     self.d, self.prec)

    def __mul__(self, other):
        if isinstance(other, int):
            other = SElem.from_int(self.ctx, other, self.prec)
        if isinstance(other, OFElem):
            prec = min(self.prec, other.prec)
            mod = self.ctx.ppow(prec)
            return SElem(self.ctx,
                         [_of_mul_raw(self.ctx, x, other.c, mod) for x in self.c],
                         self.d, prec)
        if not isinstance(other, SElem):
            return NotImplemented
        return s_mul(self, other)

    __rmul__ = __mul__

    def __eq__(self, other):
        if isinstance(other, int):
            other = SElem.from_int(self.ctx, other, self.prec)
        if not isinstance(other, SElem):
            return NotImplemented
        return (self - other).is_zero()

    def __hash__(self):
        raise TypeError("SElem compares at precision; not hashable")

    def mul_e_pow(self, k: int) -> "SElem":
        """Multiply by E^k (exact; shifts slots with the canonical carry)."""
        ctx = self.ctx
        mod = ctx.ppow(self.prec)
        out = _zero_coeffs(ctx)
        for j in range(ctx.m - k):
            x = self.c[j]
            if any(x):
                carry = (j + k) // ctx.p - j // ctx.p
                out[j + k] = _of_scale_raw(x, ctx.ppow(carry), mod)
        return SElem(ctx, out, self.d, self.prec)

    def div_e_pow(self, k: int) -> "SElem":
        """Exact division by E^k, raising d when the carries demand it.

        Requires the slots below k to vanish at precision.  The undone
        carries p^(floor((j+k)/p) - floor(j/p)) cost their maximum over the
        occupied slots in precision; elements with the full Fil^k profile
        lose only that bounded amount (<= ceil(k/p)).
        """
        ctx = self.ctx
        if k == 0:
            return self
        for j in range(min(k, ctx.m)):
            if not self.slot_val_at_least(j, self.prec):
                raise NotIntegral(f"slot {j} nonzero; element not divisible by E^{k}")
        # delta_j = floor((j+k)/p) - floor(j/p) is the carry to undo at slot j
        extra = 0
        dmax_used = 0
        for j in range(ctx.m - k):
            if any(self.c[j + k]):
                delta = (j + k) // ctx.p - j // ctx.p
                dmax_used = max(dmax_used, delta)
                if delta:
                    v = self.slot_val(j + k)
                    extra = max(extra, delta - (v if v is not None else self.prec))
        prec = self.prec + extra - dmax_used
        if prec < 1:
            raise PrecisionExhausted(f"division by E^{k} exhausts precision")
        mod = ctx.ppow(prec)
        out = _zero_coeffs(ctx)
        for j in range(ctx.m - k):
            x = self.c[j + k]
            if any(x):
                delta = (j + k) // ctx.p - j // ctx.p
                scale = extra - delta
                if scale >= 0:
                    out[j] = tuple((v * ctx.ppow(scale)) % mod for v in x)
                else:
                    pt = ctx.ppow(-scale)
                    if any(v % pt for v in x):
                        raise NotIntegral("internal: deficit scan missed a slot")
                    out[j] = tuple((v // pt) % mod for v in x)
        return SElem(ctx, out, self.d + extra, prec)

    def mul_p_pow(self, t: int) -> "SElem":
        """Multiply by p^t using the d-bookkeeping (lowers d first)."""
        if t <= self.d:
            return SElem(self.ctx, self.c, self.d - t, self.prec)
        s = self.ctx.ppow(t - self.d)
        prec = self.prec + (t - self.d)
        mod = self.ctx.ppow(prec)
        return SElem(self.ctx, [tuple((v * s) % mod for v in x) for x in self.c],
                     0, prec)

    def normalize_d(self, target: int = 0) -> "SElem":
        """Divide the numerator by p^(d - target); an honest precision drop.

        Raises NotIntegral when the element genuinely lies outside
        p^(-target) S_F, PrecisionExhausted when the question is undecidable.
        """
        t = self.d - target
        if t <= 0:
            return self
        if self.prec <= t:
            raise PrecisionExhausted(
                f"cannot certify division by p^{t} at precision {self.prec}")
        pt = self.ctx.ppow(t)
        out = []
        for x in self.c:
            if any(v % pt for v in x):
                raise NotIntegral(f"denominator p^{t} does not divide the numerator")
            out.append(tuple(v // pt for v in x))
        return SElem(self.ctx, out, target, self.prec - t)

    def reduce_d(self) -> "SElem":
        """Lower d as far as the numerator provably allows (exact)."""
        t = 0
        p = self.ctx.p
        while t < self.d and self.prec - t > 1:
            pt = self.ctx.ppow(t + 1)
            if all(all(v % pt == 0 for v in x) for x in self.c):
                t += 1
            else:
                break
        return self.normalize_d(self.d - t) if t else self

    def at_prec(self, prec: int) -> "SElem":
        if prec > self.prec:
            raise PrecisionExhausted("cannot raise precision")
        return SElem(self.ctx, self.c, self.d, prec)

    # -- slicing (canonical slots) -------------------------------------------

    def slice_below(self, j0: int) -> "SElem":
        return SElem(self.ctx, self.c[:j0], self.d, self.prec)

    def slice_from(self, j0: int) -> "SElem":
        coeffs = [(0,) * self.ctx.r] * j0 + list(self.c[j0:])
        return SElem(self.ctx, coeffs, self.d, self.prec)

    # -- conversions ----------------------------------------------------------

    def to_useries(self) -> USeries:
        """Convert an integral element to O_F[[u]] coordinates.

        Costs floor((M-1)/p) digits of precision: canonical coefficients
        over-weight high slots by exactly that much.
        """
        x = self.normalize_d(0)
        ctx = self.ctx
        dmax = (ctx.m - 1) // ctx.p
        if x.prec <= dmax:
            raise PrecisionExhausted("precision too low for u-coordinates")
        prec = x.prec - dmax
        bigmod = ctx.ppow(x.prec + dmax)
        pd = ctx.ppow(dmax)
        out = []
        for l in range(ctx.m):
            acc = (0,) * ctx.r
            for j in range(l, ctx.m):
                cj = x.c[j]
                if any(cj):
                    # term binom(j,l) p^(j-l) c_j / p^floor(j/p); common den p^dmax
                    s = (ctx.binom(j, l) * ctx.ppow(j - l + dmax - j // ctx.p)) % bigmod
                    if s:
                        acc = _of_add_raw(acc, _of_scale_raw(cj, s, bigmod), bigmod)
            if any(v % pd for v in acc):
                raise NotIntegral("element is not in O_F[[u]]")
            out.append(tuple((v // pd) % ctx.ppow(prec) for v in acc))
        return USeries(ctx, out, prec)

    def residue(self):
        """Mod-p image in k_F[[u]] (requires integrality)."""
        return self.to_useries().residue()

    def to_block_form(self) -> List[List[OFElem]]:
        """Coefficients alpha_j of x = sum_j alpha_j(u) (E^p/p)^j, deg < p.

        The alpha_j are returned in u-coordinates, matching the preparation
        step's convention; `from_block_form` inverts exactly.
        """
        if self.d != 0:
            raise NotIntegral("block form is defined for d = 0 elements")
        ctx = self.ctx
        mod = ctx.ppow(self.prec)
        out = []
        nblocks = (ctx.m + ctx.p - 1) // ctx.p
        for blk in range(nblocks):
            epoly = []
            for s in range(ctx.p):
                j = blk * ctx.p + s
                epoly.append(self.c[j] if j < ctx.m else (0,) * ctx.r)
            # E = u + p: a_t = sum_{s>=t} binom(s,t) p^(s-t) e_s
            upoly = []
            for t in range(ctx.p):
                acc = (0,) * ctx.r
                for s in range(t, ctx.p):
                    if any(epoly[s]):
                        sc = (ctx.binom(s, t) * ctx.ppow(s - t)) % mod
                        acc = _of_add_raw(acc, _of_scale_raw(epoly[s], sc, mod), mod)
                upoly.append(OFElem(ctx, acc, self.prec))
            out.append(upoly)
        return out

    @classmethod
    def from_block_form(cls, ctx, blocks, prec=None) -> "SElem":
        """Inverse of `to_block_form` (u = E - p within each block)."""
        prec = ctx.nwork if prec is None else prec
        mod = ctx.ppow(prec)
        coeffs = _zero_coeffs(ctx)
        for blk, upoly in enumerate(blocks):
            for s in range(ctx.p):
                j = blk * ctx.p + s
                if j >= ctx.m:
                    break
                acc = (0,) * ctx.r
                for t in range(s, ctx.p):
                    a = upoly[t].c if isinstance(upoly[t], OFElem) else upoly[t]
                    if any(a):
                        sign = 1 if (t - s) % 2 == 0 else -1
                        sc = (sign * ctx.binom(t, s) * ctx.ppow(t - s)) % mod
                        acc = _of_add_raw(acc, _of_scale_raw(a, sc, mod), mod)
                coeffs[j] = acc
        return cls(ctx, coeffs, 0, prec)

    def serial(self) -> dict:
        """Debug serialization: (j, coefficient, floor(j/p)) triples."""
        trips = [[j, list(x), j // self.ctx.p]
                 for j, x in enumerate(self.c) if any(x)]
        return {"triples": trips, "d": self.d, "prec": self.prec}

    def __repr__(self):
        nz = [(j, list(x)) for j, x in enumerate(self.c) if any(x)]
        body = ", ".join(f"E^{j}:{x}" for j, x in nz[:5])
        more = "..." if len(nz) > 5 else ""
        return f"SElem({body}{more}; d={self.d}, prec={self.prec})"


# ---------------------------------------------------------------------------
# Multiplication
# ---------------------------------------------------------------------------


def s_mul(x: SElem, y: SElem) -> SElem:
    """Canonical-form product with p-power carries.

    (E^a/p^floor(a/p)) (E^b/p^floor(b/p)) = p^car E^(a+b)/p^floor((a+b)/p)
    with car in {0, 1} depending only on (a mod p, b mod p), so the product
    splits into p^2 plain convolutions.
    """
    ctx = x.ctx
    p, m = ctx.p, ctx.m
    prec = min(x.prec, y.prec)
    mod = ctx.ppow(prec)
    out = [[0] * ctx.r for _ in range(m)]
    xs = [x.c[s::p] for s in range(p)]
    ys = [y.c[t::p] for t in range(p)]
    x_live = [any(any(c) for c in blk) for blk in xs]
    y_live = [any(any(c) for c in blk) for blk in ys]
    for s in range(p):
        if not x_live[s]:
            continue
        for t in range(p):
            if not y_live[t]:
                continue
            base = s + t
            carry = 0
            if base >= p:
                base -= p
                carry = 1
            # slot of block-index q: p*(q + carry) + base
            max_q = (m - 1 - base) // p - carry
            if max_q < 0:
                continue
            conv = _conv2_raw(ctx, xs[s], ys[t], mod, max_q + 1)
            pc = ctx.ppow(carry)
            for q, slot in enumerate(conv):
                j = p * (q + carry) + base
                if j >= m:
                    break
                folded = _fold_w(ctx, slot, mod)
                row = out[j]
                for i in range(ctx.r):
                    row[i] = (row[i] + folded[i] * pc) % mod
    return SElem(ctx, [tuple(row) for row in out], x.d + y.d, prec)


# ---------------------------------------------------------------------------
# gamma, w-powers and the Frobenius
# ---------------------------------------------------------------------------


def gamma(ctx: PrimeContext) -> SElem:
    """The unit gamma = phi(E)/p = (u^p + p)/p, in canonical E-expansion."""
    p = ctx.p
    coeffs = []
    for t in range(min(p, ctx.m)):
        sign = 1 if (p - t) % 2 == 0 else -1
        val = sign * ctx.binom(p, t) * ctx.ppow(p - t - 1)
        if t == 0:
            val += 1
        coeffs.append(val)
    if p < ctx.m:
        coeffs += [1]
    return SElem(ctx, coeffs, 0, ctx.nwork)


def _w_power_cache(ctx: PrimeContext, e: int) -> List[SElem]:
    """Powers of w_e = phi^(e-1)(gamma) - 1 until they vanish at (M, nwork)."""
    def build():
        g = gamma(ctx)
        for _ in range(e - 1):
            g = s_frobenius(g)
        w = g - SElem.one(ctx)
        powers = [SElem.one(ctx)]
        cur = SElem.one(ctx)
        while True:
            cur = s_mul(cur, w)
            if cur.is_zero():
                break
            powers.append(cur)
            if len(powers) > ctx.m + ctx.nwork + 4:
                raise RuntimeError("w-power cache failed to terminate")
        return powers

    return ctx.cache(("wpow", e), build)


def s_frobenius(x: SElem, times: int = 1) -> SElem:
    """phi^times on S_F: phi(E^j/p^floor(j/p)) = p^(j-floor(j/p)) gamma_e^j,
    evaluated through the cached powers of w_e = gamma_e - 1."""
    if times == 0:
        return x
    ctx = x.ctx
    if times > 1:
        # phi^e in one pass through the w_e-power cache
        powers = _w_power_cache(ctx, times)
    else:
        powers = _w_power_cache(ctx, 1)
    L = len(powers)
    prec = x.prec
    mod = ctx.ppow(prec)
    # T_l = sum_j c_j p^(j - floor(j/p)) binom(j, l)
    T = [(0,) * ctx.r for _ in range(L)]
    for j in range(ctx.m):
        cj = x.c[j]
        if not any(cj):
            continue
        pw = ctx.ppow(j - j // ctx.p) % mod
        if pw == 0:
            continue
        scaled = _of_scale_raw(cj, pw, mod)
        for l in range(min(j, L - 1) + 1):
            b = ctx.binom(j, l) % mod
            if b:
                T[l] = _of_add_raw(T[l], _of_scale_raw(scaled, b, mod), mod)
    out = [[0] * ctx.r for _ in range(ctx.m)]
    for l in range(L):
        tl = T[l]
        if not any(tl):
            continue
        wc = powers[l].c
        for j in range(ctx.m):
            wj = wc[j]
            if any(wj):
                prod = _of_mul_raw(ctx, wj, tl, mod)
                row = out[j]
                for i in range(ctx.r):
                    row[i] = (row[i] + prod[i]) % mod
    return SElem(ctx, [tuple(row) for row in out], x.d, prec)


def s_invert(x: SElem, seed: Optional[SElem] = None) -> SElem:
    """Inverse of a unit of S_F by Newton iteration (multiplications only).

    `seed` warm-starts the iteration (useful when inverting a slowly
    changing unit repeatedly, as the descent loop does).
    """
    x = x.reduce_d()
    if x.d != 0 or x.slot_val(0) != 0:
        raise NotAUnit("s_invert: element is not a unit of S_F")
    ctx = x.ctx
    y = seed if seed is not None and seed.d == 0 \
        else SElem.from_of(ctx, x.coeff(0).unit_inverse())
    two = SElem.from_int(ctx, 2, x.prec)
    for _ in range(ctx.m.bit_length() + x.prec.bit_length() + 4):
        prod = s_mul(x, y)
        if prod == SElem.one(ctx, x.prec):
            return y
        y = s_mul(y, two - prod)
    raise RuntimeError("s_invert failed to converge; not a unit?")


# ---------------------------------------------------------------------------
# lambda_b and phi-polynomial powers
# ---------------------------------------------------------------------------


def lambda_b(b: int, ctx: PrimeContext) -> SElem:
    """The unit prod_{n>=0} phi^(bn)(gamma), truncated at stabilization."""
    return _lambda_data(ctx, b)[0]


def lambda_truncation_index(b: int, ctx: PrimeContext) -> int:
    """Number of non-trivial factors kept in lambda_b at this precision."""
    return _lambda_data(ctx, b)[1]


def _lambda_data(ctx, b):
    def build():
        one = SElem.one(ctx)
        lam = gamma(ctx)
        fac = lam
        nstar = 1
        while True:
            fac = s_frobenius(fac, times=b)
            if fac == one:
                break
            lam = s_mul(lam, fac)
            nstar += 1
            if nstar > 8 * (ctx.m + ctx.nwork):
                raise RuntimeError("lambda_b failed to stabilize")
        return lam, nstar

    return ctx.cache(("lambda", b), build)


def _phi_lambda(ctx, b, j, inverse=False):
    def build():
        lam = lambda_b(b, ctx)
        for _ in range(j):
            lam = s_frobenius(lam)
        return lam

    key = ("phi_lambda", b, j)
    lam = ctx.cache(key, build)
    if not inverse:
        return lam
    return ctx.cache(key + ("inv",), lambda: s_invert(lam))


def lambda_power(e: PhiExpPoly, b: int, ctx: PrimeContext) -> SElem:
    """lambda_b^(e(phi)) = prod_j phi^j(lambda_b)^(e_j); always a unit."""
    out = SElem.one(ctx)
    for j, cj in e.terms():
        base = _phi_lambda(ctx, b, j, inverse=cj < 0)
        out = s_mul(out, _s_int_pow(base, abs(cj)))
    return out


def _s_int_pow(x: SElem, n: int) -> SElem:
    out = SElem.one(x.ctx, x.prec)
    acc = x
    while n:
        if n & 1:
            out = s_mul(out, acc)
        n >>= 1
        if n:
            acc = s_mul(acc, acc)
    return out


# ---------------------------------------------------------------------------
# Filtration and ideal splitting
# ---------------------------------------------------------------------------


def fil_membership(x: SElem, j: int) -> bool:
    """Membership in Fil^j S_F = E^j S_F, decided on the visible window.

    Canonical criterion: c_i = 0 for i < j and
    val(c_i) >= floor(i/p) - floor((i-j)/p) for i >= j.
    """
    x = x.reduce_d()
    if x.d != 0:
        return False
    ctx = x.ctx
    for i in range(min(j, ctx.m)):
        if not x.slot_val_at_least(i, x.prec):
            return False
    for i in range(j, ctx.m):
        need = i // ctx.p - (i - j) // ctx.p
        if not x.slot_val_at_least(i, need):
            return False
    return True


def in_p_pow_s(x: SElem, t: int) -> bool:
    """Membership in p^t S_F (slotwise valuation >= t after normalization)."""
    x = x.reduce_d()
    if x.d != 0:
        return False
    return all(x.slot_val_at_least(j, t) for j in range(x.ctx.m))


def in_i_c(x: SElem, c: int) -> bool:
    """Membership in I_c; for unramified F this collapses to p^c S_F."""
    return in_p_pow_s(x, c)


def in_j_c(x: SElem, c: int) -> bool:
    """Slotwise membership test for J_c = p Fil^(cp) S_F + E Fil^(cp) S_F."""
    x = x.reduce_d()
    if x.d != 0:
        return False
    ctx = x.ctx
    cp = c * ctx.p
    for j in range(min(cp, ctx.m)):
        if not x.slot_val_at_least(j, x.prec):
            return False
    for j in range(cp, ctx.m):
        need = c + 1 if (j == cp or j % ctx.p == 0) else c
        if not x.slot_val_at_least(j, need):
            return False
    return True


class IdealSplit:
    """Exact decomposition x = integral + small produced by ideal_split."""

    __slots__ = ("integral", "small", "c", "small_in_jc")

    def __init__(self, integral, small, c, small_in_jc):
        self.integral = integral
        self.small = small
        self.c = c
        self.small_in_jc = small_in_jc


def ideal_split(x: SElem, c: int, split_only: bool = False) -> IdealSplit:
    """Split x in I_c as y + z with y in p O_F[[u]] and z in Fil^(cp) S_F.

    y is the polynomial head (slots below cp), which the I_c membership
    makes a p-multiple of an E-polynomial; z is the tail.  `small_in_jc`
    records whether z additionally passes the J_c slot test (for unramified
    F the tail generally lands in Fil^(cp) S_F; see the notes in the
    repository docs).  Reassembly y + z = x is exact.
    """
    x = x.reduce_d()
    if not split_only and not in_i_c(x, c):
        raise NotInIdeal(f"element not in I_{c} at precision")
    cp = c * x.ctx.p
    y = x.slice_below(cp)
    z = x.slice_from(cp)
    return IdealSplit(y, z, c, in_j_c(z, c))

"""Exact truncated arithmetic in unramified p-adic coefficient rings.

O_F, the unramified extension of Z_p of degree r, is represented as
Z[w]/(g(w), p^prec) for a fixed monic degree-r lift g of an irreducible
polynomial over F_p; the lift is chosen deterministically per context and
recorded in reports.  Power series live in O_F[[u]] truncated at u^M, and
their residue images in k_F[[u]].

Precision is absolute and per element: an element stored at precision q is
known modulo p^q.  Binary operations take the minimum of the operand
precisions; division by p lowers precision.  Contexts carry a working
precision `nwork` >= the reporting precision N so that the divisions
performed downstream still leave N certified digits.

All values are immutable after construction and safe to share across
threads.
"""

from __future__ import annotations

from typing import Optional, Sequence

from .errors import Degenerate, NotAUnit, NotIntegral, PrecisionExhausted

# ---------------------------------------------------------------------------
# F_p[x] helpers (residue polynomial search)
# ---------------------------------------------------------------------------


def _fp_trim(a):
    while a and a[-1] == 0:
        a.pop()
    return a


def _fp_mulmod(a, b, g, p):
    # a, b, g: coefficient lists over F_p, g monic
    out = [0] * (len(a) + len(b) - 1) if a and b else []
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] = (out[i + j] + x * y) % p
    return _fp_divmod(out, g, p)[1]


def _fp_divmod(a, g, p):
    a = list(a)
    dg = len(g) - 1
    q = [0] * max(len(a) - dg, 0)
    inv_lead = pow(g[-1], -1, p)
    for i in range(len(a) - 1, dg - 1, -1):
        c = a[i] % p
        if c:
            c = (c * inv_lead) % p
            q[i - dg] = c
            for j, gj in enumerate(g):
                a[i - dg + j] = (a[i - dg + j] - c * gj) % p
    return _fp_trim(q), _fp_trim(a[:dg])


def _fp_powmod(base, e, g, p):
    result = [1]
    acc = _fp_divmod(base, g, p)[1]
    while e:
        if e & 1:
            result = _fp_mulmod(result, acc, g, p)
        acc = _fp_mulmod(acc, acc, g, p)
        e >>= 1
    return result


def _fp_gcd(a, b, p):
    a, b = _fp_trim(list(a)), _fp_trim(list(b))
    while b:
        a, b = b, _fp_divmod(a, b, p)[1]
    return a


def _prime_factors(n):
    out, d = [], 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _is_irreducible(g, p):
    r = len(g) - 1
    x = [0, 1]
    # x^(p^r) == x mod g
    t = _fp_powmod(x, p ** r, g, p)
    if _fp_trim(list(t)) != [0, 1]:
        return False
    for q in _prime_factors(r):
        t = _fp_powmod(x, p ** (r // q), g, p)
        diff = list(t) + [0] * (2 - len(t))
        diff[1] = (diff[1] - 1) % p
        if len(_fp_gcd(_fp_trim(diff), g, p)) > 1:
            return False
    return True


def find_residue_poly(p: int, r: int) -> tuple:
    """Deterministically pick the monic degree-r lift used for O_F.

    Enumerates lower coefficient tuples in base-p counting order and takes
    the first irreducible polynomial; the choice is recorded in reports so
    runs are reproducible.
    """
    if r == 1:
        return (0, 1)
    m = 0
    while True:
        coeffs = []
        t = m
        for _ in range(r):
            coeffs.append(t % p)
            t //= p
        g = coeffs + [1]
        if g[0] != 0 and _is_irreducible(g, p):
            return tuple(g)
        m += 1


# ---------------------------------------------------------------------------
# Prime context
# ---------------------------------------------------------------------------


def _is_prime(n):
    if n < 2:
        return False
    d = 2
    while d * d <= n:
        if n % d == 0:
            return False
        d += 1
    return True


class PrimeContext:
    """Shared parameters: p, f, r, precisions, and the residue polynomial.

    `n` is the reporting p-precision, `m` the u/E-adic truncation order.
    `nwork` is the internal construction precision; the default guard of
    ceil((m-1)/p) + 4 extra digits covers the canonical-form denominators
    so that conversions to O_F[[u]] coordinates stay certified at `n`.
    Pipelines that divide further (preparation, descent) request a larger
    guard through `preflight_precision`.
    """

    def __init__(self, p: int, f: int, n: int, m: int, r: Optional[int] = None,
                 nwork: Optional[int] = None):
        if not _is_prime(p) or p < 3:
            raise ValueError(f"p must be an odd prime, got {p}")
        if f < 1:
            raise ValueError("f must be >= 1")
        r = f if r is None else r
        if r % f != 0:
            raise ValueError(f"r = {r} must be a multiple of f = {f}")
        if n < 1 or m < 1:
            raise ValueError("precisions N, M must be >= 1")
        self.p = p
        self.f = f
        self.r = r
        self.n = n
        self.m = m
        self.nwork = nwork if nwork is not None else n + (m - 1 + p - 1) // p + 4
        if self.nwork < n:
            raise ValueError("nwork must be >= n")
        self.residue_poly = find_residue_poly(p, r)
        self._ppows = [1]
        self._wmod = self.ppow(self.nwork)
        # reduction rows: w^(r+t) mod (g, p^nwork) for t = 0..r-2
        self._red_rows = self._build_red_rows()
        self._binom_rows = [(1,)]
        self._caches = {}

    def ppow(self, k: int) -> int:
        while len(self._ppows) <= k:
            self._ppows.append(self._ppows[-1] * self.p)
        return self._ppows[k]

    def _build_red_rows(self):
        """Reduction rows for w^(r+t), t = 0..r-2, computed mod p^nwork."""
        r, mod, g = self.r, self._wmod, self.residue_poly
        if r == 1:
            return []
        base = [(-g[i]) % mod for i in range(r)]  # w^r
        rows = [tuple(base)]
        cur = base
        for _ in range(r - 2):
            carry = cur[-1]
            nxt = [0] + cur[:-1]
            if carry:
                for i in range(r):
                    nxt[i] = (nxt[i] + carry * base[i]) % mod
            rows.append(tuple(nxt))
            cur = nxt
        return rows

    def binom(self, nn: int, kk: int) -> int:
        """binom(nn, kk) mod p^nwork via a cached Pascal triangle."""
        if kk < 0 or kk > nn:
            return 0
        mod = self._wmod
        while len(self._binom_rows) <= nn:
            prev = self._binom_rows[-1]
            row = [1]
            for i in range(1, len(prev)):
                row.append((prev[i - 1] + prev[i]) % mod)
            row.append(1)
            self._binom_rows.append(tuple(row))
        return self._binom_rows[nn][kk]

    def cache(self, key, builder):
        if key not in self._caches:
            self._caches[key] = builder()
        return self._caches[key]

    def fingerprint(self) -> dict:
        return {
            "p": self.p,
            "f": self.f,
            "r": self.r,
            "N": self.n,
            "M": self.m,
            "N_work": self.nwork,
            "residue_poly": list(self.residue_poly),
        }

    def __repr__(self):
        return (f"PrimeContext(p={self.p}, f={self.f}, r={self.r}, "
                f"N={self.n}, M={self.m}, nwork={self.nwork})")


# ---------------------------------------------------------------------------
# Raw coefficient kernels (tuples of ints, length r)
# ---------------------------------------------------------------------------


def _of_mul_raw(ctx, a, b, mod):
    r = ctx.r
    if r == 1:
        return ((a[0] * b[0]) % mod,)
    out = [0] * (2 * r - 1)
    for i in range(r):
        x = a[i]
        if x:
            for j in range(r):
                out[i + j] += x * b[j]
    rows = ctx._red_rows
    for idx in range(2 * r - 2, r - 1, -1):
        c = out[idx]
        if c:
            row = rows[idx - r]
            for i in range(r):
                out[i] += c * row[i]
            out[idx] = 0
    return tuple(v % mod for v in out[:r])


def _of_add_raw(a, b, mod):
    return tuple((x + y) % mod for x, y in zip(a, b))


def _of_sub_raw(a, b, mod):
    return tuple((x - y) % mod for x, y in zip(a, b))


def _of_scale_raw(a, s, mod):
    return tuple((x * s) % mod for x in a)


def _of_val_raw(ctx, a, prec):
    """Minimum p-adic valuation of the coefficients; None when >= prec."""
    best = None
    for x in a:
        x %= ctx.ppow(prec)
        if x == 0:
            continue
        v = 0
        while x % ctx.p == 0:
            x //= ctx.p
            v += 1
            if best is not None and v >= best:
                break
        best = v if best is None else min(best, v)
        if best == 0:
            return 0
    return best


# ---------------------------------------------------------------------------
# OFElem
# ---------------------------------------------------------------------------


class OFElem:
    """An element of O_F at an absolute p-adic precision."""

    __slots__ = ("ctx", "c", "prec")

    def __init__(self, ctx: PrimeContext, coeffs: Sequence[int], prec: Optional[int] = None):
        self.ctx = ctx
        self.prec = ctx.nwork if prec is None else prec
        if self.prec < 1:
            raise PrecisionExhausted("OFElem constructed at precision < 1")
        mod = ctx.ppow(self.prec)
        c = list(coeffs)
        if len(c) > ctx.r:
            raise ValueError("coefficient vector longer than the residue degree")
        c += [0] * (ctx.r - len(c))
        self.c = tuple(v % mod for v in c)

    # -- constructors -------------------------------------------------------

    @classmethod
    def from_int(cls, ctx, value, prec=None):
        return cls(ctx, (value,), prec)

    @classmethod
    def zero(cls, ctx, prec=None):
        return cls(ctx, (), prec)

    @classmethod
    def one(cls, ctx, prec=None):
        return cls(ctx, (1,), prec)

    # -- arithmetic ---------------------------------------------------------

    def _join(self, other):
        if isinstance(other, int):
            other = OFElem.from_int(self.ctx, other, self.prec)
        if other.ctx is not self.ctx:
            raise ValueError("mixed contexts")
        prec = min(self.prec, other.prec)
        return other, prec, self.ctx.ppow(prec)

    def __add__(self, other):
        if not isinstance(other, (int, OFElem)):
            return NotImplemented
        other, prec, mod = self._join(other)
        return OFElem(self.ctx, _of_add_raw(self.c, other.c, mod), prec)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, (int, OFElem)):
            return NotImplemented
        other, prec, mod = self._join(other)
        return OFElem(self.ctx, _of_sub_raw(self.c, other.c, mod), prec)

    def __rsub__(self, other):
        if not isinstance(other, int):
            return NotImplemented
        return OFElem.from_int(self.ctx, other, self.prec) - self

    def __mul__(self, other):
        if not isinstance(other, (int, OFElem)):
            return NotImplemented
        other, prec, mod = self._join(other)
        return OFElem(self.ctx, _of_mul_raw(self.ctx, self.c, other.c, mod), prec)

    __rmul__ = __mul__

    def __neg__(self):
        mod = self.ctx.ppow(self.prec)
        return OFElem(self.ctx, tuple((-x) % mod for x in self.c), self.prec)

    def __eq__(self, other):
        if isinstance(other, int):
            other = OFElem.from_int(self.ctx, other, self.prec)
        if not isinstance(other, OFElem):
            return NotImplemented
        prec = min(self.prec, other.prec)
        mod = self.ctx.ppow(prec)
        return all((x - y) % mod == 0 for x, y in zip(self.c, other.c))

    def __hash__(self):
        raise TypeError("OFElem compares at precision; not hashable")

    def is_zero(self) -> bool:
        mod = self.ctx.ppow(self.prec)
        return all(x % mod == 0 for x in self.c)

    def valuation(self) -> Optional[int]:
        """p-adic valuation; None means indistinguishable from 0 (>= prec)."""
        return _of_val_raw(self.ctx, self.c, self.prec)

    def is_unit(self) -> bool:
        return self.valuation() == 0

    def unit_inverse(self) -> "OFElem":
        """Inverse of a unit, exact at this element's precision."""
        if not self.is_unit():
            raise NotAUnit("of_invert: element has positive valuation")
        ctx, p = self.ctx, self.ctx.p
        # invert mod p via extended Euclid in F_p[x], then Hensel-lift
        g = list(ctx.residue_poly)
        a = _fp_trim([x % p for x in self.c])
        inv = _fp_poly_invmod(a, g, p)
        y = OFElem(ctx, tuple(inv) + (0,) * (ctx.r - len(inv)), 1)
        known = 1
        while known < self.prec:
            known = min(2 * known, self.prec)
            y = OFElem(ctx, y.c, known)
            y = y * (OFElem.from_int(ctx, 2, known) - OFElem(ctx, self.c, known) * y)
        out = y * OFElem.one(ctx, self.prec)
        return out

    def times_p_pow(self, t: int) -> "OFElem":
        """Multiply by p^t (t >= 0); gains t digits up to nwork."""
        prec = min(self.prec + t, self.ctx.nwork)
        s = self.ctx.ppow(t)
        mod = self.ctx.ppow(prec)
        return OFElem(self.ctx, tuple((x * s) % mod for x in self.c), prec)

    def div_p_pow(self, t: int) -> "OFElem":
        """Exact division by p^t; lowers precision by t."""
        if t == 0:
            return self
        if self.prec <= t:
            raise PrecisionExhausted(f"cannot divide by p^{t} at precision {self.prec}")
        pt = self.ctx.ppow(t)
        if any(x % pt for x in self.c):
            raise NotIntegral(f"element not divisible by p^{t}")
        return OFElem(self.ctx, tuple(x // pt for x in self.c), self.prec - t)

    def at_prec(self, prec: int) -> "OFElem":
        if prec > self.prec:
            raise PrecisionExhausted("cannot raise precision")
        return OFElem(self.ctx, self.c, prec)

    def residue(self) -> tuple:
        """Image in k_F as a coefficient tuple mod p."""
        return tuple(x % self.ctx.p for x in self.c)

    def lift_centered(self) -> tuple:
        return self.c

    def serial(self) -> dict:
        return {"c": list(self.c), "prec": self.prec}

    def __repr__(self):
        return f"OFElem({list(self.c)} @p^{self.prec})"


def _fp_poly_invmod(a, g, p):
    """Inverse of a mod (g, p) by extended Euclid over F_p[x]."""
    # maintain r_i = s_i * a (mod g), starting from r0 = g, r1 = a
    r0, r1 = list(g), _fp_trim(list(a))
    s0, s1 = [], [1]
    while len(r1) > 1:
        q, rem = _fp_divmod(r0, r1, p)
        r0, r1 = r1, rem
        qs1 = [0] * (len(q) + len(s1) - 1) if q and s1 else []
        for i, x in enumerate(q):
            for j, y in enumerate(s1):
                qs1[i + j] = (qs1[i + j] + x * y) % p
        new_s = [0] * max(len(s0), len(qs1))
        for i in range(len(new_s)):
            v0 = s0[i] if i < len(s0) else 0
            v1 = qs1[i] if i < len(qs1) else 0
            new_s[i] = (v0 - v1) % p
        s0, s1 = s1, _fp_trim(new_s)
    if not r1:
        raise NotAUnit("not invertible mod p")
    lead_inv = pow(r1[0], -1, p)
    return [(x * lead_inv) % p for x in s1]


def of_valuation(x: OFElem):
    """Spec operation: min p-adic valuation; None encodes ">= prec"."""
    return x.valuation()


def of_invert(x: OFElem) -> OFElem:
    """Spec operation: inverse of a unit of O_F."""
    return x.unit_inverse()


# ---------------------------------------------------------------------------
# Packed convolution kernel
# ---------------------------------------------------------------------------
#
# Full 2D convolution of coefficient sequences over O_F: the u-index and the
# residue-generator index are flattened into one big integer (Kronecker
# substitution) so a single Python bignum multiplication performs the whole
# convolution.  The w-dimension is padded to 2r slots, so products (degree
# <= 2r-2 in w) never bleed into the next u-slot.


def _conv2_raw(ctx, a, b, mod, out_len=None):
    """a, b: sequences of r-tuples. Returns list of (2r-1)-tuples (unreduced
    in w), length capped at out_len, entries mod `mod`."""
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return []
    r = ctx.r
    r2 = 2 * r
    cap = min(la, lb) * r * (mod - 1) * (mod - 1) + 1
    width = (cap.bit_length() + 7) // 8
    # coefficients may be stored at a higher precision than the product's
    # modulus; reduce while packing so the slots cannot overflow
    za = bytearray(width * la * r2)
    for j, cj in enumerate(a):
        base = j * r2 * width
        for t in range(r):
            v = cj[t] % mod
            if v:
                za[base + t * width:base + t * width + width] = v.to_bytes(width, "little")
    zb = bytearray(width * lb * r2)
    for j, cj in enumerate(b):
        base = j * r2 * width
        for t in range(r):
            v = cj[t] % mod
            if v:
                zb[base + t * width:base + t * width + width] = v.to_bytes(width, "little")
    prod = int.from_bytes(bytes(za), "little") * int.from_bytes(bytes(zb), "little")
    n_u = la + lb - 1
    if out_len is not None:
        n_u = min(n_u, out_len)
    need = width * (n_u * r2 + r2)
    raw = prod.to_bytes(max(need, (prod.bit_length() + 7) // 8 + width), "little")
    out = []
    for j in range(n_u):
        base = j * r2 * width
        slot = tuple(
            int.from_bytes(raw[base + t * width:base + (t + 1) * width], "little") % mod
            for t in range(r2 - 1)
        )
        out.append(slot)
    return out


def _fold_w(ctx, slot, mod):
    """Reduce a (2r-1)-tuple of w-coefficients mod the residue polynomial."""
    r = ctx.r
    if r == 1:
        return (slot[0] % mod,)
    out = list(slot[:r])
    rows = ctx._red_rows
    for t in range(r - 1):
        c = slot[r + t]
        if c:
            row = rows[t]
            for i in range(r):
                out[i] += c * row[i]
    return tuple(v % mod for v in out)


def conv_series(ctx, a, b, mod, out_len):
    """Truncated convolution of O_F coefficient sequences (plain, no carries)."""
    raw = _conv2_raw(ctx, a, b, mod, out_len)
    return [_fold_w(ctx, s, mod) for s in raw]


# ---------------------------------------------------------------------------
# USeries: O_F[[u]] / u^M
# ---------------------------------------------------------------------------


class USeries:
    """Truncated power series over O_F (the ring written O_F[[u]])."""

    __slots__ = ("ctx", "c", "prec")

    def __init__(self, ctx: PrimeContext, coeffs, prec: Optional[int] = None):
        self.ctx = ctx
        self.prec = ctx.nwork if prec is None else prec
        if self.prec < 1:
            raise PrecisionExhausted("USeries at precision < 1")
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

    @classmethod
    def zero(cls, ctx, prec=None):
        return cls(ctx, (), prec)

    @classmethod
    def one(cls, ctx, prec=None):
        return cls(ctx, (1,), prec)

    @classmethod
    def u_pow(cls, ctx, k, prec=None):
        if k >= ctx.m:
            return cls.zero(ctx, prec)
        return cls(ctx, [0] * k + [1], prec)

    @classmethod
    def eisenstein(cls, ctx, prec=None):
        """E = u + p."""
        return cls(ctx, [ctx.p, 1], prec)

    def coeff(self, j: int) -> OFElem:
        return OFElem(self.ctx, self.c[j], self.prec)

    def _join(self, other):
        if isinstance(other, int):
            other = USeries(self.ctx, (other,), self.prec)
        prec = min(self.prec, other.prec)
        return other, prec, self.ctx.ppow(prec)

    def __add__(self, other):
        other, prec, mod = self._join(other)
        return USeries(self.ctx,
                       [_of_add_raw(x, y, mod) for x, y in zip(self.c, other.c)],
                       prec)

    def __sub__(self, other):
        other, prec, mod = self._join(other)
        return USeries(self.ctx,
                       [_of_sub_raw(x, y, mod) for x, y in zip(self.c, other.c)],
                       prec)

    def __neg__(self):
        mod = self.ctx.ppow(self.prec)
        return USeries(self.ctx,
                       [tuple((-v) % mod for v in x) for x in self.c],
                       self.prec)

    def __mul__(self, other):
        if isinstance(other, OFElem):
            prec = min(self.prec, other.prec)
            mod = self.ctx.ppow(prec)
            return USeries(self.ctx,
                           [_of_mul_raw(self.ctx, x, other.c, mod) for x in self.c],
                           prec)
        other, prec, mod = self._join(other)
        return USeries(self.ctx, conv_series(self.ctx, self.c, other.c, mod, self.ctx.m),
                       prec)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, USeries):
            return NotImplemented
        prec = min(self.prec, other.prec)
        mod = self.ctx.ppow(prec)
        return all(all((x - y) % mod == 0 for x, y in zip(cx, cy))
                   for cx, cy in zip(self.c, other.c))

    def __hash__(self):
        raise TypeError("USeries compares at precision; not hashable")

    def is_zero(self) -> bool:
        mod = self.ctx.ppow(self.prec)
        return all(all(v % mod == 0 for v in x) for x in self.c)

    def u_order(self) -> Optional[int]:
        """Lowest u-exponent with a nonzero coefficient; None if zero."""
        mod = self.ctx.ppow(self.prec)
        for j, x in enumerate(self.c):
            if any(v % mod for v in x):
                return j
        return None

    def frobenius(self) -> "USeries":
        """u -> u^p; coefficients are fixed (the embedding shift carries
        the semilinearity)."""
        ctx = self.ctx
        out = [(0,) * ctx.r for _ in range(ctx.m)]
        for j in range(ctx.m):
            pj = ctx.p * j
            if pj >= ctx.m:
                break
            out[pj] = self.c[j]
        return USeries(ctx, out, self.prec)

    def residue(self) -> "ResidueSeries":
        return ResidueSeries(self.ctx, [tuple(v % self.ctx.p for v in x) for x in self.c])

    def at_prec(self, prec):
        if prec > self.prec:
            raise PrecisionExhausted("cannot raise precision")
        return USeries(self.ctx, self.c, prec)

    def serial(self):
        return {"u_coeffs": [list(x) for x in self.c], "prec": self.prec}

    def __repr__(self):
        head = [list(x) for x in self.c[:4]]
        return f"USeries({head}... @p^{self.prec}, M={self.ctx.m})"


def useries_frobenius(s: USeries) -> USeries:
    """Spec operation: the Frobenius u -> u^p on O_F[[u]]."""
    return s.frobenius()


# ---------------------------------------------------------------------------
# ResidueSeries: k_F[[u]] / u^M
# ---------------------------------------------------------------------------


class ResidueSeries:
    """Truncated series over the residue field k_F = F_{p^r}."""

    __slots__ = ("ctx", "c")

    def __init__(self, ctx: PrimeContext, coeffs):
        self.ctx = ctx
        p = ctx.p
        out = []
        for j in range(ctx.m):
            if j < len(coeffs):
                cj = coeffs[j]
                if isinstance(cj, int):
                    cj = (cj,) + (0,) * (ctx.r - 1)
                out.append(tuple(v % p for v in cj))
            else:
                out.append((0,) * ctx.r)
        self.c = tuple(out)

    @classmethod
    def zero(cls, ctx):
        return cls(ctx, ())

    @classmethod
    def one(cls, ctx):
        return cls(ctx, (1,))

    def __add__(self, other):
        p = self.ctx.p
        return ResidueSeries(self.ctx,
                             [tuple((a + b) % p for a, b in zip(x, y))
                              for x, y in zip(self.c, other.c)])

    def __sub__(self, other):
        p = self.ctx.p
        return ResidueSeries(self.ctx,
                             [tuple((a - b) % p for a, b in zip(x, y))
                              for x, y in zip(self.c, other.c)])

    def __neg__(self):
        p = self.ctx.p
        return ResidueSeries(self.ctx, [tuple((-a) % p for a in x) for x in self.c])

    def __mul__(self, other):
        ctx = self.ctx
        return ResidueSeries(ctx, conv_series(ctx, self.c, other.c, ctx.p, ctx.m))

    def __eq__(self, other):
        if not isinstance(other, ResidueSeries):
            return NotImplemented
        return self.c == other.c

    def __hash__(self):
        raise TypeError("ResidueSeries is not hashable")

    def is_zero(self):
        return all(all(v == 0 for v in x) for x in self.c)

    def u_order(self) -> Optional[int]:
        for j, x in enumerate(self.c):
            if any(x):
                return j
        return None

    def leading_unit(self) -> Optional[tuple]:
        """Coefficient of the lowest nonzero u-power (a k_F element)."""
        j = self.u_order()
        return None if j is None else self.c[j]

    def frobenius(self) -> "ResidueSeries":
        ctx = self.ctx
        out = [(0,) * ctx.r for _ in range(ctx.m)]
        for j in range(ctx.m):
            pj = ctx.p * j
            if pj >= ctx.m:
                break
            out[pj] = self.c[j]
        return ResidueSeries(ctx, out)

    def serial(self):
        return {"u_coeffs": [list(x) for x in self.c]}

    def __repr__(self):
        nz = [(j, list(x)) for j, x in enumerate(self.c) if any(x)]
        return f"ResidueSeries({nz[:6]}{'...' if len(nz) > 6 else ''})"


# ---------------------------------------------------------------------------
# Matrix helpers (2x2 over any ring with +, -, *)
# ---------------------------------------------------------------------------


def mat_mul(a, b):
    return ((a[0][0] * b[0][0] + a[0][1] * b[1][0],
             a[0][0] * b[0][1] + a[0][1] * b[1][1]),
            (a[1][0] * b[0][0] + a[1][1] * b[1][0],
             a[1][0] * b[0][1] + a[1][1] * b[1][1]))


def mat_add(a, b):
    return ((a[0][0] + b[0][0], a[0][1] + b[0][1]),
            (a[1][0] + b[1][0], a[1][1] + b[1][1]))


def mat_sub(a, b):
    return ((a[0][0] - b[0][0], a[0][1] - b[0][1]),
            (a[1][0] - b[1][0], a[1][1] - b[1][1]))


def mat_det(a):
    return a[0][0] * a[1][1] - a[0][1] * a[1][0]


def mat_adj(a):
    return ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))


def mat_map(a, fn):
    return ((fn(a[0][0]), fn(a[0][1])), (fn(a[1][0]), fn(a[1][1])))


def mat_scale(a, s):
    return mat_map(a, lambda x: x * s)


def of_mat_inv(a) -> tuple:
    """Inverse of a 2x2 matrix over O_F with unit determinant."""
    d = mat_det(a)
    if not d.is_unit():
        raise Degenerate("matrix determinant is not a unit")
    di = d.unit_inverse()
    return mat_scale(mat_adj(a), di)

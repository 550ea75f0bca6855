"""Preparation and finite-precision descent to integral coefficients.

The preparation row operation strips the infinite tail of the unit
lambda_b^(h-g) off the surviving matrix entry, leaving an integral part
and a remainder certified in I_c; the descent then runs the successive
approximation of the reduction algorithm, absorbing the remainder through
height-partner factorizations whose E-adic depth h_n grows by the gain law

    h_(n+1) = p * (h_n - k_i - floor(h_n / p) + 1)

at every step.  The result is an integral matrix tuple congruent to the
prepared part mod p, packaged with the full iteration log.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from .arith import OFElem, USeries, mat_add, mat_det, mat_mul, mat_sub
from .errors import (
    AssumptionViolated,
    GateFailed,
    HeightMismatch,
    NoConvergence,
    NotIntegral,
    PrecisionExhausted,
    SplitFailed,
)
from .kisin import KisinFrobenius
from .lattices import WeightData
from .sring import SElem, fil_membership, in_i_c, in_p_pow_s, s_frobenius, s_invert, s_mul


@dataclass(frozen=True)
class HeightBudget:
    """Minimal c^(i) with k_i <= c^(i)(p-2), and their maximum."""

    c: Tuple[int, ...]
    c_max: int

    def serial(self):
        return {"c": list(self.c), "c_max": self.c_max}


def compute_budget(weights: WeightData, p: int) -> HeightBudget:
    if p < 3:
        raise ValueError("budget requires p >= 3")
    cs = tuple((k - 1) // (p - 2) + 1 for k in weights.k)
    return HeightBudget(cs, max(cs))


@dataclass(frozen=True)
class GateReport:
    bounds: Tuple[int, ...]
    valuations: Tuple[Optional[int], ...]
    passed: bool
    diagnostics: Tuple[str, ...]

    def serial(self):
        return {
            "bounds": list(self.bounds),
            "valuations": ["inf" if v is None else v for v in self.valuations],
            "passed": self.passed,
            "diagnostics": list(self.diagnostics),
        }


def valuation_gate(a2_params, weights: WeightData, budget: HeightBudget) -> GateReport:
    """Check val(a_2^(i)) > max(c^(i)-1, c_max - c^(i) - 1) per embedding.

    Raises GateFailed (with the per-embedding diagnostics attached) on any
    violation; the strict inequality is the large-valuation hypothesis.
    """
    bounds, vals, diags = [], [], []
    ok = True
    for i, a2 in enumerate(a2_params):
        c_i = budget.c[i]
        bound = max(c_i - 1, budget.c_max - c_i - 1)
        v = a2.valuation()
        bounds.append(bound)
        vals.append(v)
        if v is not None and v <= bound:
            ok = False
            diags.append(
                f"embedding {i}: val(a2) = {v} <= bound {bound} "
                f"(needs strict >)")
    report = GateReport(tuple(bounds), tuple(vals), ok, tuple(diags))
    if not ok:
        raise GateFailed("; ".join(diags), diagnostics=report.serial())
    return report


Mat2 = Tuple[Tuple[SElem, SElem], Tuple[SElem, SElem]]


@dataclass(frozen=True)
class PreparedSplit:
    """Exact decomposition (X_1 *_phi B)^(i) = A0^(i) + C^(i)."""

    a0: Tuple[Mat2, ...]              # integral part, entries in O_F[[u]]
    c_mats: Tuple[Mat2, ...]          # remainder, entries in I_(c_max)
    conjugated: Tuple[Mat2, ...]      # the full X_1 *_phi B matrices
    x1: Tuple[SElem, ...]             # applied row-operation entries x^(i)
    phi_x: Tuple[SElem, ...]          # phi(x^(i)), normalized to d = 0
    budget: HeightBudget
    weights: WeightData
    det_signs: Tuple[int, ...]
    a1: Tuple[OFElem, ...]
    a2: Tuple[OFElem, ...]

    @property
    def f(self):
        return self.weights.f


def _mat_zero(ctx):
    z = SElem.zero(ctx)
    return ((z, z), (z, z))


def _mat_eye(ctx, prec=None):
    one, z = SElem.one(ctx, prec), SElem.zero(ctx, prec)
    return ((one, z), (z, one))


def prepare(kisin: KisinFrobenius, budget: HeightBudget) -> PreparedSplit:
    """Strip the lambda tails via X_1 = [[1, 0], [x, 1]] and split.

    x^(i) = -(a2/a1)^(i) * (tail of lambda^(h-g) past block c^(i)) / E^(k_i);
    the conjugated matrix splits exactly into the integral head A0 and a
    remainder whose entries are multiples of phi(x^(i-1)) in I_(c_max).
    """
    ctx = kisin.amat[0][0][0].ctx
    weights, f = kisin.heights, kisin.f
    xs, phis = [], []
    for i in range(f):
        c_i = budget.c[i]
        tail = kisin.lam_e[i].slice_from(c_i * ctx.p)
        if tail.is_zero():
            xs.append(SElem.zero(ctx))
            phis.append(SElem.zero(ctx))
            continue
        scale = -(kisin.a2[i] * kisin.a1[i].unit_inverse())
        x = tail.div_e_pow(weights.k[i]) * scale
        xs.append(x)
        phi = s_frobenius(x)
        try:
            phi = phi.normalize_d(0)
        except NotIntegral as exc:
            raise SplitFailed(f"phi(x^({i})) not integral: {exc}") from exc
        if not in_p_pow_s(phi, budget.c_max):
            raise SplitFailed(
                f"phi(x^({i})) not in p^{budget.c_max} S_F; gate miscalculation?")
        phis.append(phi)

    a0s, cs, conjs = [], [], []
    e_zero = SElem.zero(ctx)
    for i in range(f):
        k_i, c_i = weights.k[i], budget.c[i]
        b_mat = kisin.amat[i]
        x, phi_prev = xs[i], phis[(i - 1) % f]
        # X_1 B: add x * (row 1) to row 2
        m = ((b_mat[0][0], b_mat[0][1]),
             (b_mat[1][0] + x * b_mat[0][0], b_mat[1][1] + x * b_mat[0][1]))
        # ... phi(X_1^(i-1))^(-1): subtract phi(x') * (column 2) from column 1
        m = ((m[0][0] - m[0][1] * phi_prev, m[0][1]),
             (m[1][0] - m[1][1] * phi_prev, m[1][1]))
        conjs.append(m)

        head = kisin.lam_e[i].slice_below(c_i * ctx.p)
        t_entry = s_mul(head, SElem.from_of(ctx, kisin.a2[i]))
        if kisin.tags[i].kind == "I":
            a0 = ((e_zero, b_mat[0][1]), (SElem.one(ctx), t_entry))
        else:
            a0 = ((b_mat[0][0], e_zero), (t_entry, SElem.one(ctx)))
        a0s.append(a0)
        c_mat = mat_sub(m, a0)
        c_norm = []
        for row in c_mat:
            out_row = []
            for entry in row:
                try:
                    entry = entry.normalize_d(0)
                except NotIntegral as exc:
                    raise SplitFailed(
                        f"slot {i}: remainder entry has a denominator: {exc}"
                    ) from exc
                out_row.append(entry)
            c_norm.append(tuple(out_row))
        cs.append(tuple(c_norm))

        for r in range(2):
            for c in range(2):
                if not a0[r][c].is_integral():
                    raise SplitFailed(f"slot {i}: A0 entry ({r},{c}) not integral")
                if not in_i_c(cs[i][r][c], budget.c_max):
                    raise SplitFailed(
                        f"slot {i}: remainder entry ({r},{c}) not in I_{budget.c_max}")
        if not t_entry.is_integral(margin=1):
            raise SplitFailed(
                f"slot {i}: surviving entry not in p*O_F[[u]] (gate margin)")

    return PreparedSplit(
        a0=tuple(a0s), c_mats=tuple(cs), conjugated=tuple(conjs),
        x1=tuple(xs), phi_x=tuple(phis), budget=budget, weights=weights,
        det_signs=kisin.det_signs, a1=kisin.a1, a2=kisin.a2)


def check_descent_assumptions(split: PreparedSplit, budget: HeightBudget) -> dict:
    """Re-validate the three descent clauses on a prepared split.

    (a) height bound c_max(p-2) >= k_i; (b) the applied base change is
    unipotent (det 1) over S_F[1/p]; (c) the split reassembles exactly with
    A0 integral and C in I_(c_max).  Returns the machine-checkable report.
    """
    ctx = split.a0[0][0][0].ctx
    p = ctx.p
    for i, k in enumerate(split.weights.k):
        if budget.c_max * (p - 2) < k:
            raise AssumptionViolated("a", f"c_max(p-2) < k_{i} = {k}")
    for i, x in enumerate(split.x1):
        # X_1 = [[1,0],[x,1]] has det 1 by shape; x must have bounded denominator
        if x.d > budget.c_max:
            raise AssumptionViolated(
                "b", f"x^({i}) has denominator p^{x.d} > p^{budget.c_max}")
    for i in range(split.f):
        reassembled = mat_add(split.a0[i], split.c_mats[i])
        for r in range(2):
            for c in range(2):
                if not (reassembled[r][c] == split.conjugated[i][r][c]):
                    raise AssumptionViolated("c", f"slot {i}: reassembly mismatch")
                if not split.a0[i][r][c].is_integral():
                    raise AssumptionViolated("c", f"slot {i}: A0 not integral")
                if not in_i_c(split.c_mats[i][r][c], budget.c_max):
                    raise AssumptionViolated(
                        "c", f"slot {i}: C entry ({r},{c}) outside I_{budget.c_max}")
    return {"a": "ok", "b": "ok", "c": "ok", "c_max": budget.c_max}


def height_partner(a: Mat2, h: int) -> Mat2:
    """B with A B = B A = E^h * Id, via the unit-scaled adjugate."""
    ctx = a[0][0].ctx
    det = mat_det(a)
    try:
        unit = det.div_e_pow(h).normalize_d(0)
    except (NotIntegral, PrecisionExhausted) as exc:
        raise HeightMismatch(f"det is not E^{h} times a unit: {exc}") from exc
    if not unit.is_unit():
        raise HeightMismatch(f"det / E^{h} is not a unit")
    inv = s_invert(unit)
    adj = ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))
    b = tuple(tuple(s_mul(entry, inv) for entry in row) for row in adj)
    # exact identity check at precision
    prod = mat_mul(a, b)
    e_h = SElem.e_pow(ctx, h, prod[0][0].prec)
    if not (prod[0][0] == e_h and prod[1][1] == e_h
            and prod[0][1].is_zero() and prod[1][0].is_zero()):
        raise HeightMismatch("A * partner != E^h * Id at precision")
    return b


@dataclass
class DescentCertificate:
    """Output of `descend`: the integral tuple plus the iteration log."""

    a_final: Tuple                      # tuple of 2x2 USeries matrices
    a_final_selems: Tuple               # same matrices as integral SElems
    a0_mod_p: Tuple                     # residue matrices of the prepared A0
    chains: List[List[dict]]            # per-chain (slot, h, ell, next_h) rows
    iterations: int
    residual_zero: bool
    det_units_one_mod_p: bool
    final_prec: int
    det_checks: List[dict] = field(default_factory=list)

    def serial(self, include_matrices=False):
        out = {
            "iterations": self.iterations,
            "residual_zero": self.residual_zero,
            "chains": self.chains,
            "det_units_one_mod_p": self.det_units_one_mod_p,
            "final_prec": self.final_prec,
            "det_checks": self.det_checks,
        }
        if include_matrices:
            out["a_final"] = [[[e.serial() for e in row] for row in m]
                              for m in self.a_final]
        return out


def estimate_iterations(weights: WeightData, budget: HeightBudget, p: int, m: int) -> int:
    """Simulate the gain map until the slowest chain clears depth m."""
    f = weights.f
    hs = [budget.c_max * p] * f
    steps = 0
    while min(hs) <= m and steps < 10_000:
        nxt = [0] * f
        for i in range(f):
            ell = hs[i] - weights.k[i] - hs[i] // p
            nxt[(i + 1) % f] = p * (ell + 1)
        hs = nxt
        steps += 1
    return steps


def descend(split: PreparedSplit, kisin: KisinFrobenius, budget: HeightBudget,
            max_iter: Optional[int] = None) -> DescentCertificate:
    """Successive approximation to an integral Frobenius tuple.

    Runs the ideal re-split, the absorption step, and then the gain-law
    iteration until the remainder vanishes at precision (or max_iter, in
    which case NoConvergence is raised).  Per-slot determinant units are
    tracked and every iterate's determinant is checked against
    +-E^(k_i) a1^(i) times the accumulated unit.
    """
    ctx = split.a0[0][0][0].ctx
    p, f = ctx.p, split.f
    weights = split.weights
    if max_iter is None:
        max_iter = estimate_iterations(weights, budget, p, ctx.m) + 6

    # (1) re-split C in I_c into p*integral + Fil^(cp) tail; fold the head in
    h0 = budget.c_max * p
    a_mats, c_mats = [], []
    for i in range(f):
        head = tuple(tuple(e.slice_below(h0) for e in row) for row in split.c_mats[i])
        tail = tuple(tuple(e.slice_from(h0) for e in row) for row in split.c_mats[i])
        for row in head:
            for e in row:
                if not e.is_integral(margin=1):
                    raise SplitFailed("re-split head not in p*O_F[[u]]")
        a_mats.append(mat_add(split.a0[i], head))
        c_mats.append(tail)

    units = []
    iter_units = []
    sign_a1 = []
    for i in range(f):
        expected = SElem.from_of(ctx, split.a1[i])
        if split.det_signs[i] < 0:
            expected = -expected
        sign_a1.append(expected)
        units.append(_det_unit_ratio(a_mats[i], weights.k[i], expected))
        iter_units.append(SElem.one(ctx))

    det_checks = []
    chains = [[] for _ in range(f)]
    chain_slot = list(range(f))  # chain j currently sits at this slot
    hs = [h0] * f
    inv_seeds = [None] * f

    def record_det_checks(n):
        for i in range(f):
            det = mat_det(a_mats[i])
            target = s_mul(SElem.e_pow(ctx, weights.k[i]),
                           s_mul(sign_a1[i], units[i]))
            ok = det == target
            det_checks.append({"iteration": n, "slot": i, "ok": bool(ok)})
            if not ok:
                raise SplitFailed(
                    f"iteration {n}, slot {i}: det != sign*E^k*a1*unit")

    record_det_checks(0)
    a0_residue = tuple(tuple(tuple(e.residue() for e in row) for row in m)
                       for m in split.a0)

    iteration = 0
    while True:
        live = [not _mat_is_zero(c_mats[i]) for i in range(f)]
        if not any(live):
            break
        if iteration >= max_iter:
            raise NoConvergence(
                f"descent did not terminate in {max_iter} iterations; "
                f"depths {hs}, precision may be exhausted")
        zero_mat = _mat_zero(ctx)
        d1s, d2s, thresholds, ells = [], [], [], []
        for i in range(f):
            if not live[i]:
                # a clean slot contributes nothing to its right neighbor
                d1s.append(zero_mat)
                d2s.append(zero_mat)
                thresholds.append(hs[i])
                ells.append(None)
                continue
            k_i = weights.k[i]
            ell = hs[i] - k_i - hs[i] // p
            threshold = p * (ell + 1)
            ells.append(ell)
            thresholds.append(threshold)
            b_i = _height_partner_seeded(a_mats[i], k_i, inv_seeds, i)
            w = mat_mul(tuple(tuple(e.div_e_pow(k_i) for e in row)
                              for row in c_mats[i]), b_i)
            phi_w = tuple(tuple(_normalized_phi(e) for e in row) for row in w)
            d1 = tuple(tuple(e.slice_below(threshold) for e in row) for row in phi_w)
            d2 = tuple(tuple(e.slice_from(threshold) for e in row) for row in phi_w)
            for row in d1:
                for e in row:
                    if not e.is_integral(margin=1):
                        raise SplitFailed(
                            f"iteration {iteration + 1}, slot {i}: head of "
                            f"phi(C'B) not in p*O_F[[u]]")
            for row in d2:
                for e in row:
                    if not fil_membership(e, threshold):
                        raise SplitFailed(
                            f"iteration {iteration + 1}, slot {i}: tail of "
                            f"phi(C'B) not in Fil^{threshold}")
            d1s.append(d1)
            d2s.append(d2)
        # The absorption factor (I + W^(i))^(-1) clears slot i's own
        # remainder; the material arriving at slot i is its left neighbor's
        # split, so the update is uniform with zero D's for clean slots.
        new_a, new_c, new_h = [], [], []
        for i in range(f):
            prev = (i - 1) % f
            factor = mat_add(_mat_eye(ctx), d1s[prev])
            new_a.append(mat_mul(a_mats[i], factor))
            new_c.append(mat_mul(a_mats[i], d2s[prev]))
            new_h.append(thresholds[prev] if live[prev] else hs[i])
            fdet = mat_det(factor)
            if not in_p_pow_s(fdet - SElem.one(ctx, fdet.prec), 1):
                raise SplitFailed(
                    f"iteration {iteration + 1}: det(I + D1) != 1 mod p")
            units[i] = s_mul(units[i], fdet)
            iter_units[i] = s_mul(iter_units[i], fdet)
            diff = mat_sub(new_a[i], a_mats[i])
            for row in diff:
                for e in row:
                    if not in_p_pow_s(e, 1):
                        raise SplitFailed(
                            f"iteration {iteration + 1}: mod-p stability broken")
        for j in range(f):
            s = chain_slot[j]
            if live[s]:
                chains[j].append({
                    "step": iteration + 1,
                    "slot": s,
                    "h": hs[s],
                    "ell": ells[s],
                    "next_h": thresholds[s],
                    "k_slot": weights.k[s],
                })
            chain_slot[j] = (s + 1) % f
        a_mats, c_mats, hs = new_a, new_c, new_h
        iteration += 1
        record_det_checks(iteration)

    units_ok = all(in_p_pow_s(u - SElem.one(ctx, u.prec), 1) for u in iter_units)

    a_final_s = tuple(tuple(tuple(e.reduce_d() for e in row) for row in m)
                      for m in a_mats)
    a_final_u = []
    final_prec = None
    for i in range(f):
        rows = []
        for row in a_final_s[i]:
            out_row = []
            for e in row:
                try:
                    ue = e.to_useries()
                except (NotIntegral, PrecisionExhausted) as exc:
                    raise PrecisionExhausted(
                        f"descended entry not certifiably integral: {exc}") from exc
                out_row.append(ue)
                final_prec = ue.prec if final_prec is None else min(final_prec, ue.prec)
            rows.append(tuple(out_row))
        a_final_u.append(tuple(rows))

    cert = DescentCertificate(
        a_final=tuple(a_final_u),
        a_final_selems=a_final_s,
        a0_mod_p=a0_residue,
        chains=chains,
        iterations=iteration,
        residual_zero=True,
        det_units_one_mod_p=units_ok,
        final_prec=final_prec if final_prec is not None else 0,
        det_checks=det_checks,
    )
    for i in range(f):
        for r in range(2):
            for c in range(2):
                if cert.a_final[i][r][c].residue() != a0_residue[i][r][c]:
                    raise SplitFailed(
                        f"slot {i}: descended matrix != prepared part mod p")
    return cert


def _mat_is_zero(m):
    return all(e.is_zero() for row in m for e in row)


def _normalized_phi(e: SElem) -> SElem:
    out = s_frobenius(e)
    return out.normalize_d(0) if out.d else out


def _det_unit_ratio(a, k, expected_unit) -> SElem:
    """det(A) = E^k * expected_unit * ratio; returns the ratio.

    The initial re-split perturbs the determinant by Fil^(c p)-level terms,
    so this ratio is 1 up to E-adically small junk (not p-adically small);
    only the iterate factors det(I + D1) are 1 mod p.
    """
    det = mat_det(a)
    try:
        eps = det.div_e_pow(k).normalize_d(0)
    except (NotIntegral, PrecisionExhausted) as exc:
        raise HeightMismatch(f"det not divisible by E^{k}: {exc}") from exc
    return s_mul(eps, s_invert(expected_unit))


def _height_partner_seeded(a, k, seeds, i):
    ctx = a[0][0].ctx
    det = mat_det(a)
    unit = det.div_e_pow(k).normalize_d(0)
    inv = s_invert(unit, seed=seeds[i])
    seeds[i] = inv
    adj = ((a[1][1], -a[0][1]), (-a[1][0], a[0][0]))
    return tuple(tuple(s_mul(entry, inv) for entry in row) for row in adj)

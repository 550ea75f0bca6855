"""Job configuration, precision preflight and pipeline orchestration.

A job fixes (p, f, r), the raw weight pairs, and per-embedding parameters
(Type shorthand or explicit matrices).  `run_pipeline` executes

    normalize -> classify -> detect -> slopes -> budget -> gate ->
    build -> det-normalize -> prepare -> assumptions -> descend ->
    reduce -> characterize

stopping with a stage-tagged error at the first hard failure, and returns
a deterministic report: identical config + seed give byte-identical JSON
(timings are only embedded on request).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

from . import __version__
from .arith import OFElem, PrimeContext
from .errors import (
    ConfigError,
    CrysredError,
    GateFailed,
    IrregularWeights,
    NoConvergence,
    NonMonomial,
    PrecisionExhausted,
)
from .descent import (
    check_descent_assumptions,
    compute_budget,
    descend,
    estimate_iterations,
    prepare,
    valuation_gate,
)
from .kisin import build_kisin_frobenius, det_normalize
from .lattices import (
    ReducibilityVerdict,
    classify_type,
    frobenius_f_product,
    normalize_weights,
    parabolic_normalize,
    reducibility_detect,
    verify_parabolic_equiv,
)
from .reduction import characterize, extract_reduction_data, reduce_mod_varpi

MODES = ("full", "classify-only", "reduce-only", "oracle-suite")


@dataclass
class JobConfig:
    p: int
    f: int
    weights: List[List[int]]
    params: List[dict]
    r: Optional[int] = None
    precision: Optional[Tuple[int, int]] = None   # (M, N) override
    mode: str = "full"
    seed: int = 0
    target_iterations: int = 4

    @classmethod
    def from_dict(cls, data: dict) -> "JobConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a table/object")
        required = {"p", "f", "weights", "params"}
        missing = required - set(data)
        if missing:
            raise ConfigError(f"missing config keys: {sorted(missing)}")
        unknown = set(data) - required - {
            "r", "precision", "mode", "seed", "target_iterations"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(
            p=data["p"], f=data["f"],
            weights=data["weights"], params=data["params"],
            r=data.get("r"),
            precision=tuple(data["precision"]) if data.get("precision") else None,
            mode=data.get("mode", "full"),
            seed=data.get("seed", 0),
            target_iterations=data.get("target_iterations", 4),
        )
        cfg.validate()
        return cfg

    def validate(self):
        if not isinstance(self.p, int) or self.p < 3:
            raise ConfigError("p must be an odd prime >= 3")
        if not isinstance(self.f, int) or self.f < 1:
            raise ConfigError("f must be a positive integer")
        if self.r is not None and (self.r % self.f != 0):
            raise ConfigError("r must be a multiple of f")
        if len(self.weights) != self.f:
            raise ConfigError(f"need {self.f} weight pairs, got {len(self.weights)}")
        if len(self.params) != self.f:
            raise ConfigError(f"need {self.f} parameter entries, got {len(self.params)}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.precision is not None:
            m, n = self.precision
            if m < 2 or n < 1:
                raise ConfigError("precision override (M, N) must be >= (2, 1)")
        for i, entry in enumerate(self.params):
            if not isinstance(entry, dict):
                raise ConfigError(f"params[{i}] must be a table")
            if "matrix" in entry:
                mat = entry["matrix"]
                if len(mat) != 2 or any(len(row) != 2 for row in mat):
                    raise ConfigError(f"params[{i}].matrix must be 2x2")
            elif "type" in entry:
                if entry["type"] not in ("I", "II"):
                    raise ConfigError(f"params[{i}].type must be 'I' or 'II'")
                if "a1" not in entry or "a2" not in entry:
                    raise ConfigError(f"params[{i}] needs a1 and a2")
            else:
                raise ConfigError(f"params[{i}] needs 'type' or 'matrix'")

    def serial(self):
        return {
            "p": self.p, "f": self.f, "r": self.r,
            "weights": [list(w) for w in self.weights],
            "params": self.params,
            "precision": list(self.precision) if self.precision else None,
            "mode": self.mode,
            "seed": self.seed,
            "target_iterations": self.target_iterations,
        }


def preflight_precision(cfg: JobConfig) -> dict:
    """Choose (M, N) and the internal guard from (p, f, k, gate margins).

    Default rule: M = 2 p c_max T (T = target iterations) and
    N = max(k_max + 2, c_max + 4); user overrides are respected verbatim.
    The working precision adds ceil((M-1)/p) digits for u-coordinate
    conversions plus the estimated division depth of the descent.
    """
    weights = normalize_weights(cfg.weights)
    budget = compute_budget(weights, cfg.p)
    k_max = weights.k_max
    if cfg.precision is not None:
        m, n = cfg.precision
    else:
        m = 2 * cfg.p * budget.c_max * cfg.target_iterations
        n = max(k_max + 2, budget.c_max + 4)
    iters = estimate_iterations(weights, budget, cfg.p, m)
    guard = ((m - 1 + cfg.p - 1) // cfg.p
             + budget.c_max
             + ((k_max + cfg.p - 1) // cfg.p) * (iters + 2)
             + 4)
    return {"M": m, "N": n, "nwork": n + guard, "iterations_estimate": iters}


def _coord_to_of(ctx: PrimeContext, spec, prec=None) -> OFElem:
    """Parse a coordinate: an int, or {coeffs: [...], pexp: t} meaning
    p^t * (polynomial in the residue generator)."""
    if isinstance(spec, int):
        return OFElem.from_int(ctx, spec, prec)
    if isinstance(spec, dict):
        coeffs = spec.get("coeffs")
        pexp = spec.get("pexp", 0)
        if not isinstance(coeffs, list) or not all(isinstance(v, int) for v in coeffs):
            raise ConfigError("coordinate coeffs must be a list of integers")
        if len(coeffs) > ctx.r:
            raise ConfigError(f"coordinate has {len(coeffs)} coeffs but r = {ctx.r}")
        x = OFElem(ctx, coeffs, prec)
        return x * OFElem.from_int(ctx, ctx.p ** pexp, prec)
    raise ConfigError(f"cannot parse coordinate {spec!r}")


def _build_lattice(ctx, cfg) -> tuple:
    mats = []
    explicit = False
    for entry in cfg.params:
        if "matrix" in entry:
            explicit = True
            mats.append(tuple(tuple(_coord_to_of(ctx, v) for v in row)
                              for row in entry["matrix"]))
        else:
            a1 = _coord_to_of(ctx, entry["a1"])
            a2 = _coord_to_of(ctx, entry["a2"])
            if not a1.is_unit():
                raise ConfigError("a1 must be a unit of O_F")
            zero, one = OFElem.zero(ctx), OFElem.one(ctx)
            if entry["type"] == "I":
                mats.append(((zero, a1), (one, a2)))
            else:
                mats.append(((a1, zero), (a2, one)))
    return tuple(mats), explicit


@dataclass
class RunReport:
    config: dict
    context: dict = field(default_factory=dict)
    preflight: dict = field(default_factory=dict)
    stages: dict = field(default_factory=dict)
    result: Optional[dict] = None
    error: Optional[dict] = None
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def serial(self, include_timings=False, include_matrices=False):
        out = {
            "version": self.version,
            "config": self.config,
            "context": self.context,
            "preflight": self.preflight,
            "stages": self.stages,
            "result": self.result,
            "error": self.error,
        }
        if include_timings:
            out["timings"] = self.timings
        if not include_matrices:
            out["stages"] = {k: v for k, v in out["stages"].items()}
            out["stages"].pop("a_final", None)
        return out

    def to_json(self, include_timings=False, include_matrices=False) -> str:
        return json.dumps(self.serial(include_timings, include_matrices),
                          sort_keys=True, indent=2)


class PipelineStop(CrysredError):
    """Internal: wraps a stage error with its stage name."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage
        self.exc = exc


def run_pipeline(cfg: JobConfig) -> RunReport:
    """Execute the stages in order; see the module docstring.

    Hard failures (IrregularWeights, ReducibleAllII, GateFailed,
    NoConvergence, NonMonomial, ...) abort with the stage recorded in the
    report's error block; mode "classify-only" stops after the detector,
    mode "reduce-only" records reducibility verdicts without stopping.
    """
    report = RunReport(config=cfg.serial())
    t0 = time.monotonic()

    def mark(stage):
        report.timings[stage] = round(time.monotonic() - t0, 6)

    try:
        pf = preflight_precision(cfg)
        report.preflight = pf
        weights = _stage(report, "weights", lambda: normalize_weights(cfg.weights))
        report.stages["weights"] = weights.serial()
        ctx = PrimeContext(p=cfg.p, f=cfg.f, n=pf["N"], m=pf["M"],
                           r=cfg.r, nwork=pf["nwork"])
        report.context = ctx.fingerprint()
        mark("context")

        lattice, explicit = _stage(report, "config",
                                   lambda: _build_lattice(ctx, cfg))
        if explicit:
            normalized, witness, tags = _stage(
                report, "normalize", lambda: parabolic_normalize(lattice, weights))
            verified = verify_parabolic_equiv(lattice, normalized, witness, weights)
            report.stages["normalize"] = {
                "witness_verified": bool(verified),
                "tags": [t.serial() for t in tags],
            }
        else:
            tags = tuple(classify_type(m) for m in lattice)
            normalized = lattice
            report.stages["normalize"] = {
                "witness_verified": None,
                "tags": [t.serial() for t in tags],
            }
        report.stages["lattice"] = {
            "normalized": [[[e.serial() for e in row] for row in m]
                           for m in normalized],
        }
        mark("normalize")

        verdict = _stage(report, "reducibility",
                         lambda: reducibility_detect(normalized, tags, weights))
        report.stages["reducibility"] = dict(
            verdict.serial(),
            note="NotDetected is not a proof of irreducibility; the detector "
                 "implements sufficient conditions only.")
        if (verdict.kind == "ReducibleAllII"
                and cfg.mode not in ("reduce-only", "classify-only")):
            raise PipelineStop("reducibility", ReducibleStop(verdict))

        prod, slopes = _stage(report, "slopes",
                              lambda: frobenius_f_product(normalized, weights))
        report.stages["slopes"] = {
            "newton_slopes": [str(s) for s in slopes],
            "det_valuation": _val_str(prod),
        }
        mark("classify")

        if cfg.mode == "classify-only":
            report.result = {
                "mode": "classify-only",
                "reducibility": verdict.serial(),
                "newton_slopes": [str(s) for s in slopes],
            }
            return report

        budget = compute_budget(weights, cfg.p)
        report.stages["budget"] = budget.serial()
        a2_params = tuple(
            (m[1][1] if t.kind == "I" else m[1][0])
            for m, t in zip(normalized, tags))
        gate = _stage(report, "gate",
                      lambda: valuation_gate(a2_params, weights, budget))
        report.stages["gate"] = gate.serial()
        mark("gate")

        raw = _stage(report, "build",
                     lambda: build_kisin_frobenius(normalized, tags, weights))
        kf = _stage(report, "det_normalize",
                    lambda: det_normalize(raw, tags, weights, normalized))
        report.stages["kisin"] = kf.serial()
        mark("kisin")

        split = _stage(report, "prepare", lambda: prepare(kf, budget))
        report.stages["prepare"] = {
            "x_denominators": [x.d for x in split.x1],
            "assumptions": check_descent_assumptions(split, budget),
        }
        mark("prepare")

        cert = _stage(report, "descend", lambda: descend(split, kf, budget))
        report.stages["descent"] = cert.serial()
        mark("descend")

        reduced = _stage(report, "reduce", lambda: reduce_mod_varpi(cert))
        mu = _stage(report, "extract", lambda: extract_reduction_data(reduced))
        report.stages["reduction_data"] = mu.serial()
        char = _stage(report, "characterize", lambda: characterize(mu, cfg.p))
        report.stages["character"] = char.serial()
        report.result = dict(char.serial(), reducibility=verdict.serial())
        mark("characterize")
        return report
    except PipelineStop as stop:
        report.error = {
            "stage": stop.stage,
            "type": type(stop.exc).__name__,
            "message": str(stop.exc),
        }
        return report


class ReducibleStop(CrysredError):
    def __init__(self, verdict: ReducibilityVerdict):
        super().__init__(f"classified reducible: {verdict.kind}")
        self.verdict = verdict


def _stage(report, name, fn):
    try:
        return fn()
    except CrysredError as exc:
        raise PipelineStop(name, exc) from exc


def _val_str(prod):
    from .arith import mat_det

    v = mat_det(prod).valuation()
    return "inf" if v is None else v


EXIT_OK = 0
EXIT_REDUCIBLE = 2
EXIT_GATE = 3
EXIT_CONVERGENCE = 4
EXIT_CONFIG = 5


def exit_code_for(report: RunReport) -> int:
    """Stable CLI exit codes per the interface contract."""
    if report.error is None:
        if (report.config.get("mode") == "classify-only"
                and report.result
                and report.result.get("reducibility", {}).get("kind",
                                                              "").startswith("Reducible")):
            return EXIT_REDUCIBLE
        return EXIT_OK
    etype = report.error["type"]
    if etype in ("ReducibleStop",):
        return EXIT_REDUCIBLE
    if etype in ("GateFailed",):
        return EXIT_GATE
    if etype in ("IrregularWeights", "ConfigError", "Degenerate"):
        return EXIT_CONFIG
    return EXIT_CONVERGENCE

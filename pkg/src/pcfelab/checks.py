"""Named checks shared by the ``run`` command and the per-check subcommands.

Every check turns (measure, candidate, numerics, params) into a
:class:`VerdictReport`, optional CSV tables and a one-line summary.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np

from . import core, lau_rao, phase_type
from .candidates import CandidateFunction, LemmaParams, lemma_piecewise
from .config import build_candidate
from .errors import ConfigError
from .measures import Measure, make_exponential
from .numerics import QuadratureSpec
from .report import CONSISTENT, INCONCLUSIVE, VIOLATED, VerdictReport

REQUIRED = object()


@dataclass(frozen=True)
class Param:
    name: str
    kind: str  # float | int | str | bool | floats | ints
    default: Any = REQUIRED
    help: str = ""

    @property
    def flag(self) -> str:
        return "--" + self.name.replace("_", "-")

    def coerce(self, value):
        """Validate a config value (YAML-typed) or parse a CLI string."""
        k = self.kind
        if isinstance(value, str) and k != "str":
            if k in ("floats", "ints"):
                value = [v for v in value.split(",") if v.strip()]
            elif k == "bool":
                low = value.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ConfigError(f"{self.name}: expected a boolean, got {value!r}")
                return low in ("true", "1", "yes")
            else:
                try:
                    return int(value) if k == "int" else float(value)
                except ValueError:
                    raise ConfigError(f"{self.name}: expected {k}, got {value!r}") from None
        if k == "bool":
            if not isinstance(value, bool):
                raise ConfigError(f"{self.name}: expected a boolean")
            return value
        if k == "str":
            if not isinstance(value, str):
                raise ConfigError(f"{self.name}: expected a string")
            return value
        if k in ("floats", "ints"):
            if not isinstance(value, (list, tuple)):
                value = [value]
            sub = Param(self.name, k[:-1])
            return [sub.coerce(v) for v in value]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{self.name}: expected {k}")
        if k == "int":
            if isinstance(value, float) and not value.is_integer():
                raise ConfigError(f"{self.name}: expected an integer")
            return int(value)
        return float(value)


@dataclass
class Context:
    measure: Optional[Measure]
    candidate: Optional[CandidateFunction]
    spec: QuadratureSpec
    resolved: dict = field(default_factory=dict)  # embedded verbatim in every report
    base_dir: Optional[str] = None


@dataclass
class Outcome:
    report: VerdictReport
    tables: dict = field(default_factory=dict)
    summary: str = ""


@dataclass(frozen=True)
class CheckDef:
    name: str
    runner: Callable[[Context, dict], Outcome]
    params: tuple
    needs: tuple = ()
    help: str = ""

    def resolve(self, given: dict) -> dict:
        known = {p.name: p for p in self.params}
        unknown = set(given) - set(known)
        if unknown:
            raise ConfigError(f"{self.name}: unknown parameter(s) {sorted(unknown)}")
        out = {}
        for p in self.params:
            if p.name in given and given[p.name] is not None:
                out[p.name] = p.coerce(given[p.name])
            elif p.default is REQUIRED:
                raise ConfigError(f"{self.name}: missing required parameter {p.name!r}")
            else:
                out[p.name] = p.default
        return out


REGISTRY: dict = {}
ALIASES = {"check-pcfe": "mc-test"}


def register(name, params=(), needs=(), help=""):
    def deco(fn):
        REGISTRY[name] = CheckDef(name, fn, tuple(params), tuple(needs), help)
        return fn
    return deco


def get(name: str) -> CheckDef:
    name = ALIASES.get(name, name)
    if name not in REGISTRY:
        raise ConfigError(f"unknown check {name!r}")
    return REGISTRY[name]


def known_names() -> set:
    return set(REGISTRY) | set(ALIASES)


def run_check(name: str, ctx: Context, params: dict) -> Outcome:
    d = get(name)
    for need in d.needs:
        if getattr(ctx, need) is None:
            raise ConfigError(f"{d.name}: needs a {need}")
    p = d.resolve(params)
    t0 = time.perf_counter()
    out = d.runner(ctx, p)
    r = out.report
    r.inputs.setdefault("params", p)
    r.inputs.setdefault("config", ctx.resolved)
    r.inputs.pop("digest", None)
    out.report = VerdictReport(r.check, r.inputs, r.statistics, r.verdict, r.tolerances, r.seed,
                               1e3 * (time.perf_counter() - t0), r.residual_sup, r.classification,
                               r.notes)
    return out


def _base_inputs(ctx: Context, measure=True, candidate=True) -> dict:
    d = {}
    if measure and ctx.measure is not None:
        d["measure"] = ctx.measure.describe()
    if candidate and ctx.candidate is not None:
        d["candidate"] = ctx.candidate.describe()
    d["numerics"] = {"abs_tol": ctx.spec.abs_tol, "rel_tol": ctx.spec.rel_tol,
                     "max_subdivisions": ctx.spec.max_subdivisions}
    return d


def _grid(lo, hi, points):
    return np.linspace(lo, hi, int(points))


# --------------------------------------------------------------------------
# distributional checks
# --------------------------------------------------------------------------

SEED = Param("seed", "int", help="RNG seed (mandatory)")


@register("mc-test", [Param("n", "int", 2), Param("N", "int", 100_000), SEED,
                      Param("alpha", "float", 1e-3), Param("replicate", "int", 1,
                      "number of consecutive seeds starting at --seed"),
                      Param("quorum", "float", 0.99)],
          needs=("measure", "candidate"),
          help="two-sample KS/CvM test of f(X1+..+Xn) against f(X1)+..+f(Xn)")
def _mc_test(ctx, p):
    if p["replicate"] <= 1:
        r = core.mc_distributional_test(ctx.candidate, ctx.measure, p["n"], p["N"], p["seed"], p["alpha"])
        r.inputs.update(_base_inputs(ctx))
        s = r.statistics
        return Outcome(r, summary=f"D={s['ks_statistic']:.6g} p={s['ks_pvalue']:.4g}")
    seeds = list(range(p["seed"], p["seed"] + p["replicate"]))
    rep = core.replicate_mc(ctx.candidate, ctx.measure, p["n"], p["N"], seeds, p["alpha"])
    need = math.ceil(p["quorum"] * len(seeds))
    verdict = (CONSISTENT if rep.n_consistent >= need else
               VIOLATED if rep.n_violated >= need else INCONCLUSIVE)
    stats = {"seeds": len(seeds), "consistent": rep.n_consistent, "violated": rep.n_violated,
             "min_pvalue": float(rep.pvalues.min()), "median_pvalue": float(np.median(rep.pvalues))}
    r = VerdictReport("mc-test", {**_base_inputs(ctx), "seeds": seeds}, stats, verdict,
                      {"alpha": p["alpha"], "quorum": p["quorum"]}, p["seed"])
    return Outcome(r, {"pvalues": {"seed": seeds, "ks_pvalue": rep.pvalues}},
                   f"{rep.n_consistent}/{len(seeds)} seeds consistent")


@register("ecf-distance", [Param("n", "int", 2), Param("N", "int", 20_000), SEED,
                           Param("t_grid", "floats", None), Param("n_boot", "int", 100),
                           Param("level", "float", 0.99)],
          needs=("measure", "candidate"), help="empirical characteristic function distance")
def _ecf(ctx, p):
    r = core.ecf_distance(ctx.candidate, ctx.measure, p["n"], p["N"], p["t_grid"], p["seed"],
                          p["n_boot"], p["level"])
    r.inputs.update(_base_inputs(ctx))
    s = r.statistics
    return Outcome(r, summary=f"distance={s['distance']:.6g} band={s['band']:.6g}")


# --------------------------------------------------------------------------
# exponential-case residuals
# --------------------------------------------------------------------------

def _profile_verdict(values, tol):
    sup = float(np.max(np.abs(values))) if len(values) else 0.0
    return sup, (CONSISTENT if sup <= tol else VIOLATED)


@register("psi-profile", [Param("lambda", "float", 1.0), Param("y_max", "float", 5.0),
                          Param("points", "int", 51), Param("tol", "float", 1e-8)],
          needs=("candidate",), help="psi(y), psi'(y) on [0, y_max]")
def _psi_profile(ctx, p):
    ys = _grid(0.0, p["y_max"], p["points"])
    ev = [core.psi_eval(ctx.candidate, p["lambda"], float(y), ctx.spec) for y in ys]
    psi = np.array([e.psi for e in ev])
    dpsi = np.array([e.psi_prime for e in ev])
    sup, verdict = _profile_verdict(psi, p["tol"])
    stats = {"sup_psi": sup, "sup_psi_prime": float(np.max(np.abs(dpsi))),
             "theta_min": min(e.theta_min for e in ev), "theta_max": max(e.theta_max for e in ev)}
    r = VerdictReport("psi-profile", {**_base_inputs(ctx, measure=False), "rate": p["lambda"],
                                      "y_grid": ys}, stats, verdict, {"tol": p["tol"]},
                      residual_sup=sup)
    table = {"y": ys, "psi": psi, "psi_prime": dpsi,
             "theta_min": [e.theta_min for e in ev], "theta_max": [e.theta_max for e in ev]}
    return Outcome(r, {"psi": table}, f"sup|psi|={sup:.3g}")


@register("residual-equ4", [Param("lambda", "float", 1.0), Param("y_max", "float", 5.0),
                            Param("points", "int", 50), Param("tol", "float", 1e-10)],
          needs=("candidate",), help="exponential-case residual on (0, y_max]")
def _residual_equ4(ctx, p):
    ys = _grid(0.0, p["y_max"], p["points"] + 1)[1:]
    res = np.array([core.residual_equ4(ctx.candidate, p["lambda"], float(y), ctx.spec) for y in ys])
    sup, verdict = _profile_verdict(res, p["tol"])
    r = VerdictReport("residual-equ4", {**_base_inputs(ctx, measure=False), "rate": p["lambda"],
                                        "y_grid": ys}, {"sup_residual": sup}, verdict,
                      {"tol": p["tol"]}, residual_sup=sup)
    return Outcome(r, {"residual": {"y": ys, "residual": res}}, f"sup|residual|={sup:.3g}")


@register("density-residual", [Param("y_max", "float", 3.0), Param("points", "int", 30),
                               Param("tol", "float", 1e-8)],
          needs=("measure", "candidate"), help="general-density double integral on (0, y_max]")
def _density_residual(ctx, p):
    ys = _grid(0.0, p["y_max"], p["points"] + 1)[1:]
    res = np.array([core.general_density_residual(ctx.candidate, ctx.measure, float(y), ctx.spec)
                    for y in ys])
    sup, verdict = _profile_verdict(res, p["tol"])
    stats = {"sup_residual": sup, "min_residual": float(res.min()), "max_residual": float(res.max())}
    r = VerdictReport("density-residual", {**_base_inputs(ctx), "y_grid": ys}, stats, verdict,
                      {"tol": p["tol"]}, residual_sup=sup)
    return Outcome(r, {"residual": {"y": ys, "residual": res}}, f"sup|residual|={sup:.3g}")


@register("moment-residual", [Param("n", "int", 2), Param("method", "str", "auto"),
                              Param("N", "int", 200_000), Param("seed", "int", None),
                              Param("nodes", "int", None), Param("tol", "float", 1e-8),
                              Param("z", "float", 4.0)],
          needs=("measure", "candidate"), help="E f(X1+..+Xn) - n E f(X)")
def _moment(ctx, p):
    m = core.first_moment_residual(ctx.candidate, ctx.measure, p["n"], p["method"], ctx.spec,
                                   p["N"], p["seed"], p["nodes"])
    allowed = p["tol"] + p["z"] * m.stderr if m.method == "mc" else p["tol"]
    verdict = CONSISTENT if abs(m.value) <= allowed else VIOLATED
    stats = {"residual": m.value, "stderr": m.stderr, "threshold": allowed}
    r = VerdictReport("moment-residual", {**_base_inputs(ctx), "n": p["n"], "method": m.method},
                      stats, verdict, {"tol": p["tol"], "z": p["z"]}, p["seed"],
                      residual_sup=abs(m.value))
    return Outcome(r, summary=f"residual={m.value:.6g} ({m.method})")


# --------------------------------------------------------------------------
# additivity and (H)
# --------------------------------------------------------------------------

@register("additivity-scan", [Param("x_min", "float", 0.0), Param("x_max", "float", 5.0),
                              Param("y_min", "float", None), Param("y_max", "float", None),
                              Param("points", "int", 41), Param("box", "floats", None,
                              "x0,x1,y0,y1: report subadditive witnesses inside this open box")],
          needs=("candidate",), help="sign pattern of f(x+y) - f(x) - f(y)")
def _additivity(ctx, p):
    y0 = p["x_min"] if p["y_min"] is None else p["y_min"]
    y1 = p["x_max"] if p["y_max"] is None else p["y_max"]
    pairs = core.product_grid(_grid(p["x_min"], p["x_max"], p["points"]), _grid(y0, y1, p["points"]))
    s = core.additivity_scan(ctx.candidate, pairs)
    (amax, gmax), (amin, gmin) = s.argmax, s.argmin
    stats = {"g_max": gmax, "g_min": gmin, "argmax": list(amax), "argmin": list(amin),
             "sub_witnesses": int(len(s.witnesses("sub"))),
             "super_witnesses": int(len(s.witnesses("super")))}
    notes = []
    if p["box"] is not None:
        if len(p["box"]) != 4:
            raise ConfigError("box needs four numbers x0,x1,y0,y1")
        b = p["box"]
        w = s.witnesses("sub", ((b[0], b[1]), (b[2], b[3])))
        stats["box_sub_witnesses"] = int(len(w))
        if len(w):
            stats["box_witness"] = list(w[np.argmin(ctx.candidate(w.sum(1)) - ctx.candidate(w[:, 0])
                                                  - ctx.candidate(w[:, 1]))])
    verdict = CONSISTENT if s.classification == "Additive" else VIOLATED
    r = VerdictReport("additivity-scan", {**_base_inputs(ctx, measure=False), "grid": {
        "x": [p["x_min"], p["x_max"]], "y": [y0, y1], "points": p["points"]}}, stats, verdict,
        {"rel_tol": 1e-12}, classification=s.classification, notes=notes)
    table = {"x": s.pairs[:, 0], "y": s.pairs[:, 1], "g": s.g}
    return Outcome(r, {"g": table}, s.classification)


@register("assumption-h", [Param("x_min", "float", 0.0), Param("x_max", "float", 5.0),
                           Param("points", "int", 51), Param("rel_tol", "float", 1e-8)],
          needs=("measure", "candidate"), help="H(x) = E(f(x+X) - f(X)) - f(x)")
def _assumption_h(ctx, p):
    xs = _grid(p["x_min"], p["x_max"], p["points"])
    h = core.assumption_H_profile(ctx.candidate, ctx.measure, xs, ctx.spec, p["rel_tol"])
    stats = {"H_min": float(h.H.min()), "H_max": float(h.H.max()), "E_f": h.e_f,
             "holds_ge": h.holds_ge, "holds_le": h.holds_le}
    sign = np.sign(np.where(np.abs(h.H) <= h.tol, 0.0, h.H))
    ch = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if ch.size:
        stats["first_sign_change"] = [float(xs[ch[0]]), float(xs[ch[0] + 1])]
    verdict = VIOLATED if h.verdict == "Mixed" else CONSISTENT
    r = VerdictReport("assumption-h", {**_base_inputs(ctx), "x_grid": xs}, stats, verdict,
                      {"tol": h.tol}, classification=h.verdict, notes=h.notes)
    return Outcome(r, {"H": {"x": xs, "H": h.H}}, h.verdict)


LEMMA_PARAMS = [Param(k, "float") for k in "abcdr"]


@register("lemma-a1", LEMMA_PARAMS + [Param("points", "int", 41), Param("x_max", "float", 20.0),
                                      Param("cross_check", "bool", True)],
          help="piecewise-linear counterexample: H', H >= 0 and a subadditive witness")
def _lemma(ctx, p):
    lp = LemmaParams(p["a"], p["b"], p["c"], p["d"], p["r"])
    xs = _grid(0.0, lp.b, p["points"])
    lc = core.lemma_hprime_check(lp, xs, p["cross_check"], ctx.spec)
    stats = {"valid": lc.valid, "c_max": lc.c_max, "hprime_min": lc.min_hprime,
             "hprime_at_b": float(lc.hprime[-1]), "hprime_numeric_discrepancy": lc.max_discrepancy}
    notes = []
    f = lemma_piecewise(lp)
    hx = _grid(0.0, p["x_max"], 4 * p["points"])
    h = core.assumption_H_profile(f, make_exponential(1.0), hx, ctx.spec)
    stats["H_min"] = float(h.H.min())
    # witness box (0, b/2N) x (b, b + b/2N) with b/N < c
    N = math.floor(lp.b / lp.c) + 1
    w = lp.b / (2 * N)
    side = _grid(0.0, w, p["points"] + 2)[1:-1]
    scan = core.additivity_scan(f, core.product_grid(side, lp.b + side))
    wit = scan.witnesses("sub", ((0.0, w), (lp.b, lp.b + w)))
    stats["box"] = [0.0, w, lp.b, lp.b + w]
    stats["box_sub_witnesses"] = int(len(wit))
    if len(wit):
        stats["box_witness"] = [float(v) for v in wit[0]]
    tol = 1e-8
    if not lc.valid:
        notes.append("invalid: c > log((r+d)/(a+d))")
        verdict = VIOLATED
    elif lc.min_hprime >= -tol and h.H.min() >= -tol and len(wit):
        verdict = CONSISTENT
    else:
        verdict = VIOLATED
    r = VerdictReport("lemma-a1", {"params": [lp.a, lp.b, lp.c, lp.d, lp.r], "x_grid": xs,
                                   "measure": make_exponential(1.0).describe()},
                      stats, verdict, {"tol": tol, "derivative_match": 1e-5}, notes=notes,
                      classification="valid" if lc.valid else "invalid")
    tables = {"hprime": {"x": xs, "hprime": lc.hprime, "numeric": lc.numeric_hprime},
              "H": {"x": hx, "H": h.H}}
    return Outcome(r, tables, notes[0] if notes else
                   f"valid; min H'={lc.min_hprime:.3g}, min H={h.H.min():.3g}, witnesses={len(wit)}")


# --------------------------------------------------------------------------
# Laplace / ICFE
# --------------------------------------------------------------------------

@register("laplace-scan", [Param("eta_lo", "float", -5.0), Param("eta_hi", "float", 5.0),
                           Param("steps", "int", 101), Param("numeric", "bool", False),
                           Param("tol", "float", 1e-8)],
          needs=("measure",), help="tabulate L(eta), its finite domain and roots of L = 1")
def _laplace_scan(ctx, p):
    prof = lau_rao.scan_laplace(ctx.measure, p["eta_lo"], p["eta_hi"], p["steps"], p["numeric"], ctx.spec)
    stats = {"domain_interval": list(prof.domain_interval), "convex_evidence": prof.convex_evidence,
             "roots": prof.roots, "scale": prof.scale}
    ok = prof.convex_evidence <= p["tol"] and len(prof.roots) <= 2
    r = VerdictReport("laplace-scan", {**_base_inputs(ctx, candidate=False), "source": prof.source},
                      stats, CONSISTENT if ok else VIOLATED, {"convexity": p["tol"]},
                      notes=prof.notes)
    return Outcome(r, {"laplace": {"eta": prof.eta_grid, "L": prof.values}},
                   f"domain={prof.domain_interval} roots={prof.roots}")


@register("laplace-root", [Param("eta_lo", "float", -20.0), Param("eta_hi", "float", 20.0),
                           Param("numeric", "bool", False)],
          needs=("measure",), help="nontrivial root of L(eta) = 1")
def _laplace_root(ctx, p):
    eta = lau_rao.find_nontrivial_eta(ctx.measure, p["eta_lo"], p["eta_hi"], numeric=p["numeric"],
                                      spec=ctx.spec)
    stats = {"eta": eta}
    if eta is not None:
        stats["L_minus_1"] = lau_rao.laplace_value(ctx.measure, eta, p["numeric"], ctx.spec) - 1.0
    r = VerdictReport("laplace-root", _base_inputs(ctx, candidate=False), stats, CONSISTENT,
                      {"root_tol": 1e-10},
                      classification="NontrivialRoot" if eta is not None else "TrivialOnly")
    return Outcome(r, summary="no nontrivial root" if eta is None else f"η={eta:.10f}")


@register("icfe-residual", [Param("x_min", "float", 0.0), Param("x_max", "float", 5.0),
                            Param("points", "int", 51), Param("rel_tol", "float", 1e-8)],
          needs=("measure", "candidate"), help="f(x) + E f(X) - E f(x + X)")
def _icfe(ctx, p):
    xs = _grid(p["x_min"], p["x_max"], p["points"])
    prof = lau_rao.icfe_residual(ctx.candidate, ctx.measure, xs, ctx.spec, p["rel_tol"])
    r = VerdictReport("icfe-residual", {**_base_inputs(ctx), "x_grid": xs},
                      {"sup_residual": prof.sup}, CONSISTENT if prof.solves else VIOLATED,
                      {"tol": prof.tol}, residual_sup=prof.sup)
    return Outcome(r, {"residual": {"x": xs, "residual": prof.residual}}, f"sup|residual|={prof.sup:.3g}")


@register("eliminate-second-moment", [Param("ns", "ints", [2, 3, 4, 5, 6]),
                                      Param("eta1", "float", None), Param("x", "float", None)],
          help="(x-1)(sum x^k - n) with x = E exp(-2 eta1 X)")
def _eliminate(ctx, p):
    notes = []
    x, eta1 = p["x"], p["eta1"]
    if x is None:
        if ctx.measure is None:
            raise ConfigError("eliminate-second-moment: needs a measure or an explicit x")
        if eta1 is None:
            eta1 = lau_rao.find_nontrivial_eta(ctx.measure, spec=ctx.spec)
        if eta1 is None:
            r = VerdictReport("eliminate-second-moment", _base_inputs(ctx, candidate=False),
                              {"eta1": None}, INCONCLUSIVE,
                              notes=["no nontrivial root: the mixture form does not arise"])
            return Outcome(r, summary="no nontrivial root")
    recs = [lau_rao.second_moment_elimination(ctx.measure, eta1, n, x) for n in p["ns"]]
    statuses = {rc.status for rc in recs}
    verdict = (VIOLATED if statuses == {lau_rao.ELIMINATED} else
               CONSISTENT if statuses == {lau_rao.DEGENERATE} else INCONCLUSIVE)
    stats = {"x": recs[0].x, "eta1": eta1, "factored_min": min(rc.factored for rc in recs),
             "statuses": [rc.status for rc in recs]}
    notes.append("Violated means the mixture solution is eliminated (second moments differ)")
    r = VerdictReport("eliminate-second-moment", _base_inputs(ctx, candidate=False), stats, verdict,
                      {"near_degenerate": 1e-10}, notes=notes)
    table = {"n": p["ns"], "x": [rc.x for rc in recs], "lhs": [rc.lhs for rc in recs],
             "rhs": [rc.rhs for rc in recs], "factored": [rc.factored for rc in recs]}
    return Outcome(r, {"elimination": table}, f"x={recs[0].x:.10g} statuses={sorted(statuses)}")


@register("symmetry-check", [Param("eta", "float", 1.0), Param("tol", "float", 1e-6)],
          needs=("measure",), help="(L(eta)-1)/eta against the tail integral")
def _symmetry(ctx, p):
    rec = lau_rao.symmetry_identity_check(ctx.measure, p["eta"], ctx.spec)
    ok = rec.difference <= p["tol"] * max(1.0, abs(rec.lhs)) and rec.certificate > 0
    stats = {"lhs": rec.lhs, "rhs": rec.rhs, "difference": rec.difference,
             "certificate": rec.certificate}
    r = VerdictReport("symmetry-check", {**_base_inputs(ctx, candidate=False), "eta": p["eta"]},
                      stats, CONSISTENT if ok else VIOLATED, {"tol": p["tol"]})
    return Outcome(r, summary=f"lhs={rec.lhs:.10g} rhs={rec.rhs:.10g}")


# --------------------------------------------------------------------------
# phase type
# --------------------------------------------------------------------------

@register("erlang-identity", [Param("ns", "ints", [2, 3, 4]), Param("thetas", "floats", [0.5, 1.0, 2.0]),
                              Param("xs", "floats", [0.1, 1.0, 5.0]), Param("tol", "float", 1e-6)],
          help="Erlang CDF against the rate-derivative form")
def _erlang(ctx, p):
    t = phase_type.erlang_identity_table(p["ns"], p["thetas"], p["xs"])
    sup = float(max(t["abs_diff"]))
    r = VerdictReport("erlang-identity", {"ns": p["ns"], "thetas": p["thetas"], "xs": p["xs"]},
                      {"max_abs_diff": sup}, CONSISTENT if sup <= p["tol"] else VIOLATED,
                      {"tol": p["tol"]}, residual_sup=sup)
    return Outcome(r, {"erlang": t}, f"max|diff|={sup:.3g}")


def _h_transform(spec: str, base_dir=None) -> phase_type.HTransform:
    if spec == "identity":
        return phase_type.HTransform.identity()
    if spec == "square":
        return phase_type.HTransform.square()
    return phase_type.HTransform.from_candidate(build_candidate(spec, base_dir))


@register("h-convolution", [Param("h", "str", "identity"), Param("n", "int", 2),
                            Param("theta", "float", 1.0), Param("N", "int", 100_000), SEED,
                            Param("level", "float", 0.99), Param("points", "int", 41)],
          help="law of h(X1+..+Xn) for Exp(theta) summands against sampling")
def _h_conv(ctx, p):
    h = _h_transform(p["h"], ctx.base_dir)
    s = phase_type.h_convolution_mc(h, p["n"], p["theta"], p["N"], p["seed"], p["level"])
    xs = np.quantile(s.values, np.linspace(0.0, 1.0, p["points"]))
    stats = {"ks_distance": s.ks_distance, "critical": s.critical}
    r = VerdictReport("h-convolution", {"h": h.name, "n": p["n"], "theta": p["theta"], "N": p["N"]},
                      stats, CONSISTENT if s.passes else VIOLATED, {"level": p["level"]}, p["seed"])
    table = {"x": xs, "analytic": phase_type.h_convolution_cdf(h, p["n"], p["theta"], xs),
             "empirical": s.ecdf(xs)}
    return Outcome(r, {"cdf": table}, f"KS={s.ks_distance:.4g} critical={s.critical:.4g}")

"""Measure/candidate specs and the YAML run configuration.

Compact string forms (used on the command line)::

    exponential:1            gaussian:1,1          grid:path.csv[:Support]
    linear:5   power:3   lau_rao:a,b,eta,c,d,l1   lemma_piecewise:a,b,c,d,r
    exp_half   sine_perturbed   grid:path.csv[:Monotonicity]

The same objects can be given as mappings with a ``kind`` key in a config
file; see README for the full layout.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional

import yaml

from . import candidates as cand
from . import measures as meas
from .errors import ConfigError, ParameterError, ValidationError
from .numerics import DEFAULT_SPEC, QuadratureSpec

SCHEMA_VERSION = 1

MEASURE_KEYS = {
    "exponential": ("rate",),
    "gaussian": ("mean", "sigma"),
    "grid": ("path", "support"),
}
CANDIDATE_KEYS = {
    "linear": ("c",),
    "power": ("p", "domain"),
    "lau_rao": ("a", "b", "eta", "c", "d", "lambda1", "domain"),
    "lemma_piecewise": ("a", "b", "c", "d", "r"),
    "exp_half": (),
    "sine_perturbed": (),
    "grid": ("path", "monotonicity"),
}


def _split(spec: str):
    kind, _, rest = spec.partition(":")
    return kind.strip(), rest.strip()


def _floats(rest: str, count: int, what: str) -> list:
    parts = [p for p in rest.split(",") if p.strip()] if rest else []
    if len(parts) != count:
        raise ValidationError(f"{what}: expected {count} comma-separated numbers, got {rest!r}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise ValidationError(f"{what}: non-numeric parameter in {rest!r}") from None


def _path_and_tag(rest: str, tags) -> tuple[str, Optional[str]]:
    head, sep, tail = rest.rpartition(":")
    if sep and tail in tags:
        return head, tail
    return rest, None


def measure_to_mapping(spec: str) -> dict:
    kind, rest = _split(spec)
    if kind == "exponential":
        (rate,) = _floats(rest, 1, spec)
        return {"kind": kind, "rate": rate}
    if kind == "gaussian":
        mean, sigma = _floats(rest, 2, spec)
        return {"kind": kind, "mean": mean, "sigma": sigma}
    if kind == "grid":
        path, tag = _path_and_tag(rest, [s.value for s in meas.Support])
        return {"kind": kind, "path": path, "support": tag or "FullLine"}
    raise ValidationError(f"unknown measure kind {kind!r}")


def candidate_to_mapping(spec: str) -> dict:
    kind, rest = _split(spec)
    if kind == "linear":
        (c,) = _floats(rest, 1, spec)
        return {"kind": kind, "c": c}
    if kind == "power":
        (p,) = _floats(rest, 1, spec)
        return {"kind": kind, "p": p}
    if kind == "lau_rao":
        return dict(zip(("kind",) + CANDIDATE_KEYS["lau_rao"][:-1], [kind, *_floats(rest, 6, spec)]))
    if kind == "lemma_piecewise":
        return dict(zip(("kind",) + CANDIDATE_KEYS["lemma_piecewise"], [kind, *_floats(rest, 5, spec)]))
    if kind in ("exp_half", "sine_perturbed"):
        if rest:
            raise ValidationError(f"{kind} takes no parameters")
        return {"kind": kind}
    if kind == "grid":
        path, tag = _path_and_tag(rest, [m.value for m in cand.Monotonicity])
        d = {"kind": kind, "path": path}
        if tag:
            d["monotonicity"] = tag
        return d
    raise ValidationError(f"unknown candidate kind {kind!r}")


def _check_keys(m: dict, allowed, what: str):
    extra = set(m) - {"kind", *allowed}
    if extra:
        raise ValidationError(f"{what} {m.get('kind')!r}: unknown field(s) {sorted(extra)}")


def _num(m: dict, key: str, what: str, default=None) -> float:
    v = m.get(key, default)
    if v is None:
        raise ValidationError(f"{what}: missing field {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{what}: field {key!r} must be a number")
    return float(v)


def _resolve(path: str, base_dir: Optional[str]) -> str:
    if base_dir and not os.path.isabs(path):
        return os.path.join(base_dir, path)
    return path


def build_measure(m, base_dir: Optional[str] = None) -> meas.Measure:
    if isinstance(m, str):
        m = measure_to_mapping(m)
    if not isinstance(m, dict) or "kind" not in m:
        raise ValidationError("measure must be a spec string or a mapping with 'kind'")
    kind = m["kind"]
    if kind not in MEASURE_KEYS:
        raise ValidationError(f"unknown measure kind {kind!r}")
    _check_keys(m, MEASURE_KEYS[kind], "measure")
    if kind == "exponential":
        return meas.make_exponential(_num(m, "rate", "exponential"))
    if kind == "gaussian":
        return meas.make_gaussian(_num(m, "mean", "gaussian"), _num(m, "sigma", "gaussian"))
    path = _resolve(str(m.get("path", "")), base_dir)
    xs, ps = meas.load_grid_csv(path, ("x", "p"))
    return meas.make_grid_measure(xs, ps, m.get("support", "FullLine"), name=f"grid({os.path.basename(path)})")


def build_candidate(m, base_dir: Optional[str] = None) -> cand.CandidateFunction:
    if isinstance(m, str):
        m = candidate_to_mapping(m)
    if not isinstance(m, dict) or "kind" not in m:
        raise ValidationError("candidate must be a spec string or a mapping with 'kind'")
    kind = m["kind"]
    if kind not in CANDIDATE_KEYS:
        raise ValidationError(f"unknown candidate kind {kind!r}")
    _check_keys(m, CANDIDATE_KEYS[kind], "candidate")
    if kind == "linear":
        return cand.linear(_num(m, "c", kind))
    if kind == "power":
        return cand.power(_num(m, "p", kind), m.get("domain"))
    if kind == "lau_rao":
        args = {k: _num(m, k, kind, d) for k, d in
                (("a", 0.0), ("b", 1.0), ("eta", 1.0), ("c", 0.0), ("d", 0.0), ("lambda1", 1.0))}
        return cand.lau_rao_form(**args, domain=m.get("domain", "FullLine"))
    if kind == "lemma_piecewise":
        return cand.lemma_piecewise(cand.LemmaParams(*(_num(m, k, kind) for k in "abcdr")))
    if kind == "exp_half":
        return cand.pathological_increasing()
    if kind == "sine_perturbed":
        return cand.sine_perturbed()
    path = _resolve(str(m.get("path", "")), base_dir)
    xs, ys = meas.load_grid_csv(path, ("x", "y"))
    return cand.grid_function(xs, ys, m.get("monotonicity"), name=f"grid({os.path.basename(path)})")


def build_spec(m: Optional[dict]) -> QuadratureSpec:
    if not m:
        return DEFAULT_SPEC
    allowed = {"abs_tol", "rel_tol", "max_subdivisions"}
    extra = set(m) - allowed
    if extra:
        raise ValidationError(f"numerics: unknown field(s) {sorted(extra)}")
    kw = {}
    for k in ("abs_tol", "rel_tol"):
        if k in m:
            kw[k] = _num(m, k, "numerics")
    if "max_subdivisions" in m:
        v = m["max_subdivisions"]
        if isinstance(v, bool) or not isinstance(v, int):
            raise ValidationError("numerics: max_subdivisions must be an integer")
        kw["max_subdivisions"] = v
    try:
        return DEFAULT_SPEC.with_(**kw)
    except (ParameterError, ValueError) as e:
        raise ValidationError(f"numerics: {e}") from None


# --------------------------------------------------------------------------
# run configuration
# --------------------------------------------------------------------------

@dataclass
class CheckEntry:
    name: str
    params: dict
    line: Optional[int] = None


@dataclass
class RunConfig:
    schema_version: int
    measure: Any
    candidate: Any
    numerics: dict
    checks: list
    output_dir: str
    emit_csv: bool
    base_dir: Optional[str] = None
    raw: dict = field(default_factory=dict)


class _LineLoader(yaml.SafeLoader):
    """SafeLoader that records the source line of every mapping key."""


def _construct_mapping(loader, node, deep=False):
    mapping = yaml.SafeLoader.construct_mapping(loader, node, deep=deep)
    lines = {}
    for k, _ in node.value:
        lines[loader.construct_object(k)] = k.start_mark.line + 1
    mapping = _Located(mapping)
    mapping.lines = lines
    mapping.line = node.start_mark.line + 1
    return mapping


class _Located(dict):
    lines: dict = {}
    line: Optional[int] = None


_LineLoader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, _construct_mapping)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_plain(v) for v in obj]
    return obj


def _err(msg: str, node=None, key=None) -> ConfigError:
    line = None
    if isinstance(node, _Located):
        line = node.lines.get(key, node.line) if key is not None else node.line
    return ConfigError(f"line {line}: {msg}" if line else msg)


TOP_KEYS = {"schema_version", "measure", "candidate", "numerics", "checks", "output"}


def parse_config(text: str, base_dir: Optional[str] = None, known_checks=None) -> RunConfig:
    try:
        doc = yaml.load(text, Loader=_LineLoader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f"line {mark.line + 1}: " if mark else ""
        raise ConfigError(f"{where}YAML syntax error: {getattr(e, 'problem', e)}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    extra = set(doc) - TOP_KEYS
    if extra:
        k = sorted(extra)[0]
        raise _err(f"unknown top-level field {k!r}", doc, k)
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise _err(f"schema_version must be {SCHEMA_VERSION}", doc, "schema_version")
    checks = doc.get("checks")
    if not isinstance(checks, list) or not checks:
        raise _err("checks must be a nonempty list", doc, "checks")
    entries = []
    for i, c in enumerate(checks):
        if not isinstance(c, dict) or "name" not in c:
            raise _err(f"checks[{i}] must be a mapping with a 'name'", doc, "checks")
        name = c["name"]
        if known_checks is not None and name not in known_checks:
            raise _err(f"checks[{i}]: unknown check {name!r}", c, "name")
        entries.append(CheckEntry(str(name), _plain({k: v for k, v in c.items() if k != "name"}),
                                  c.line if isinstance(c, _Located) else None))
    out = doc.get("output") or {}
    if not isinstance(out, dict):
        raise _err("output must be a mapping", doc, "output")
    bad = set(out) - {"dir", "csv"}
    if bad:
        k = sorted(bad)[0]
        raise _err(f"output: unknown field {k!r}", out, k)
    numerics = doc.get("numerics") or {}
    try:
        build_spec(numerics)
    except ValidationError as e:
        raise _err(str(e), doc, "numerics") from None
    for key, builder in (("measure", build_measure), ("candidate", build_candidate)):
        if doc.get(key) is not None:
            try:
                builder(_plain(doc[key]), base_dir)
            except (ValidationError, ParameterError, OSError) as e:
                raise _err(f"{key}: {e}", doc, key) from None
    return RunConfig(
        schema_version=SCHEMA_VERSION,
        measure=_plain(doc.get("measure")),
        candidate=_plain(doc.get("candidate")),
        numerics=_plain(numerics),
        checks=entries,
        output_dir=str(out.get("dir", "pcfelab-out")),
        emit_csv=bool(out.get("csv", False)),
        base_dir=base_dir,
        raw=_plain(doc),
    )


def load_config(path: str, known_checks=None) -> RunConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    return parse_config(text, os.path.dirname(os.path.abspath(path)), known_checks)

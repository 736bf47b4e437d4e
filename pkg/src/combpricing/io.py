"""Instance files (versioned JSON) and delimiter-separated result tables."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import PricingInstance
from .problems import GraphData, KipData, KnapsackData, SetCoverData

FORMAT_VERSION = 1
PROBLEMS = ("kpp", "maxsspp", "minscpp", "kip")


class InstanceFormatError(ValueError):
    pass


def _ints(a):
    out = []
    for x in a:
        f = float(x)
        out.append(int(f) if f.is_integer() else f)
    return out


def _payload_to_dict(inst):
    d = inst.payload
    if inst.problem == "kpp":
        return {"w": list(d.w), "C": d.C}
    if inst.problem == "maxsspp":
        return {"edges": [list(e) for e in d.edges]}
    if inst.problem == "minscpp":
        out = {"n_elements": d.n_elements, "sets": [list(s) for s in d.sets]}
        if d.element_weights is not None:
            out["element_weights"] = _ints(d.element_weights)
        return out
    if inst.problem == "kip":
        return {"w": list(d.w), "c": d.c, "W": list(d.W), "C": d.C}
    raise InstanceFormatError(f"unknown problem {inst.problem!r}")


def instance_to_dict(inst):
    doc = {"format_version": FORMAT_VERSION, "problem": inst.problem, "n": inst.n,
           "v": _ints(inst.v), "tolled": list(inst.tolled), "payload": _payload_to_dict(inst)}
    if inst.meta:
        doc["provenance"] = dict(inst.meta)
    return doc


def instance_from_dict(doc):
    try:
        version = doc["format_version"]
        if version != FORMAT_VERSION:
            raise InstanceFormatError(f"unsupported format_version {version!r}")
        problem = doc["problem"]
        if problem not in PROBLEMS:
            raise InstanceFormatError(f"unknown problem {problem!r}")
        v = doc["v"]
        n = int(doc.get("n", len(v)))
        if len(v) != n:
            raise InstanceFormatError(f"n = {n} but v has {len(v)} entries")
        p = doc["payload"]
        if problem == "kpp":
            payload = KnapsackData(p["w"], p["C"])
            if len(payload.w) != n:
                raise InstanceFormatError("weight vector length differs from n")
        elif problem == "maxsspp":
            payload = GraphData(n, tuple(tuple(e) for e in p["edges"]))
        elif problem == "minscpp":
            payload = SetCoverData(int(p["n_elements"]), tuple(tuple(s) for s in p["sets"]),
                                   p.get("element_weights"))
            if len(payload.sets) != n:
                raise InstanceFormatError("number of sets differs from n")
        else:
            payload = KipData(v, p["w"], p["c"], p["W"], p["C"])
            if len(payload.w) != n:
                raise InstanceFormatError("weight vector length differs from n")
        inst = PricingInstance(problem, v, tuple(doc["tolled"]), payload, dict(doc.get("provenance", {})))
    except InstanceFormatError:
        raise
    except (KeyError, TypeError) as e:
        raise InstanceFormatError(f"malformed instance document: missing or bad field {e}") from e
    except ValueError as e:
        raise InstanceFormatError(f"invalid instance: {e}") from e
    if problem == "minscpp":
        covered = 0
        for m in payload.masks:
            covered |= m
        if covered != payload.universe:
            raise InstanceFormatError("sets do not cover all elements")
    return inst


def dumps_instance(inst):
    return json.dumps(instance_to_dict(inst), indent=1, sort_keys=True) + "\n"


def loads_instance(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InstanceFormatError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise InstanceFormatError("instance document must be a JSON object")
    return instance_from_dict(doc)


def save_instance(inst, path):
    with open(path, "w") as f:
        f.write(dumps_instance(inst))


def load_instance(path):
    with open(path) as f:
        return loads_instance(f.read())


# ----------------------------------------------------------------------
# results

@dataclass
class ResultRow:
    instance: str
    method: str
    N: str
    W: str
    m: str
    status: str
    objective: float
    bound: float
    gap: float
    total_time: float
    callback_time: float
    callback_calls: int
    cuts: int
    nodes: int
    seed: int


COLUMNS = [f.name for f in fields(ResultRow)]


def result_row(instance_id, config, result):
    return ResultRow(
        instance=instance_id, method=config.method,
        N=str(config.pairs) if config.method == "sd" else "",
        W=str(config.width) if config.method == "dd" else "",
        m="" if config.method != "dd" or config.layers is None else str(config.layers),
        status=result.status, objective=result.value, bound=result.bound, gap=result.gap,
        total_time=result.stats.total_time, callback_time=result.stats.callback_time,
        callback_calls=result.stats.callback_calls, cuts=result.stats.cuts_added,
        nodes=result.stats.bb_nodes, seed=config.seed)


def _fmt(x):
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return f"{x:.10g}"
    return str(x)


def format_rows(rows, header=True, delimiter=","):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    if header:
        w.writerow(COLUMNS)
    for r in rows:
        d = asdict(r)
        w.writerow([_fmt(d[c]) for c in COLUMNS])
    return buf.getvalue()


def parse_rows(text, delimiter=","):
    out = []
    for rec in csv.DictReader(io.StringIO(text), delimiter=delimiter):
        out.append(ResultRow(
            rec["instance"], rec["method"], rec["N"], rec["W"], rec["m"], rec["status"],
            float(rec["objective"]), float(rec["bound"]), float(rec["gap"]),
            float(rec["total_time"]), float(rec["callback_time"]), int(rec["callback_calls"]),
            int(rec["cuts"]), int(rec["nodes"]), int(rec["seed"])))
    return out


def geometric_mean(values, floor=1.0):
    """Geometric mean after lifting values below ``floor`` up to it."""
    vals = np.maximum(np.asarray(values, dtype=float), floor)
    if not len(vals):
        return float("nan")
    return float(np.exp(np.mean(np.log(vals))))


def method_key(r):
    return f"{r.method}(N={r.N})" if r.method == "sd" else (
        f"{r.method}(W={r.W}{',m=' + r.m if r.m else ''})" if r.method == "dd" else r.method)


def summarize(rows):
    """Per-method summary folded from raw rows."""
    groups = {}
    for r in rows:
        groups.setdefault(method_key(r), []).append(r)
    out = {}
    for k, rs in groups.items():
        gaps = [r.gap for r in rs if np.isfinite(r.gap)]
        out[k] = {
            "runs": len(rs),
            "solved": sum(r.status == "optimal" for r in rs),
            "geo_total_time": geometric_mean([r.total_time for r in rs]),
            "geo_callback_time": geometric_mean([r.callback_time for r in rs]),
            "mean_gap": float(np.mean(gaps)) if gaps else float("nan"),
            "geo_callback_calls": geometric_mean([r.callback_calls for r in rs]),
        }
    return out


SUMMARY_COLUMNS = ["runs", "solved", "geo_total_time", "geo_callback_time", "mean_gap",
                   "geo_callback_calls"]


def format_summary(summary, delimiter=","):
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["method"] + SUMMARY_COLUMNS)
    for k in sorted(summary):
        w.writerow([k] + [_fmt(summary[k][c]) for c in SUMMARY_COLUMNS])
    return buf.getvalue()

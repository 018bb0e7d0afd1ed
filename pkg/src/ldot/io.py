"""File formats: measure CSV, coupling/report JSON, grid-function CSV and run tables.

Floats are written with ``repr`` (shortest round-trip form), so rereading
gives the same bits and reruns give the same bytes.  Non-finite values
appear as ``inf``, ``-inf`` or ``nan``, also inside JSON (as strings).
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .kernels import ReferenceCoupling
from .legendre import GridFunction1D
from .measures import Coupling, DiscreteMeasure
from .solvers.report import SolveReport


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x + 0.0)  # no negative zero


def _parse_float(s: str) -> float:
    return float(s.strip())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else fmt(x)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _unjson(obj):
    if isinstance(obj, list):
        return np.array([_unjson(v) for v in obj], dtype=float)
    if isinstance(obj, str):
        return float(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_jsonable(obj), indent=1, sort_keys=False) + "\n"


# --------------------------------------------------------------------------
# measures


def measure_to_csv(mu: DiscreteMeasure) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(mu.dim)] + ["weight"])
    for pt, wt in zip(mu.support, mu.weights):
        w.writerow([fmt(v) for v in pt] + [fmt(wt)])
    return buf.getvalue()


def measure_from_csv(text: str) -> DiscreteMeasure:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows:
        raise ValueError("empty measure file")
    header = [h.strip() for h in rows[0]]
    if header[-1] != "weight" or header[:-1] != [f"x{i + 1}" for i in range(len(header) - 1)]:
        raise ValueError("measure CSV header must be x1,...,xd,weight")
    data = np.array([[_parse_float(v) for v in r] for r in rows[1:]], dtype=float)
    if data.size == 0:
        raise ValueError("measure file has no atoms")
    return DiscreteMeasure(data[:, :-1], data[:, -1])


def read_measure(path) -> DiscreteMeasure:
    return measure_from_csv(Path(path).read_text(encoding="utf-8"))


def write_measure(path, mu: DiscreteMeasure) -> None:
    Path(path).write_text(measure_to_csv(mu), encoding="utf-8")


# --------------------------------------------------------------------------
# couplings and reports


def coupling_to_dict(rho: Coupling) -> dict:
    return {"source": rho.source_support, "target": rho.target_support, "weights": rho.weights}


def coupling_from_dict(d: dict) -> Coupling:
    return Coupling(_unjson(d["source"]), _unjson(d["target"]), _unjson(d["weights"]))


def reference_to_dict(pi: ReferenceCoupling) -> dict:
    out = coupling_to_dict(pi.coupling())
    out["k"] = int(pi.k)
    out["mode"] = pi.mode
    return out


def reference_from_dict(d: dict) -> ReferenceCoupling:
    rho = coupling_from_dict(d)
    mu_w = rho.row_sums()
    with np.errstate(divide="ignore", invalid="ignore"):
        log_rows = np.log(rho.weights) - np.log(mu_w)[:, None]
    if np.any(mu_w <= 0):
        raise ValueError("every source atom of a reference coupling needs positive mass")
    log_rows = log_rows - np.log(np.exp(log_rows).sum(axis=1))[:, None]
    return ReferenceCoupling(DiscreteMeasure(rho.source_support, mu_w), rho.target_support,
                             log_rows, int(d["k"]), str(d["mode"]))


def report_to_dict(rep: SolveReport) -> dict:
    return {"value": rep.value, "plan": coupling_to_dict(rep.plan), "dual_phi": rep.dual_phi,
            "dual_psi": rep.dual_psi, "iterations": int(rep.iterations),
            "residual": rep.residual, "termination": rep.termination}


def report_from_dict(d: dict) -> SolveReport:
    return SolveReport(float(d["value"]), coupling_from_dict(d["plan"]), _unjson(d["dual_phi"]),
                       _unjson(d["dual_psi"]), int(d["iterations"]), float(d["residual"]),
                       str(d["termination"]))


# --------------------------------------------------------------------------
# grid functions


def gridfunction_to_csv(f: GridFunction1D) -> str:
    lines = ["y,value"] + [f"{fmt(y)},{fmt(v)}" for y, v in zip(f.grid, f.values)]
    return "\n".join(lines) + "\n"


def gridfunction_from_csv(text: str) -> GridFunction1D:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    if not rows or [h.strip() for h in rows[0]] != ["y", "value"]:
        raise ValueError("grid function CSV header must be y,value")
    data = np.array([[_parse_float(v) for v in r] for r in rows[1:]], dtype=float)
    if data.size == 0:
        raise ValueError("grid function file has no rows")
    return GridFunction1D(data[:, 0], data[:, 1])


# --------------------------------------------------------------------------
# run tables


def config_hash(raw: bytes) -> str:
    return hashlib.sha256(raw).hexdigest()[:16]


def version_tag() -> str:
    return f"v{__version__}"


def table_to_csv(columns, rows, meta: dict | None = None) -> str:
    """CSV with ``# key: value`` header lines followed by the column row."""
    out = []
    for key, val in (meta or {}).items():
        out.append(f"# {key}: {val}")
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else
                            str(int(v)) if isinstance(v, (int, np.integer)) else fmt(v) for v in row))
    return "\n".join(out) + "\n"


def read_table(text: str) -> tuple[dict, list[str], list[list[str]]]:
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            meta[key.strip()] = val.strip()
        elif line:
            body.append(line.split(","))
    return meta, body[0], body[1:]

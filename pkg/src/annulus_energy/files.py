"""Flat-file formats: profile tables (csv/json), energy reports and key=value configs.

Floats are written with ``repr`` so that reading a file back returns the
exact binary values, and identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from pathlib import Path

import numpy as np

from . import model
from .model import Problem

PROFILE_COLUMNS = ("s", "H", "K", "H_minus_sK", "L")
REPORT_FIELDS = ("lambda_star", "energy_total", "energy_term", "distortion_term",
                 "el_residual", "case", "n", "r", "R", "r_star", "R_star", "alpha")


class FormatError(ValueError):
    pass


def _num(x):
    """JSON-safe number: finite floats as themselves, anything else as null."""
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def profile_columns(grid, H, K, problem: Problem) -> dict[str, np.ndarray]:
    grid, H, K = (np.asarray(v, dtype=float) for v in (grid, H, K))
    return {"s": grid, "H": H, "K": K, "H_minus_sK": H - grid * K,
            "L": model.lagrangian(grid, H, K, problem)}


def profile_text(columns: dict, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PROFILE_COLUMNS)
        for row in zip(*(columns[c] for c in PROFILE_COLUMNS)):
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()
    if fmt == "json":
        doc = {c: [float(v) for v in columns[c]] for c in PROFILE_COLUMNS}
        return json.dumps(doc, indent=1) + "\n"
    raise FormatError(f"unknown format {fmt!r}")


def read_profile(path) -> dict[str, np.ndarray]:
    """Columns ``s``, ``H`` and ``K`` (at least) from a csv or json profile file."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix == ".json":
        doc = json.loads(text)
    else:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise FormatError(f"{path}: empty file")
        header, body = rows[0], rows[1:]
        doc = {name: [float(r[i]) for r in body] for i, name in enumerate(header)}
    missing = [c for c in ("s", "H", "K") if c not in doc]
    if missing:
        raise FormatError(f"{path}: missing column(s) {', '.join(missing)}")
    return {k: np.asarray(v, dtype=float) for k, v in doc.items()}


def report_dict(report, problem: Problem) -> dict:
    return {
        "lambda_star": _num(report.lambda_star),
        "energy_total": _num(report.total),
        "energy_term": _num(report.energy_term),
        "distortion_term": _num(report.distortion_term),
        "el_residual": _num(report.el_residual),
        "case": report.case.tag.value if report.case is not None else None,
        "n": problem.n,
        "r": problem.r,
        "R": problem.R,
        "r_star": problem.r_star,
        "R_star": problem.R_star,
        "alpha": problem.alpha,
    }


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


def ensure_writable(path) -> None:
    """Raise ``FormatError`` unless ``path`` can be created or overwritten."""
    path = Path(path)
    parent = path.parent if str(path.parent) else Path(".")
    if not parent.is_dir():
        raise FormatError(f"directory {parent} does not exist")
    if path.exists() and not os.access(path, os.W_OK):
        raise FormatError(f"{path} is not writable")
    if not path.exists() and not os.access(parent, os.W_OK):
        raise FormatError(f"directory {parent} is not writable")


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; dashes in keys read as underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out

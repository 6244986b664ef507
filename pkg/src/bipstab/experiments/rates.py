"""Rate fits, result containers and deterministic output files."""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from ..bounds import BoundReport
from ..errors import NonPositiveInput

RATE_COLUMNS = ("experiment", "param", "N_or_eps", "lhs", "rhs", "satisfied", "margin")


@dataclass(frozen=True)
class RateFit:
    log_x: list
    log_y: list
    slope: float
    intercept: float
    r_squared: float


def fit_rate(xs, ys) -> RateFit:
    """Ordinary least squares of log y on log x."""
    xs = np.asarray(xs, dtype=float).reshape(-1)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if xs.shape != ys.shape:
        raise ValueError("xs and ys must have equal length")
    if xs.size < 3:
        raise NonPositiveInput("a rate fit needs at least 3 points")
    if np.any(xs <= 0) or np.any(ys <= 0) or not np.all(np.isfinite(xs * ys)):
        raise NonPositiveInput("rate fits need finite positive xs and ys")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(lx.tolist(), ly.tolist(), float(slope), float(intercept), float(min(1.0, max(0.0, r2))))


@dataclass(frozen=True)
class RateRow:
    experiment: str
    param: str
    N_or_eps: float
    lhs: float
    rhs: float
    satisfied: bool
    margin: float


@dataclass
class ExperimentResult:
    experiment: str
    rows: list = field(default_factory=list)
    reports: list = field(default_factory=list)  # (tag dict, BoundReport)
    fits: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)  # bound checks; these set the exit code
    rate_checks: dict = field(default_factory=dict)  # slope and monotonicity checks, reported only
    diagnostics: dict = field(default_factory=dict)
    seeds: list = field(default_factory=list)

    def add_row(self, param, x, lhs, rhs, satisfied, margin=None):
        margin = float(rhs - lhs) if margin is None else float(margin)
        self.rows.append(RateRow(self.experiment, str(param), float(x), float(lhs), float(rhs),
                                 bool(satisfied), margin))

    def add_report(self, report: BoundReport, **tags):
        self.reports.append((tags, report))

    @property
    def all_bounds_satisfied(self) -> bool:
        return bool(self.checks) and all(self.checks.values())


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def rates_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RATE_COLUMNS)
    for row in rows:
        w.writerow([_fmt(getattr(row, c)) for c in RATE_COLUMNS])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, RateFit):
        return _jsonable(asdict(obj))
    return obj


def bounds_jsonl(reports) -> str:
    lines = []
    for tags, rep in reports:
        rec = {"tags": _jsonable(tags), **_jsonable(asdict(rep))}
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def manifest(result: ExperimentResult, config_dict: dict, version: str) -> str:
    rec = {
        "experiment": result.experiment,
        "version": version,
        "config": _jsonable(config_dict),
        "seeds": _jsonable(result.seeds),
        "fits": _jsonable(result.fits),
        "checks": _jsonable(result.checks),
        "rate_checks": _jsonable(result.rate_checks),
        "diagnostics": _jsonable(result.diagnostics),
        "all_bounds_satisfied": result.all_bounds_satisfied,
    }
    return json.dumps(rec, sort_keys=True, indent=2) + "\n"


def write_outputs(result: ExperimentResult, config_dict: dict, out_dir, version: str) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "rates.csv": rates_csv(result.rows),
        "bounds.jsonl": bounds_jsonl(result.reports),
        "manifest.json": manifest(result, config_dict, version),
    }
    written = {}
    for name, text in paths.items():
        p = os.path.join(out_dir, name)
        with open(p, "w", newline="") as fh:
            fh.write(text)
        written[name] = p
    return written

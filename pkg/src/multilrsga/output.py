"""Trace CSV, JSON report and SVG plot writers."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .experiments import ComparisonReport
from .solvers import SolverTrace, oscillation_count

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "multilrsga run report",
    "type": "object",
    "required": ["game", "params", "w0", "seed", "solvers"],
    "properties": {
        "game": {"type": "string"},
        "params": {"type": "object"},
        "w0": {"type": "array", "items": {"type": "number"}},
        "seed": {"type": "integer"},
        "solvers": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["status", "iterations", "final_residual", "q_hat",
                             "r_squared", "iterations_to_tol", "oscillations",
                             "component_oscillations", "final_point", "config"],
                "properties": {
                    "status": {"enum": ["converged", "max_iter", "diverged"]},
                    "iterations": {"type": "integer", "minimum": 0},
                    "final_residual": {"type": "number"},
                    "q_hat": {"type": ["number", "null"]},
                    "r_squared": {"type": ["number", "null"]},
                    "iterations_to_tol": {"type": ["integer", "null"]},
                    "oscillations": {"type": "integer", "minimum": 0},
                    "component_oscillations": {"type": "array", "items": {"type": "integer"}},
                    "final_point": {"type": "array", "items": {"type": "number"}},
                    "config": {"type": "object"},
                },
            },
        },
    },
}


def trace_header(trace: SolverTrace) -> list:
    h = trace.block_norms.shape[1]
    cols = ["k", "residual"] + [f"norm_x{i + 1}" for i in range(h)]
    if trace.skew_err is not None:
        cols += ["skew_err"] + [f"sec_err_{i + 1}" for i in range(h)]
    return cols


def trace_to_csv(trace: SolverTrace) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(trace_header(trace))
    for r in range(trace.k.shape[0]):
        row = [int(trace.k[r]), repr(float(trace.residual[r]))]
        row += [repr(float(x)) for x in trace.block_norms[r]]
        if trace.skew_err is not None:
            row.append(repr(float(trace.skew_err[r])))
            row += [repr(float(x)) for x in trace.sec_err[r]]
        writer.writerow(row)
    return buf.getvalue()


def component_oscillations(trace: SolverTrace, burn_in: int = 100) -> list:
    return [oscillation_count(trace.block_norms[:, i], burn_in)
            for i in range(trace.block_norms.shape[1])]


def report_dict(report: ComparisonReport, params: dict, seed: int) -> dict:
    solvers = {}
    for name, trace in report.traces.items():
        rate = report.rates.get(name)
        solvers[name] = {
            "status": trace.status,
            "iterations": int(trace.iterations),
            "final_residual": float(trace.final_residual),
            "q_hat": None if rate is None else rate[0],
            "r_squared": None if rate is None else rate[1],
            "iterations_to_tol": report.iterations_to_tol[name],
            "oscillations": report.oscillations[name],
            "component_oscillations": component_oscillations(trace),
            "final_point": [float(x) for x in trace.final_point],
            "config": asdict(report.configs[name]),
        }
    return {
        "game": report.game,
        "params": params,
        "w0": [float(x) for x in report.w0],
        "seed": int(seed),
        "solvers": solvers,
    }


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# --- SVG ---------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
_W, _H = 640, 400
_ML, _MR, _MT, _MB = 70, 150, 40, 50
MAX_POINTS = 2000


def _thin(x, y):
    if len(x) <= MAX_POINTS:
        return x, y
    idx = np.unique(np.linspace(0, len(x) - 1, MAX_POINTS).round().astype(int))
    return x[idx], y[idx]


def line_plot_svg(series: Dict[str, Tuple[np.ndarray, np.ndarray]], title: str,
                  xlabel: str = "iteration k", ylabel: str = "", log_y: bool = False) -> str:
    """Minimal standalone SVG line chart; ``log_y`` plots log10 of positive values."""
    prepared = {}
    for name, (x, y) in series.items():
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if log_y:
            keep = y > 0
            x, y = x[keep], np.log10(y[keep])
        prepared[name] = _thin(x, y)

    xs = np.concatenate([p[0] for p in prepared.values()] or [np.zeros(1)])
    ys = np.concatenate([p[1] for p in prepared.values()] or [np.zeros(1)])
    if xs.size == 0:
        xs, ys = np.zeros(1), np.zeros(1)
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if log_y:
        y0, y1 = np.floor(y0), np.ceil(y1)
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    pw, ph = _W - _ML - _MR, _H - _MT - _MB

    def px(v):
        return _ML + (v - x0) / (x1 - x0) * pw

    def py(v):
        return _MT + ph - (v - y0) / (y1 - y0) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="14">{_esc(title)}</text>',
        f'<rect x="{_ML}" y="{_MT}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in np.linspace(x0, x1, 5):
        out.append(f'<line x1="{px(t):.2f}" y1="{_MT + ph}" x2="{px(t):.2f}" y2="{_MT + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{_MT + ph + 18}" text-anchor="middle">{t:.0f}</text>')
    if log_y:
        ticks = np.arange(y0, y1 + 1)
        step = max(1, int(np.ceil(len(ticks) / 8)))
        labels = [(t, f"1e{int(t)}") for t in ticks[::step]]
    else:
        labels = [(t, f"{t:.3g}") for t in np.linspace(y0, y1, 5)]
    for t, lab in labels:
        out.append(f'<line x1="{_ML - 5}" y1="{py(t):.2f}" x2="{_ML}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{_ML - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{_ML + pw / 2:.1f}" y="{_H - 10}" text-anchor="middle">{_esc(xlabel)}</text>')
    out.append(f'<text x="16" y="{_MT + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {_MT + ph / 2:.1f})">{_esc(ylabel)}</text>')
    for n, (name, (x, y)) in enumerate(prepared.items()):
        color = _COLORS[n % len(_COLORS)]
        if x.size:
            pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(x, y))
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = _MT + 10 + 18 * n
        out.append(f'<line x1="{_W - _MR + 10}" y1="{ly}" x2="{_W - _MR + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{_W - _MR + 35}" y="{ly + 4}">{_esc(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def residuals_svg(traces: Dict[str, SolverTrace]) -> str:
    return line_plot_svg({n: (t.k, t.residual) for n, t in traces.items()},
                         "Residual ||F(w_k)||", ylabel="||F(w_k)|| (log scale)", log_y=True)


def components_svg(trace: SolverTrace, labels: Optional[Sequence[str]] = None) -> str:
    h = trace.block_norms.shape[1]
    labels = labels or [f"||x_{i + 1}||" for i in range(h)]
    return line_plot_svg({labels[i]: (trace.k, trace.block_norms[:, i]) for i in range(h)},
                         f"Component norms: {trace.solver}", ylabel="block norm")

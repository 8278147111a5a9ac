"""Deterministic CSV and JSON writers for experiment outputs.

Floats are rendered with '.17g', which round-trips IEEE doubles exactly,
and every writer uses a fixed line terminator and key order, so identical
inputs always produce identical bytes. Undefined quantities (NaN) become
empty CSV fields and JSON nulls.
"""

from __future__ import annotations

import csv
import json
import math

import numpy as np

# declared column schemas; bracketed units follow each physical quantity
DISTRIBUTION_HEADER = ("site[sites]", "probability")
DISTRIBUTION_2D_HEADER = ("x[sites]", "y[sites]", "probability")
PHASE_DIAGRAM_HEADER = (
    "theta1[rad]", "theta2[rad]", "winding", "gap0[rad]", "gapPi[rad]", "gapless_flag",
)
EDGE_STATE_HEADER = (
    "quasienergy[rad]", "wall[sites]", "window_mass",
    "participation_ratio", "decay_length[sites]",
)
CORRELATION_HEADER = ("i", "j", "g1_re", "g1_im", "g2", "n_i[photons]", "n_j[photons]")
TRACE_HEADER = ("step", "total_photons[photons]")
SCAN_HEADER = ("chi_total", "gain", "minQ", "logneg", "crossed_flag")
SCALING_HEADER = ("N", "sigma[sites]", "sigma_err[sites]")
ROBUSTNESS_HEADER = ("noise_kind", "level", "retained_mean", "retained_std")


def format_float(value) -> str:
    return format(float(value), ".17g")


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return "" if math.isnan(v) else format_float(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def sanitize(obj):
    """Recursively convert numpy containers to plain JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if math.isnan(v) else v
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    return obj


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(sanitize(obj), fh, sort_keys=True, indent=2)
        fh.write("\n")


def table_json(header, rows) -> dict:
    return {
        "columns": list(header),
        "rows": [sanitize(list(row)) for row in rows],
    }


def matrix_json(matrix) -> dict:
    """Matrix payload with explicit dimension headers."""
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise ValueError("matrix_json expects a 2D array")
    payload = {"rows": int(m.shape[0]), "cols": int(m.shape[1])}
    if np.iscomplexobj(m):
        payload["re"] = sanitize(m.real)
        payload["im"] = sanitize(m.imag)
    else:
        payload["data"] = sanitize(m)
    return payload


# row builders for the report types


def distribution_rows(distribution) -> list:
    p = np.asarray(distribution)
    if p.ndim == 1:
        return [(i, float(v)) for i, v in enumerate(p)]
    rows = []
    for x in range(p.shape[0]):
        for y in range(p.shape[1]):
            rows.append((x, y, float(p[x, y])))
    return rows


def phase_diagram_rows(cells) -> list:
    return [
        (
            c.theta1, c.theta2,
            None if c.winding is None else int(c.winding),
            c.gap0, c.gap_pi, c.gapless,
        )
        for c in cells
    ]


def edge_state_rows(states) -> list:
    return [
        (s.quasienergy, s.wall, s.window_mass, s.participation_ratio, s.decay_length)
        for s in states
    ]


def certificate_json(cert) -> dict:
    def state(s):
        return {
            "quasienergy_rad": s.quasienergy,
            "wall_sites": s.wall,
            "window_mass": s.window_mass,
            "participation_ratio": s.participation_ratio,
            "decay_length_sites": s.decay_length,
            "wall_masses": list(s.wall_masses),
        }

    return {
        "walls_sites": list(cert.walls),
        "window_sites": cert.window,
        "counts": list(cert.counts),
        "states": [state(s) for s in cert.states],
        "ambiguous": [state(s) for s in cert.ambiguous],
    }


def correlation_rows(report) -> list:
    n_modes = report.mean_n.shape[0]
    rows = []
    for i in range(n_modes):
        for j in range(i, n_modes):
            if report.defined[i, j]:
                g1 = complex(report.g1[i, j])
                g1_re, g1_im = g1.real, g1.imag
                g2 = float(report.g2[i, j])
            else:
                g1_re = g1_im = g2 = float("nan")
            rows.append(
                (i, j, g1_re, g1_im, g2, float(report.mean_n[i]), float(report.mean_n[j]))
            )
    return rows


def trace_rows(photon_trace) -> list:
    return [(step, float(v)) for step, v in enumerate(photon_trace)]


def scan_rows(result) -> list:
    return [
        (
            float(result.chi_total[i]), float(result.gain[i]),
            float(result.min_q[i]), float(result.max_logneg[i]),
            bool(result.crossed[i]),
        )
        for i in range(result.scales.shape[0])
    ]


def scaling_rows(report) -> list:
    return report.rows()


def robustness_rows(report) -> list:
    return report.rows()


def histogram_json(hist) -> dict:
    return {
        "bin_edges": sanitize(hist.bin_edges),
        "counts": sanitize(hist.counts),
        "mean": sanitize(hist.mean),
        "variance": sanitize(hist.variance),
        "fano": sanitize(hist.fano),
        "realizations": hist.realizations,
        "fitted": hist.fitted,
    }

"""Command-line front end: config parsing, orchestration, serialization.

Every run resolves its configuration fully before any computation starts,
writes a manifest first (marked incomplete until all outputs land), and
emits deterministic CSV/JSON files: identical config and seed reproduce
identical bytes at a fixed thread count. A manifest can be fed back in as
--config to rerun the experiment it describes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from . import serialize
from .errors import ConfigError, DimensionCapError, SimulationError
from .gaussian import (
    FUNCTIONALS,
    GaussianState,
    correlations,
    gain_scan,
    network_evolve,
    network_from_walk,
    su11_chain,
    walk_input_state,
)
from .lattice import (
    CoinProfile,
    LatticeSpec,
    WalkSpec,
    make_localized_state,
    position_distribution,
)
from .noise import (
    NOISE_KINDS,
    NoiseSpec,
    edge_robustness,
    intensity_histogram,
    noisy_evolve,
    sigma_scaling,
)
from .topology import boundary_walk_experiment, find_edge_states, phase_diagram
from .walk import evolve

OUTPUT_ROOT_ENV = "TOPOWALK_OUT"
EXPERIMENT_KINDS = (
    "walk", "phase-diagram", "edge", "gaussian", "noise-sweep", "gain-scan",
)
COIN_PRESETS = {
    "up": (1.0, 0.0),
    "down": (0.0, 1.0),
    "symmetric": (1.0, 1.0j),
}

_REQUIRED = object()


# --------------------------------------------------------------------------
# config schema machinery


@dataclass(frozen=True)
class Field:
    parse: callable
    default: object = _REQUIRED
    units: str = ""
    help: str = ""

    @property
    def required(self) -> bool:
        return self.default is _REQUIRED


def _fail(key, message):
    raise ConfigError(f"config key {key!r}: {message}")


def _int(lo=None, hi=None):
    def parse(key, raw):
        if isinstance(raw, bool) or not isinstance(raw, (int, np.integer)):
            _fail(key, f"expected an integer, got {raw!r}")
        v = int(raw)
        if lo is not None and v < lo:
            _fail(key, f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            _fail(key, f"must be <= {hi}, got {v}")
        return v

    return parse


def _float(lo=None, hi=None):
    def parse(key, raw):
        if isinstance(raw, bool) or not isinstance(raw, (int, float, np.floating)):
            _fail(key, f"expected a number, got {raw!r}")
        v = float(raw)
        if not np.isfinite(v):
            _fail(key, f"must be finite, got {v}")
        if lo is not None and v < lo:
            _fail(key, f"must be >= {lo}, got {v}")
        if hi is not None and v > hi:
            _fail(key, f"must be <= {hi}, got {v}")
        return v

    return parse


def _bool(key, raw):
    if not isinstance(raw, bool):
        _fail(key, f"expected true/false, got {raw!r}")
    return raw


def _choice(*options):
    def parse(key, raw):
        if raw not in options:
            _fail(key, f"expected one of {list(options)}, got {raw!r}")
        return raw

    return parse


def _int_list(min_len=1):
    item = _int()

    def parse(key, raw):
        if not isinstance(raw, (list, tuple)):
            _fail(key, f"expected a list of integers, got {raw!r}")
        if len(raw) < min_len:
            _fail(key, f"needs at least {min_len} entries")
        return [item(key, v) for v in raw]

    return parse


def _float_list(min_len=1, lo=None):
    item = _float(lo=lo)

    def parse(key, raw):
        if not isinstance(raw, (list, tuple)):
            _fail(key, f"expected a list of numbers, got {raw!r}")
        if len(raw) < min_len:
            _fail(key, f"needs at least {min_len} entries")
        return [item(key, v) for v in raw]

    return parse


def _extent(key, raw):
    if isinstance(raw, (int, np.integer)) and not isinstance(raw, bool):
        return _int(lo=2)(key, raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return [_int(lo=2)(key, v) for v in raw]
    _fail(key, f"expected a site count or a pair [Lx, Ly], got {raw!r}")


def _site(key, raw):
    if isinstance(raw, (int, np.integer)) and not isinstance(raw, bool):
        return int(raw)
    if isinstance(raw, (list, tuple)) and len(raw) == 2:
        return [_int(lo=0)(key, v) for v in raw]
    _fail(key, f"expected a site index or a pair [x, y], got {raw!r}")


def _str(key, raw):
    if not isinstance(raw, str):
        _fail(key, f"expected a string, got {raw!r}")
    return raw


_COMMON_FIELDS = {
    "seed": Field(_int(lo=0, hi=2**64 - 1), 0, "", "RNG seed recorded in the manifest"),
    "threads": Field(_int(lo=1), 1, "", "worker thread cap (determinism is per count)"),
    "format": Field(_choice("csv", "json", "both"), "both", "", "table output format"),
    "out": Field(_str, None, "", f"output directory (default ${OUTPUT_ROOT_ENV}/<kind>)"),
}

_WALK_INPUT_FIELDS = {
    "input_site": Field(_site, None, "sites", "launch site (default: lattice center)"),
    "input_coin": Field(
        _choice(*COIN_PRESETS), "symmetric", "", "launch coin preset"
    ),
}

SCHEMAS = {
    "walk": {
        "length": Field(_extent, units="sites", help="lattice extent L or [Lx, Ly]"),
        "boundary": Field(_choice("periodic", "open"), "periodic", "", "edge handling"),
        "protocol": Field(
            _choice("simple", "split_step", "split_step_2d"), "split_step", "",
            "step protocol",
        ),
        "theta1": Field(_float(), units="rad", help="first coin angle"),
        "theta2": Field(_float(), None, "rad", "second coin angle (split-step only)"),
        "steps": Field(_int(lo=0), units="", help="number of walk steps N"),
        **_WALK_INPUT_FIELDS,
    },
    "phase-diagram": {
        "theta1_min": Field(_float(), units="rad", help="first axis start"),
        "theta1_max": Field(_float(), units="rad", help="first axis end"),
        "theta1_count": Field(_int(lo=8), 16, "", "grid points along theta1"),
        "theta2_min": Field(_float(), units="rad", help="second axis start"),
        "theta2_max": Field(_float(), units="rad", help="second axis end"),
        "theta2_count": Field(_int(lo=8), 16, "", "grid points along theta2"),
        "n_k": Field(_int(lo=8), 128, "", "momentum samples per cell"),
    },
    "edge": {
        "length": Field(_int(lo=8), 64, "sites", "ring size (even)"),
        "theta1": Field(_float(), units="rad", help="uniform first coin angle"),
        "theta2_left": Field(_float(), units="rad", help="theta2 on sites [0, L/2)"),
        "theta2_right": Field(_float(), units="rad", help="theta2 on sites [L/2, L)"),
        "window": Field(_int(lo=2), 10, "sites", "wall window for mass and retention"),
        "walk_steps": Field(
            _int(lo=0), 0, "", "boundary-walk steps (0 skips the launch experiment)"
        ),
    },
    "gaussian": {
        "network": Field(_choice("walk", "su11_chain"), units="", help="network family"),
        "steps": Field(_int(lo=0), 1, "", "network steps"),
        "loss": Field(_float(lo=0.0, hi=1.0), 0.0, "", "per-step loss fraction"),
        "dephasing": Field(_float(lo=0.0), 0.0, "rad", "per-step phase jitter std"),
        "length": Field(_int(lo=2), None, "sites", "walk network: ring size"),
        "protocol": Field(
            _choice("simple", "split_step"), "split_step", "", "walk network: protocol"
        ),
        "theta1": Field(_float(), None, "rad", "walk network: first coin angle"),
        "theta2": Field(_float(), None, "rad", "walk network: second coin angle"),
        "photon_number": Field(
            _float(lo=1e-12), 1.0, "photons", "walk network: input photon budget"
        ),
        **_WALK_INPUT_FIELDS,
        "modes": Field(_int(lo=2), None, "", "chain: number of modes (even)"),
        "chi": Field(_float(), None, "", "chain: coupler strength"),
        "kind": Field(_choice("active", "passive"), "active", "", "chain: coupler kind"),
        "input": Field(_choice("vacuum", "thermal"), "vacuum", "", "chain: input state"),
        "thermal_nbar": Field(
            _float(lo=0.0), 0.5, "photons", "chain: thermal occupation per mode"
        ),
    },
    "noise-sweep": {
        "sweep": Field(_choice("scaling", "robustness"), units="", help="sweep flavor"),
        "realizations": Field(_int(lo=1), 100, "", "ensemble size R"),
        "length": Field(_int(lo=2), 256, "sites", "ring size"),
        "theta1": Field(_float(), units="rad", help="first coin angle"),
        "theta2": Field(_float(), None, "rad", "scaling: second coin angle"),
        "protocol": Field(
            _choice("simple", "split_step"), "simple", "", "scaling: step protocol"
        ),
        **_WALK_INPUT_FIELDS,
        "amplitude_noise": Field(
            _float(lo=0.0), 0.0, "", "scaling: relative intensity std per realization"
        ),
        "phase_noise": Field(
            _float(lo=0.0), 0.0, "rad", "scaling: per-site per-step phase std"
        ),
        "coin_dephasing": Field(
            _float(lo=0.0, hi=1.0), 0.0, "", "scaling: coin projection probability"
        ),
        "n_values": Field(
            _int_list(min_len=5), None, "", "scaling: step counts for the sigma fit"
        ),
        "histogram": Field(_bool, False, "", "scaling: also bin final intensities"),
        "histogram_bins": Field(_int(lo=1), 32, "", "scaling: histogram bin count"),
        "theta2_left": Field(
            _float(), None, "rad", "robustness: theta2 on sites [0, L/2)"
        ),
        "theta2_right": Field(
            _float(), None, "rad", "robustness: theta2 on sites [L/2, L)"
        ),
        "noise_kind": Field(
            _choice(*NOISE_KINDS), "phase", "", "robustness: channel being ramped"
        ),
        "levels": Field(
            _float_list(min_len=1, lo=0.0), None, "", "robustness: noise levels"
        ),
        "walk_steps": Field(_int(lo=1), None, "", "robustness: boundary-walk steps"),
        "window": Field(_int(lo=2), 10, "sites", "robustness: wall window"),
    },
    "gain-scan": {
        "modes": Field(_int(lo=2), 2, "", "chain modes (even)"),
        "chi": Field(_float(), 1.0, "", "base coupler strength, scaled by the grid"),
        "steps": Field(_int(lo=1), 1, "", "network steps"),
        "kind": Field(_choice("active", "passive"), "active", "", "coupler kind"),
        "scale_min": Field(_float(lo=1e-9), 0.05, "", "chi scale grid start"),
        "scale_max": Field(_float(lo=1e-9), 3.0, "", "chi scale grid end"),
        "scale_count": Field(_int(lo=3), 25, "", "chi scale grid points"),
        "functional": Field(
            _choice(*FUNCTIONALS), "min_mandel_q", "", "nonclassicality functional"
        ),
        "loss": Field(_float(lo=0.0, hi=1.0), 0.0, "", "per-step loss fraction"),
        "dephasing": Field(_float(lo=0.0), 0.0, "rad", "per-step phase jitter std"),
        "input": Field(_choice("vacuum", "thermal"), "vacuum", "", "input state"),
        "thermal_nbar": Field(
            _float(lo=0.0), 0.5, "photons", "thermal occupation per mode"
        ),
        "refine_iters": Field(_int(lo=1), 40, "", "bisection refinement iterations"),
    },
}


def _forbid(cfg, user_keys, keys, reason):
    for key in keys:
        if key in user_keys and cfg.get(key) is not None:
            _fail(key, f"not used {reason}")


def _require(cfg, keys, reason):
    for key in keys:
        if cfg.get(key) is None:
            _fail(key, f"required {reason}")


def _check_walk_rules(cfg, user_keys, protocols_2d=("split_step_2d",)):
    protocol = cfg["protocol"]
    if protocol == "simple":
        _forbid(cfg, user_keys, ["theta2"], "by the simple protocol")
    else:
        _require(cfg, ["theta2"], f"by the {protocol} protocol")
    extent = cfg["length"]
    two_d = isinstance(extent, list)
    if protocol in protocols_2d and not two_d:
        _fail("length", f"{protocol} needs a two-dimensional extent [Lx, Ly]")
    if protocol not in protocols_2d and two_d:
        _fail("length", f"protocol {protocol!r} runs on a one-dimensional lattice")
    site = cfg["input_site"]
    if site is None:
        cfg["input_site"] = [v // 2 for v in extent] if two_d else extent // 2
    elif two_d != isinstance(site, list):
        _fail("input_site", "dimension does not match the lattice extent")
    else:
        bounds = extent if two_d else [extent]
        coords = site if two_d else [site]
        if any(not 0 <= c < b for c, b in zip(coords, bounds)):
            _fail("input_site", f"site {site} is outside the lattice")


def _cross_validate(kind, cfg, user_keys):
    if kind == "walk":
        _check_walk_rules(cfg, user_keys)
    elif kind == "phase-diagram":
        if cfg["theta1_min"] >= cfg["theta1_max"]:
            _fail("theta1_max", "axis range must be increasing")
        if cfg["theta2_min"] >= cfg["theta2_max"]:
            _fail("theta2_max", "axis range must be increasing")
    elif kind == "edge":
        if cfg["length"] % 2:
            _fail("length", "two-domain walls need an even ring size")
    elif kind == "gaussian":
        if cfg["network"] == "walk":
            _require(cfg, ["length", "theta1"], "by network='walk'")
            _forbid(cfg, user_keys, ["modes", "chi"], "by network='walk'")
            for key in ("kind", "input", "thermal_nbar"):
                if key in user_keys:
                    _fail(key, "not used by network='walk'")
            cfg["length"] = int(cfg["length"])
            _check_walk_rules(cfg, user_keys, protocols_2d=())
        else:
            _require(cfg, ["modes", "chi"], "by network='su11_chain'")
            chain_unused = [
                "length", "theta1", "theta2", "photon_number", "input_site",
                "input_coin", "protocol",
            ]
            for key in chain_unused:
                if key in user_keys:
                    _fail(key, "not used by network='su11_chain'")
            if cfg["modes"] % 2:
                _fail("modes", "chain pairing needs an even mode count")
    elif kind == "noise-sweep":
        if cfg["sweep"] == "scaling":
            _require(cfg, ["theta1", "n_values"], "by sweep='scaling'")
            for key in ("theta2_left", "theta2_right", "levels", "walk_steps"):
                if key in user_keys:
                    _fail(key, "not used by sweep='scaling'")
            if "noise_kind" in user_keys:
                _fail("noise_kind", "not used by sweep='scaling'")
            distinct = sorted(set(cfg["n_values"]))
            if len(distinct) < 5:
                _fail("n_values", "needs at least 5 distinct step counts")
            if distinct[0] < 1:
                _fail("n_values", "step counts must be positive")
            if distinct[-1] < 4 * distinct[0]:
                _fail("n_values", "step counts must span at least a factor of 4")
            _check_walk_rules(cfg, user_keys, protocols_2d=())
        else:
            _require(
                cfg,
                ["theta1", "theta2_left", "theta2_right", "levels", "walk_steps"],
                "by sweep='robustness'",
            )
            robustness_unused = [
                "theta2", "n_values", "amplitude_noise", "phase_noise",
                "coin_dephasing", "histogram", "histogram_bins", "protocol",
                "input_site", "input_coin",
            ]
            for key in robustness_unused:
                if key in user_keys:
                    _fail(key, "not used by sweep='robustness'")
            if cfg["length"] % 2:
                _fail("length", "two-domain walls need an even ring size")
    elif kind == "gain-scan":
        if cfg["scale_min"] >= cfg["scale_max"]:
            _fail("scale_max", "scale grid must be increasing")


@dataclass(frozen=True)
class RunConfig:
    kind: str
    values: dict


def _parse_override(text):
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def _load_config_file(kind, path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    if "config" in data and "kind" in data:
        # a manifest from a previous run: rerun the experiment it records
        if data["kind"] != kind:
            raise ConfigError(
                f"manifest {path} describes a {data['kind']!r} run, not {kind!r}"
            )
        inner = data["config"]
        if not isinstance(inner, dict):
            raise ConfigError(f"manifest {path} has a malformed config block")
        # the manifest records the fully resolved config, so drop nulls
        # and untouched defaults: resolution refills them, and variant
        # checks must not mistake them for user-set keys
        schema = {**SCHEMAS.get(kind, {}), **_COMMON_FIELDS}
        cleaned = {}
        for key, value in inner.items():
            field = schema.get(key)
            if value is None:
                continue
            if field is not None and not field.required and value == field.default:
                continue
            cleaned[key] = value
        return cleaned
    return dict(data)


def parse_config(
    kind,
    config_path=None,
    overrides=(),
    out=None,
    seed=None,
    threads=None,
    fmt=None,
) -> RunConfig:
    """Resolve and validate a run configuration (fail-fast).

    Sources are merged in increasing priority: config file, --set
    overrides, then the dedicated global flags.
    """
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; expected one of {list(SCHEMAS)}"
        )
    raw = _load_config_file(kind, config_path) if config_path else {}
    for text in overrides:
        key, value = _parse_override(text)
        raw[key] = value
    if out is not None:
        raw["out"] = out
    if seed is not None:
        raw["seed"] = seed
    if threads is not None:
        raw["threads"] = threads
    if fmt is not None:
        raw["format"] = fmt

    schema = {**SCHEMAS[kind], **_COMMON_FIELDS}
    for key in raw:
        if key not in schema:
            raise ConfigError(
                f"unknown config key {key!r} for experiment {kind!r}"
            )
    values = {}
    for key, field in schema.items():
        if key in raw and raw[key] is not None:
            values[key] = field.parse(key, raw[key])
        elif field.required:
            _fail(key, f"required by experiment {kind!r}")
        else:
            values[key] = field.default
    # a null value means unset, same as leaving the key out entirely
    provided = {key for key, value in raw.items() if value is not None}
    _cross_validate(kind, values, provided)
    if values["out"] is None:
        root = os.environ.get(OUTPUT_ROOT_ENV, ".")
        values["out"] = os.path.join(root, kind)
    return RunConfig(kind=kind, values=values)


def describe(kind) -> str:
    """Schema text for one experiment kind: keys, defaults, units."""
    if kind not in SCHEMAS:
        raise ConfigError(
            f"unknown experiment kind {kind!r}; expected one of {list(SCHEMAS)}"
        )
    lines = [f"{kind}: config keys", ""]
    for section, schema in (("", SCHEMAS[kind]), ("common", _COMMON_FIELDS)):
        if section:
            lines.append("common keys:")
        for key, field in schema.items():
            default = "(required)" if field.required else f"default={field.default!r}"
            units = f" [{field.units}]" if field.units else ""
            lines.append(f"  {key}{units}  {default}  {field.help}")
    return "\n".join(lines)


# --------------------------------------------------------------------------
# experiment executors


def _walk_spec_from(cfg, protocol_key="protocol"):
    extent = cfg["length"]
    two_d = isinstance(extent, list)
    lattice = LatticeSpec(
        2 if two_d else 1,
        tuple(extent) if two_d else extent,
        cfg.get("boundary", "periodic"),
    )
    theta2 = cfg["theta2"] if cfg["theta2"] is not None else 0.0
    coins = CoinProfile.build(lattice, cfg["theta1"], theta2)
    spec = WalkSpec(lattice, coins, cfg[protocol_key], steps=cfg.get("steps", 0))
    site = cfg["input_site"]
    psi = make_localized_state(
        lattice, tuple(site) if two_d else site, COIN_PRESETS[cfg["input_coin"]]
    )
    return spec, psi


def _wall_spec_from(cfg):
    lattice = LatticeSpec(1, cfg["length"], "periodic")
    coins = CoinProfile.two_domain(
        lattice, cfg["theta1"], cfg["theta2_right"], cfg["theta2_left"]
    )
    return WalkSpec(lattice, coins, "split_step")


def _sigma_of(distribution) -> float:
    var = 0.0
    for coords in np.indices(distribution.shape).astype(float):
        mu = float((distribution * coords).sum())
        var += float((distribution * (coords - mu) ** 2).sum())
    return float(np.sqrt(var))


def _run_walk(cfg):
    spec, psi = _walk_spec_from(cfg)
    out = evolve(psi, spec, cfg["steps"])
    p = position_distribution(out)
    header = (
        serialize.DISTRIBUTION_2D_HEADER if p.ndim == 2 else serialize.DISTRIBUTION_HEADER
    )
    sigma = _sigma_of(p)
    summary = {
        "steps": cfg["steps"],
        "norm": float(p.sum()),
        "sigma_sites": sigma,
        "launch_site": cfg["input_site"],
    }
    tables = [("distribution", header, serialize.distribution_rows(p))]
    lines = [f"walk: {cfg['steps']} steps, sigma = {sigma:.4f} sites"]
    return tables, [("summary", summary)], lines


def _run_phase_diagram(cfg):
    t1 = np.linspace(cfg["theta1_min"], cfg["theta1_max"], cfg["theta1_count"])
    t2 = np.linspace(cfg["theta2_min"], cfg["theta2_max"], cfg["theta2_count"])
    cells = phase_diagram(t1, t2, n_k=cfg["n_k"])
    gapless = sum(1 for c in cells if c.gapless)
    windings = sorted({c.winding for c in cells if c.winding is not None})
    summary = {
        "cells": len(cells),
        "gapless_cells": gapless,
        "windings_found": windings,
    }
    tables = [
        ("phase_diagram", serialize.PHASE_DIAGRAM_HEADER, serialize.phase_diagram_rows(cells))
    ]
    lines = [
        f"phase diagram: {len(cells)} cells, {gapless} gapless, windings {windings}"
    ]
    return tables, [("summary", summary)], lines


def _run_edge(cfg):
    spec = _wall_spec_from(cfg)
    cert = find_edge_states(spec, window=cfg["window"])
    tables = [
        ("edge_states", serialize.EDGE_STATE_HEADER, serialize.edge_state_rows(cert.states))
    ]
    summary = {
        "counts": list(cert.counts),
        "walls_sites": list(cert.walls),
        "certified_states": len(cert.states),
        "ambiguous_states": len(cert.ambiguous),
    }
    lines = [
        f"edge: {len(cert.states)} certified states at walls {list(cert.walls)}"
    ]
    if cfg["walk_steps"] > 0:
        walk = boundary_walk_experiment(spec, cfg["walk_steps"], window=cfg["window"])
        summary["boundary_walk"] = {
            "steps": cfg["walk_steps"],
            "retained": walk.retained,
            "wall_sites": walk.wall,
            "launch_site": walk.launch_site,
        }
        tables.append(
            (
                "boundary_walk",
                serialize.DISTRIBUTION_HEADER,
                serialize.distribution_rows(walk.distribution),
            )
        )
        lines.append(
            f"boundary walk: retained {walk.retained:.4f} after {cfg['walk_steps']} steps"
        )
    summaries = [("certificate", serialize.certificate_json(cert)), ("summary", summary)]
    return tables, summaries, lines


def _chain_input(cfg, n_modes):
    if cfg["input"] == "thermal":
        return GaussianState.thermal([cfg["thermal_nbar"]] * n_modes)
    return GaussianState.vacuum(n_modes)


def _run_gaussian(cfg):
    if cfg["network"] == "walk":
        lattice = LatticeSpec(1, cfg["length"], "periodic")
        theta2 = cfg["theta2"] if cfg["theta2"] is not None else 0.0
        coins = CoinProfile.build(lattice, cfg["theta1"], theta2)
        spec = WalkSpec(lattice, coins, cfg["protocol"], steps=cfg["steps"])
        net = network_from_walk(spec)
        psi = make_localized_state(
            lattice, cfg["input_site"], COIN_PRESETS[cfg["input_coin"]]
        )
        state = walk_input_state(psi, cfg["photon_number"])
    else:
        net = su11_chain(cfg["modes"], cfg["chi"], cfg["steps"], kind=cfg["kind"])
        state = _chain_input(cfg, cfg["modes"])
    run = network_evolve(net, state, loss=cfg["loss"], dephasing=cfg["dephasing"])
    report = correlations(run.state)
    total = float(run.photon_trace[-1])
    tables = [
        ("correlations", serialize.CORRELATION_HEADER, serialize.correlation_rows(report)),
        ("photon_trace", serialize.TRACE_HEADER, serialize.trace_rows(run.photon_trace)),
    ]
    summary = {
        "network": cfg["network"],
        "steps": cfg["steps"],
        "total_photons": total,
        "mean_photons": [float(v) for v in report.mean_n],
        "pairs": [list(p) for p in report.pairs],
        "log_negativity": [float(v) for v in report.log_neg],
    }
    lines = [f"gaussian: {total:.6f} photons out after {cfg['steps']} steps"]
    return tables, [("summary", summary)], lines


def _run_noise_sweep(cfg):
    if cfg["sweep"] == "scaling":
        noise = NoiseSpec(
            amplitude_noise=cfg["amplitude_noise"],
            phase_noise=cfg["phase_noise"],
            coin_dephasing=cfg["coin_dephasing"],
            seed=cfg["seed"],
            realizations=cfg["realizations"],
        )
        walk_cfg = dict(cfg)
        walk_cfg["steps"] = 0
        spec, psi = _walk_spec_from(walk_cfg)
        report = sigma_scaling(spec, noise, psi, cfg["n_values"])
        tables = [
            ("scaling", serialize.SCALING_HEADER, serialize.scaling_rows(report))
        ]
        summary = {
            "beta": report.beta,
            "beta_err": report.beta_err,
            "r_squared": report.r_squared,
            "fit_window": list(report.fit_window),
            "excluded": list(report.excluded),
            "realizations": cfg["realizations"],
        }
        summaries = [("summary", summary)]
        lines = [f"sigma scaling: beta = {report.beta:.4f} +- {report.beta_err:.4f}"]
        if cfg["histogram"]:
            ens = noisy_evolve(spec, noise, psi, max(cfg["n_values"]))
            hist = intensity_histogram(ens, bins=cfg["histogram_bins"])
            summaries.append(("histogram", serialize.histogram_json(hist)))
            lines.append(f"histogram: {cfg['histogram_bins']} bins over {hist.realizations} realizations")
        return tables, summaries, lines

    spec = _wall_spec_from(cfg)
    report = edge_robustness(
        spec,
        cfg["levels"],
        cfg["walk_steps"],
        kind=cfg["noise_kind"],
        realizations=cfg["realizations"],
        seed=cfg["seed"],
        window=cfg["window"],
    )
    tables = [
        ("robustness", serialize.ROBUSTNESS_HEADER, serialize.robustness_rows(report))
    ]
    summary = {
        "noise_kind": report.kind,
        "baseline_retained": report.baseline,
        "monotone_nonincreasing": report.monotone_nonincreasing,
        "levels": list(report.levels),
        "realizations": cfg["realizations"],
    }
    lines = [
        f"edge robustness ({report.kind}): retained "
        f"{report.retained_mean[0]:.4f} -> {report.retained_mean[-1]:.4f}"
    ]
    return tables, [("summary", summary)], lines


def _run_gain_scan(cfg):
    net = su11_chain(cfg["modes"], cfg["chi"], cfg["steps"], kind=cfg["kind"])
    scales = np.linspace(cfg["scale_min"], cfg["scale_max"], cfg["scale_count"])
    result = gain_scan(
        net,
        scales,
        input_state=_chain_input(cfg, cfg["modes"]),
        functional=cfg["functional"],
        loss=cfg["loss"],
        dephasing=cfg["dephasing"],
        refine_iters=cfg["refine_iters"],
    )
    tables = [("gain_scan", serialize.SCAN_HEADER, serialize.scan_rows(result))]
    summary = {
        "functional": result.functional,
        "none_found": result.none_found,
        "non_monotone": result.non_monotone,
        "critical_gain": float(result.critical_gain),
        "critical_scale": float(result.critical_scale),
        "bracket": [float(v) for v in result.bracket],
    }
    if result.none_found:
        lines = ["gain scan: no nonclassicality crossing on the grid"]
    else:
        lines = [f"gain scan: critical gain {result.critical_gain:.6f}"]
    return tables, [("summary", summary)], lines


_EXECUTORS = {
    "walk": _run_walk,
    "phase-diagram": _run_phase_diagram,
    "edge": _run_edge,
    "gaussian": _run_gaussian,
    "noise-sweep": _run_noise_sweep,
    "gain-scan": _run_gain_scan,
}


# --------------------------------------------------------------------------
# run orchestration


@dataclass(frozen=True)
class RunResult:
    manifest_path: str
    table_paths: tuple
    summary_paths: tuple
    elapsed_seconds: float


def _manifest_body(config: RunConfig, complete: bool, outputs) -> dict:
    from . import __version__

    return {
        "artifact": "topowalk",
        "version": __version__,
        "kind": config.kind,
        "seed": config.values["seed"],
        "threads": config.values["threads"],
        "config": config.values,
        "complete": complete,
        "outputs": sorted(outputs),
    }


def run(config: RunConfig) -> RunResult:
    """Execute one experiment: manifest first, then tables and summaries."""
    out_dir = config.values["out"]
    os.makedirs(out_dir, exist_ok=True)
    manifest_path = os.path.join(out_dir, "manifest.json")
    serialize.write_json(manifest_path, _manifest_body(config, False, []))

    start = time.perf_counter()
    with threadpool_limits(limits=config.values["threads"]):
        tables, summaries, lines = _EXECUTORS[config.kind](config.values)
    elapsed = time.perf_counter() - start

    fmt = config.values["format"]
    outputs = ["manifest.json"]
    table_paths = []
    for name, header, rows in tables:
        if fmt in ("csv", "both"):
            path = os.path.join(out_dir, f"{name}.csv")
            serialize.write_csv(path, header, rows)
            table_paths.append(path)
            outputs.append(f"{name}.csv")
        if fmt in ("json", "both"):
            path = os.path.join(out_dir, f"{name}.json")
            serialize.write_json(path, serialize.table_json(header, rows))
            table_paths.append(path)
            outputs.append(f"{name}.json")
    summary_paths = []
    for name, payload in summaries:
        path = os.path.join(out_dir, f"{name}.json")
        serialize.write_json(path, payload)
        summary_paths.append(path)
        outputs.append(f"{name}.json")

    serialize.write_json(manifest_path, _manifest_body(config, True, outputs))
    for line in lines:
        print(line)
    print(f"wrote {len(outputs)} files to {out_dir} ({elapsed:.2f}s)")
    return RunResult(
        manifest_path=manifest_path,
        table_paths=tuple(table_paths),
        summary_paths=tuple(summary_paths),
        elapsed_seconds=elapsed,
    )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topowalk",
        description="Topological quantum walk and Gaussian network experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS:
        p = sub.add_parser(kind, help=f"run a {kind} experiment")
        p.add_argument("--config", metavar="PATH", help="JSON config or manifest file")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, metavar="U64", help="override the RNG seed")
        p.add_argument("--threads", type=int, metavar="N", help="worker thread cap")
        p.add_argument("--format", choices=("csv", "json", "both"), help="table format")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable; JSON values)",
        )
    d = sub.add_parser("describe", help="print the config schema for a kind")
    d.add_argument("kind", help="experiment kind to describe")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "describe":
        try:
            print(describe(args.kind))
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    try:
        config = parse_config(
            args.command,
            config_path=args.config,
            overrides=args.set,
            out=args.out,
            seed=args.seed,
            threads=args.threads,
            fmt=args.format,
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        run(config)
    except DimensionCapError as exc:
        print(f"dimension cap exceeded in {args.command}: {exc}", file=sys.stderr)
        return 4
    except SimulationError as exc:
        print(f"runtime error in {args.command}: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # surfaced with context, still a runtime failure
        print(f"runtime error in {args.command}: {exc!r}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Line-based scenario configuration.

    # comment
    schema_version = 1
    seed = 7
    [Criticality]
    spacing = 0.02
    W_grid = 0.25:3.2:0.05

Top-level keys come before the single scenario section.  Lists are comma
separated; `start:stop:step` expands to an inclusive range.  Every problem
found is collected and reported together, with line numbers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

SCHEMA_VERSION = 1


class _Choice:
    def __init__(self, *options):
        self.options = options

    def __call__(self, text):
        if text not in self.options:
            raise ValueError(f"expected one of {', '.join(self.options)}")
        return text

    __name__ = "choice"


def _float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(text):
    v = float(text)
    if v != int(v):
        raise ValueError("must be an integer")
    return int(v)


def _bool(text):
    t = text.lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError("expected true or false")


def _floats(text):
    out = []
    for part in (p.strip() for p in text.split(",")):
        if not part:
            raise ValueError("empty list entry")
        if ":" in part:
            bits = [_float(b) for b in part.split(":")]
            if len(bits) != 3 or bits[2] == 0:
                raise ValueError(f"range {part!r} must be start:stop:step with step != 0")
            start, stop, step = bits
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n < 1:
                raise ValueError(f"range {part!r} is empty")
            out.extend(float(f"{start + i * step:.12g}") for i in range(n))
        else:
            out.append(_float(part))
    return out


def _ints(text):
    return [_int(p.strip()) for p in text.split(",")]


_float.__name__ = "float"
_int.__name__ = "integer"
_bool.__name__ = "boolean"
_floats.__name__ = "list of floats"
_ints.__name__ = "list of integers"

_POTENTIAL = _Choice("zero", "woods_saxon", "delta", "linear")
_SHAPE = _Choice("smoothcos", "linear")
_KIND = _Choice("FermiHopping", "HardCoreBoseHopping")
_UNIT = _Choice("uK", "nK")

_CHAIN = {"spacing": (_float, 0.05), "box": (_float, None), "num_sites": (_int, None),
          "mass": (_float, 1.0), "hopping": (_float, None)}
_WS = {"W": (_float, 3.5), "a": (_float, 10.0), "L": (_float, 1.0)}
_RAMP = {"t_on": (_float, 20.0), "t_plateau": (_float, 20.0), "t_off": (_float, 20.0),
         "shape": (_SHAPE, "smoothcos"), "dt": (_float, None)}

SCHEMAS: dict[str, dict] = {
    "Spectrum": {**_CHAIN, **_WS, "potential": (_POTENTIAL, "zero"), "phi": (_float, -0.5),
                 "site": (_int, None), "field": (_float, 0.1), "window_start": (_int, None),
                 "window_stop": (_int, None), "edge_margin": (_float, 1e-6)},
    "Criticality": {**_CHAIN, "spacing": (_float, 0.02), "box": (_float, 20.0), "a": (_float, 10.0),
                    "L": (_float, 1.0), "W_grid": (_floats, _floats("0.25:3.2:0.05")),
                    "edge_margin": (_float, 1e-6), "tol": (_float, 1e-4)},
    "DeltaOracle": {"num_sites": (_int, 2000), "spacing": (_float, 0.05), "mass": (_float, 1.0),
                    "phi": (_floats, [-0.1, -0.5, -1.0, -2.0, -5.0])},
    "Dynamics": {**_CHAIN, **_WS, **_RAMP, "spacing": (_float, 0.2), "box": (_float, 40.0),
                 "potential": (_Choice("zero", "woods_saxon"), "woods_saxon")},
    "AdiabaticScan": {**_CHAIN, **_WS, "spacing": (_float, 0.2), "box": (_float, 40.0),
                      "durations": (_floats, [10.0, 20.0, 40.0, 80.0]), "t_plateau": (_float, 20.0),
                      "shape": (_SHAPE, "smoothcos")},
    "SchwingerScan": {**_CHAIN, "spacing": (_float, 0.2), "box": (_float, 60.0),
                      "fields": (_floats, [0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5]),
                      "window_length": (_float, 20.0), "t_ramp": (_float, 10.0),
                      "t_plateau": (_float, 20.0)},
    "Bands": {"W0": (_float, 10.0), "dW": (_float, 1.0), "k": (_float, 1.0), "num_p": (_int, 40),
              "n_planewaves": (_int, 64), "wkb": (_bool, True)},
    "Wannier": {"W0": (_float, 10.0), "dW": (_float, 0.02), "k": (_float, 1.0),
                "num_cells": (_int, 48), "n_planewaves": (_int, 64), "num_x": (_int, 801),
                "x_range": (_float, 6.0)},
    "Hierarchy": {"E_R": (_float, 7.0), "W0": (_float, 10.0), "dW": (_float, 1.0),
                  "temperature": (_float, None), "unit": (_UNIT, "uK"), "ratio": (_float, 3.0)},
    "ManyBody": {"num_sites": (_int, 10), "hopping": (_float, 1.0), "mass": (_float, 1.0),
                 "kind": (_KIND, "FermiHopping"), "well_depth": (_float, 0.0),
                 "well_width": (_int, 2), "D0": (_floats, [-0.2, -0.1, 0.0, 0.1, 0.2]),
                 "cutoff": (_int, None)},
    "JWCheck": {"sizes": (_ints, [4, 6, 8, 10]), "draws": (_int, 50), "hopping": (_float, 1.0),
                "amplitude": (_float, 1.0)},
}

TOP_LEVEL = {"schema_version": (_int, None), "seed": (_int, 0), "output_dir": (str, None)}


@dataclass
class ScenarioConfig:
    scenario: str
    parameters: dict
    schema_version: int = SCHEMA_VERSION
    seed: int = 0
    output_dir: Path | None = None
    source: str = ""
    explicit: set = field(default_factory=set)  # keys set in the file

    def __getitem__(self, key):
        return self.parameters[key]

    def get(self, key, default=None):
        v = self.parameters.get(key)
        return default if v is None else v


def _check_values(name: str, params: dict, lines: dict, problems: list):
    def err(key, msg):
        where = f"line {lines[key]}: " if key in lines else ""
        problems.append(f"{where}{key}: {msg}")

    for key, grid in params.items():
        if isinstance(grid, list) and key in ("W_grid", "durations", "fields"):
            if not grid:
                err(key, "empty list")
            elif any(b <= a for a, b in zip(grid, grid[1:])):
                err(key, "grid must ascend")
    for key in ("spacing", "box", "mass", "hopping", "tol", "W0", "E_R", "k", "ratio",
                "window_length", "t_ramp", "x_range"):
        v = params.get(key)
        if v is not None and v <= 0 and not (key == "mass" and v == 0):
            err(key, "must be positive")
    for key in ("t_on", "t_plateau", "t_off", "dW", "edge_margin", "temperature"):
        v = params.get(key)
        if v is not None and v < 0:
            err(key, "must be non-negative")
    for key in ("num_p", "num_cells", "num_x", "draws", "n_planewaves"):
        v = params.get(key)
        if v is not None and v < 1:
            err(key, "must be at least 1")
    if name in ("Spectrum", "Dynamics", "AdiabaticScan", "SchwingerScan"):
        if params.get("num_sites") is not None and params.get("box") is not None:
            if "num_sites" in lines and "box" in lines:
                err("num_sites", "give either num_sites or box, not both")
    if name == "Spectrum" and params.get("num_sites") is None and params.get("box") is None:
        err("num_sites", "Spectrum needs num_sites or box")
    if name == "Bands" and params.get("n_planewaves", 64) < 64:
        err("n_planewaves", "must be >= 64")
    if name == "ManyBody":
        L = params.get("num_sites")
        if L is not None and (L > 14 or L < 2 or L % 2):
            err("num_sites", "half-filling scans need an even chain with 2 <= L <= 14")
    if name == "JWCheck":
        if any(not 2 <= L <= 12 for L in params.get("sizes", [])):
            err("sizes", "chain sizes must lie in [2, 12]")


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    problems: list[str] = []
    top: dict = {}
    top_lines: dict = {}
    section = None
    section_line = 0
    params: dict = {}
    lines: dict = {}
    for num, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                problems.append(f"line {num}: malformed section header {raw.strip()!r}")
                continue
            name = line[1:-1].strip()
            if section is not None:
                problems.append(f"line {num}: only one scenario per file (already [{section}] on line {section_line})")
                continue
            if name not in SCHEMAS:
                problems.append(f"line {num}: unknown scenario {name!r}; expected one of {', '.join(SCHEMAS)}")
                section = "?"
            else:
                section = name
            section_line = num
            continue
        if "=" not in line:
            problems.append(f"line {num}: expected 'key = value', got {raw.strip()!r}")
            continue
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or not value:
            problems.append(f"line {num}: empty key or value")
            continue
        if section is None:
            schema, store, where = TOP_LEVEL, top, top_lines
        elif section == "?":
            continue
        else:
            schema, store, where = SCHEMAS[section], params, lines
        if key not in schema:
            scope = "top level" if section is None else f"[{section}]"
            problems.append(f"line {num}: unknown key {key!r} in {scope}")
            continue
        if key in store:
            problems.append(f"line {num}: duplicate key {key!r} (first on line {where[key]})")
            continue
        conv = schema[key][0]
        try:
            store[key] = conv(value)
        except ValueError as exc:
            problems.append(f"line {num}: {key}: cannot read {value!r} as {conv.__name__} ({exc})")
            continue
        where[key] = num
    if "schema_version" not in top and not any("schema_version" in p for p in problems):
        problems.append("missing mandatory key 'schema_version'")
    elif top.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        problems.append(f"line {top_lines['schema_version']}: schema_version "
                        f"{top['schema_version']} not supported (expected {SCHEMA_VERSION})")
    if section is None:
        problems.append("no scenario section found")
    if section in SCHEMAS:
        full = {k: (params[k] if k in params else default) for k, (_, default) in SCHEMAS[section].items()}
        _check_values(section, full, lines, problems)
    if problems:
        raise ConfigurationError(f"{source}: {len(problems)} problem(s)\n  " + "\n  ".join(problems), problems)
    out = top.get("output_dir")
    return ScenarioConfig(section, full, top["schema_version"], top.get("seed", 0),
                          Path(out) if out else None, source, set(params))


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def seeded_rng(cfg: ScenarioConfig) -> np.random.Generator:
    return np.random.default_rng(cfg.seed)

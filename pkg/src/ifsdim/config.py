"""Run-configuration ingestion: a single JSON document describing the
system, the measure, and the solver knobs.

Matrices are row-major nested lists.  Symbols are zero-based.  Every knob
has a documented default; unknown keys are rejected so typos fail loudly.
"""

import json
import math

import numpy as np

from .errors import ConfigError
from .ergodic import ShiftMeasure
from .shift import Subshift
from .systems import AffineMap, Box, IfsSystem, RepellerSystem, SinePerturbedMap

SCHEMA_VERSION = 1

SOLVER_DEFAULTS = {
    "seed": 0,
    "tol_s": None,
    "budget": 20_000_000,
    "probes": 4,
    "n_list": None,
    "n_points": 1_000_000,
    "burn_in": 64,
    "pack_points": 200_000,
    "pack_probes": 4096,
    "quantile": 0.99,
    "delta_grid": None,
    "r_grid": None,
    "s_grid": {"lo": 0.0, "hi": 2.0, "count": 21},
    "tn": {"n_list": [5, 10, 20, 40], "k_list": None},
    "theta": None,
    "cover": None,
    "n_orbit": 200,
    "n_samples": 64,
    "verify_tol": 0.1,
    "save_points": False,
}

_TOP_KEYS = {"schema_version", "system", "measure", "solver", "overrides"}
_SYSTEM_KEYS = {"type", "domain", "maps", "code_space", "transfer", "branches"}


def load_config(path):
    """Parse and validate a configuration file.

    Parse failures carry the line and column; semantic failures carry the
    JSON path of the offending entry.
    """
    try:
        with open(path) as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}"
        ) from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    unknown = set(cfg) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown top-level keys {sorted(unknown)}")
    if cfg.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version must be {SCHEMA_VERSION}, got {cfg.get('schema_version')!r}"
        )
    if "system" not in cfg:
        raise ConfigError(f"{path}: missing required key 'system'")
    solver = dict(SOLVER_DEFAULTS)
    for key, value in (cfg.get("solver") or {}).items():
        if key not in SOLVER_DEFAULTS:
            raise ConfigError(f"{path}: solver.{key}: unknown knob")
        solver[key] = value
    cfg["solver"] = solver
    return cfg


def _matrix(node, path, d=None):
    try:
        arr = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric matrix") from exc
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ConfigError(f"{path}: must be a square matrix, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ConfigError(f"{path}: must be {d}x{d}, got {arr.shape}")
    return arr


def _vector(node, path, d=None):
    try:
        arr = np.asarray(node, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: not a numeric vector") from exc
    if arr.ndim != 1:
        raise ConfigError(f"{path}: must be a flat vector")
    if d is not None and arr.size != d:
        raise ConfigError(f"{path}: must have {d} entries, got {arr.size}")
    return arr


def _build_map(node, domain, path):
    kind = node.get("kind", "affine")
    linear = _matrix(node.get("linear"), f"{path}.linear", domain.d)
    translation = _vector(node.get("translation"), f"{path}.translation", domain.d)
    try:
        if kind == "affine":
            return AffineMap(linear, translation, domain)
        if kind == "sine":
            return SinePerturbedMap(
                linear, translation, float(node.get("amplitude", 0.0)), domain
            )
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raise ConfigError(f"{path}.kind: unknown map kind {kind!r}")


def build_system(cfg, path="system"):
    node = cfg["system"]
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: must be an object")
    unknown = set(node) - _SYSTEM_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    dom = node.get("domain")
    if not isinstance(dom, dict) or "lo" not in dom or "hi" not in dom:
        raise ConfigError(f"{path}.domain: need lo and hi arrays")
    try:
        domain = Box(np.asarray(dom["lo"], float), np.asarray(dom["hi"], float))
    except Exception as exc:
        raise ConfigError(f"{path}.domain: {exc}") from exc

    sys_type = node.get("type", "ifs")
    if sys_type == "ifs":
        maps_node = node.get("maps")
        if not isinstance(maps_node, list) or not maps_node:
            raise ConfigError(f"{path}.maps: need a non-empty list of maps")
        maps = [
            _build_map(m, domain, f"{path}.maps[{i}]") for i, m in enumerate(maps_node)
        ]
        code = node.get("code_space")
        subshift = None
        if code is not None:
            if code.get("kind") == "full":
                subshift = Subshift.full(len(maps))
            elif code.get("kind") == "sft":
                try:
                    subshift = Subshift.sft(
                        _matrix(code.get("transfer"), f"{path}.code_space.transfer")
                    )
                except ConfigError:
                    raise
                except Exception as exc:
                    raise ConfigError(f"{path}.code_space: {exc}") from exc
            else:
                raise ConfigError(f"{path}.code_space.kind: must be 'full' or 'sft'")
        try:
            return IfsSystem(maps, code_space=subshift)
        except Exception as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    if sys_type == "repeller":
        transfer = _matrix(node.get("transfer"), f"{path}.transfer")
        branch_nodes = node.get("branches")
        if not isinstance(branch_nodes, list) or not branch_nodes:
            raise ConfigError(f"{path}.branches: need a non-empty list")
        branches = {}
        for i, b in enumerate(branch_nodes):
            where = f"{path}.branches[{i}]"
            if "from" not in b or "to" not in b:
                raise ConfigError(f"{where}: need 'from' and 'to' symbols")
            key = (int(b["from"]), int(b["to"]))
            if key in branches:
                raise ConfigError(f"{where}: duplicate branch {key}")
            branches[key] = _build_map(b, domain, where)
        try:
            return RepellerSystem(branches, transfer)
        except Exception as exc:
            raise ConfigError(f"{path}: {exc}") from exc

    raise ConfigError(f"{path}.type: must be 'ifs' or 'repeller', got {sys_type!r}")


def build_measure(cfg, subshift, path="measure"):
    node = cfg.get("measure")
    try:
        if node is None or node.get("kind") == "uniform":
            m = ShiftMeasure.uniform(subshift)
        elif node.get("kind") == "bernoulli":
            m = ShiftMeasure.bernoulli(_vector(node.get("p"), f"{path}.p"))
        elif node.get("kind") == "markov":
            pi = node.get("pi")
            m = ShiftMeasure.markov(
                _matrix(node.get("P"), f"{path}.P"),
                None if pi is None else _vector(pi, f"{path}.pi"),
            )
        else:
            raise ConfigError(
                f"{path}.kind: must be 'uniform', 'bernoulli' or 'markov'"
            )
        m.check_support(subshift)
        return m
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def geometric_grid(spec, default_coarsest, default_factor, default_count, path):
    """Resolve a grid spec: explicit list or {coarsest, factor, count}."""
    if spec is None:
        spec = {}
    if isinstance(spec, (list, tuple)):
        arr = np.asarray(spec, dtype=float)
        if arr.size < 2 or (arr <= 0).any():
            raise ConfigError(f"{path}: explicit grid needs >= 2 positive values")
        return np.sort(arr)[::-1]
    coarsest = float(spec.get("coarsest", default_coarsest))
    factor = float(spec.get("factor", default_factor))
    count = int(spec.get("count", default_count))
    if not (0 < factor < 1) or coarsest <= 0 or count < 2:
        raise ConfigError(f"{path}: need coarsest > 0, 0 < factor < 1, count >= 2")
    return coarsest * factor ** np.arange(count)


def potential_values(node, ell, path):
    """One-step potential from a scalar or per-symbol list."""
    if node is None:
        raise ConfigError(f"{path}: missing potential")
    if isinstance(node, (int, float)):
        return float(node)
    arr = _vector(node, path, ell)
    return arr


def solver_knob(cfg, key):
    return cfg["solver"][key]


def log_ratio(a, b):
    return math.log(a) / math.log(b)

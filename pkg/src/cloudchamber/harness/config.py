"""
TOML configuration for the command-line front end.

A file may hold any of these sections::

    [detector]      n_spins, positions | spacing (+ offset), beta, gamma, epsilon
    [energy]        k0 | E
    [solver]        method = "dense" | "sparse"
    [grid]          x_min, x_max, n_points | dx
    [packet]        center, width, wavenumber, mode
    [propagation]   dt, steps | t_end, sample_every, snapshot_every, method
    [sweep]         replicates, seed, [sweep.axes], [sweep.positions]

Numeric fields accept plain numbers or short arithmetic strings such as
``"800/3"`` or ``"pi"``.
"""

from __future__ import annotations

import ast
import math
import operator
import sys
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from ..channelspace import DetectorConfig
from ..errors import ConfigError, InvalidDetector
from ..timedep import Grid, PacketSpec

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_NAMES = {"pi": math.pi, "e": math.e}
_FUNCS = {"sqrt": math.sqrt}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return node.value
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        value = _eval_node(node.operand)
        return -value if isinstance(node.op, ast.USub) else value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _FUNCS and len(node.args) == 1):
        return _FUNCS[node.func.id](_eval_node(node.args[0]))
    raise ValueError("unsupported expression")


def number(value, name: str = "value") -> float:
    """Float from a TOML scalar or an arithmetic string like ``"800/3"``."""
    if isinstance(value, bool):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(_eval_node(ast.parse(value, mode="eval")))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{name}: cannot evaluate {value!r}") from exc
    raise ConfigError(f"{name}: expected a number, got {value!r}")


def number_or_list(value, name: str):
    if isinstance(value, list):
        return [number(v, name) for v in value]
    return number(value, name)


def values(spec, name: str) -> list:
    """Axis values: an explicit list or a ``{start, stop, num}`` range."""
    if isinstance(spec, list):
        return [number(v, name) for v in spec]
    if isinstance(spec, dict):
        try:
            start, stop = number(spec["start"], name), number(spec["stop"], name)
            num = int(spec["num"])
        except KeyError as exc:
            raise ConfigError(f"axis {name}: range needs start, stop, num") from exc
        return [float(v) for v in np.linspace(start, stop, num)]
    return [number(spec, name)]


def load(path) -> dict:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def loads(text: str) -> dict:
    try:
        return tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc)) from exc


def _section(cfg: dict, name: str, required: bool = True) -> Optional[dict]:
    sec = cfg.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return None
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def detector_from(sec: dict, **overrides: Any) -> DetectorConfig:
    """Build a detector from a ``[detector]`` table; ``overrides`` replace keys."""
    merged = {**sec, **{k: v for k, v in overrides.items() if v is not None}}
    couplings = {key: number_or_list(merged.get(key, 0.0), key)
                 for key in ("beta", "gamma", "epsilon")}
    try:
        if "positions" in merged:
            positions = [number(v, "positions") for v in merged["positions"]]
            if "n_spins" in merged and int(merged["n_spins"]) != len(positions):
                raise ConfigError("n_spins disagrees with the length of positions")
            return DetectorConfig(positions, **couplings)
        if "n_spins" not in merged:
            raise ConfigError("[detector] needs positions or n_spins")
        n = int(merged["n_spins"])
        spacing = number(merged.get("spacing", 1.0), "spacing")
        offset = number(merged.get("offset", 0.0), "offset")
        return DetectorConfig.regular(n, spacing, offset=offset, **couplings)
    except InvalidDetector as exc:
        raise ConfigError(f"[detector]: {exc}") from exc


def detector(cfg: dict, required: bool = True) -> Optional[DetectorConfig]:
    sec = _section(cfg, "detector", required)
    return None if sec is None else detector_from(sec)


def wavenumber(cfg: dict) -> float:
    sec = _section(cfg, "energy")
    if "k0" in sec:
        k0 = number(sec["k0"], "k0")
    elif "E" in sec:
        E = number(sec["E"], "E")
        if not E > 0:
            raise ConfigError("energy must be positive")
        k0 = math.sqrt(E)
    else:
        raise ConfigError("[energy] needs k0 or E")
    if not k0 > 0:
        raise ConfigError("k0 must be positive")
    return k0


def solver_method(cfg: dict) -> str:
    method = (cfg.get("solver") or {}).get("method", "dense")
    if method not in ("dense", "sparse"):
        raise ConfigError(f"unknown solver method {method!r}")
    return method


def grid(cfg: dict) -> Grid:
    sec = _section(cfg, "grid")
    try:
        x_min, x_max = number(sec["x_min"], "x_min"), number(sec["x_max"], "x_max")
        if "n_points" in sec:
            n = int(sec["n_points"])
        else:
            n = int(round((x_max - x_min) / number(sec["dx"], "dx"))) + 1
        return Grid(x_min, x_max, n)
    except KeyError as exc:
        raise ConfigError(f"[grid] missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[grid]: {exc}") from exc


def packet(cfg: dict) -> PacketSpec:
    sec = _section(cfg, "packet")
    try:
        return PacketSpec(
            center=number(sec.get("center", 0.0), "center"),
            width=number(sec["width"], "width"),
            wavenumber=number(sec["wavenumber"], "wavenumber"),
            mode=sec.get("mode", "double"),
        )
    except KeyError as exc:
        raise ConfigError(f"[packet] missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"[packet]: {exc}") from exc


def propagation(cfg: dict) -> dict:
    sec = _section(cfg, "propagation")
    try:
        dt = number(sec["dt"], "dt")
    except KeyError as exc:
        raise ConfigError("[propagation] missing dt") from exc
    if not dt > 0:
        raise ConfigError("dt must be positive")
    if "steps" in sec:
        steps = int(sec["steps"])
    elif "t_end" in sec:
        steps = int(round(number(sec["t_end"], "t_end") / dt))
    else:
        raise ConfigError("[propagation] needs steps or t_end")
    sample_every = int(sec.get("sample_every", 1))
    if sample_every < 1 or steps < 0:
        raise ConfigError("steps and sample_every must be positive")
    method = sec.get("method", "chebyshev")
    if method not in ("chebyshev", "lanczos"):
        raise ConfigError(f"unknown propagation method {method!r}")
    return {
        "dt": dt,
        "steps": steps,
        "sample_every": sample_every,
        "snapshot_every": int(sec.get("snapshot_every", 0)),
        "method": method,
        "tol": number(sec.get("tol", 1e-12), "tol"),
    }

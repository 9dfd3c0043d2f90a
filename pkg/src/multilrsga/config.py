"""YAML run configuration with line-accurate validation errors."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import yaml

from .experiments import GAMES
from .secant import INIT_STRATEGIES
from .solvers import SolverConfig

SOLVERS = ("multilrsga", "gd", "sga")
EMIT_KINDS = ("csv", "json", "svg")
_TOP_KEYS = {"seed", "game", "start", "solvers", "common", "output", "diagnostics", *SOLVERS}
_COMMON_KEYS = {"max_iter", "residual_tol", "record_every", "skip_tol"}
_SOLVER_KEYS = {
    "multilrsga": {"eta", "tau", "secant_init", "init_scale"},
    "gd": {"eta"},
    "sga": {"eta", "tau"},
}


class ConfigError(ValueError):
    def __init__(self, message: str, path: str = "<config>", line: Optional[int] = None,
                 field: Optional[str] = None):
        self.path = path
        self.line = line
        self.field = field
        where = f"{path}:{line}" if line is not None else path
        prefix = f"{where}: {field}: " if field else f"{where}: "
        super().__init__(prefix + message)


@dataclass
class RunConfig:
    game: str
    params: dict
    solvers: List[str]
    solver_configs: Dict[str, SolverConfig]
    out_dir: Path
    emit: List[str]
    seed: int = 0
    start: Optional[list] = None
    diagnostics: bool = False
    source: Optional[str] = None


class _Locator:
    """Maps dotted key paths to 1-based source lines via the YAML node tree."""

    def __init__(self, node):
        self.root = node

    def line(self, dotted: str) -> Optional[int]:
        node = self.root
        best = None if node is None else node.start_mark.line + 1
        for part in dotted.split("."):
            if not isinstance(node, yaml.MappingNode):
                break
            for key, value in node.value:
                if key.value == part:
                    best = key.start_mark.line + 1
                    node = value
                    break
            else:
                break
        return best


def _number(raw, kind=float):
    if isinstance(raw, bool):
        raise ValueError("expected a number, got a boolean")
    if kind is int:
        if isinstance(raw, float) and raw.is_integer():
            return int(raw)
        if isinstance(raw, int):
            return raw
        raise ValueError(f"expected an integer, got {raw!r}")
    # YAML 1.1 reads 1e-6 (no dot) as a string
    return float(raw)


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    path = str(path)
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", path) from e
    return parse_config(text, path, overrides)


def parse_config(text: str, path: str = "<config>", overrides: Optional[dict] = None) -> RunConfig:
    try:
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ConfigError(f"YAML syntax error: {getattr(e, 'problem', e)}", path, line) from e
    loc = _Locator(node)

    def fail(dotted, msg):
        raise ConfigError(msg, path, loc.line(dotted), dotted)

    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping", path, 1)
    overrides = overrides or {}

    for key in data:
        if key not in _TOP_KEYS:
            fail(str(key), f"unknown key (allowed: {', '.join(sorted(_TOP_KEYS))})")

    seed = overrides.get("seed", data.get("seed", 0))
    try:
        seed = _number(seed, int)
    except ValueError as e:
        fail("seed", str(e))

    game = data.get("game")
    if not isinstance(game, dict) or "name" not in game:
        fail("game", "must be a mapping with a 'name'")
    name = game["name"]
    if name not in GAMES:
        fail("game.name", f"unknown game {name!r} (available: {', '.join(GAMES)})")
    params = game.get("params") or {}
    if not isinstance(params, dict):
        fail("game.params", "must be a mapping")
    extra = set(game) - {"name", "params"}
    if extra:
        fail(f"game.{sorted(extra)[0]}", "unknown key")
    if name == "randquad":
        params = {"seed": seed, **params}

    solvers = data.get("solvers", ["multilrsga", "gd"])
    if not isinstance(solvers, list) or not solvers:
        fail("solvers", "must be a nonempty list")
    for s in solvers:
        if s not in SOLVERS:
            fail("solvers", f"unknown solver {s!r} (available: {', '.join(SOLVERS)})")

    common = data.get("common") or {}
    if not isinstance(common, dict):
        fail("common", "must be a mapping")
    shared = {}
    for key, raw in common.items():
        if key not in _COMMON_KEYS:
            fail(f"common.{key}", "unknown key")
        try:
            shared[key] = _number(raw, int if key in ("max_iter", "record_every") else float)
        except (TypeError, ValueError) as e:
            fail(f"common.{key}", str(e))

    solver_configs = {}
    for s in solvers:
        section = data.get(s) or {}
        if not isinstance(section, dict):
            fail(s, "must be a mapping")
        kwargs = dict(shared)
        for key, raw in section.items():
            if key not in _SOLVER_KEYS[s]:
                fail(f"{s}.{key}", f"unknown key (allowed: {', '.join(sorted(_SOLVER_KEYS[s]))})")
            if key == "secant_init":
                if raw not in INIT_STRATEGIES:
                    fail(f"{s}.{key}", f"must be one of {', '.join(INIT_STRATEGIES)}")
                kwargs[key] = raw
                continue
            try:
                kwargs[key] = _number(raw)
            except (TypeError, ValueError) as e:
                fail(f"{s}.{key}", str(e))
        if "eta" not in kwargs:
            fail(s, "missing required key 'eta'")
        if s == "gd":
            kwargs["tau"] = 0.0
        kwargs["seed"] = seed
        try:
            solver_configs[s] = SolverConfig(**kwargs)
        except ValueError as e:
            bad = str(e).split()[0]
            fail(f"{s}.{bad}" if bad in kwargs else s, str(e))

    start = data.get("start")
    if start is not None:
        if not isinstance(start, list):
            fail("start", "must be a list of numbers")
        try:
            start = [_number(x) for x in start]
        except (TypeError, ValueError) as e:
            fail("start", str(e))

    output = data.get("output") or {}
    if not isinstance(output, dict):
        fail("output", "must be a mapping")
    out_dir = overrides.get("out") or output.get("dir")
    if not out_dir:
        fail("output.dir", "an output directory is required (or pass --out)")
    emit = overrides.get("emit") or output.get("emit", list(EMIT_KINDS))
    if not isinstance(emit, list):
        fail("output.emit", "must be a list")
    for kind in emit:
        if kind not in EMIT_KINDS:
            fail("output.emit", f"unknown kind {kind!r} (allowed: {', '.join(EMIT_KINDS)})")

    diagnostics = data.get("diagnostics", False)
    if not isinstance(diagnostics, bool):
        fail("diagnostics", "must be true or false")

    return RunConfig(
        game=name, params=params, solvers=list(solvers), solver_configs=solver_configs,
        out_dir=Path(out_dir), emit=list(emit), seed=seed, start=start,
        diagnostics=diagnostics, source=path,
    )

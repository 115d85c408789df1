"""YAML run configuration: nested blocks mapped onto the library's dataclasses.

Omitted keys take the library defaults, unknown keys are rejected, and every
error names the offending key and its line in the file.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields, is_dataclass
from pathlib import Path

import yaml

from .env import DisturbanceEntry, EnvConfig, MissionLeg, Trigger
from .errors import ConfigError, FlyrlError
from .fsi import FSIConfig
from .grid import GridSpec
from .pointmass import PointMassConfig
from .reproduce import ReproductionGrid
from .scales import PhysicalParams
from .td3 import LearnerConfig

MODES = ("train", "evaluate", "replay", "dump-fields")
ENV_KINDS = ("flyer", "pointmass")


@dataclass(frozen=True)
class RunBlock:
    mode: str = "train"
    env_kind: str = "flyer"
    seed: int = 0
    max_strokes: int = 20000          # real strokes over all workers
    out: str = "runs/default"
    deterministic: bool = True
    workers: int = 1                  # threads in non-deterministic mode
    reproduce: bool = True
    checkpoint_every: int = 0         # strokes; 0 -> only at the end
    dump_times: tuple = ()            # dump-fields: times to write field CSVs
    max_episodes: int | None = None   # per worker; None -> env episode cap

    def __post_init__(self):
        if self.mode not in MODES:
            raise FlyrlError(f"mode must be one of {MODES}")
        if self.env_kind not in ENV_KINDS:
            raise FlyrlError(f"env_kind must be one of {ENV_KINDS}")
        if self.max_strokes < 1 or self.workers < 1 or self.checkpoint_every < 0:
            raise FlyrlError("max_strokes and workers must be >= 1, checkpoint_every >= 0")
        if any(t < 0 for t in self.dump_times):
            raise FlyrlError("dump times must be non-negative")


@dataclass(frozen=True)
class RunConfig:
    scales: PhysicalParams = PhysicalParams()
    grid: GridSpec = GridSpec()
    fsi: FSIConfig = FSIConfig()
    env: EnvConfig = EnvConfig()
    workers: tuple = ()               # per-worker EnvConfig; empty -> one worker using ``env``
    learner: LearnerConfig = LearnerConfig()
    reproduction: ReproductionGrid = ReproductionGrid()
    pointmass: PointMassConfig = PointMassConfig()
    run: RunBlock = RunBlock()

    def worker_envs(self):
        return self.workers if self.workers else (self.env,)


# ----------------------------------------------------------------------------
# loading
# ----------------------------------------------------------------------------

def _where(node):
    return node.start_mark.line + 1 if node is not None else None


def _fail(msg, node, key):
    raise ConfigError(f"{key}: {msg}", line=_where(node), key=key)


def _scalar(node, key):
    try:
        return yaml.safe_load(yaml.serialize(node))
    except yaml.YAMLError as e:      # pragma: no cover - composed nodes re-serialize cleanly
        _fail(str(e), node, key)


def _mapping_items(node, key):
    if node is None:
        return []
    if not isinstance(node, yaml.MappingNode):
        if isinstance(node, yaml.ScalarNode) and node.value in ("", "~", "null"):
            return []
        _fail("expected a mapping", node, key)
    out, seen = [], set()
    for k, v in node.value:
        name = k.value
        if name in seen:
            _fail("duplicate key", k, f"{key}.{name}" if key else name)
        seen.add(name)
        out.append((name, k, v))
    return out


def _value(default, node, key):
    """Convert ``node`` guided by the type of the default value."""
    if is_dataclass(default):
        return _build(type(default), node, key, base=default)
    if isinstance(default, tuple) or isinstance(node, yaml.SequenceNode):
        if not isinstance(node, yaml.SequenceNode):
            val = _scalar(node, key)
            if val is None:
                return None
            _fail("expected a list", node, key)
        return tuple(_plain(n, f"{key}[{i}]") for i, n in enumerate(node.value))
    val = _scalar(node, key)
    if isinstance(default, bool):
        if not isinstance(val, bool):
            _fail(f"expected true/false, got {val!r}", node, key)
    elif isinstance(default, int) and val is not None:
        if isinstance(val, bool) or not isinstance(val, int):
            _fail(f"expected an integer, got {val!r}", node, key)
    elif isinstance(default, float) and val is not None:
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            _fail(f"expected a number, got {val!r}", node, key)
        val = float(val)
    elif isinstance(default, str):
        if not isinstance(val, str):
            _fail(f"expected a string, got {val!r}", node, key)
    elif isinstance(val, (int, float)) and not isinstance(val, bool) and not math.isfinite(val):
        _fail("must be finite", node, key)
    return val


def _plain(node, key):
    if isinstance(node, yaml.SequenceNode):
        return tuple(_plain(n, f"{key}[{i}]") for i, n in enumerate(node.value))
    if isinstance(node, yaml.MappingNode):
        _fail("unexpected mapping", node, key)
    return _scalar(node, key)


_SPECIAL = {}


def _build(cls, node, key, base=None):
    base = base if base is not None else cls()
    names = {f.name: f for f in fields(cls) if f.init}
    kw = {}
    for name, knode, vnode in _mapping_items(node, key):
        full = f"{key}.{name}" if key else name
        if name not in names:
            _fail("unknown key", knode, full)
        special = _SPECIAL.get((cls, name))
        kw[name] = special(vnode, full, base) if special else _value(getattr(base, name), vnode, full)
    try:
        return dataclasses.replace(base, **kw)
    except (FlyrlError, ValueError, TypeError) as e:
        bad = next((n for n in kw if n in str(e)), None)
        _fail(str(e), node, f"{key}.{bad}" if bad and key else (bad or key or "config"))


def _trigger_build(cls, node, key, default_kw):
    """Build a dataclass whose ``trigger`` field is itself a mapping."""
    kw = {}
    trig = None
    for name, knode, vnode in _mapping_items(node, key):
        full = f"{key}.{name}"
        if name == "trigger":
            null = isinstance(vnode, yaml.ScalarNode) and vnode.value in ("", "~", "null")
            trig = None if null else _raw_trigger(vnode, full)
        elif name in default_kw:
            kw[name] = _value(default_kw[name], vnode, full)
        else:
            _fail("unknown key", knode, full)
    return kw, trig


def _raw_trigger(node, key):
    vals = {}
    for name, knode, vnode in _mapping_items(node, key):
        if name not in ("time", "axis", "value"):
            _fail("unknown key", knode, f"{key}.{name}")
        vals[name] = _value(0.0 if name != "axis" else "", vnode, f"{key}.{name}")
    try:
        return Trigger(**vals)
    except (FlyrlError, ValueError) as e:
        _fail(str(e), node, key)


def _disturbances(node, key, base):
    if not isinstance(node, yaml.SequenceNode):
        _fail("expected a list", node, key)
    out = []
    for i, item in enumerate(node.value):
        k = f"{key}[{i}]"
        kw, trig = _trigger_build(DisturbanceEntry, item, k,
                                  {"kind": "", "multiple": 0.0, "duration": 0.0})
        if "kind" not in kw or trig is None:
            _fail("needs kind and trigger", item, k)
        maker = (DisturbanceEntry.force_pulse if kw.pop("kind") == "force"
                 else DisturbanceEntry.moment_pulse)
        try:
            out.append(maker(trig, **kw))
        except (FlyrlError, ValueError) as e:
            _fail(str(e), item, k)
    return tuple(out)


def _mission(node, key, base):
    if not isinstance(node, yaml.SequenceNode):
        _fail("expected a list", node, key)
    out = []
    for i, item in enumerate(node.value):
        k = f"{key}[{i}]"
        kw, trig = _trigger_build(MissionLeg, item, k, {"goal": ()})
        if "goal" not in kw or len(kw["goal"]) != 2:
            _fail("needs a two-component goal", item, k)
        out.append(MissionLeg(tuple(float(g) for g in kw["goal"]), trig))
    return tuple(out)


_SPECIAL[(EnvConfig, "disturbances")] = _disturbances
_SPECIAL[(EnvConfig, "mission")] = _mission


def _check_overlaps(env: EnvConfig, node, key):
    from .env import _check_overlap
    try:
        _check_overlap(env.disturbances)
    except ConfigError as e:
        _fail(str(e), node, key)


def loads_config(text: str, source="<string>") -> RunConfig:
    try:
        root = yaml.compose(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark else None
        raise ConfigError(f"{source}: {e.problem}", line=line, key=None) from None
    kw = {}
    items = _mapping_items(root, "")
    env_node, worker_node = None, None
    for name, knode, vnode in items:
        if name == "workers":
            worker_node = vnode
            continue
        if name not in RunConfig.__dataclass_fields__:
            _fail("unknown section", knode, name)
        if name == "env":
            env_node = vnode
        kw[name] = _build(type(getattr(RunConfig, name)), vnode, name)
    cfg = RunConfig(**kw)
    if env_node is not None:
        _check_overlaps(cfg.env, env_node, "env.disturbances")
    if worker_node is not None:
        if not isinstance(worker_node, yaml.SequenceNode):
            _fail("expected a list of env overrides", worker_node, "workers")
        ws = tuple(_build(EnvConfig, n, f"workers[{i}]", base=cfg.env)
                   for i, n in enumerate(worker_node.value))
        for i, (n, w) in enumerate(zip(worker_node.value, ws)):
            _check_overlaps(w, n, f"workers[{i}].disturbances")
        cfg = dataclasses.replace(cfg, workers=ws)
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}", line=None, key=None) from None
    try:
        return loads_config(text, str(path))
    except ConfigError as e:
        raise ConfigError(f"{path}: {e.message}", line=e.line, key=e.key) from None


# ----------------------------------------------------------------------------
# dumping
# ----------------------------------------------------------------------------

def to_dict(obj):
    if is_dataclass(obj):
        if isinstance(obj, Trigger):
            return ({"time": obj.time} if obj.time is not None
                    else {"axis": obj.axis, "value": obj.value})
        return {f.name: to_dict(getattr(obj, f.name)) for f in fields(obj) if f.init}
    if isinstance(obj, (tuple, list)):
        return [to_dict(v) for v in obj]
    if isinstance(obj, float):
        return float(obj)
    return obj


def dumps_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False, default_flow_style=None)


def save_config(cfg: RunConfig, path):
    Path(path).write_text(dumps_config(cfg))

"""Experiment configuration: a flat ``key = value`` file plus validation.

Recognized keys are the dataclass fields below. Any other key is kept in
``params`` and passed to the experiment runner, which documents what it
reads. ``t_grid = start, stop, count`` describes a geometric grid that must
decrease; ``t_values`` lists explicit times instead.
"""
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .calculus import function_from_name
from .domains import domain_from_name
from .groups import from_name
from .kv import dump_kv, parse_kv

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "load_config", "resolve_group"]

KINDS = (
    "heat-content",
    "smooth-function",
    "lower-bound",
    "perimeter",
    "subordinator",
    "exit-bounds",
    "tail-checks",
    "taylor",
    "mollification",
)

# which name fields each kind needs
_NEEDS = {
    "heat-content": ("group", "domain"),
    "smooth-function": ("group", "function"),
    "lower-bound": ("group", "domain"),
    "perimeter": ("group", "domain"),
    "subordinator": (),
    "exit-bounds": ("group",),
    "tail-checks": ("group",),
    "taylor": ("group",),
    "mollification": ("group",),
}


class ConfigError(ValueError):
    """Invalid or unresolvable configuration."""


def resolve_group(spec):
    """A built-in name such as ``heisenberg:1`` or a path to a group file."""
    return from_name(str(spec))


@dataclass
class ExperimentConfig:
    kind: str
    group: str = "euclidean:1"
    domain: str = None
    function: str = None
    alpha: float = 2.0
    t_grid: tuple = None
    t_values: tuple = None
    samples: int = 100_000
    steps: int = 512
    seed: int = 0
    workers: int = 1
    out: str = "results"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        known = {f for f in cls.__dataclass_fields__ if f != "params"}
        params = dict(d.pop("params", {}) or {})
        params.update({k: v for k, v in d.items() if k not in known})
        kw = {k: v for k, v in d.items() if k in known}
        if "kind" not in kw:
            raise ConfigError("config needs a 'kind'")
        for k in ("t_grid", "t_values"):
            if kw.get(k) is not None:
                v = kw[k]
                kw[k] = tuple(v) if isinstance(v, (list, tuple)) else (v,)
        if isinstance(kw.get("alpha"), int) and not isinstance(kw["alpha"], bool):
            kw["alpha"] = float(kw["alpha"])
        return cls(**kw, params=params)

    def to_dict(self):
        d = asdict(self)
        for k in ("t_grid", "t_values"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    def dumps(self):
        d = {k: v for k, v in self.to_dict().items() if k != "params" and v is not None}
        d.update(self.params)
        return dump_kv(d)

    def t_points(self, default=None):
        """Decreasing array of times from ``t_values`` or ``t_grid``, else ``default``."""
        if self.t_values is not None:
            return np.asarray(self.t_values, dtype=float)
        if self.t_grid is not None:
            start, stop, count = self.t_grid
            return np.geomspace(float(start), float(stop), int(count))
        if default is None:
            raise ConfigError(f"{self.kind} needs t_grid or t_values")
        return np.asarray(default, dtype=float)

    def validate(self):
        """Raise ConfigError unless every name resolves and every grid is usable."""
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        try:
            alpha = float(self.alpha)
        except (TypeError, ValueError):
            raise ConfigError(f"alpha must be a number, got {self.alpha!r}") from None
        if not 0.0 < alpha <= 2.0:
            raise ConfigError(f"alpha must lie in (0, 2], got {alpha}")
        for name in ("samples", "steps", "workers"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if self.t_grid is not None and self.t_values is not None:
            raise ConfigError("give t_grid or t_values, not both")
        if self.t_grid is not None:
            if len(self.t_grid) != 3:
                raise ConfigError("t_grid is 'start, stop, count'")
            start, stop, count = self.t_grid
            if not (isinstance(count, int) and count >= 1):
                raise ConfigError(f"t_grid count must be a positive integer, got {count!r}")
            if not 0 < stop < 1 or not 0 < start < 1:
                raise ConfigError("t_grid endpoints must lie in (0, 1)")
            if count > 1 and not stop < start:
                raise ConfigError(f"t_grid must decrease: start {start} <= stop {stop}")
        if self.t_values is not None:
            t = np.asarray(self.t_values, dtype=float)
            if np.any((t <= 0) | (t >= 1)) or np.any(np.diff(t) >= 0):
                raise ConfigError("t_values must be strictly decreasing inside (0, 1)")
        try:
            g = resolve_group(self.group)
            if self.domain is not None:
                dom = domain_from_name(self.domain, g.dim)
                if dom.dim != g.dim:
                    raise ConfigError(f"domain {self.domain} has dimension {dom.dim}, group {self.group} has {g.dim}")
            if self.function is not None:
                function_from_name(self.function, g.dim)
        except (KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot resolve configuration: {exc}") from exc
        for need in _NEEDS[self.kind]:
            if getattr(self, need) is None:
                raise ConfigError(f"{self.kind} needs '{need}'")
        return self


def load_config(path, kind=None, **overrides):
    """Read and validate a config file; ``overrides`` that are not None replace file values.

    ``kind``, when given, must agree with the file (or fills it in).
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        d = parse_kv(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if kind is not None:
        if d.setdefault("kind", kind) != kind:
            raise ConfigError(f"config kind {d['kind']!r} does not match {kind!r}")
    d.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig.from_dict(d).validate()

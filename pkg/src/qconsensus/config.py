"""Sectioned ``key = value`` run configuration, presets and resolution.

A configuration is plain text::

    preset = pendulum5

    [protocol]
    K = 12

    [sim]
    duration = 10

Every parameter of the resolved :class:`RunSpec` carries a provenance tag:
``explicit`` (written in the text or passed as an override), ``preset``
(taken from the named preset) or ``default``. :func:`dump_config` writes the
explicit values as live lines and everything else as annotated comments, so
parsing a dump reproduces the same spec, provenance included.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from . import certify, graph
from .codec import ScalingSchedule
from .engine import SimConfig, SimMode
from .observer import EsoConfig
from .plant import DISTURBANCES, integrator_chain, pendulum_model
from .protocol import ProtocolParams

SECTIONS = ("graph", "agents", "protocol", "observer", "sim", "sweep")


class ConfigError(ValueError):
    """Configuration problem; the message starts with the offending line."""


class _Required:
    def __repr__(self):
        return "<required>"


REQUIRED = _Required()


# --- value parsers and formatters --------------------------------------------

def _p_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("not finite")
    return v


def _p_int(text: str) -> int:
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ValueError("not an integer")
    return int(text)


def _p_bool(text: str) -> bool:
    t = text.lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError("not a boolean")


def _p_str(text: str) -> str:
    if not text:
        raise ValueError("empty")
    return text


def _list_of(item: Callable[[str], Any]) -> Callable[[str], tuple]:
    def parse(text: str) -> tuple:
        parts = [p.strip() for p in text.split(",")]
        if not text.strip() or any(not p for p in parts):
            raise ValueError("malformed list")
        return tuple(item(p) for p in parts)
    return parse


def _p_edges(text: str) -> tuple[tuple[int, int], ...]:
    out = []
    for part in text.split(","):
        m = re.fullmatch(r"\s*(\d+)\s*-\s*(\d+)\s*", part)
        if not m:
            raise ValueError(f"edge {part.strip()!r} is not of the form i-j")
        out.append((int(m.group(1)), int(m.group(2))))
    return tuple(out)


def _optional(inner: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str):
        return None if text.lower() in ("none", "auto") else inner(text)
    return parse


def _fmt(v: Any) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{a}-{b}" for a, b in v)
        return ", ".join(_fmt(x) for x in v)
    return str(v)


@dataclass(frozen=True)
class Key:
    section: str
    name: str
    parse: Callable[[str], Any]
    kind: str
    default: Any = REQUIRED
    check: Callable[[Any], bool] | None = None
    constraint: str = ""

    @property
    def path(self) -> str:
        return f"{self.section}.{self.name}" if self.section else self.name


def _choice(*options: str):
    return lambda v: v in options


def _all(pred):
    return lambda v: v is not None and all(pred(x) for x in v)


SCHEMA: tuple[Key, ...] = (
    Key("", "preset", _p_str, "preset name", None),
    Key("graph", "kind", _p_str, "string", "cycle", _choice("cycle", "path", "complete", "edges"),
        "kind in {cycle, path, complete, edges}"),
    Key("graph", "n", _p_int, "integer", 5, lambda v: v >= 2, "n >= 2"),
    Key("graph", "edges", _optional(_p_edges), "edge list", None),
    Key("agents", "model", _p_str, "string", "pendulum", _choice("pendulum", "chain"),
        "model in {pendulum, chain}"),
    Key("agents", "disturbance", _p_str, "string", "sin2t", _choice(*DISTURBANCES),
        f"disturbance in {{{', '.join(DISTURBANCES)}}}"),
    Key("agents", "r", _p_int, "integer", 3, lambda v: v >= 1, "r >= 1"),
    Key("protocol", "T", _p_float, "real", REQUIRED, lambda v: v > 0, "T > 0"),
    Key("protocol", "gamma", _p_float, "real", REQUIRED, lambda v: 0 < v < 1, "0 < gamma < 1"),
    Key("protocol", "K", _p_int, "integer", REQUIRED, lambda v: v >= 1, "K >= 1"),
    Key("protocol", "beta0", _p_float, "real", REQUIRED, lambda v: v > 0, "beta0 > 0"),
    Key("protocol", "k", _list_of(_p_float), "list of reals", (4.0, 4.0)),
    Key("protocol", "Cs", _p_float, "real", 40.0, lambda v: v > 0, "Cs > 0"),
    Key("protocol", "schedule", _p_str, "string", "auto", _choice("auto", "geometric", "floored"),
        "schedule in {auto, geometric, floored}"),
    Key("observer", "epsilon", _p_float, "real", 0.01, lambda v: 0 < v < 1, "0 < epsilon < 1"),
    Key("observer", "pole", _p_float, "real", -1.0, lambda v: v < 0, "pole < 0"),
    Key("observer", "M", _list_of(_p_float), "list of reals", (5.0, 5.0, 15.0, 25.0),
        _all(lambda x: x > 0), "every M > 0"),
    Key("sim", "mode", _p_str, "string", "eso", _choice("eso", "full_info"), "mode in {eso, full_info}"),
    Key("sim", "duration", _p_float, "real", 20.0, lambda v: v >= 0, "duration >= 0"),
    Key("sim", "h", _optional(_p_float), "real or auto", None,
        lambda v: v is None or v > 0, "h > 0"),
    Key("sim", "init_box", _p_float, "real", 4.5, lambda v: v > 0, "init_box > 0"),
    Key("sim", "seed", _p_int, "integer", 0, lambda v: v >= 0, "seed >= 0"),
    Key("sim", "label", _p_str, "string", "run"),
    Key("sim", "eps0", _optional(_p_float), "real or none", None,
        lambda v: v is None or 0 < v < 1, "0 < eps0 < 1"),
    Key("sim", "certify", _p_str, "string", "auto",
        _choice("auto", "theorem1", "theorem2", "theorem3"),
        "certify in {auto, theorem1, theorem2, theorem3}"),
    Key("sim", "force", _p_bool, "boolean", False),
    Key("sim", "output", _optional(_p_str), "path or none", None),
    Key("sweep", "epsilon", _optional(_list_of(_p_float)), "list of reals", None,
        lambda v: v is None or all(0 < x < 1 for x in v), "every epsilon in (0, 1)"),
    Key("sweep", "K", _optional(_list_of(_p_int)), "list of integers", None,
        lambda v: v is None or all(x >= 1 for x in v), "every K >= 1"),
)

KEYS: dict[tuple[str, str], Key] = {(k.section, k.name): k for k in SCHEMA}


# --- presets -------------------------------------------------------------------

def _theorem1_cycle5() -> dict[tuple[str, str], Any]:
    s = graph.spectral(graph.cycle(5))
    T, gamma = 0.2, 0.9
    K, beta0 = certify.theorem1_parameters(s, T, gamma, 40.0)
    return {("protocol", "T"): T, ("protocol", "gamma"): gamma, ("protocol", "K"): K,
            ("protocol", "beta0"): beta0, ("sim", "mode"): "full_info", ("sim", "duration"): 30.0}


def _theorem3_cycle5() -> dict[tuple[str, str], Any]:
    s = graph.spectral(graph.cycle(5))
    T, gamma, beta0 = certify.theorem3_parameters(s, 1, 0.5, 40.0)
    return {("protocol", "T"): T, ("protocol", "gamma"): gamma, ("protocol", "K"): 1,
            ("protocol", "beta0"): beta0, ("sim", "eps0"): 0.5,
            ("sim", "duration"): round(30.0 / T) * T}


_PENDULUM5 = {
    ("graph", "kind"): "cycle", ("graph", "n"): 5,
    ("agents", "model"): "pendulum", ("agents", "disturbance"): "sin2t",
    ("protocol", "T"): 0.05, ("protocol", "gamma"): 0.93, ("protocol", "K"): 10,
    ("protocol", "beta0"): 10.0, ("protocol", "k"): (4.0, 4.0), ("protocol", "Cs"): 40.0,
    ("observer", "pole"): -1.0, ("observer", "M"): (5.0, 5.0, 15.0, 25.0),
    ("observer", "epsilon"): 0.01, ("sim", "init_box"): 4.5,
    # gamma sits just below rho_h on the 5-cycle; the tuple is run as given
    ("sim", "force"): True,
}


PRESETS: dict[str, Callable[[], dict[tuple[str, str], Any]]] = {
    "pendulum5": lambda: dict(_PENDULUM5),
    "pendulum5_onebit": lambda: {
        **_PENDULUM5,
        ("protocol", "T"): 0.015, ("protocol", "gamma"): 0.9881, ("protocol", "K"): 1,
        ("protocol", "beta0"): 30.0, ("sim", "eps0"): 0.5,
        ("sim", "duration"): 30.0,
    },
    "cycle5_theorem1": lambda: {**_PENDULUM5, ("sim", "force"): False, **_theorem1_cycle5()},
    "cycle5_onebit": lambda: {**_PENDULUM5, ("sim", "force"): False, **_theorem3_cycle5()},
}


# --- resolved specification ------------------------------------------------------

@dataclass(frozen=True)
class RunSpec:
    """Fully resolved run parameters with per-key provenance."""

    values: Mapping[tuple[str, str], Any]
    provenance: Mapping[tuple[str, str], str]

    def __getitem__(self, path: str) -> Any:
        section, _, name = path.rpartition(".")
        return self.values[(section, name)]

    def source(self, path: str) -> str:
        section, _, name = path.rpartition(".")
        return self.provenance[(section, name)]

    def __eq__(self, other):
        if not isinstance(other, RunSpec):
            return NotImplemented
        return dict(self.values) == dict(other.values) and dict(self.provenance) == dict(other.provenance)

    @property
    def preset(self) -> str | None:
        return self["preset"]

    @property
    def sweep_epsilon(self) -> tuple[float, ...] | None:
        return self["sweep.epsilon"]

    @property
    def sweep_K(self) -> tuple[int, ...] | None:
        return self["sweep.K"]

    @property
    def output_dir(self) -> str | None:
        return self["sim.output"]

    @property
    def mode(self) -> SimMode:
        return SimMode.ESO if self["sim.mode"] == "eso" else SimMode.FULL_INFO

    @property
    def cert_mode(self) -> certify.CertMode:
        c = self["sim.certify"]
        if c != "auto":
            return certify.CertMode(c)
        if self.mode is SimMode.FULL_INFO:
            return certify.CertMode.THEOREM1
        return certify.CertMode.THEOREM3 if self["sim.eps0"] is not None else certify.CertMode.THEOREM2

    def with_values(self, changes: Mapping[str, Any]) -> "RunSpec":
        """Copy with ``section.key`` values replaced (marked explicit)."""
        values, prov = dict(self.values), dict(self.provenance)
        for path, v in changes.items():
            section, _, name = path.rpartition(".")
            if (section, name) not in KEYS:
                raise ConfigError(f"unknown key {path!r}")
            values[(section, name)] = v
            prov[(section, name)] = "explicit"
        return _validated(values, prov, {})

    # -- builders ---------------------------------------------------------------

    def build_graph(self) -> graph.Graph:
        kind, n = self["graph.kind"], self["graph.n"]
        if kind == "edges":
            return graph.from_edge_list(n, self["graph.edges"])
        return {"cycle": graph.cycle, "path": graph.path, "complete": graph.complete}[kind](n)

    def build_protocol(self, epsilon: float | None = None, K: int | None = None) -> ProtocolParams:
        eps = self["observer.epsilon"] if epsilon is None else epsilon
        sched = self["protocol.schedule"]
        if sched == "auto":
            sched = "geometric" if self.cert_mode is certify.CertMode.THEOREM1 else "floored"
        beta0, gamma = self["protocol.beta0"], self["protocol.gamma"]
        schedule = (ScalingSchedule(beta0, gamma) if sched == "geometric"
                    else ScalingSchedule.floored(beta0, gamma, eps))
        return ProtocolParams(T=self["protocol.T"], k_gains=self["protocol.k"],
                              K=self["protocol.K"] if K is None else K,
                              schedule=schedule, Cs=self["protocol.Cs"])

    def sim_config(self, epsilon: float | None = None, K: int | None = None,
                   label: str | None = None) -> SimConfig:
        """Engine configuration, optionally at a different ``epsilon``/``K`` (sweeps)."""
        g = self.build_graph()
        r = len(self["protocol.k"]) + 1
        if self["agents.model"] == "pendulum":
            models = [pendulum_model(i, self["agents.disturbance"]) for i in range(1, g.n_agents + 1)]
        else:
            models = [integrator_chain(self["agents.r"], f"chain{i}") for i in range(1, g.n_agents + 1)]
        eps = self["observer.epsilon"] if epsilon is None else epsilon
        protocol = self.build_protocol(eps, K)
        eso = None
        if self.mode is SimMode.ESO:
            eso = EsoConfig.from_pole(r, eps, self["observer.M"], self["observer.pole"])
        return SimConfig(graph=g, models=models, protocol=protocol, eso=eso, mode=self.mode,
                         duration=self["sim.duration"], h=self["sim.h"], init_box=self["sim.init_box"],
                         seed=self["sim.seed"], label=label or self["sim.label"],
                         eps0=self["sim.eps0"], force=self["sim.force"])


# --- parsing -------------------------------------------------------------------------

_LINE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


def _strip_comment(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_config(text: str, overrides: Iterable[str] = ()) -> RunSpec:
    """Parse configuration text (plus ``section.key=value`` overrides) into a :class:`RunSpec`."""
    explicit: dict[tuple[str, str], Any] = {}
    where: dict[tuple[str, str], str] = {}
    section_line: dict[str, int] = {}
    section = ""
    n_lines = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        n_lines = lineno
        line = _strip_comment(raw)
        if not line:
            continue
        m = re.fullmatch(r"\[\s*([A-Za-z_]+)\s*\]", line)
        if m:
            section = m.group(1)
            if section not in SECTIONS:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            section_line.setdefault(section, lineno)
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        _assign(explicit, where, section, m.group(1), m.group(2).strip(), f"line {lineno}")

    for i, ov in enumerate(overrides, start=1):
        if "=" not in ov:
            raise ConfigError(f"override {i}: expected section.key=value, got {ov!r}")
        path, value = (p.strip() for p in ov.split("=", 1))
        sec, _, name = path.rpartition(".")
        _assign(explicit, where, sec, name, value, f"override {i}")

    values: dict[tuple[str, str], Any] = {}
    prov: dict[tuple[str, str], str] = {}
    preset_name = explicit.get(("", "preset"))
    preset_values: dict[tuple[str, str], Any] = {}
    if preset_name is not None:
        if preset_name not in PRESETS:
            raise ConfigError(f"{where[('', 'preset')]}: unknown preset {preset_name!r} "
                              f"(available: {', '.join(sorted(PRESETS))})")
        preset_values = PRESETS[preset_name]()

    eof = f"line {n_lines + 1} (end of input)"
    for key in SCHEMA:
        sk = (key.section, key.name)
        if sk in explicit:
            values[sk], prov[sk] = explicit[sk], "explicit"
        elif sk in preset_values:
            values[sk], prov[sk] = preset_values[sk], "preset"
        elif key.default is REQUIRED:
            at = f"line {section_line[key.section]}" if key.section in section_line else eof
            raise ConfigError(f"{at}: missing required key {key.path} ({key.kind}, {key.constraint})")
        else:
            values[sk], prov[sk] = key.default, "default"
    return _validated(values, prov, where)


def _assign(explicit, where, section, name, value, at):
    key = KEYS.get((section, name))
    if key is None:
        scope = f"[{section}]" if section else "top level"
        raise ConfigError(f"{at}: unknown key {name!r} in {scope}")
    sk = (section, name)
    if sk in explicit:
        raise ConfigError(f"{at}: duplicate key {key.path} (first set at {where[sk]})")
    try:
        v = key.parse(value)
    except ValueError as exc:
        raise ConfigError(f"{at}: {key.path} expects {key.kind}, got {value!r} ({exc})") from None
    if key.check is not None and not key.check(v):
        raise ConfigError(f"{at}: {key.path} = {value} violates {key.constraint}")
    explicit[sk] = v
    where[sk] = at


def _validated(values, prov, where) -> RunSpec:
    """Cross-key checks that single-key validation cannot express."""
    def fail(sk, msg):
        at = where.get(sk, f"{prov[sk]} value")
        raise ConfigError(f"{at}: {msg}")

    kind = values[("graph", "kind")]
    if kind == "edges" and values[("graph", "edges")] is None:
        fail(("graph", "kind"), "graph.kind = edges needs graph.edges")
    if kind == "cycle" and values[("graph", "n")] < 3:
        fail(("graph", "n"), "a cycle needs n >= 3")
    r = len(values[("protocol", "k")]) + 1
    if values[("agents", "model")] == "pendulum" and r != 3:
        fail(("protocol", "k"), "pendulum agents have relative degree 3: protocol.k needs two gains")
    if values[("agents", "model")] == "chain" and values[("agents", "r")] != r:
        fail(("agents", "r"), f"agents.r must equal len(protocol.k) + 1 = {r}")
    if len(values[("observer", "M")]) != r + 1:
        fail(("observer", "M"), f"observer.M needs r + 1 = {r + 1} saturation levels")
    spec = RunSpec(values, prov)
    try:
        spec.build_graph()
        ProtocolParams(T=values[("protocol", "T")], k_gains=values[("protocol", "k")],
                       K=values[("protocol", "K")],
                       schedule=ScalingSchedule(values[("protocol", "beta0")], values[("protocol", "gamma")]))
    except ValueError as exc:
        raise ConfigError(f"invalid configuration: {exc}") from None
    return spec


def load_config(path: str, overrides: Iterable[str] = ()) -> RunSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return parse_config(text, overrides)


def dump_config(spec: RunSpec) -> str:
    """Resolved configuration text; parsing it yields an equal :class:`RunSpec`."""
    lines = []
    preset = spec.values[("", "preset")]
    if spec.provenance[("", "preset")] == "explicit":
        lines.append(f"preset = {preset}")
    for section in SECTIONS:
        lines.append("")
        lines.append(f"[{section}]")
        for key in SCHEMA:
            if key.section != section:
                continue
            sk = (section, key.name)
            text = f"{key.name} = {_fmt(spec.values[sk])}"
            src = spec.provenance[sk]
            lines.append(text if src == "explicit" else f"# {text}    ({src})")
    return "\n".join(lines) + "\n"

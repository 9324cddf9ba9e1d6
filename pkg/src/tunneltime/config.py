"""Run configuration: sectioned key/value text (INI) or JSON, plus flag overrides.

Grammar (INI)::

    [run]        command
    [potential]  kind (well|barrier), v0, a                  -- all required
    [units]      hbar = 1, mu = 1
    [packet]     omega0, tau (required); window_sigmas = 5; n_omega = 2049
    [grid]       n_t = 4096; half_span_taus = 6
    [series]     terms = 100; constituents = 1,2,3; partials = 1,2,3,all;
                 diff_step = auto; peak_orders = 20
    [sweep]      kappa_a_min = 0.1; kappa_a_max = 10; n_thickness = 30;
                 ratios = 0.001,0.003,0.01,0.03,0.1,0.3,1
    [output]     out_dir = runs; format = csv; label = <command>

JSON input uses the same sections as nested objects.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, dataclass, fields
from typing import Optional

from .dispersion import Kind, ScatterRegion
from .errors import ConfigError
from .experiments import DEFAULT_RATIOS, HARTMAN_KAPPA_A, HARTMAN_POINTS, Scenario
from .io import fmt
from .scattering import DEFAULT_TERMS, default_step
from .synthesis import (DEFAULT_HALF_SPAN_TAUS, DEFAULT_N_OMEGA, DEFAULT_N_T,
                        DEFAULT_WINDOW_SIGMAS, PacketSpec)

COMMANDS = ("coef", "packet", "constituents", "partial", "hartman", "figures", "sweep")
FORMATS = ("csv", "json")
REQUIRED = object()


def _int_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _float_list(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _order_list(text) -> tuple:
    items = text if isinstance(text, (list, tuple)) else str(text).split(",")
    out = []
    for v in items:
        v = str(v).strip()
        if v:
            out.append("all" if v == "all" else int(v))
    return tuple(out)


def _step(text):
    if text is None or str(text).strip() == "auto":
        return None
    return float(text)


# section -> key -> (field name, parser, default)
SCHEMA = {
    "run": {"command": ("command", str, None)},
    "potential": {"kind": ("kind", str, REQUIRED), "v0": ("v0", float, REQUIRED),
                  "a": ("a", float, REQUIRED)},
    "units": {"hbar": ("hbar", float, 1.0), "mu": ("mu", float, 1.0)},
    "packet": {"omega0": ("omega0", float, REQUIRED), "tau": ("tau", float, REQUIRED),
               "window_sigmas": ("window_sigmas", float, DEFAULT_WINDOW_SIGMAS),
               "n_omega": ("n_omega", int, DEFAULT_N_OMEGA)},
    "grid": {"n_t": ("n_t", int, DEFAULT_N_T),
             "half_span_taus": ("half_span_taus", float, DEFAULT_HALF_SPAN_TAUS)},
    "series": {"terms": ("terms", int, DEFAULT_TERMS),
               "constituents": ("constituents", _int_list, (1, 2, 3)),
               "partials": ("partials", _order_list, (1, 2, 3, "all")),
               "diff_step": ("diff_step", _step, None),
               "peak_orders": ("peak_orders", int, 20)},
    "sweep": {"kappa_a_min": ("kappa_a_min", float, HARTMAN_KAPPA_A[0]),
              "kappa_a_max": ("kappa_a_max", float, HARTMAN_KAPPA_A[1]),
              "n_thickness": ("n_thickness", int, HARTMAN_POINTS),
              "ratios": ("ratios", _float_list, DEFAULT_RATIOS)},
    "output": {"out_dir": ("out_dir", str, "runs"), "format": ("format", str, "csv"),
               "label": ("label", str, None)},
}

# flag name -> (section, key)
FLAG_KEYS = {
    "n_omega": ("packet", "n_omega"),
    "n_t": ("grid", "n_t"),
    "terms": ("series", "terms"),
    "diff_step": ("series", "diff_step"),
    "out": ("output", "out_dir"),
    "format": ("output", "format"),
}


@dataclass(frozen=True)
class CliConfig:
    command: str
    kind: str
    v0: float
    a: float
    omega0: float
    tau: float
    hbar: float
    mu: float
    window_sigmas: float
    n_omega: int
    n_t: int
    half_span_taus: float
    terms: int
    constituents: tuple
    partials: tuple
    diff_step: float
    peak_orders: int
    kappa_a_min: float
    kappa_a_max: float
    n_thickness: int
    ratios: tuple
    out_dir: str
    format: str
    label: str

    def region(self) -> ScatterRegion:
        return ScatterRegion(self.kind, self.v0, self.a, self.mu, self.hbar)

    def scenario(self) -> Scenario:
        return Scenario(self.region(), PacketSpec(self.omega0, self.tau, self.window_sigmas,
                                                  self.n_omega),
                        self.label, n_t=self.n_t, half_span_taus=self.half_span_taus,
                        terms=self.terms, constituents=self.constituents,
                        partials=self.partials, diff_step=self.diff_step)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("constituents", "partials", "ratios"):
            d[key] = list(d[key])
        return d


def _read_sections(text: str) -> dict:
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed JSON config: {exc}") from None
        if not isinstance(raw, dict) or not all(isinstance(v, dict) for v in raw.values()):
            raise ConfigError("JSON config must map section names to objects")
        return raw
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    return {s: dict(parser[s]) for s in parser.sections()}


def _schema_fragment(section: str) -> str:
    keys = ", ".join(k for k, (_, _, d) in SCHEMA[section].items())
    return f"[{section}] {keys}"


def parse_config(data, overrides: Optional[dict] = None,
                 command: Optional[str] = None) -> CliConfig:
    """Resolve a configuration from file contents, flag overrides and defaults.

    Flags win over file values; every default lands in the returned
    config, so echoing it reproduces the run exactly.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else (data or "")
    sections = _read_sections(text)
    for name, (section, key) in FLAG_KEYS.items():
        value = (overrides or {}).get(name)
        if value is not None:
            sections.setdefault(section, {})[key] = value
    if command is not None:
        sections.setdefault("run", {})["command"] = command

    values = {}
    for section, entries in sections.items():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]; expected one of {sorted(SCHEMA)}")
        for key, raw in entries.items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]; "
                                  f"expected {_schema_fragment(section)}")
            name, conv, _ = SCHEMA[section][key]
            try:
                values[name] = conv(raw)
            except (TypeError, ValueError):
                raise ConfigError(f"bad value {raw!r} for {key!r} in section [{section}]") from None
    for section, entries in SCHEMA.items():
        for key, (name, _, default) in entries.items():
            if name in values:
                continue
            if default is REQUIRED:
                raise ConfigError(f"missing required key {key!r} in section [{section}]; "
                                  f"expected {_schema_fragment(section)}")
            values[name] = default
    if values["command"] is None:
        raise ConfigError("no command given (flag or [run] command)")
    if values["label"] is None:
        values["label"] = values["command"]
    if values["diff_step"] is None:
        values["diff_step"] = default_step(values["omega0"], values["tau"])
    cfg = CliConfig(**{f.name: values[f.name] for f in fields(CliConfig)})
    validate(cfg)
    return cfg


def validate(cfg: CliConfig) -> None:
    if cfg.command not in COMMANDS:
        raise ConfigError(f"unknown command {cfg.command!r}; expected one of {COMMANDS}")
    if cfg.kind not in (k.value for k in Kind):
        raise ConfigError(f"potential kind must be 'well' or 'barrier', got {cfg.kind!r}")
    if cfg.format not in FORMATS:
        raise ConfigError(f"output format must be one of {FORMATS}, got {cfg.format!r}")
    if not cfg.v0 >= 0:
        raise ConfigError("v0 must be >= 0")
    for name in ("a", "omega0", "tau", "hbar", "mu", "window_sigmas", "half_span_taus",
                 "diff_step", "kappa_a_min", "kappa_a_max"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name} must be positive, got {getattr(cfg, name)!r}")
    for name in ("n_omega", "n_t", "terms", "peak_orders", "n_thickness"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive, got {getattr(cfg, name)!r}")
    if cfg.n_omega < 33 or cfg.n_omega % 2 == 0:
        raise ConfigError(f"n_omega must be odd and >= 33, got {cfg.n_omega}")
    if cfg.n_t < 3:
        raise ConfigError("n_t must be >= 3")
    if cfg.diff_step >= cfg.omega0:
        raise ConfigError("diff_step must be smaller than omega0")
    if any(j < 1 for j in cfg.constituents) or not cfg.constituents:
        raise ConfigError("constituents must be a nonempty list of integers >= 1")
    if not cfg.partials or any(m != "all" and m < 1 for m in cfg.partials):
        raise ConfigError("partials must list integers >= 1 or 'all'")
    if cfg.kappa_a_max <= cfg.kappa_a_min or cfg.n_thickness < 2:
        raise ConfigError("sweep needs kappa_a_max > kappa_a_min and n_thickness >= 2")
    if not cfg.ratios or any(r <= 0 for r in cfg.ratios):
        raise ConfigError("ratios must be positive")
    if not cfg.label or "/" in cfg.label:
        raise ConfigError(f"label must be a nonempty directory name, got {cfg.label!r}")
    below_top = cfg.hbar * cfg.omega0 < cfg.v0
    if cfg.command == "hartman" and (cfg.kind != "barrier" or not below_top):
        raise ConfigError("hartman needs a barrier with hbar*omega0 < v0 "
                          f"(got kind={cfg.kind}, hbar*omega0={cfg.hbar * cfg.omega0!r}, v0={cfg.v0!r})")
    if cfg.command in ("figures", "sweep") and cfg.kind != "well":
        raise ConfigError(f"{cfg.command} needs a well potential")


def dump_config(cfg: CliConfig) -> str:
    """Serialise a resolved config as INI text that parses back to ``cfg``."""
    values = cfg.to_dict()
    lines = []
    for section, entries in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (name, _, _) in entries.items():
            v = values[name]
            if isinstance(v, list):
                text = ",".join(fmt(x) if isinstance(x, float) else str(x) for x in v)
            elif isinstance(v, float):
                text = fmt(v)
            else:
                text = str(v)
            lines.append(f"{key} = {text}")
        lines.append("")
    return "\n".join(lines)

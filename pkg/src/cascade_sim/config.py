"""Run-configuration files.

A config is an INI-style document of flat ``key = value`` pairs grouped under
``[run]``, ``[params]``, ``[pulse]``, ``[integrator]``, ``[sweep]`` and
``[output]``. Keys in ``[params]`` and ``[pulse]`` are the field names of
:class:`~cascade_sim.model.SystemParams` and
:class:`~cascade_sim.model.PulseParams`. Anything omitted takes the default
for the protocol (see the defaults table in the README).
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

from .experiments import SWEEP_PARAMETERS, SweepSpec, scale_to_t_final
from .integrator import IntegratorConfig
from .model import (ProtocolKind, PulseParams, SystemParams, default_params,
                    default_pulse, pulse_violations, violations)


class ConfigError(ValueError):
    """Malformed or invalid configuration; ``errors`` lists every problem."""

    def __init__(self, errors: Iterable[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


SECTIONS = {
    "run": ("protocol",),
    "params": tuple(f.name for f in fields(SystemParams)),
    "pulse": tuple(f.name for f in fields(PulseParams)),
    "integrator": tuple(f.name for f in fields(IntegratorConfig)),
    "sweep": ("parameter", "min", "max", "points", "scale"),
    "output": ("dir",),
}
SWEEP_REQUIRED = ("parameter", "min", "max", "points")


@dataclass(frozen=True)
class RunConfig:
    protocol: ProtocolKind
    params: SystemParams
    pulse: PulseParams | None
    integrator: IntegratorConfig
    sweep: SweepSpec | None
    out_dir: Path


def _read(text: str) -> dict[str, dict[str, str]]:
    cp = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"),
                                   inline_comment_prefixes=("#",),
                                   interpolation=None, default_section="__none__")
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError([f"line {exc.lineno}: key outside of a [section]"]) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError([f"line {exc.lineno}: {exc.message.splitlines()[0]}"]) from None
    except configparser.ParsingError as exc:
        raise ConfigError([f"line {lineno}: cannot parse {line.strip()!r}"
                           for lineno, line in exc.errors]) from None
    return {s: dict(cp[s]) for s in cp.sections()}


def parse_overrides(items: Iterable[str]) -> dict[str, dict[str, str]]:
    """``section.key=value`` or bare ``key=value`` (section inferred)."""
    out: dict[str, dict[str, str]] = {}
    errs = []
    for item in items:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or not key:
            errs.append(f"--param {item!r}: expected key=value")
            continue
        if "." in key:
            section, _, name = key.partition(".")
        else:
            owners = [s for s, keys in SECTIONS.items() if key in keys]
            if len(owners) != 1:
                errs.append(f"--param {key!r}: unknown key" if not owners
                            else f"--param {key!r}: ambiguous, use section.key")
                continue
            section, name = owners[0], key
        out.setdefault(section, {})[name] = value.strip()
    if errs:
        raise ConfigError(errs)
    return out


def _number(section: str, key: str, raw: str, errs: list[str], integer: bool = False):
    try:
        return int(raw) if integer else float(raw)
    except ValueError:
        errs.append(f"[{section}] {key}: not a{'n integer' if integer else ' number'}: {raw!r}")
        return None


def build(doc: dict[str, dict[str, str]], protocol: "ProtocolKind | str | None" = None,
          out_dir: "str | Path | None" = None) -> RunConfig:
    """Turn parsed sections into a validated :class:`RunConfig`.

    ``protocol`` (from the subcommand) wins over ``[run] protocol``; a
    conflicting value is an error unless running a sweep.
    """
    errs: list[str] = []
    for section, keys in doc.items():
        if section not in SECTIONS:
            errs.append(f"unknown section [{section}]")
            continue
        for k in keys:
            if k not in SECTIONS[section]:
                errs.append(f"[{section}] unknown key {k!r}")
    if errs:
        raise ConfigError(errs)

    run = doc.get("run", {})
    try:
        kind = ProtocolKind.parse(protocol if protocol is not None
                                  else run.get("protocol", "write"))
        if protocol is not None and "protocol" in run \
                and ProtocolKind.parse(run["protocol"]) is not kind:
            errs.append(f"[run] protocol = {run['protocol']} conflicts with subcommand {kind.value}")
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None

    pvals = {k: _number("params", k, v, errs) for k, v in doc.get("params", {}).items()}
    ivals = {k: _number("integrator", k, v, errs, integer=(k == "dense_samples"))
             for k, v in doc.get("integrator", {}).items()}
    uvals = {k: _number("pulse", k, v, errs) for k, v in doc.get("pulse", {}).items()}
    if errs:
        raise ConfigError(errs)

    params = default_params(kind, **pvals)
    errs += [f"[params] {e}" for e in violations(params)]
    integ = IntegratorConfig(**ivals)
    errs += [f"[integrator] {e}" for e in integ.violations()]

    pulse = None
    if kind is ProtocolKind.MEMORY or uvals:
        base = default_pulse(params.t_final)
        pulse = base.replace(**uvals)
        errs += [f"[pulse] {e}" for e in pulse_violations(pulse, params.t_final)]

    sweep = None
    if "sweep" in doc:
        sw = doc["sweep"]
        missing = [k for k in SWEEP_REQUIRED if k not in sw]
        if missing:
            errs.append("[sweep] missing required keys: " + ", ".join(missing))
        else:
            lo = _number("sweep", "min", sw["min"], errs)
            hi = _number("sweep", "max", sw["max"], errs)
            pts = _number("sweep", "points", sw["points"], errs, integer=True)
            if None not in (lo, hi, pts):
                spec = SweepSpec(kind, sw["parameter"], lo, hi, pts, params,
                                 sw.get("scale", "linear"), pulse, integ)
                errs += [f"[sweep] {e}" for e in spec.violations()]
                if sw["parameter"] == "t_final" and not spec.violations():
                    for v in spec.grid():
                        p2, _ = scale_to_t_final(params, pulse, float(v))
                        errs += [f"[sweep] t_final={v!r}: {e}" for e in violations(p2)]
                sweep = spec
    if errs:
        raise ConfigError(errs)

    out = Path(out_dir) if out_dir is not None else Path(doc.get("output", {}).get("dir", "out"))
    return RunConfig(kind, params, pulse, integ, sweep, out)


def parse_config(text: str, protocol=None, overrides: Iterable[str] = (),
                 out_dir=None) -> RunConfig:
    """Parse config text (plus ``key=value`` overrides) into a RunConfig."""
    doc = _read(text)
    for section, kv in parse_overrides(overrides).items():
        doc.setdefault(section, {}).update(kv)
    return build(doc, protocol, out_dir)


def load_config(path: "str | Path | None", protocol=None, overrides: Iterable[str] = (),
                out_dir=None) -> RunConfig:
    text = "" if path is None else Path(path).read_text(encoding="utf-8")
    return parse_config(text, protocol, overrides, out_dir)


__all__ = ["RunConfig", "ConfigError", "parse_config", "load_config", "SECTIONS",
           "SWEEP_PARAMETERS"]

"""Run configuration: sectioned key = value files.

Keys before the first section header belong to ``[system]``. Unknown
sections and keys are rejected; anything missing falls back to the
experimental defaults. Rates are MHz, times ns, angles radians.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields

from . import __version__
from .dynamics import DEFAULT_ATOL, DEFAULT_RTOL
from .ensemble import CouplingDistribution, EnsembleConfig
from .levels import PRESETS, preset
from .params import ParameterError, SystemParams
from .pulses import (exponential_schedule, exponential_window, gaussian_schedule, load_envelope,
                     shaped_schedule, DEFAULT_CAP, DEFAULT_HEADROOM)


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


PULSE_DEFAULTS = {
    "kind": "gaussian",
    "fwhm": 53.0,
    "fwhm_of": "intensity",
    "kappa_s": 0.01,
    "t_end": 0.0,
    "file": "",
    "cap": DEFAULT_CAP,
    "headroom": DEFAULT_HEADROOM,
}
ENSEMBLE_DEFAULTS = {
    "n": 10_000,
    "seed": 0,
    "workers": 1,
    "g_mean": 16.0,
    "g_std": 6.0,
    "g_min": 7.0,
    "g_max": 28.0,
    "random_phase": True,
}
INTEGRATOR_DEFAULTS = {"rtol": DEFAULT_RTOL, "atol": DEFAULT_ATOL}
SCHEME_DEFAULTS = {"name": "rb87", "initial_ground": "G1"}


@dataclass
class RunConfig:
    params: SystemParams = field(default_factory=SystemParams)
    scheme: dict = field(default_factory=lambda: dict(SCHEME_DEFAULTS))
    pulse: dict = field(default_factory=lambda: dict(PULSE_DEFAULTS))
    ensemble: dict = field(default_factory=lambda: dict(ENSEMBLE_DEFAULTS))
    integrator: dict = field(default_factory=lambda: dict(INTEGRATOR_DEFAULTS))

    def level_scheme(self, initial_ground=None):
        return preset(self.scheme["name"], initial_ground or self.scheme["initial_ground"])

    def schedule(self):
        p = self.pulse
        kind = p["kind"]
        if kind == "gaussian":
            return gaussian_schedule(p["fwhm"], fwhm_of=p["fwhm_of"], headroom=p["headroom"], cap=p["cap"])
        if kind == "exponential":
            t_end = p["t_end"] or exponential_window(p["kappa_s"])
            return exponential_schedule(p["kappa_s"], t_end)
        if kind == "file":
            f, t_end = load_envelope(p["file"])
            return shaped_schedule(f, t_end, cap=p["cap"], headroom=p["headroom"])
        raise ConfigError([f"pulse.kind must be gaussian, exponential or file (got {kind!r})"])

    def distribution(self):
        e = self.ensemble
        return CouplingDistribution(e["g_mean"], e["g_std"], e["g_min"], e["g_max"])

    def ensemble_config(self, **overrides):
        e = self.ensemble
        kw = dict(
            params=self.params,
            scheme=self.level_scheme(overrides.pop("initial_ground", None)),
            schedule=self.schedule(),
            n=int(e["n"]),
            seed=int(e["seed"]),
            distribution=self.distribution(),
            workers=int(e["workers"]),
            rtol=self.integrator["rtol"],
            atol=self.integrator["atol"],
            pulse_fwhm=self.pulse["fwhm"],
            random_phase=bool(e["random_phase"]),
        )
        kw.update(overrides)
        return EnsembleConfig(**kw)

    def to_dict(self):
        return {
            "version": __version__,
            "system": self.params.to_dict(),
            "scheme": dict(self.scheme),
            "pulse": dict(self.pulse),
            "ensemble": dict(self.ensemble),
            "integrator": dict(self.integrator),
        }

    def echo(self):
        """Effective configuration as a config file that reproduces this run."""
        cp = configparser.ConfigParser()
        cp.optionxform = str
        doc = self.to_dict()
        for section in ("system", "scheme", "pulse", "ensemble", "integrator"):
            cp[section] = {k: repr(v) if isinstance(v, float) else str(v) for k, v in doc[section].items()}
        buf = io.StringIO()
        buf.write(f"# sprintsim {__version__}\n")
        cp.write(buf)
        return buf.getvalue()


def _coerce(section, key, raw, default, problems):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw.replace("−", "-"))
        return raw.strip()
    except ValueError:
        problems.append(f"{section}.{key}: cannot parse {raw!r} as {type(default).__name__}")
        return default


def parse_text(text, source="<config>"):
    cp = configparser.ConfigParser(strict=False, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string("[system]\n" + text, source=source)
    except configparser.Error as exc:
        # the implicit [system] header shifts reported line numbers by one
        raise ConfigError([f"{source}: parse error: {exc}"]) from exc

    problems = []
    cfg = RunConfig()
    known = {
        "system": {f.name: f.default for f in fields(SystemParams)},
        "scheme": SCHEME_DEFAULTS,
        "pulse": PULSE_DEFAULTS,
        "ensemble": ENSEMBLE_DEFAULTS,
        "integrator": INTEGRATOR_DEFAULTS,
    }
    values = {s: {} for s in known}
    for section in cp.sections():
        if section not in known:
            problems.append(f"unknown section [{section}]")
            continue
        for key, raw in cp.items(section):
            if key not in known[section]:
                problems.append(f"{section}.{key}: unknown key")
                continue
            values[section][key] = _coerce(section, key, raw, known[section][key], problems)

    try:
        cfg.params = SystemParams(**values["system"])
    except ParameterError as exc:
        problems.extend(f"system.{p}" for p in exc.problems)
    cfg.scheme.update(values["scheme"])
    cfg.pulse.update(values["pulse"])
    cfg.ensemble.update(values["ensemble"])
    cfg.integrator.update(values["integrator"])

    if cfg.scheme["name"] not in PRESETS:
        problems.append(f"scheme.name: unknown scheme {cfg.scheme['name']!r}")
    if cfg.scheme["initial_ground"] not in ("G1", "G2"):
        problems.append("scheme.initial_ground must be G1 or G2")
    if cfg.pulse["kind"] not in ("gaussian", "exponential", "file"):
        problems.append(f"pulse.kind: unknown kind {cfg.pulse['kind']!r}")
    if cfg.pulse["kind"] == "file" and not cfg.pulse["file"]:
        problems.append("pulse.file is required when pulse.kind = file")
    for key in ("fwhm", "kappa_s", "cap"):
        if not cfg.pulse[key] > 0:
            problems.append(f"pulse.{key} must be > 0")
    if cfg.pulse["fwhm_of"] not in ("intensity", "amplitude"):
        problems.append("pulse.fwhm_of must be intensity or amplitude")
    if cfg.ensemble["n"] < 1:
        problems.append("ensemble.n must be >= 1")
    if cfg.ensemble["workers"] < 1:
        problems.append("ensemble.workers must be >= 1")
    e = cfg.ensemble
    if not 0 <= e["g_min"] < e["g_max"]:
        problems.append("ensemble: need 0 <= g_min < g_max")
    if e["g_std"] < 0 or e["g_mean"] <= 0:
        problems.append("ensemble: need g_mean > 0 and g_std >= 0")
    for key in ("rtol", "atol"):
        if not cfg.integrator[key] > 0:
            problems.append(f"integrator.{key} must be > 0")
    if problems:
        raise ConfigError(problems)
    return cfg


def parse_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_text(fh.read(), source=str(path))

"""Named presets, config ingestion and results persistence.

A scenario is a flat, human-readable key-value record (dotted section
prefixes: ``model``, ``params.*``, ``init.*``, ``integrator.*``, ``diag.*``,
``case.<label>.*``, ``assert.*``) describing one reproducible run: a
spectrum sweep, a time evolution, an exact-vs-reduced comparison or a
sensitivity (divergence) pair.  Built-in presets cover the canonical
regimes of the asymmetric-coupling models; each carries its expected
diagnostics as assertions with pinned tolerances.

Running a scenario integrates, evaluates diagnostics and assertions, writes
trajectory/spectrum CSVs plus a key-value report, and returns an
append-only manifest with file digests and per-assertion pass/fail flags.
Outputs contain no wall-clock data, so reruns on one platform are
byte-identical.
"""

from __future__ import annotations

import hashlib
import io
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis, dynamics, spectra
from .integrator import IntegratorConfig, Trajectory

__all__ = [
    "ConfigError",
    "Scenario",
    "CheckResult",
    "RunManifest",
    "PRESET_NAMES",
    "load_scenario",
    "parse_config_text",
    "serialize_scenario",
    "run_scenario",
    "scenario_description",
]

_VERSION = "0.1.0"


class ConfigError(ValueError):
    """Malformed, unknown or out-of-range scenario configuration."""


# --------------------------------------------------------------------------
# flat key-value parsing
# --------------------------------------------------------------------------

def parse_config_text(text: str) -> dict:
    """Parse flat ``key = value`` lines; comments start with '#'."""
    flat: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in flat:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        flat[key] = value
    return flat


def _parse_float(value: str, key: str) -> float:
    s = value.strip()
    try:
        if "/" in s:
            num, _, den = s.partition("/")
            return float(num) / float(den)
        return float(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as a number") from exc


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value.strip())
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse {value!r} as an integer") from exc


def _parse_complex(value: str, key: str) -> complex:
    s = value.strip().replace(" ", "")
    try:
        return complex(s)
    except ValueError:
        return complex(_parse_float(value, key))


def _parse_bool(value: str, key: str) -> bool:
    s = value.strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"{key}: expected on/off, got {value!r}")


def _parse_float_list(value: str, key: str) -> tuple:
    items = [v for v in (part.strip() for part in value.split(",")) if v]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return tuple(_parse_float(v, key) for v in items)


# --------------------------------------------------------------------------
# built-in presets
# --------------------------------------------------------------------------

def _beat_target(lam: float, kappa: float) -> float:
    return 2.0 * math.sqrt(lam * (lam - kappa))


_CHAOS_BASE = {
    "params.omega_cm": "1.0",
    "params.gamma": "0.038/46",
    "params.g0": "0.01",
    "params.delta_c": "1.0",
    "params.kappa_c": "0.2",
    "params.drive": "2.0",
    "params.delta_ceff": "1.0",
    "params.kappa_ceff": "0.0",
    "params.lambda_c": "0.1",
    "init.q": "0.0",
    "init.p": "0.0",
    "init.alpha1": "10.0",
    "init.alpha2": "100.0",
    "t_end": "3000.0",
}

PRESETS: dict = {
    "fig1a": {
        "name": "fig1a",
        "kind": "spectrum",
        "description": "two-mode spectra vs coupling strength; real branches beyond the EP at lambda=epsilon",
        "family": "two_mode",
        "params.omega": "1.0",
        "params.epsilon": "0.01",
        "sweep.param": "lambda",
        "sweep.start": "0.0",
        "sweep.stop": "0.05",
        "sweep.count": "501",
        "assert.ep_count": "1",
        "assert.ep_at": "0.01",
        "assert.ep_at_atol": "1e-08",
        "assert.reality_dichotomy": "on",
        "assert.dichotomy_tol": "1e-12",
    },
    "fig1b": {
        "name": "fig1b",
        "kind": "spectrum",
        "description": "two-mode spectra vs asymmetry at fixed coupling; EP at epsilon=lambda",
        "family": "two_mode",
        "params.omega": "1.0",
        "params.lambda": "0.02",
        "sweep.param": "epsilon",
        "sweep.start": "0.0",
        "sweep.stop": "0.05",
        "sweep.count": "501",
        "assert.ep_count": "1",
        "assert.ep_at": "0.02",
        "assert.ep_at_atol": "1e-08",
        "assert.reality_dichotomy": "on",
        "assert.dichotomy_tol": "1e-12",
    },
    "fig1e": {
        "name": "fig1e",
        "kind": "spectrum",
        "description": "gain-loss pair spectra vs exchange coupling; EP at mu=kappa/2",
        "family": "gain_loss",
        "params.omega": "1.0",
        "params.kappa": "0.01",
        "sweep.param": "mu",
        "sweep.start": "0.0",
        "sweep.stop": "0.05",
        "sweep.count": "501",
        "assert.ep_count": "1",
        "assert.ep_at": "0.005",
        "assert.ep_at_atol": "1e-08",
        "assert.reality_dichotomy": "on",
        "assert.dichotomy_tol": "1e-12",
    },
    "fig2a": {
        "name": "fig2a",
        "kind": "spectrum",
        "description": "4-site chain, equal asymmetries: all EPs degenerate at one sweep location",
        "family": "chain",
        "params.omega": "1.0",
        "params.n": "4",
        "params.epsilons": "0.05, 0.05, 0.05",
        "sweep.param": "lambda",
        "sweep.start": "0.0",
        "sweep.stop": "0.1",
        "sweep.count": "501",
        "assert.ep_count": "1",
        "assert.ep_at": "0.05",
        "assert.ep_at_atol": "1e-08",
        "assert.mirror": "on",
        "assert.mirror_tol": "1e-09",
    },
    "fig2b": {
        "name": "fig2b",
        "kind": "spectrum",
        "description": "4-site chain, one distinct asymmetry: EP degeneracy partially lifted",
        "family": "chain",
        "params.omega": "1.0",
        "params.n": "4",
        "params.epsilons": "0.05, 0.05, 0.04",
        "sweep.param": "lambda",
        "sweep.start": "0.0",
        "sweep.stop": "0.1",
        "sweep.count": "501",
        "assert.ep_count_min": "2",
        "assert.mirror": "on",
        "assert.mirror_tol": "1e-09",
    },
    "fig2c": {
        "name": "fig2c",
        "kind": "spectrum",
        "description": "4-site chain, all asymmetries distinct: multiple exceptional points",
        "family": "chain",
        "params.omega": "1.0",
        "params.n": "4",
        "params.epsilons": "0.05, 0.06, 0.04",
        "sweep.param": "lambda",
        "sweep.start": "0.0",
        "sweep.stop": "0.1",
        "sweep.count": "501",
        "assert.ep_count_min": "2",
        "assert.mirror": "on",
        "assert.mirror_tol": "1e-09",
    },
    "fig2d": {
        "name": "fig2d",
        "kind": "spectrum",
        "description": "6-site chain with distinct asymmetries: paired spectra, multiple EPs",
        "family": "chain",
        "params.omega": "1.0",
        "params.n": "6",
        "params.epsilons": "0.05, 0.06, 0.04, 0.07, 0.01",
        "sweep.param": "lambda",
        "sweep.start": "0.0",
        "sweep.stop": "0.1",
        "sweep.count": "501",
        "assert.ep_count_min": "2",
        "assert.mirror": "on",
        "assert.mirror_tol": "1e-09",
    },
    "fig3": {
        "name": "fig3",
        "kind": "elimination",
        "description": "full two-cell model vs reduced two-mode model on both sides of the EP",
        "model": "exact",
        "params.delta1": "1.0",
        "params.delta2": "1.0",
        "params.omega_m": "1.05",
        "params.g": "0.015",
        "params.kappa": "0.0015",
        "params.gamma_m": "0.584",
        "params.lambda": "0.003",
        "init.alpha1": "100.0",
        "init.beta1": "5.0",
        "init.alpha2": "100.0",
        "init.beta2": "5.0",
        "t_end": "5000.0",
        "assert.gamma_eff": "2.8e-06",
        "assert.gamma_eff_atol": "5e-08",
        "case.before.params.lambda": "0.0012",
        "case.before.assert.elimination_max": "2.0",
        "case.after.params.lambda": "0.003",
        "case.after.assert.elimination_max": "2.0",
    },
    "fig4a": {
        "name": "fig4a",
        "kind": "evolve",
        "description": "reduced model before the EP: both fields amplify at sqrt(lam*(kappa-lam))",
        "model": "effective",
        "params.delta_eff1": "1.0",
        "params.delta_eff2": "1.0",
        "params.gamma": "0.0",
        "params.lambda": "0.0012",
        "params.kappa": "0.0015",
        "t_end": "5000.0",
        "assert.classification": "amplifying",
        "assert.growth_rate": "0.0006",
        "assert.growth_rate_rtol": "0.05",
    },
    "fig4b": {
        "name": "fig4b",
        "kind": "evolve",
        "description": "reduced model past the EP: bounded beating at splitting 2*sqrt(lam*(lam-kappa))",
        "model": "effective",
        "params.delta_eff1": "1.0",
        "params.delta_eff2": "1.0",
        "params.gamma": "0.0",
        "params.lambda": "0.003",
        "params.kappa": "0.0015",
        "t_end": "6000.0",
        "assert.classification": "bounded-periodic",
        "assert.beat_splitting": "0.004242640687119285",
        "assert.beat_splitting_rtol": "0.02",
    },
    "fig5c": {
        "name": "fig5c",
        "kind": "evolve",
        "description": "imbalanced dissipation: past-EP decay (main) and before-EP dip-then-growth (inset)",
        "model": "effective",
        "params.delta_eff1": "1.0",
        "params.delta_eff2": "1.0",
        "params.gamma": "0.001",
        "params.lambda": "0.003",
        "params.kappa": "0.0015",
        "t_end": "5000.0",
        "case.main.params.lambda": "0.003",
        "case.inset.params.lambda": "0.0012",
        "case.inset.assert.envelope_dip": "on",
    },
    "fig5d": {
        "name": "fig5d",
        "kind": "evolve",
        "description": "windowed synchronization: locked before the EP, sync/anti-sync crossover past it",
        "model": "effective",
        "params.delta_eff1": "1.0",
        "params.delta_eff2": "1.0",
        "params.gamma": "0.0",
        "params.lambda": "0.003",
        "params.kappa": "0.0015",
        "t_end": "5000.0",
        "diag.pearson_window": "10.0",
        "case.before.params.lambda": "0.0012",
        "case.before.assert.pearson_min_all": "0.9",
        "case.after.params.lambda": "0.003",
        "case.after.assert.pearson_crossover": "0.9",
    },
    "fig7a": {
        "name": "fig7a",
        "kind": "evolve",
        "description": "driven nonlinear cell, symmetric coupling: stable limit cycle",
        "model": "chaos",
        **_CHAOS_BASE,
        "params.asymmetric": "off",
        "diag.lle": "on",
        "assert.classification": "bounded-periodic",
        "assert.lle_nonpositive_sigma": "2.0",
    },
    "fig7c": {
        "name": "fig7c",
        "kind": "evolve",
        "description": "driven nonlinear cell, asymmetric coupling: induced chaos",
        "model": "chaos",
        **_CHAOS_BASE,
        "params.asymmetric": "on",
        "diag.lle": "on",
        "assert.classification": "chaotic",
        "assert.lle_positive_sigma": "3.0",
    },
    "fig8a": {
        "name": "fig8a",
        "kind": "spectrum",
        "description": "linearized cavity-pair eigenfrequencies vs coupling, open and balanced leakage",
        "family": "chaos_subsystem",
        "params.omega_cm": "1.0",
        "params.gamma": "0.038/46",
        "params.g0": "0.01",
        "params.delta_c": "1.0",
        "params.kappa_c": "0.2",
        "params.drive": "2.0",
        "params.delta_ceff": "1.0",
        "params.kappa_ceff": "0.0",
        "params.lambda_c": "0.1",
        "params.asymmetric": "on",
        "sweep.param": "lambda_c",
        "sweep.start": "0.0",
        "sweep.stop": "0.3",
        "sweep.count": "301",
        "case.open.params.kappa_ceff": "0.0",
        "case.open.assert.im_at_param": "0.1",
        "case.open.assert.im_at_value": "0.061803398874989484",
        "case.open.assert.im_at_atol": "0.0001",
        "case.balanced.params.kappa_ceff": "0.2",
        "case.balanced.assert.im_nonpositive": "on",
        "case.balanced.assert.im_nonpositive_tol": "1e-12",
        "case.balanced.assert.im_zero_at": "0.1",
        "case.balanced.assert.im_zero_atol": "1e-12",
    },
    "fig8b": {
        "name": "fig8b",
        "kind": "evolve",
        "description": "asymmetric coupling past the EP: chaos suppressed, periodic evolution",
        "model": "chaos",
        **_CHAOS_BASE,
        "params.asymmetric": "on",
        "params.lambda_c": "0.25",
        "diag.lle": "on",
        "assert.classification": "bounded-periodic",
        "assert.lle_nonpositive_sigma": "2.0",
    },
    "fig8c": {
        "name": "fig8c",
        "kind": "evolve",
        "description": "balanced leakage (no heating headroom): chaos suppressed, periodic evolution",
        "model": "chaos",
        **_CHAOS_BASE,
        "params.asymmetric": "on",
        "params.kappa_ceff": "0.2",
        "diag.lle": "on",
        "assert.classification": "bounded-periodic",
        "assert.lle_nonpositive_sigma": "2.0",
    },
    "fig8d": {
        "name": "fig8d",
        "kind": "divergence",
        "description": "sensitivity to the initial state in the chaotic regime",
        "model": "chaos",
        **_CHAOS_BASE,
        "params.asymmetric": "on",
        "divergence.init.alpha1": "10.5",
        "divergence.field": "alpha1",
        "assert.divergence_frac": "0.1",
    },
}

PRESET_NAMES = tuple(PRESETS.keys())

_KINDS = ("spectrum", "evolve", "elimination", "divergence")

_EVOLVE_CHECKS = {
    "classification",
    "growth_rate",
    "beat_splitting",
    "pearson_min_all",
    "pearson_crossover",
    "envelope_dip",
    "lle_positive_sigma",
    "lle_nonpositive_sigma",
}
_EVOLVE_MODIFIERS = {"growth_rate_rtol", "beat_splitting_rtol"}
_SPECTRUM_CHECKS = {
    "ep_count",
    "ep_count_min",
    "ep_at",
    "reality_dichotomy",
    "mirror",
    "im_nonpositive",
    "im_at_param",
    "im_zero_at",
}
_SPECTRUM_MODIFIERS = {
    "ep_at_atol",
    "dichotomy_tol",
    "mirror_tol",
    "im_nonpositive_tol",
    "im_at_value",
    "im_at_atol",
    "im_zero_atol",
}
_ELIM_CHECKS = {"elimination_max", "gamma_eff"}
_ELIM_MODIFIERS = {"gamma_eff_atol"}
_DIV_CHECKS = {"divergence_frac"}

_CHECKS_BY_KIND = {
    "evolve": (_EVOLVE_CHECKS, _EVOLVE_MODIFIERS),
    "spectrum": (_SPECTRUM_CHECKS, _SPECTRUM_MODIFIERS),
    "elimination": (_ELIM_CHECKS, _ELIM_MODIFIERS),
    "divergence": (_DIV_CHECKS, set()),
}

_DEFAULT_INIT = {
    "effective": {"alpha1": "100.0", "alpha2": "100.0"},
    "exact": {"alpha1": "100.0", "beta1": "5.0", "alpha2": "100.0", "beta2": "5.0"},
    "chaos": {"q": "0.0", "p": "0.0", "alpha1": "10.0", "alpha2": "100.0"},
}
_DEFAULT_T_END = {"effective": "5000.0", "exact": "5000.0", "chaos": "3000.0"}


# --------------------------------------------------------------------------
# scenario record
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CaseSpec:
    label: str
    overrides: dict
    asserts: dict


@dataclass(frozen=True)
class Scenario:
    """A fully resolved scenario: original keys plus documented defaults."""

    name: str
    kind: str
    description: str
    flat: dict
    resolved: dict
    defaulted: tuple

    # -- typed accessors ---------------------------------------------------
    def _get(self, key: str, default=None):
        return self.resolved.get(key, default)

    @property
    def model(self) -> str:
        return self._get("model", "")

    @property
    def family(self) -> str:
        return self._get("family", "")

    @property
    def t_end(self) -> float:
        return _parse_float(self._get("t_end", "0"), "t_end")

    def integrator_config(self) -> IntegratorConfig:
        max_step_raw = self._get("integrator.max_step", "inf")
        return IntegratorConfig(
            method=self._get("integrator.method", "rkck45"),
            rel_tol=_parse_float(self._get("integrator.rel_tol", "1e-9"), "integrator.rel_tol"),
            abs_tol=_parse_float(self._get("integrator.abs_tol", "1e-12"), "integrator.abs_tol"),
            max_step=math.inf if max_step_raw == "inf" else _parse_float(max_step_raw, "integrator.max_step"),
            output_stride=_parse_float(
                self._get("integrator.output_stride", "0.5"), "integrator.output_stride"
            ),
        )

    def diag(self, key: str, default: str | None = None) -> str | None:
        return self.resolved.get(f"diag.{key}", default)

    def section(self, prefix: str, source: dict | None = None) -> dict:
        src = self.resolved if source is None else source
        plen = len(prefix) + 1
        return {k[plen:]: v for k, v in src.items() if k.startswith(prefix + ".")}

    def cases(self) -> list:
        labels: list = []
        for key in self.resolved:
            if key.startswith("case."):
                label = key.split(".", 2)[1]
                if label not in labels:
                    labels.append(label)
        specs = []
        for label in labels:
            prefix = f"case.{label}."
            overrides = {}
            asserts = {}
            for key, value in self.resolved.items():
                if not key.startswith(prefix):
                    continue
                rest = key[len(prefix):]
                if rest.startswith("assert."):
                    asserts[rest[len("assert."):]] = value
                else:
                    overrides[rest] = value
            specs.append(CaseSpec(label=label, overrides=overrides, asserts=asserts))
        if not specs:
            specs.append(CaseSpec(label="run", overrides={}, asserts=self.section("assert")))
        return specs

    def global_asserts(self) -> dict:
        if any(k.startswith("case.") for k in self.resolved):
            return self.section("assert")
        return {}

    def with_overrides(self, overrides: dict) -> "Scenario":
        unknown = [k for k in overrides if k not in self.resolved]
        if unknown:
            raise ConfigError(f"overrides reference unknown config keys: {unknown}")
        flat = dict(self.flat)
        for key, value in overrides.items():
            flat[key] = value
        return _build_scenario(flat)


def scenario_description(name: str) -> str:
    return PRESETS[name].get("description", "")


# --------------------------------------------------------------------------
# building and validation
# --------------------------------------------------------------------------

_PARAM_LIST_FIELDS = {"epsilons"}
_PARAM_INT_FIELDS = {"n"}
_PARAM_BOOL_FIELDS = {"asymmetric"}
_PARAM_COMPLEX_FIELDS = {"g"}


def _params_dict(kind_params: dict) -> dict:
    out = {}
    for key, raw in kind_params.items():
        name = spectra._FIELD_ALIASES.get(key, key)
        label = f"params.{key}"
        if name in _PARAM_LIST_FIELDS:
            out[name] = _parse_float_list(raw, label)
        elif name in _PARAM_INT_FIELDS:
            out[name] = _parse_int(raw, label)
        elif name in _PARAM_BOOL_FIELDS:
            out[name] = _parse_bool(raw, label)
        elif name in _PARAM_COMPLEX_FIELDS:
            out[name] = _parse_complex(raw, label)
        else:
            out[name] = _parse_float(raw, label)
    return out


def _build_params(scenario_kind: str, model_or_family: str, raw_params: dict):
    values = _params_dict(raw_params)
    try:
        if scenario_kind == "spectrum":
            fam = model_or_family.replace("-", "_")
            types = {
                "two_mode": spectra.TwoModeParams,
                "gain_loss": spectra.GainLossParams,
                "chain": spectra.ChainParams,
                "chaos_subsystem": dynamics.ChaosParams,
            }
            if fam not in types:
                raise ConfigError(f"unknown family {model_or_family!r}")
            return types[fam](**values)
        types = {
            "exact": dynamics.OptomechParams,
            "effective": dynamics.EffectiveParams,
            "chaos": dynamics.ChaosParams,
        }
        if model_or_family not in types:
            raise ConfigError(f"unknown model {model_or_family!r}")
        return types[model_or_family](**values)
    except TypeError as exc:
        raise ConfigError(f"parameter set incomplete or unknown field: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"parameter out of range: {exc}") from exc


def _init_dict(raw_init: dict) -> dict:
    out = {}
    for key, raw in raw_init.items():
        if key in ("q", "p"):
            out[key] = _parse_float(raw, f"init.{key}")
        else:
            out[key] = _parse_complex(raw, f"init.{key}")
    return out


def _build_scenario(flat: dict) -> Scenario:
    name = flat.get("name")
    if not name:
        raise ConfigError("missing 'name'")
    kind = flat.get("kind")
    if kind not in _KINDS:
        raise ConfigError(f"kind must be one of {_KINDS}, got {kind!r}")

    resolved = dict(flat)
    defaulted: list = []

    if kind == "spectrum":
        if "family" not in resolved:
            raise ConfigError("spectrum scenario needs a 'family'")
        for key in ("sweep.param", "sweep.start", "sweep.stop", "sweep.count"):
            if key not in resolved:
                raise ConfigError(f"spectrum scenario needs {key!r}")
    else:
        model = resolved.get("model")
        if model not in dynamics.MODEL_TAGS:
            raise ConfigError(f"model must be one of {dynamics.MODEL_TAGS}, got {model!r}")
        if "t_end" not in resolved:
            resolved["t_end"] = _DEFAULT_T_END[model]
            defaulted.append("t_end")
        for fname, fval in _DEFAULT_INIT[model].items():
            key = f"init.{fname}"
            if key not in resolved:
                resolved[key] = fval
                defaulted.append(key)
        for key, value in (
            ("integrator.method", "rkck45"),
            ("integrator.rel_tol", "1e-9"),
            ("integrator.abs_tol", "1e-12"),
            ("integrator.max_step", "inf"),
            ("integrator.output_stride", "0.5"),
        ):
            if key not in resolved:
                resolved[key] = value
                defaulted.append(key)

    scenario = Scenario(
        name=name,
        kind=kind,
        description=flat.get("description", ""),
        flat=dict(flat),
        resolved=resolved,
        defaulted=tuple(defaulted),
    )
    _validate_scenario(scenario)
    return scenario


def _validate_scenario(s: Scenario) -> None:
    checks, modifiers = _CHECKS_BY_KIND[s.kind]
    allowed = checks | modifiers
    for case in s.cases():
        for key in case.asserts:
            if key not in allowed:
                raise ConfigError(
                    f"assertion {key!r} is not an implemented diagnostic for kind {s.kind!r}"
                )
        for key in case.overrides:
            if not (key.startswith("params.") or key.startswith("init.") or key == "t_end"):
                raise ConfigError(f"case override {key!r} must target params.*, init.* or t_end")
    for key in s.global_asserts():
        if key not in allowed:
            raise ConfigError(
                f"assertion {key!r} is not an implemented diagnostic for kind {s.kind!r}"
            )

    # construct parameter records early so range errors surface at load time
    base_params = s.section("params")
    if s.kind == "spectrum":
        sweep = _sweep_of(s)
        base_params = dict(base_params)
        base_params.setdefault(sweep.param, repr(sweep.start))
        _build_params("spectrum", s.family, base_params)
    else:
        _build_params(s.kind, s.model, base_params)
        _init_dict(s.section("init"))
        s.integrator_config()
        if s.t_end <= 0:
            raise ConfigError("t_end must be positive")
    for case in s.cases():
        merged = dict(base_params)
        merged.update(s.section("params", source=case.overrides))
        if s.kind == "spectrum":
            _build_params("spectrum", s.family, merged)
        else:
            _build_params(s.kind, s.model, merged)


def _sweep_of(s: Scenario) -> spectra.ParamSweep:
    try:
        return spectra.ParamSweep(
            param=s.resolved["sweep.param"],
            start=_parse_float(s.resolved["sweep.start"], "sweep.start"),
            stop=_parse_float(s.resolved["sweep.stop"], "sweep.stop"),
            count=_parse_int(s.resolved["sweep.count"], "sweep.count"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid sweep: {exc}") from exc


def load_scenario(source: str) -> Scenario:
    """Resolve a built-in preset name or parse a config file path."""
    if source in PRESETS:
        return _build_scenario(dict(PRESETS[source]))
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            flat = parse_config_text(fh.read())
        return _build_scenario(flat)
    raise ConfigError(
        f"unknown scenario {source!r}; built-in presets: {', '.join(PRESET_NAMES)}"
    )


def load_scenario_text(text: str) -> Scenario:
    return _build_scenario(parse_config_text(text))


def serialize_scenario(s: Scenario) -> str:
    """Canonical flat text of the originally specified keys (no defaults)."""
    return "".join(f"{k} = {v}\n" for k, v in s.flat.items())


# --------------------------------------------------------------------------
# run manifest
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    case: str
    name: str
    passed: bool
    detail: str


@dataclass
class RunManifest:
    scenario: str
    version: str
    kind: str
    config: dict
    defaulted: tuple
    overrides: dict
    files: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        out = io.StringIO()
        out.write(f"scenario = {self.scenario}\n")
        out.write(f"version = {self.version}\n")
        out.write(f"kind = {self.kind}\n")
        for key, value in self.config.items():
            out.write(f"config.{key} = {value}\n")
        if self.defaulted:
            out.write(f"defaulted = {','.join(self.defaulted)}\n")
        for key, value in self.overrides.items():
            out.write(f"override.{key} = {value}\n")
        for fname, digest in self.files.items():
            out.write(f"file.{fname}.sha256 = {digest}\n")
        for check in self.checks:
            out.write(f"check.{check.case}.{check.name} = {'pass' if check.passed else 'fail'}\n")
            out.write(f"detail.{check.case}.{check.name} = {check.detail}\n")
        out.write(f"overall = {'pass' if self.passed else 'fail'}\n")
        return out.getvalue()


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


# --------------------------------------------------------------------------
# diagnostics contexts
# --------------------------------------------------------------------------

class _EvolveContext:
    """Lazy, memoized diagnostics for one integrated case."""

    def __init__(self, scenario: Scenario, params, init, traj: Trajectory):
        self.s = scenario
        self.params = params
        self.init = init
        self.traj = traj
        self._memo: dict = {}

    def growth(self) -> analysis.GrowthFit:
        if "growth" not in self._memo:
            field_name = self.s.diag("growth_field", "re_a1")
            self._memo["growth"] = analysis.envelope_growth_rate(self.traj, field_name)
        return self._memo["growth"]

    def beat(self) -> float:
        if "beat" not in self._memo:
            field_name = self.s.diag("beat_field", "alpha1")
            self._memo["beat"] = analysis.beat_frequency(self.traj, field_name)
        return self._memo["beat"]

    def pearson(self):
        if "pearson" not in self._memo:
            fields = tuple(
                f.strip()
                for f in self.s.diag("pearson_fields", "re_a1,re_a2").split(",")
            )
            window = _parse_float(self.s.diag("pearson_window", "10.0"), "diag.pearson_window")
            stride_raw = self.s.diag("pearson_stride")
            cfg = analysis.PearsonConfig(
                window=window,
                stride=None if stride_raw is None else _parse_float(stride_raw, "diag.pearson_stride"),
                fields=fields,
            )
            starts, values = analysis.pearson_factor(
                self.traj.times,
                self.traj.series(fields[0]),
                self.traj.series(fields[1]),
                cfg,
            )
            self._memo["pearson"] = (starts, values)
        return self._memo["pearson"]

    def lle(self) -> analysis.LLEResult:
        if "lle" not in self._memo:
            horizon = _parse_float(
                self.s.diag("lle_horizon", str(self.s.t_end)), "diag.lle_horizon"
            )
            interval = _parse_float(self.s.diag("lle_interval", "10.0"), "diag.lle_interval")
            pert = _parse_float(self.s.diag("lle_perturbation", "1e-8"), "diag.lle_perturbation")
            self._memo["lle"] = analysis.lyapunov_exponent(
                self.s.model,
                self.params,
                self.init,
                horizon=horizon,
                renorm_interval=interval,
                rel_perturbation=pert,
                cfg=self.s.integrator_config(),
            )
        return self._memo["lle"]

    def report(self) -> analysis.DiagnosticsReport:
        if "report" not in self._memo:
            try:
                fit = self.growth()
                rate, stderr = fit.rate, fit.stderr
            except analysis.AnalysisError:
                rate, stderr = None, None
            lle = lle_err = None
            if _parse_bool(self.s.diag("lle", "off"), "diag.lle"):
                res = self.lle()
                lle, lle_err = res.lle, res.stderr
            beat = None
            if self.s.model == "effective":
                try:
                    beat = self.beat()
                except analysis.AnalysisError:
                    beat = None
            self._memo["report"] = analysis.classify(
                growth_rate=rate,
                growth_stderr=stderr,
                lle=lle,
                lle_stderr=lle_err,
                beat_splitting=beat,
            )
        return self._memo["report"]


# --------------------------------------------------------------------------
# assertion evaluation
# --------------------------------------------------------------------------

def _approx_check(value: float, target: float, rtol: float) -> tuple:
    ok = abs(value - target) <= rtol * abs(target)
    return ok, f"value={value!r} target={target!r} rtol={rtol!r}"


def _eval_evolve_assert(name: str, raw: str, asserts: dict, ctx: _EvolveContext) -> tuple:
    if name == "classification":
        report = ctx.report()
        return report.classification == raw, f"classified as {report.classification}"
    if name == "growth_rate":
        fit = ctx.growth()
        rtol = _parse_float(asserts.get("growth_rate_rtol", "0.05"), "growth_rate_rtol")
        return _approx_check(fit.rate, _parse_float(raw, name), rtol)
    if name == "beat_splitting":
        beat = ctx.beat()
        rtol = _parse_float(asserts.get("beat_splitting_rtol", "0.02"), "beat_splitting_rtol")
        return _approx_check(beat, _parse_float(raw, name), rtol)
    if name == "pearson_min_all":
        _, values = ctx.pearson()
        threshold = _parse_float(raw, name)
        finite = np.isfinite(values)
        ok = bool(finite.all() and values.min() >= threshold)
        return ok, f"min C = {float(np.nanmin(values))!r} over {len(values)} windows"
    if name == "pearson_crossover":
        _, values = ctx.pearson()
        threshold = _parse_float(raw, name)
        cmax = float(np.nanmax(values))
        cmin = float(np.nanmin(values))
        ok = cmax >= threshold and cmin <= -threshold
        return ok, f"max C = {cmax!r}, min C = {cmin!r}"
    if name == "envelope_dip":
        field_name = ctx.s.diag("dip_field", "abs_a2")
        series = np.asarray(ctx.traj.series(field_name), dtype=float)
        i_min = int(np.argmin(series))
        v0, vmin = float(series[0]), float(series[i_min])
        recovered = float(series[i_min:].max()) > vmin
        ok = i_min > 0 and vmin < v0 and recovered
        return ok, (
            f"min {vmin!r} at t={float(ctx.traj.times[i_min])!r} vs initial {v0!r}; "
            f"recovers={recovered}"
        )
    if name == "lle_positive_sigma":
        res = ctx.lle()
        nsig = _parse_float(raw, name)
        ok = res.lle > nsig * res.stderr
        return ok, f"lle={res.lle!r} stderr={res.stderr!r}"
    if name == "lle_nonpositive_sigma":
        res = ctx.lle()
        nsig = _parse_float(raw, name)
        ok = res.lle <= nsig * res.stderr
        return ok, f"lle={res.lle!r} stderr={res.stderr!r}"
    raise ConfigError(f"unhandled evolve assertion {name!r}")


def _dichotomy_rule(family: str, sweep_param: str, params: dict) -> tuple:
    """(boundary, real_side): which side of the sweep has a real spectrum."""
    fam = family.replace("-", "_")
    key = spectra._FIELD_ALIASES.get(sweep_param, sweep_param)
    if fam == "two_mode" and key == "lam":
        return _parse_float(params["epsilon"], "params.epsilon"), "above"
    if fam == "two_mode" and key == "epsilon":
        return _parse_float(params["lambda"], "params.lambda"), "below"
    if fam == "gain_loss" and key == "mu":
        return 0.5 * _parse_float(params["kappa"], "params.kappa"), "above"
    if fam == "gain_loss" and key == "kappa":
        return 2.0 * _parse_float(params["mu"], "params.mu"), "below"
    raise ConfigError(
        f"reality dichotomy undefined for family {family!r} sweeping {sweep_param!r}"
    )


def _match_negated(shifted: np.ndarray, tol: float) -> float:
    """Greedy worst-case distance between a multiset and its negation."""
    remaining = list(-shifted)
    worst = 0.0
    for e in shifted:
        dists = [float(abs(e - r)) for r in remaining]
        j = int(np.argmin(dists))
        worst = max(worst, dists[j])
        remaining.pop(j)
    return worst


# Below this cluster radius the eigensolver's own error at a defective point
# (~ulp^(1/k) for a size-k Jordan block) exceeds any meaningful negation
# tolerance, so symmetry checks skip such sweep points.
_DEGENERATE_GAP_SKIP = 1e-5


def _eval_spectrum_assert(name, raw, asserts, scenario, family, params_raw, sweep, values, results, eps):
    if name == "ep_count":
        want = _parse_int(raw, name)
        return len(eps) == want, f"found {len(eps)} EPs at {[e.value for e in eps]!r}"
    if name == "ep_count_min":
        want = _parse_int(raw, name)
        return len(eps) >= want, f"found {len(eps)} EPs at {[e.value for e in eps]!r}"
    if name == "ep_at":
        target = _parse_float(raw, name)
        atol = _parse_float(asserts.get("ep_at_atol", "1e-8"), "ep_at_atol")
        hits = [e for e in eps if abs(e.value - target) <= atol]
        best = min((abs(e.value - target) for e in eps), default=math.inf)
        return bool(hits), f"closest EP offset {best!r} (atol {atol!r})"
    if name == "reality_dichotomy":
        tol = _parse_float(asserts.get("dichotomy_tol", "1e-12"), "dichotomy_tol")
        boundary, real_side = _dichotomy_rule(family, sweep.param, params_raw)
        worst_im = 0.0
        worst_re = 0.0
        for v, res in zip(values, results):
            on_real_side = v >= boundary if real_side == "above" else v <= boundary
            e = res.energies
            if on_real_side:
                worst_im = max(worst_im, float(np.abs(e.imag).max()))
            else:
                worst_re = max(worst_re, float(abs(e[0].real - e[1].real)))
        ok = worst_im <= tol and worst_re <= tol
        return ok, f"max |Im| on real side {worst_im!r}; max Re split on broken side {worst_re!r}"
    if name == "mirror":
        tol = _parse_float(asserts.get("mirror_tol", "1e-9"), "mirror_tol")
        omega = _parse_float(params_raw["omega"], "params.omega")
        worst = 0.0
        skipped = 0
        for res in results:
            if spectra._min_pairwise_gap(res.energies) < _DEGENERATE_GAP_SKIP:
                skipped += 1
                continue
            worst = max(worst, _match_negated(res.energies - omega, tol))
        return bool(worst <= tol), (
            f"worst negation-closure defect {worst!r} "
            f"({skipped} degenerate sweep points skipped)"
        )
    if name == "im_nonpositive":
        tol = _parse_float(asserts.get("im_nonpositive_tol", "1e-12"), "im_nonpositive_tol")
        worst = max(float(res.energies.imag.max()) for res in results)
        return worst <= tol, f"max Im over sweep {worst!r}"
    if name == "im_at_param":
        at = _parse_float(raw, name)
        target = _parse_float(asserts["im_at_value"], "im_at_value")
        atol = _parse_float(asserts.get("im_at_atol", "1e-4"), "im_at_atol")
        merged = dict(params_raw)
        merged[sweep.param] = repr(at)
        p = _build_params("spectrum", family, merged)
        fn = spectra._family_result_fn(family)
        res = fn(_params_dict(merged))
        im_plus = float(res.energies[0].imag)
        return abs(im_plus - target) <= atol, f"Im E+ at {at!r} = {im_plus!r}"
    if name == "im_zero_at":
        at = _parse_float(raw, name)
        atol = _parse_float(asserts.get("im_zero_atol", "1e-12"), "im_zero_atol")
        merged = dict(params_raw)
        merged[sweep.param] = repr(at)
        res = spectra._family_result_fn(family)(_params_dict(merged))
        im_plus = float(res.energies[0].imag)
        return abs(im_plus) <= atol, f"Im E+ at {at!r} = {im_plus!r}"
    raise ConfigError(f"unhandled spectrum assertion {name!r}")


# --------------------------------------------------------------------------
# scenario execution
# --------------------------------------------------------------------------

def _merged_case_inputs(scenario: Scenario, case: CaseSpec):
    params_raw = scenario.section("params")
    params_raw.update(scenario.section("params", source=case.overrides))
    init_raw = scenario.section("init")
    init_raw.update(scenario.section("init", source=case.overrides))
    t_end = _parse_float(case.overrides.get("t_end", scenario.resolved["t_end"]), "t_end") \
        if scenario.kind != "spectrum" else None
    return params_raw, init_raw, t_end


def _fail_all(case: CaseSpec, exc: Exception, checks: list) -> None:
    message = f"{type(exc).__name__}: {exc}"
    names = list(case.asserts) or ["run"]
    for name in names:
        if name.endswith("_rtol") or name.endswith("_atol") or name.endswith("_tol") or name == "im_at_value":
            continue
        checks.append(CheckResult(case=case.label, name=name, passed=False, detail=message))
    if not any(c.case == case.label for c in checks):
        checks.append(CheckResult(case=case.label, name="run", passed=False, detail=message))


_CASE_ERRORS = (
    analysis.AnalysisError,
    spectra.EPDegenerateError,
    RuntimeError,
)


def run_scenario(scenario: Scenario, outdir: str, overrides: dict | None = None) -> RunManifest:
    """Execute a scenario, persist its outputs and evaluate its assertions.

    Integration or diagnostic failures in one case are recorded as failed
    checks in the manifest and do not abort the remaining cases.
    """
    if overrides:
        scenario = scenario.with_overrides(overrides)
    os.makedirs(outdir, exist_ok=True)

    manifest = RunManifest(
        scenario=scenario.name,
        version=_VERSION,
        kind=scenario.kind,
        config=dict(scenario.resolved),
        defaulted=scenario.defaulted,
        overrides=dict(overrides or {}),
    )
    report_lines: list = []

    if scenario.kind == "spectrum":
        _run_spectrum(scenario, outdir, manifest, report_lines)
    elif scenario.kind == "evolve":
        _run_evolve(scenario, outdir, manifest, report_lines)
    elif scenario.kind == "elimination":
        _run_elimination(scenario, outdir, manifest, report_lines)
    else:
        _run_divergence(scenario, outdir, manifest, report_lines)

    report_path = os.path.join(outdir, f"{scenario.name}_report.txt")
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("".join(report_lines))
    manifest.files[os.path.basename(report_path)] = _sha256(report_path)

    manifest_path = os.path.join(outdir, f"{scenario.name}_manifest.txt")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest.to_text())
    return manifest


def _record_file(manifest: RunManifest, path: str) -> None:
    manifest.files[os.path.basename(path)] = _sha256(path)


def _run_spectrum(scenario, outdir, manifest, report_lines):
    sweep = _sweep_of(scenario)
    for case in scenario.cases():
        params_raw, _, _ = _merged_case_inputs(scenario, case)
        report_lines.append(f"case = {case.label}\n")
        try:
            fixed = _params_dict(params_raw)
            fixed.pop(spectra._FIELD_ALIASES.get(sweep.param, sweep.param), None)
            values, results = spectra.sweep_spectra(scenario.family, sweep, fixed)
            eps = spectra.find_exceptional_points(scenario.family, sweep, fixed)
        except (_CASE_ERRORS, ValueError) as exc:
            _fail_all(case, exc, manifest.checks)
            report_lines.append(f"error = {type(exc).__name__}: {exc}\n")
            continue
        csv_path = os.path.join(outdir, f"{scenario.name}__{case.label}.csv")
        with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
            spectra.write_spectrum_csv(fh, sweep.param, values, results)
        _record_file(manifest, csv_path)
        report_lines.append(f"ep_count = {len(eps)}\n")
        for ep in eps:
            report_lines.append(f"ep.{sweep.param} = {ep.value!r} (gap {ep.gap!r})\n")
        for name, raw in case.asserts.items():
            if name in _SPECTRUM_MODIFIERS:
                continue
            ok, detail = _eval_spectrum_assert(
                name, raw, case.asserts, scenario, scenario.family,
                params_raw, sweep, values, results, eps,
            )
            manifest.checks.append(CheckResult(case=case.label, name=name, passed=ok, detail=detail))
            report_lines.append(f"assert.{name} = {'pass' if ok else 'fail'} ({detail})\n")


def _run_evolve(scenario, outdir, manifest, report_lines):
    for case in scenario.cases():
        params_raw, init_raw, t_end = _merged_case_inputs(scenario, case)
        report_lines.append(f"case = {case.label}\n")
        try:
            params = _build_params("evolve", scenario.model, params_raw)
            init = _init_dict(init_raw)
            traj = dynamics.integrate(
                scenario.model, params, init, t_end, scenario.integrator_config()
            )
        except (_CASE_ERRORS, ValueError) as exc:
            _fail_all(case, exc, manifest.checks)
            report_lines.append(f"error = {type(exc).__name__}: {exc}\n")
            continue
        csv_path = os.path.join(outdir, f"{scenario.name}__{case.label}.csv")
        traj.to_csv(csv_path)
        _record_file(manifest, csv_path)

        ctx = _EvolveContext(scenario, params, init, traj)
        failed_exc = None
        for name, raw in case.asserts.items():
            if name in _EVOLVE_MODIFIERS:
                continue
            try:
                ok, detail = _eval_evolve_assert(name, raw, case.asserts, ctx)
            except _CASE_ERRORS as exc:
                ok, detail = False, f"{type(exc).__name__}: {exc}"
                failed_exc = exc
            manifest.checks.append(CheckResult(case=case.label, name=name, passed=ok, detail=detail))
            report_lines.append(f"assert.{name} = {'pass' if ok else 'fail'} ({detail})\n")
        if failed_exc is None:
            try:
                report_lines.append(ctx.report().to_kv())
            except _CASE_ERRORS as exc:
                report_lines.append(f"report_error = {type(exc).__name__}: {exc}\n")
        if "pearson" in ctx._memo or any(
            name.startswith("pearson") for name in case.asserts
        ):
            try:
                starts, values = ctx.pearson()
                pcsv = os.path.join(outdir, f"{scenario.name}__{case.label}_pearson.csv")
                with open(pcsv, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write("t,C\n")
                    for t, c in zip(starts, values):
                        fh.write(f"{float(t)!r},{float(c)!r}\n")
                _record_file(manifest, pcsv)
            except analysis.AnalysisError:
                pass


def _run_elimination(scenario, outdir, manifest, report_lines):
    # global check: the derived common dissipation from the base parameters
    base_params = _build_params("elimination", "exact", scenario.section("params"))
    eff_base = dynamics.derive_effective_params(base_params, warn=False)
    for name, raw in scenario.global_asserts().items():
        if name in _ELIM_MODIFIERS:
            continue
        if name == "gamma_eff":
            target = _parse_float(raw, name)
            atol = _parse_float(
                scenario.global_asserts().get("gamma_eff_atol", "5e-8"), "gamma_eff_atol"
            )
            ok = abs(eff_base.gamma - target) <= atol
            detail = f"gamma={eff_base.gamma!r} target={target!r} atol={atol!r}"
            manifest.checks.append(CheckResult(case="base", name=name, passed=ok, detail=detail))
            report_lines.append(f"assert.{name} = {'pass' if ok else 'fail'} ({detail})\n")

    for case in scenario.cases():
        params_raw, init_raw, t_end = _merged_case_inputs(scenario, case)
        report_lines.append(f"case = {case.label}\n")
        try:
            params = _build_params("elimination", "exact", params_raw)
            init = _init_dict(init_raw)
            cfg = scenario.integrator_config()
            exact_traj = dynamics.integrate("exact", params, init, t_end, cfg)
            eff_params = dynamics.derive_effective_params(params, warn=False)
            eff_init = {k: init[k] for k in ("alpha1", "alpha2")}
            eff_traj = dynamics.integrate("effective", eff_params, eff_init, t_end, cfg)
            err = analysis.elimination_error(exact_traj, eff_traj)
        except (_CASE_ERRORS, ValueError) as exc:
            _fail_all(case, exc, manifest.checks)
            report_lines.append(f"error = {type(exc).__name__}: {exc}\n")
            continue

        exact_csv = os.path.join(outdir, f"{scenario.name}__{case.label}_exact.csv")
        eff_csv = os.path.join(outdir, f"{scenario.name}__{case.label}_effective.csv")
        exact_traj.to_csv(exact_csv)
        eff_traj.to_csv(eff_csv)
        err_csv = os.path.join(outdir, f"{scenario.name}__{case.label}_error.csv")
        with open(err_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,err_a1,err_a2\n")
            for t, e1, e2 in zip(err.times, err.errors["alpha1"], err.errors["alpha2"]):
                fh.write(f"{float(t)!r},{float(e1)!r},{float(e2)!r}\n")
        for path in (exact_csv, eff_csv, err_csv):
            _record_file(manifest, path)

        report_lines.append(f"max_error_alpha1 = {err.maxima['alpha1']!r}\n")
        report_lines.append(f"max_error_alpha2 = {err.maxima['alpha2']!r}\n")
        for name, raw in case.asserts.items():
            if name in _ELIM_MODIFIERS:
                continue
            if name == "elimination_max":
                bound = _parse_float(raw, name)
                worst = err.max_error()
                ok = worst < bound
                detail = f"max |alpha_j - alpha'_j| = {worst!r} bound {bound!r}"
                manifest.checks.append(
                    CheckResult(case=case.label, name=name, passed=ok, detail=detail)
                )
                report_lines.append(f"assert.{name} = {'pass' if ok else 'fail'} ({detail})\n")


def _run_divergence(scenario, outdir, manifest, report_lines):
    case = CaseSpec(label="pair", overrides={}, asserts=scenario.section("assert"))
    params_raw, init_raw, t_end = _merged_case_inputs(scenario, CaseSpec("base", {}, {}))
    field_name = scenario.resolved.get("divergence.field", "alpha1")
    shift_init_raw = dict(init_raw)
    shift_init_raw.update(scenario.section("init", source=scenario.section("divergence")))
    try:
        params = _build_params("divergence", scenario.model, params_raw)
        cfg = scenario.integrator_config()
        ref = dynamics.integrate(scenario.model, params, _init_dict(init_raw), t_end, cfg)
        shifted = dynamics.integrate(
            scenario.model, params, _init_dict(shift_init_raw), t_end, cfg
        )
    except (_CASE_ERRORS, ValueError) as exc:
        _fail_all(case, exc, manifest.checks)
        report_lines.append(f"error = {type(exc).__name__}: {exc}\n")
        return
    ref_csv = os.path.join(outdir, f"{scenario.name}__ref.csv")
    shift_csv = os.path.join(outdir, f"{scenario.name}__shifted.csv")
    ref.to_csv(ref_csv)
    shifted.to_csv(shift_csv)
    _record_file(manifest, ref_csv)
    _record_file(manifest, shift_csv)

    fa = ref.fields[field_name]
    fb = shifted.fields[field_name]
    dmax = float(np.abs(fa - fb).max())
    scale = float(np.abs(fa).max())
    report_lines.append(f"max_divergence = {dmax!r}\n")
    report_lines.append(f"attractor_scale = {scale!r}\n")
    for name, raw in case.asserts.items():
        if name == "divergence_frac":
            frac = _parse_float(raw, name)
            ok = dmax > frac * scale
            detail = f"divergence {dmax!r} vs {frac!r} * scale {scale!r}"
            manifest.checks.append(CheckResult(case=case.label, name=name, passed=ok, detail=detail))
            report_lines.append(f"assert.{name} = {'pass' if ok else 'fail'} ({detail})\n")

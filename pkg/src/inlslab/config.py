"""Run configuration: JSON in, validated RunConfig out, echo back out.

The echo written next to run outputs is itself a loadable config, so a
run can always be reproduced from its own output directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .evolve import EvolveConfig
from .params import PhysParams, WindowViolation, derive_exponents

__all__ = ["ParseError", "ValidationError", "RunConfig", "load_config",
           "parse_config", "config_echo"]


class ParseError(ValueError):
    """Config text is not well-formed JSON (including duplicate keys)."""


class ValidationError(ValueError):
    """Config is well-formed but violates the schema or a parameter bound."""


_SECTIONS = {
    "params": {"N", "b", "sigma"},
    "grid": {"rmax", "n"},
    "profile": {"kind", "amplitude", "width", "center", "path"},
    "evolve": {"dt0", "t_end", "grad_blowup_threshold", "dt_min", "adapt_c",
               "boundary_mass_limit", "nonlinear"},
    "diagnostics": {"R_virial", "rho_scales", "snapshot_stride"},
}
_TOP = set(_SECTIONS) | {"seed"}


@dataclass
class RunConfig:
    p: PhysParams
    rmax: float = 16.0
    n: int = 1024
    profile: dict = field(default_factory=lambda: {"kind": "gaussian",
                                                   "amplitude": 0.5, "width": 1.0})
    evolve: EvolveConfig = field(default_factory=EvolveConfig)
    R_virial: float | None = None
    rho_scales: tuple = (1.0, 2.0, 4.0)
    seed: int = 0

    def resolved_r_virial(self) -> float:
        return self.rmax / 8.0 if self.R_virial is None else self.R_virial


def _reject_duplicates(pairs):
    out = {}
    for k, v in pairs:
        if k in out:
            raise ParseError(f"duplicate key {k!r}")
        out[k] = v
    return out


def _require_number(section: str, key: str, val, integer=False):
    label = f"{section}.{key}" if section else key
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"{label} must be a number, got {val!r}")
    if integer and int(val) != val:
        raise ValidationError(f"{label} must be an integer, got {val!r}")
    return int(val) if integer else float(val)


def parse_config(raw: dict) -> RunConfig:
    if not isinstance(raw, dict):
        raise ValidationError(f"config root must be an object, got {type(raw).__name__}")
    for key in raw:
        if key not in _TOP:
            raise ValidationError(f"unknown config field {key!r}")
    for sec, allowed in _SECTIONS.items():
        body = raw.get(sec, {})
        if not isinstance(body, dict):
            raise ValidationError(f"section {sec!r} must be an object")
        for key in body:
            if key not in allowed:
                raise ValidationError(f"unknown config field {sec}.{key}")

    pr = raw.get("params")
    if not pr or not {"N", "b", "sigma"} <= set(pr):
        raise ValidationError("params section with N, b, sigma is required")
    try:
        p = derive_exponents(_require_number("params", "N", pr["N"], integer=True),
                             _require_number("params", "b", pr["b"]),
                             _require_number("params", "sigma", pr["sigma"]))
    except WindowViolation as e:
        raise ValidationError(str(e)) from e

    gr = raw.get("grid", {})
    rmax = _require_number("grid", "rmax", gr.get("rmax", 16.0))
    n = _require_number("grid", "n", gr.get("n", 1024), integer=True)

    prof = {"kind": "gaussian", "amplitude": 0.5, "width": 1.0}
    user_prof = raw.get("profile", {})
    if user_prof:
        kind = user_prof.get("kind", "gaussian")
        if kind not in ("gaussian", "ring", "file"):
            raise ValidationError(f"profile.kind must be gaussian, ring, or file, got {kind!r}")
        prof = dict(user_prof)
        prof["kind"] = kind
        if kind == "file" and "path" not in prof:
            raise ValidationError("profile.kind 'file' requires profile.path")

    ev = raw.get("evolve", {})
    ekw = {}
    for key in ("dt0", "t_end", "grad_blowup_threshold", "dt_min", "adapt_c",
                "boundary_mass_limit"):
        if key in ev:
            ekw[key] = _require_number("evolve", key, ev[key])
    if "nonlinear" in ev:
        if not isinstance(ev["nonlinear"], bool):
            raise ValidationError(f"evolve.nonlinear must be a boolean, got {ev['nonlinear']!r}")
        ekw["nonlinear"] = ev["nonlinear"]

    dg = raw.get("diagnostics", {})
    if "snapshot_stride" in dg:
        ekw["snapshot_stride"] = _require_number("diagnostics", "snapshot_stride",
                                                 dg["snapshot_stride"], integer=True)
    try:
        evolve_cfg = EvolveConfig(**ekw)
    except ValueError as e:
        raise ValidationError(str(e)) from e

    R_virial = None
    if "R_virial" in dg:
        R_virial = _require_number("diagnostics", "R_virial", dg["R_virial"])
        if not 0.0 < 4.0 * R_virial <= rmax:
            raise ValidationError(
                f"diagnostics.R_virial must satisfy 0 < 4*R_virial <= rmax={rmax}, got {R_virial}")
    scales = dg.get("rho_scales", [1.0, 2.0, 4.0])
    if not isinstance(scales, list) or not scales:
        raise ValidationError("diagnostics.rho_scales must be a nonempty list")
    rho_scales = tuple(_require_number("diagnostics", "rho_scales", s) for s in scales)
    for s in rho_scales:
        if not 0.0 < s <= rmax / 2.0:
            raise ValidationError(
                f"diagnostics.rho_scales entries must lie in (0, rmax/2={rmax / 2.0}], got {s}")

    seed = 0
    if "seed" in raw:
        seed = _require_number("", "seed", raw["seed"], integer=True)

    return RunConfig(p=p, rmax=rmax, n=n, profile=prof, evolve=evolve_cfg,
                     R_virial=R_virial, rho_scales=rho_scales, seed=seed)


def load_config(path) -> RunConfig:
    with open(path) as f:
        text = f.read()
    try:
        raw = json.loads(text, object_pairs_hook=_reject_duplicates)
    except ParseError:
        raise
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e}") from e
    return parse_config(raw)


def config_echo(cfg: RunConfig) -> dict:
    """Fully explicit dict form; parse_config(config_echo(cfg)) reproduces cfg."""
    ev = cfg.evolve
    return {
        "params": {"N": cfg.p.N, "b": cfg.p.b, "sigma": cfg.p.sigma},
        "grid": {"rmax": cfg.rmax, "n": cfg.n},
        "profile": dict(cfg.profile),
        "evolve": {
            "dt0": ev.dt0, "t_end": ev.t_end,
            "grad_blowup_threshold": ev.grad_blowup_threshold,
            "dt_min": ev.dt_min, "adapt_c": ev.adapt_c,
            "boundary_mass_limit": ev.boundary_mass_limit,
            "nonlinear": ev.nonlinear,
        },
        "diagnostics": {
            "R_virial": cfg.resolved_r_virial(),
            "rho_scales": list(cfg.rho_scales),
            "snapshot_stride": ev.snapshot_stride,
        },
        "seed": cfg.seed,
    }

"""Mission parameters, unit handling and config-file ingestion.

All quantities are stored in SI units (radians, seconds, hertz). Config files
carry explicit unit suffixes and are converted on load::

    radius_of_detection = "40 µrad"
    track_width         = "62.8 µrad"
    scan_speed          = "70 mrad/s"
"""
from __future__ import annotations

import hashlib
import math
import re
import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

TWO_PI = 2.0 * math.pi


class ParamError(ValueError):
    """Invalid mission parameters or malformed configuration."""


class ValidityWarning(UserWarning):
    """Parameters outside the regime where the 2-track model is accurate."""


# unit -> (dimension, factor to SI)
_UNITS: dict[str, tuple[str, float]] = {
    "rad": ("angle", 1.0),
    "mrad": ("angle", 1e-3),
    "urad": ("angle", 1e-6),
    "nrad": ("angle", 1e-9),
    "deg": ("angle", math.pi / 180.0),
    "rad/s": ("speed", 1.0),
    "mrad/s": ("speed", 1e-3),
    "urad/s": ("speed", 1e-6),
    "deg/s": ("speed", math.pi / 180.0),
    "Hz": ("frequency", 1.0),
    "mHz": ("frequency", 1e-3),
    "kHz": ("frequency", 1e3),
    "rad^2/Hz": ("psd", 1.0),
    "urad^2/Hz": ("psd", 1e-12),
}

# config key -> (field name, dimension)
CONFIG_KEYS: dict[str, tuple[str, str]] = {
    "radius_of_detection": ("r_d", "angle"),
    "track_width": ("d_t", "angle"),
    "rms_jitter": ("sigma_n", "angle"),
    "rolloff_frequency": ("f_r", "frequency"),
    "uncertainty_sigma": ("sigma_uc", "angle"),
    "max_scan_radius": ("r_uc", "angle"),
    "scan_speed": ("gamma", "speed"),
    "psd_level": ("psd_level", "psd"),
}
_FIELD_KEYS = {fname: (key, dim) for key, (fname, dim) in CONFIG_KEYS.items()}

_QUANTITY_RE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(\S*)\s*$")


def _normalize_unit(unit: str) -> str:
    u = unit.replace("µ", "u").replace("μ", "u").replace("²", "^2").replace("**", "^")
    return u


def parse_quantity(text: str, dimension: str | None = None) -> float:
    """Parse ``"62.8 µrad"`` style strings into an SI float.

    >>> parse_quantity("40 mrad/s")
    0.04
    """
    m = _QUANTITY_RE.match(str(text))
    if m is None:
        raise ParamError(f"cannot parse quantity {text!r}; expected '<number> <unit>'")
    value, unit = float(m.group(1)), _normalize_unit(m.group(2))
    if unit not in _UNITS:
        raise ParamError(f"unknown unit {m.group(2)!r} in {text!r}")
    dim, factor = _UNITS[unit]
    if dimension is not None and dim != dimension:
        raise ParamError(f"{text!r} has dimension {dim}, expected {dimension}")
    return value * factor


def psd_level_for(sigma_n: float, f_r: float) -> float:
    """Plateau S(0) of the Lorentzian PSD whose integral equals sigma_n**2."""
    return 2.0 * sigma_n**2 / (math.pi * f_r)


@dataclass(frozen=True)
class MissionParams:
    """Acquisition scenario; defaults reproduce the reference mission table."""

    r_d: float = 40e-6
    d_t: float = 62.8e-6
    sigma_n: float = 15.85e-6
    f_r: float = 1.0
    sigma_uc: float = 290.7e-6
    r_uc: float = 1000e-6
    gamma: float = 70e-3
    psd_level: float | None = field(default=None)

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "psd_level" and v is None:
                continue
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ParamError(f"{f.name} must be a finite number, got {v!r}")
            # zero jitter is a legal degenerate case
            if f.name in ("sigma_n", "psd_level"):
                if v < 0:
                    raise ParamError(f"{f.name} must be >= 0, got {v!r}")
            elif v <= 0:
                raise ParamError(f"{f.name} must be > 0, got {v!r}")
        if self.r_uc <= self.sigma_uc:
            raise ParamError("r_uc > sigma_uc violated (scan region must cover the distribution core)")
        implied = psd_level_for(self.sigma_n, self.f_r)
        if self.psd_level is None:
            object.__setattr__(self, "psd_level", implied)
        elif abs(self.psd_level - implied) > 0.01 * max(implied, 1e-300):
            raise ParamError(
                f"psd_level {self.psd_level * 1e12:.4g} urad^2/Hz is inconsistent with "
                f"rms_jitter {self.sigma_n * 1e6:.4g} urad (implies {implied * 1e12:.4g} urad^2/Hz)"
            )
        if self.sigma_n >= min(self.r_d, self.d_t):
            warnings.warn(
                "sigma_n < min(r_d, d_t) violated; 2-track model accuracy degrades",
                ValidityWarning,
                stacklevel=3,
            )

    @property
    def overlap(self) -> float:
        return 2.0 * self.r_d - self.d_t

    @property
    def f_uc(self) -> float:
        return self.r_uc / self.sigma_uc

    def require_overlap(self, *, allow_touching: bool = False) -> None:
        """Raise unless d_t < 2 r_d, which the analytic 2-track model needs.

        ``allow_touching`` also admits d_t == 2 r_d, where footprints on
        adjacent tracks just touch.
        """
        limit = 2.0 * self.r_d
        if self.d_t > limit or (self.d_t == limit and not allow_touching):
            raise ParamError(
                f"d_t < 2·r_d violated (d_t={self.d_t * 1e6:.6g} urad, r_d={self.r_d * 1e6:.6g} urad)"
            )

    def with_(self, **changes) -> "MissionParams":
        """Copy with changes; psd_level is re-derived unless given explicitly."""
        if "psd_level" not in changes and ("sigma_n" in changes or "f_r" in changes):
            changes["psd_level"] = None
        return replace(self, **changes)

    def digest(self) -> str:
        """Short stable identifier of the parameter set."""
        text = ",".join(f"{k}={v!r}" for k, v in asdict(self).items())
        return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class DerivedScales:
    tau_0: float
    t_mean: float
    gamma_min: float
    beta: float
    eta: float


def derive_scales(p: MissionParams) -> DerivedScales:
    """Correlation time and speed scales implied by ``p``."""
    return DerivedScales(
        tau_0=1.0 / (TWO_PI * p.f_r),
        t_mean=math.sqrt(math.pi / 2.0) * TWO_PI * p.sigma_uc / p.gamma,
        gamma_min=p.f_r * math.sqrt(math.pi / 2.0) * TWO_PI**2 * p.sigma_uc,
        beta=TWO_PI**2 * p.f_r / p.gamma,
        eta=p.gamma / (p.sigma_uc * p.f_r),
    )


def _resolve_key(key: str) -> tuple[str, str]:
    if key in CONFIG_KEYS:
        return CONFIG_KEYS[key]
    if key in _FIELD_KEYS:
        return key, _FIELD_KEYS[key][1]
    raise ParamError(f"unknown parameter key {key!r}; valid keys: {', '.join(CONFIG_KEYS)}")


def params_from_mapping(
    values: Mapping[str, object],
    base: MissionParams | None = None,
    *,
    require_overlap: bool = True,
) -> MissionParams:
    """Build params from ``{key: "number unit"}``; keys may be config keys or field names."""
    changes: dict[str, float] = {}
    for key, raw in values.items():
        fname, dim = _resolve_key(key)
        if not isinstance(raw, str):
            raise ParamError(f"{key}: value must be a string '<number> <unit>', got {raw!r}")
        changes[fname] = parse_quantity(raw, dim)
    p = (base or MissionParams()).with_(**changes)
    if require_overlap:
        p.require_overlap()
    return p


def parse_overrides(items: list[str] | None) -> dict[str, str]:
    """``["gamma=10mrad/s", ...]`` -> mapping."""
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise ParamError(f"override {item!r} is not of the form key=value")
        out[key.strip()] = val.strip()
    return out


def load_params(
    path: str | Path | None,
    overrides: Mapping[str, str] | None = None,
    *,
    require_overlap: bool = True,
) -> MissionParams:
    """Read a TOML config file of flat ``key = "number unit"`` pairs.

    Missing keys fall back to the reference defaults; ``path=None`` means an
    empty config. Unknown keys are rejected so typos do not go unnoticed.
    """
    data: dict[str, object] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ParamError(f"{path}: parse error: {exc}") from exc
        for key in data:
            if key not in CONFIG_KEYS:
                raise ParamError(f"{path}: unknown key {key!r}")
    merged = dict(data)
    merged.update(overrides or {})
    return params_from_mapping(merged, require_overlap=require_overlap)


def dump_params(p: MissionParams) -> str:
    """Serialize to the config format; values in rad so the round trip is exact."""
    lines = []
    for key, (fname, dim) in CONFIG_KEYS.items():
        unit = {"angle": "rad", "speed": "rad/s", "frequency": "Hz", "psd": "rad^2/Hz"}[dim]
        lines.append(f'{key} = "{getattr(p, fname)!r} {unit}"')
    return "\n".join(lines) + "\n"


def describe(p: MissionParams) -> list[tuple[str, str]]:
    """Human-oriented (key, value) pairs in the customary units."""
    return [
        ("radius_of_detection", f"{p.r_d * 1e6:.6g} urad"),
        ("track_width", f"{p.d_t * 1e6:.6g} urad"),
        ("rms_jitter", f"{p.sigma_n * 1e6:.6g} urad"),
        ("rolloff_frequency", f"{p.f_r:.6g} Hz"),
        ("uncertainty_sigma", f"{p.sigma_uc * 1e6:.6g} urad"),
        ("max_scan_radius", f"{p.r_uc * 1e6:.6g} urad"),
        ("scan_speed", f"{p.gamma * 1e3:.6g} mrad/s"),
        ("psd_level", f"{p.psd_level * 1e12:.6g} urad^2/Hz"),
    ]

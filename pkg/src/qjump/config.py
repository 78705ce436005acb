"""Flat ``key = value`` run configuration.

One setting per line, ``#`` starts a comment. Every key is validated against
:data:`SCHEMA` before anything is computed; unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .models import ModelParams

__all__ = ["ConfigError", "SCHEMA", "RunConfig", "parse_config", "load_config", "parse_complex"]


class ConfigError(ValueError):
    """Invalid configuration text or value."""


def parse_complex(text: str) -> complex:
    """Parse ``1.7-5.15j`` style numbers (``i`` is accepted for ``j``)."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise ConfigError(f"not a complex number: {text!r}") from None


def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _complexes(text: str) -> tuple:
    return tuple(parse_complex(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


# key -> (parser, default, description)
SCHEMA: dict = {
    # model
    "model": (str, "jc", "jc or kerr"),
    "g": (float, 0.0, "atom-field coupling / kappa"),
    "epsilon": (float, 0.0, "drive amplitude / kappa (Kerr: / chi)"),
    "delta_omega": (float, 0.0, "detuning / kappa (Kerr: / chi)"),
    "gamma": (float, 0.0, "spontaneous emission rate / kappa"),
    "n_bar": (float, 0.0, "thermal photon number of the reservoir"),
    "eta": (float, 1.0, "detection efficiency"),
    "chi_ratio": (float, None, "kappa/chi, Kerr model only"),
    "epsilon_ramp_start": (float, None, "linear drive ramp: initial value"),
    "epsilon_ramp_stop": (float, None, "linear drive ramp: final value"),
    "epsilon_ramp_duration": (float, None, "linear drive ramp: duration"),
    # run controls
    "l_max": (int, 25, "Fock-space truncation"),
    "dt": (float, 0.001, "time step / macro-step"),
    "t_final": (float, 100.0, "simulated time per trajectory"),
    "seed": (int, 0, "master seed"),
    "n_traj": (int, 1, "number of trajectories / samples"),
    "workers": (int, 1, "worker processes"),
    "sample_every": (int, 1, "store <n> every this many steps"),
    "snapshot_times": (_floats, (), "comma-separated snapshot times"),
    "initial": (str, "vacuum", "vacuum | coherent | superposition | mixture"),
    "alpha0": (parse_complex, 0j, "amplitude of a coherent initial state"),
    "alpha1": (parse_complex, None, "bright/first amplitude of a superposition"),
    "alpha2": (parse_complex, None, "intermediate/second amplitude of a superposition"),
    "meter_amplitudes": (_complexes, (), "projective readout meter amplitudes"),
    "meter_weights": (_floats, (), "projective readout weights |c_j|^2"),
    "nu_steps": (int, 10_000, "uniform steps of the charge equation"),
    "tol": (float, 1e-9, "steady-state residual tolerance"),
    "steady_method": (str, "direct", "direct | integrate"),
    "grid_half_width": (float, 6.0, "phase-space grid half width"),
    "grid_n": (int, 121, "phase-space grid points per axis"),
    "write_grids": (_bool, False, "also write rho, Q and W grid files"),
    "mbe_t_final": (float, 0.0, "Maxwell-Bloch integration time (0: roots only)"),
    "record": (str, None, "record file consumed by analytics overlay"),
    "window_start": (float, None, "jump search window start"),
    "window_end": (float, None, "jump search window end"),
    # output
    "out_dir": (str, "qjump_out", "output directory"),
    "formats": (str, "jsonl,csv", "comma-separated output formats"),
}


@dataclass
class RunConfig:
    """Validated settings; ``values`` holds every schema key."""

    values: dict = field(default_factory=dict)
    source: str | None = None

    def __getitem__(self, key):
        return self.values[key]

    def __getattr__(self, key):
        try:
            return self.__dict__["values"][key]
        except KeyError:
            raise AttributeError(key) from None

    def params(self) -> ModelParams:
        v = self.values
        ramp_keys = ("epsilon_ramp_start", "epsilon_ramp_stop", "epsilon_ramp_duration")
        ramp_set = [v[k] is not None for k in ramp_keys]
        if any(ramp_set) and not all(ramp_set):
            raise ConfigError("a drive ramp needs epsilon_ramp_start, _stop and _duration")
        ramp = tuple(v[k] for k in ramp_keys) if all(ramp_set) else None
        try:
            if v["model"] == "kerr":
                if v["chi_ratio"] is None:
                    raise ConfigError("the Kerr model needs chi_ratio (kappa/chi)")
                return ModelParams.kerr(v["chi_ratio"], v["epsilon"], v["delta_omega"],
                                        n_bar=v["n_bar"], eta=v["eta"], epsilon_ramp=ramp)
            if v["chi_ratio"] is not None:
                raise ConfigError("chi_ratio only applies to model = kerr")
            return ModelParams(v["model"], g=v["g"], epsilon=v["epsilon"], delta_omega=v["delta_omega"],
                               gamma=v["gamma"], n_bar=v["n_bar"], eta=v["eta"], epsilon_ramp=ramp)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, pairs) -> "RunConfig":
        vals = dict(self.values)
        for pair in pairs:
            if "=" not in pair:
                raise ConfigError(f"override must look like key=value, got {pair!r}")
            k, raw = pair.split("=", 1)
            k = k.strip()
            vals[k] = _convert(k, raw)
        out = RunConfig(vals, self.source)
        out.validate()
        return out

    def validate(self) -> None:
        v = self.values
        for k in ("l_max", "n_traj", "workers", "sample_every", "nu_steps", "grid_n"):
            if v[k] < 1:
                raise ConfigError(f"{k} must be positive")
        for k in ("dt", "tol", "grid_half_width"):
            if not v[k] > 0:
                raise ConfigError(f"{k} must be positive")
        if v["t_final"] < 0 or v["mbe_t_final"] < 0:
            raise ConfigError("times must be non-negative")
        if v["initial"] not in ("vacuum", "coherent", "superposition", "mixture"):
            raise ConfigError(f"unknown initial state {v['initial']!r}")
        if v["steady_method"] not in ("direct", "integrate"):
            raise ConfigError(f"unknown steady_method {v['steady_method']!r}")
        if len(v["meter_amplitudes"]) != len(v["meter_weights"]):
            raise ConfigError("meter_amplitudes and meter_weights differ in length")
        self.params()


def _convert(key: str, raw: str):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    parser = SCHEMA[key][0]
    raw = raw.strip()
    try:
        return parser(raw)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None


def parse_config(text: str, source: str | None = None) -> RunConfig:
    """Parse configuration text; raises :class:`ConfigError` on any problem."""
    vals = {k: spec[1] for k, spec in SCHEMA.items()}
    seen = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        k, raw = line.split("=", 1)
        k = k.strip()
        if k in seen:
            raise ConfigError(f"line {lineno}: duplicate key {k!r}")
        seen.add(k)
        try:
            vals[k] = _convert(k, raw)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    cfg = RunConfig(vals, source)
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), str(path))

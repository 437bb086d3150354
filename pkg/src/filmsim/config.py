"""Experiment configuration: a flat dotted-key text format.

One assignment per line, e.g. ``scenario.users[0].theta_deg = 30``. Angles
are written in degrees, lengths in the unit named by the key suffix, powers
in dBm; everything is converted to SI once at parse time.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import KINDS, ArchitectureSpec
from .metrics import dbm_to_watt
from .optimizer import OptimizerConfig
from .propagation import UserSet
from .scenario import Scenario

SPEED_OF_LIGHT = 299792458.0

SWEEP_PARAMETERS = ("N", "K", "y_max", "rho", "P_t")


class ConfigError(ValueError):
    """Malformed configuration; carries file/line/field diagnostics."""

    def __init__(self, message, line=None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class SweepSpec:
    parameter: str  # one of SWEEP_PARAMETERS
    values: tuple[float, ...]


@dataclass(frozen=True)
class BerSpec:
    n_symbols: int
    p_t_dbm: tuple[float, ...]
    receiver: str = "alpha"  # 'alpha' or 'realized'


@dataclass
class ExperimentConfig:
    scenario: Scenario
    architectures: list[ArchitectureSpec]
    optimizer: OptimizerConfig
    sweep: SweepSpec | None
    ber: BerSpec | None
    output_dir: str
    output_format: str  # 'csv' or 'json'
    shape_mode: str = "auto"  # auto = morph per architecture kind; on/off forces
    resolved: dict = field(default_factory=dict)  # canonical key -> value for headers

    def shape_updates_for(self, spec: ArchitectureSpec) -> tuple[bool, ...]:
        if self.shape_mode == "on":
            return (True,) * spec.layers
        if self.shape_mode == "off":
            return (False,) * spec.layers
        return spec.morphable()


def _parse_scalar(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "on", "yes"):
        return True
    if low in ("false", "off", "no"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_items(text: str) -> dict:
    """Raw key -> (value, line_no) mapping from config text."""
    items: dict = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line_no)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key or not value:
            raise ConfigError(f"empty key or value in {raw.strip()!r}", line_no)
        if key in items:
            raise ConfigError(f"duplicate key {key!r}", line_no)
        if "," in value:
            items[key] = ([_parse_scalar(v) for v in value.split(",")], line_no)
        else:
            items[key] = (_parse_scalar(value), line_no)
    return items


class _Reader:
    """Typed, tracked access to the raw item map."""

    def __init__(self, items: dict):
        self.items = items
        self.used: set[str] = set()

    def has(self, key: str) -> bool:
        return key in self.items

    def get(self, key: str, default=None, required=False):
        if key not in self.items:
            if required:
                raise ConfigError(f"missing required key {key!r}")
            return default
        self.used.add(key)
        return self.items[key][0]

    def number(self, key: str, default=None, required=False) -> float | None:
        value = self.get(key, default, required)
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key} must be a number", self.items[key][1])
        return float(value)

    def integer(self, key: str, default=None, required=False) -> int | None:
        value = self.number(key, default, required)
        if value is None:
            return None
        if value != int(value):
            line = self.items[key][1] if key in self.items else None
            raise ConfigError(f"{key} must be an integer", line)
        return int(value)

    def text(self, key: str, default=None, required=False) -> str | None:
        value = self.get(key, default, required)
        if value is None:
            return None
        if not isinstance(value, str):
            raise ConfigError(f"{key} must be text", self.items[key][1])
        return value

    def number_list(self, key: str, required=False) -> list[float] | None:
        value = self.get(key, required=required)
        if value is None:
            return None
        if not isinstance(value, list):
            value = [value]
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{key} must be a list of numbers", self.items[key][1])
            out.append(float(v))
        return out

    def check_all_used(self):
        unused = set(self.items) - self.used
        if unused:
            key = sorted(unused)[0]
            raise ConfigError(f"unknown key {key!r}", self.items[key][1])


def _read_users(r: _Reader) -> UserSet:
    indices = []
    for key in r.items:
        if key.startswith("scenario.users["):
            try:
                idx = int(key[len("scenario.users["):].split("]", 1)[0])
            except ValueError:
                raise ConfigError(f"bad user index in {key!r}", r.items[key][1]) from None
            indices.append(idx)
    if not indices:
        raise ConfigError("no scenario.users[k].* entries found")
    k = max(indices) + 1
    if sorted(set(indices)) != list(range(k)):
        raise ConfigError("user indices must be contiguous from 0")
    theta, phi, dist = [], [], []
    for i in range(k):
        theta.append(math.radians(r.number(f"scenario.users[{i}].theta_deg", required=True)))
        phi.append(math.radians(r.number(f"scenario.users[{i}].phi_deg", required=True)))
        dist.append(r.number(f"scenario.users[{i}].distance_m", required=True))
    b = r.number("scenario.path_loss_exponent", required=True)
    try:
        return UserSet(theta=np.array(theta), phi=np.array(phi),
                       distance=np.array(dist), exponent=b)
    except ValueError as exc:
        raise ConfigError(f"invalid user set: {exc}") from exc


def load_config(text: str) -> ExperimentConfig:
    """Parse, validate, and convert a config file's text into SI objects."""
    r = _Reader(parse_items(text))

    freq = r.number("scenario.frequency_hz")
    wl_mm = r.number("scenario.wavelength_mm")
    if wl_mm is not None:
        wavelength = wl_mm * 1e-3
        if freq is not None and abs(SPEED_OF_LIGHT / freq - wavelength) > 0.01 * wavelength:
            raise ConfigError(
                "scenario.frequency_hz and scenario.wavelength_mm disagree by more than 1%"
            )
    elif freq is not None:
        wavelength = SPEED_OF_LIGHT / freq
    else:
        raise ConfigError("need scenario.frequency_hz or scenario.wavelength_mm")

    users = _read_users(r)
    scenario = Scenario(
        wavelength=wavelength,
        users=users,
        p_total=dbm_to_watt(r.number("scenario.p_t_dbm", required=True)),
        noise_power=dbm_to_watt(r.number("scenario.noise_dbm", required=True)),
    )

    kinds = r.get("architecture.kind", required=True)
    if not isinstance(kinds, list):
        kinds = [kinds]
    kinds = [str(k).strip().upper() for k in kinds]
    for kind in kinds:
        if kind not in KINDS:
            raise ConfigError(f"architecture.kind must be among {KINDS}, got {kind!r}")
    spacing_mm = r.number("architecture.atom_spacing_mm")
    common = dict(
        n_x=r.integer("architecture.n_x", 10),
        n_z=r.integer("architecture.n_z", 10),
        atom_spacing=None if spacing_mm is None else spacing_mm * 1e-3,
        y_max=r.number("architecture.y_max_mm", 2.4) * 1e-3,
        stack_span=r.number("architecture.stack_span_mm", 5.0) * 1e-3,
        sim_layer_spacing=r.number("architecture.sim_layer_spacing_mm", 0.83) * 1e-3,
        bs_y=r.number("architecture.bs_y_mm", -10.0) * 1e-3,
        rho=r.number("architecture.rho", 0.0),
    )
    layer_count = r.integer("architecture.layer_count")
    try:
        architectures = [
            ArchitectureSpec(
                kind=kind,
                layer_count=layer_count if kind == "SIM" else None,
                **common,
            )
            for kind in kinds
        ]
    except ValueError as exc:
        raise ConfigError(f"invalid architecture: {exc}") from exc

    shape_mode = r.text("optimizer.shape_updates", "auto").lower()
    if shape_mode not in ("auto", "on", "off"):
        raise ConfigError("optimizer.shape_updates must be auto, on, or off")
    try:
        optimizer = OptimizerConfig(
            max_iterations=r.integer("optimizer.max_iterations", 20),
            epsilon=r.number("optimizer.epsilon", 0.0),
            eta=r.number("optimizer.eta", 1e-4),
            seed=r.integer("optimizer.seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid optimizer block: {exc}") from exc

    sweep = None
    if r.has("sweep.parameter"):
        param = r.text("sweep.parameter")
        if param not in SWEEP_PARAMETERS:
            raise ConfigError(f"sweep.parameter must be one of {SWEEP_PARAMETERS}")
        values = tuple(r.number_list("sweep.values", required=True))
        if not values:
            raise ConfigError("sweep.values must be non-empty")
        sweep = SweepSpec(parameter=param, values=values)

    ber = None
    if r.has("ber.p_t_dbm") or r.has("ber.n_symbols"):
        receiver = r.text("ber.receiver", "alpha")
        if receiver not in ("alpha", "realized"):
            raise ConfigError("ber.receiver must be alpha or realized")
        ber = BerSpec(
            n_symbols=r.integer("ber.n_symbols", 1_000_000),
            p_t_dbm=tuple(r.number_list("ber.p_t_dbm", required=True)),
            receiver=receiver,
        )

    output_dir = r.text("output.directory", "out")
    output_format = r.text("output.format", "csv")
    if output_format not in ("csv", "json"):
        raise ConfigError("output.format must be csv or json")

    r.check_all_used()

    resolved = {key: value for key, (value, _) in sorted(r.items.items())}
    resolved["optimizer.shape_updates"] = shape_mode
    return ExperimentConfig(
        scenario=scenario,
        architectures=architectures,
        optimizer=optimizer,
        sweep=sweep,
        ber=ber,
        output_dir=output_dir,
        output_format=output_format,
        shape_mode=shape_mode,
        resolved=resolved,
    )


def load_config_file(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    return load_config(text)

"""
Experiment configuration files (YAML).

Example::

    schema_version: 1
    target: {gate: CX, qubits: [0, 1]}
    n: 2
    n_theta: 51
    shots: 5000          # or `exact: true`
    axes: [Y]
    noise: {preset: mild_readout, prep_phase: 0.05}
    seed: 1234
    protocol: both       # ppc | qpt | both
    output_dir: out/cx

Optional sections: ``calibration`` (``axes``, ``qubits``, ``enabled``,
``cache_dir``), ``qpt`` (``psd_projection``, ``mitigate_readout``),
``mitigate``, ``weighted``, ``normalization``, ``d_inf_mode``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
import yaml

from .errors import ConfigError, InvalidArgumentError
from .qcore import NORMALIZATIONS
from .simulator import AXES, Gate, NoiseProfile, local_transition, readout_matrix, validate_transition

SCHEMA_VERSION = 1

GATE_ARITY = {"I": 1, "X": 1, "Y": 1, "Z": 1, "H": 1, "S": 1, "CX": 2}

# Single-qubit (t00, t11) and theta0 of the shipped noise presets.
NOISE_PRESETS = {
    "ideal": ((1.0, 1.0), 0.0),
    "mild_readout": ((0.95, 0.95), 0.0),
    "paper_like": ((0.9, 0.8), 0.05),
}


@dataclass
class ExperimentConfig:
    target: dict
    n: int
    seed: int
    n_theta: int = 51
    shots: int | None = 5000
    exact: bool = False
    axes: list = field(default_factory=lambda: ["Y"])
    noise: dict = field(default_factory=lambda: {"preset": "ideal"})
    protocol: str = "both"
    output_dir: str = "out"
    normalization: str = "trace_one"
    d_inf_mode: str = "entrywise"
    mitigate: bool = True
    weighted: bool = False
    calibration: dict = field(default_factory=dict)
    qpt: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION

    def as_dict(self):
        return asdict(self)

    @property
    def calibration_axes(self):
        return list(self.calibration.get("axes", ["Y", "X"]))

    @property
    def calibration_qubits(self):
        return list(self.calibration.get("qubits", [0]))

    def target_gates(self):
        return (Gate(self.target["gate"], tuple(self.target["qubits"])),)

    def noise_profile(self):
        return build_noise(self.noise, self.n, self.seed)


def build_noise(spec, n, seed=0):
    """Turn a ``noise`` mapping into a :class:`NoiseProfile`."""
    spec = dict(spec or {})
    preset = spec.get("preset", "ideal")
    if preset not in NOISE_PRESETS:
        raise ConfigError(f"unknown noise preset {preset!r}; choose from {sorted(NOISE_PRESETS)}")
    (t00, t11), theta0 = NOISE_PRESETS[preset]
    if "readout" in spec:
        t00, t11 = spec["readout"]
    T = local_transition([readout_matrix(t00, t11)] * n)
    if "transition" in spec:
        T = np.array(spec["transition"], dtype=float)
        if T.shape != (2**n, 2**n):
            raise ConfigError(f"noise.transition must be {2**n}x{2**n}")
    phase = spec.get("prep_phase", theta0)
    if isinstance(phase, dict):
        phases = {}
        for key, value in phase.items():
            q, _, axis = str(key).partition(":")
            if not q.isdigit() or int(q) >= n or axis not in AXES:
                raise ConfigError(f"prep_phase key {key!r} must look like '<qubit>:<Y|X>' with qubit < {n}")
            phases[(int(q), axis)] = float(value)
    else:
        phases = {(q, a): float(phase) for q in range(n) for a in AXES}
    try:
        return NoiseProfile(validate_transition(T), phases, seed)
    except InvalidArgumentError as exc:
        raise ConfigError(f"invalid noise profile: {exc}") from exc


def _require(cond, message):
    if not cond:
        raise ConfigError(message)


def _int(value, name, minimum):
    _require(isinstance(value, int) and not isinstance(value, bool) and value >= minimum,
             f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def validate(cfg):
    _require(cfg.schema_version == SCHEMA_VERSION, f"unsupported schema_version {cfg.schema_version!r}")
    _int(cfg.n, "n", 1)
    _require(cfg.n <= 4, "n > 4 is outside the supported envelope")
    _int(cfg.seed, "seed", 0)
    _int(cfg.n_theta, "n_theta", 3)
    if cfg.exact:
        cfg.shots = None
    else:
        _int(cfg.shots, "shots", 1)
    _require(isinstance(cfg.target, dict) and "gate" in cfg.target, "target must be a mapping with a 'gate'")
    gate = cfg.target["gate"]
    _require(gate in GATE_ARITY, f"unknown target gate {gate!r}; choose from {sorted(GATE_ARITY)}")
    qubits = list(cfg.target.get("qubits", range(GATE_ARITY[gate])))
    _require(len(qubits) == GATE_ARITY[gate], f"gate {gate} acts on {GATE_ARITY[gate]} qubit(s), got {qubits}")
    _require(all(isinstance(q, int) and 0 <= q < cfg.n for q in qubits),
             f"target qubits {qubits} must be integers in [0, {cfg.n})")
    _require(len(set(qubits)) == len(qubits), f"target qubits {qubits} repeat")
    cfg.target = {"gate": gate, "qubits": qubits}
    _require(cfg.axes and all(a in AXES for a in cfg.axes), f"axes must be drawn from {AXES}")
    _require("Y" in cfg.axes, "characterization needs the Y axis")
    _require(cfg.protocol in ("ppc", "qpt", "both"), f"protocol must be ppc, qpt or both, got {cfg.protocol!r}")
    _require(cfg.normalization in NORMALIZATIONS, f"normalization must be one of {NORMALIZATIONS}")
    _require(cfg.d_inf_mode in ("entrywise", "operator"), "d_inf_mode must be entrywise or operator")
    _require(all(a in AXES for a in cfg.calibration_axes), "calibration.axes must be drawn from X, Y")
    _require(all(isinstance(q, int) and 0 <= q < cfg.n for q in cfg.calibration_qubits),
             f"calibration.qubits must be integers in [0, {cfg.n})")
    cfg.noise_profile()
    return cfg


def from_mapping(data, overrides=None):
    data = dict(data or {})
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    _require("seed" in data, "a seed is required (config key 'seed' or --seed)")
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - known
    _require(not unknown, f"unknown config keys: {sorted(unknown)}")
    for key in ("target", "n"):
        _require(key in data, f"missing required key {key!r}")
    return validate(ExperimentConfig(**data))


def load(path, overrides=None):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    _require(isinstance(data, dict), f"config {path} must be a mapping")
    return from_mapping(data, overrides)


@dataclass
class SweepConfig:
    n: int
    seed: int
    n_theta_grid: list
    shots_grid: list
    kind: str = "calibration"
    repeats: int = 1
    exact: bool = False
    axes: list = field(default_factory=lambda: ["Y"])
    noise: dict = field(default_factory=lambda: {"preset": "paper_like"})
    target: dict = field(default_factory=lambda: {"gate": "H", "qubits": [0]})
    output_dir: str = "out"
    output: str = "sweep.csv"
    schema_version: int = SCHEMA_VERSION


def load_sweep(path, overrides=None):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot load sweep config {path}: {exc}") from exc
    _require(isinstance(data, dict), "sweep config must be a mapping")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    unknown = set(data) - set(SweepConfig.__dataclass_fields__)
    _require(not unknown, f"unknown sweep keys: {sorted(unknown)}")
    for key in ("n", "seed", "n_theta_grid", "shots_grid"):
        _require(key in data, f"missing required key {key!r}")
    cfg = SweepConfig(**data)
    _require(cfg.schema_version == SCHEMA_VERSION, f"unsupported schema_version {cfg.schema_version!r}")
    _int(cfg.n, "n", 1)
    _int(cfg.repeats, "repeats", 1)
    _require(cfg.kind in ("calibration", "characterization"), "kind must be calibration or characterization")
    _require(cfg.n_theta_grid and all(isinstance(v, int) and v >= 3 for v in cfg.n_theta_grid),
             "n_theta_grid must be a nonempty list of integers >= 3")
    _require(cfg.shots_grid and all(isinstance(v, int) and v >= 1 for v in cfg.shots_grid),
             "shots_grid must be a nonempty list of positive integers")
    _require(all(a in AXES for a in cfg.axes), "axes must be drawn from X, Y")
    build_noise(cfg.noise, cfg.n, cfg.seed)
    if cfg.kind == "characterization":
        probe = ExperimentConfig(target=cfg.target, n=cfg.n, seed=cfg.seed, axes=cfg.axes, noise=cfg.noise)
        cfg.target = validate(probe).target
    return cfg

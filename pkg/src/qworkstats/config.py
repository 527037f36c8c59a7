"""Run configuration: a versioned, JSON-serializable description of a job.

A `RunConfig` is the single object the command-line front end passes
around: lattice geometry, ensemble, drive protocol, sweep grids, output
options, and numerical knobs. It round-trips losslessly through
``to_dict``/``from_dict`` so configs can live in files and presets.
"""

import json
from dataclasses import asdict, dataclass, field, fields

from .errors import InputError
from .lattice import LatticeSpec
from .thermal_ks import EnsembleSpec

SCHEMA_VERSION = 1

VALID_FORMATS = ("csv", "json")


@dataclass(frozen=True)
class LatticeConfig:
    L: int = 2
    J: float = 1.0
    U: float = 1.0
    boundary: str = "open"


@dataclass(frozen=True)
class EnsembleConfig:
    kind: str = "canonical"
    beta: float = 1.0
    # None means half filling for the configured lattice size.
    target_n: float = None


@dataclass(frozen=True)
class DriveConfig:
    v0: float = 0.5
    dv: float = 0.01
    tau: float = 1.0
    shape: str = "linear-ramp"


@dataclass(frozen=True)
class SweepConfig:
    """Grid axes; each is a list of floats (empty list = axis unused)."""

    u_grid: tuple = ()
    v0_grid: tuple = ()
    tau_grid: tuple = ()


@dataclass(frozen=True)
class NumericsConfig:
    scf_tol: float = 1e-10
    scf_max_iter: int = 2000
    mixing: float = 0.3
    eta: float = 1e-3
    df_floor: float = 1e-14
    omega_floor: float = 1e-10
    omega_merge: float = 1e-9
    dense_cap: int = 20_000


@dataclass(frozen=True)
class RunConfig:
    schema_version: int = SCHEMA_VERSION
    lattice: LatticeConfig = field(default_factory=LatticeConfig)
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    drive: DriveConfig = field(default_factory=DriveConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    numerics: NumericsConfig = field(default_factory=NumericsConfig)
    orders: tuple = (1, 2, 3, 4)
    seed: int = 1234

    # ------------------------------------------------------------------
    # Construction helpers

    def lattice_spec(self, U=None):
        lat = self.lattice
        return LatticeSpec(
            L=lat.L,
            J=lat.J,
            U=lat.U if U is None else U,
            boundary=lat.boundary,
        )

    def ensemble_spec(self):
        ens = self.ensemble
        L = self.lattice.L
        if ens.kind == "grand-canonical":
            target = float(L) if ens.target_n is None else float(ens.target_n)
            return EnsembleSpec(kind="grand-canonical", beta=ens.beta, target_n=target)
        if ens.target_n is not None:
            n = int(round(ens.target_n))
        else:
            n = L
        return EnsembleSpec(
            kind="canonical", beta=ens.beta, nup=n // 2, ndown=n - n // 2
        )

    def scf_options(self):
        num = self.numerics
        return {
            "tol": num.scf_tol,
            "max_iter": num.scf_max_iter,
            "mixing": num.mixing,
        }

    # ------------------------------------------------------------------
    # Serialization

    def to_dict(self):
        return asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


_SECTION_TYPES = {
    "lattice": LatticeConfig,
    "ensemble": EnsembleConfig,
    "drive": DriveConfig,
    "sweep": SweepConfig,
    "numerics": NumericsConfig,
}


def _build_section(cls, data, where):
    if not isinstance(data, dict):
        raise InputError(f"config section '{where}' must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise InputError(
            f"unknown keys in config section '{where}': {sorted(unknown)}"
        )
    values = dict(data)
    for f in fields(cls):
        if f.name in values and isinstance(values[f.name], list):
            values[f.name] = tuple(values[f.name])
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise InputError(f"invalid config section '{where}': {exc}") from exc


def config_from_dict(data):
    if not isinstance(data, dict):
        raise InputError("config root must be a mapping")
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(
            f"unsupported config schema_version {version!r}; "
            f"this build reads version {SCHEMA_VERSION}"
        )
    known = {"schema_version", "orders", "seed"} | set(_SECTION_TYPES)
    unknown = set(data) - known
    if unknown:
        raise InputError(f"unknown top-level config keys: {sorted(unknown)}")
    kwargs = {"schema_version": SCHEMA_VERSION}
    for name, cls in _SECTION_TYPES.items():
        if name in data:
            kwargs[name] = _build_section(cls, data[name], name)
    if "orders" in data:
        orders = tuple(int(n) for n in data["orders"])
        if not orders or any(n < 1 for n in orders):
            raise InputError("orders must be a nonempty list of integers >= 1")
        kwargs["orders"] = orders
    if "seed" in data:
        kwargs["seed"] = int(data["seed"])
    return RunConfig(**kwargs)


def load_config(path):
    """Parse a JSON config file into a RunConfig. Raises InputError."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


# ---------------------------------------------------------------------------
# Presets: ready-made configs for the standard runs.

PRESETS = {
    # Converged half-filled SCF point on a 50-site chain.
    "scf-point": {
        "lattice": {"L": 50, "U": 3.0},
        "ensemble": {"kind": "grand-canonical", "beta": 1.0},
        "drive": {"v0": 1.5, "dv": 0.01},
    },
    # Sudden-quench dissipation map over the (U, v0) plane.
    "phase-diagram": {
        "lattice": {"L": 50},
        "ensemble": {"kind": "grand-canonical", "beta": 1.0},
        "drive": {"v0": 0.0, "dv": 0.01, "shape": "sudden"},
        "sweep": {
            "u_grid": [round(0.25 * i, 2) for i in range(25)],
            "v0_grid": [round(0.125 * i, 3) for i in range(25)],
        },
    },
    # Cumulants vs ramp duration and field strength at fixed U.
    "cumulant-map": {
        "lattice": {"L": 50, "U": 1.0},
        "ensemble": {"kind": "grand-canonical", "beta": 1.0},
        "drive": {"v0": 0.5, "dv": 0.01},
        "sweep": {
            "v0_grid": [round(0.25 * i, 2) for i in range(1, 13)],
            "tau_grid": [round(10 ** (-1 + 0.125 * i), 6) for i in range(25)],
        },
    },
    # Exact-diagonalization benchmark grids for the dimer.
    "benchmark-dimer-canonical": {
        "lattice": {"L": 2},
        "ensemble": {"kind": "canonical", "beta": 1.0},
        "drive": {"dv": 0.01},
        "sweep": {
            "u_grid": [0.5, 1.0, 2.0, 4.0],
            "v0_grid": [0.5, 1.0, 2.0],
            "tau_grid": [0.1, 1.0, 5.0, 20.0],
        },
    },
    "benchmark-dimer-grand-canonical": {
        "lattice": {"L": 2},
        "ensemble": {"kind": "grand-canonical", "beta": 1.0},
        "drive": {"dv": 0.01},
        "sweep": {
            "u_grid": [0.5, 1.0, 2.0, 4.0],
            "v0_grid": [0.5, 1.0, 2.0],
            "tau_grid": [0.1, 1.0, 5.0, 20.0],
        },
    },
}


def load_preset(name):
    if name not in PRESETS:
        raise InputError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        )
    return config_from_dict(PRESETS[name])

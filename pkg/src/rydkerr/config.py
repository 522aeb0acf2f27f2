"""Exciton series parameters, spectral grids and unit conventions.

Every module in the package works in one internal unit system:

* energies and linewidths in eV
* radii in nm, crystal length in um, camera pixel pitch in um
* intensities in mW/mm^2
* third-order susceptibility in m^2/V^2

Conversions to and from other units happen only at module boundaries
(file formats, CLI flags).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .errors import ConfigError

# hbar*c in eV*um and h*c in eV*nm, CODATA 2018
HBARC_EV_UM = 0.1973269804
HC_EV_NM = 1239.8419843320

#: Names of fields that have no physically published default and must be
#: supplied by the user (series Rydberg energy, background dielectric
#: constant, longitudinal-transverse splitting, coherence radius, and a
#: linewidth model via either gamma0 or explicit base_linewidths).
REQUIRED_FIELDS = ("rydberg_energy", "epsilon_b", "delta_lt", "coherence_radius")


@dataclass(frozen=True)
class ExcitonSeriesConfig:
    """Physical parameters of one exciton series plus crystal geometry.

    ``gamma0`` sets the default n**-3 linewidth scaling,
    Gamma_n = gamma0 / n^3 + extra_broadening.  An explicit
    ``base_linewidths`` map (n -> eV, before extra broadening) overrides
    the scaling; at least one of the two must be given.
    """

    rydberg_energy: float           # eV, effective Rydberg constant of the series
    epsilon_b: float                # background dielectric constant
    delta_lt: float                 # eV, longitudinal-transverse splitting
    coherence_radius: float         # nm, r0 in the oscillator strengths
    gap_energy: float = 2.1721      # eV
    quantum_defect: float = 0.34    # P-state quantum defect
    bohr_radius: float = 1.1        # nm
    gamma0: float | None = None     # eV, linewidth scale for gamma0/n^3
    base_linewidths: dict[int, float] | None = None
    extra_broadening: float = 21e-6  # eV, added to every linewidth
    n_min: int = 2
    n_max: int = 14
    chi3_0: float = 0.6e-11         # m^2/V^2
    coupling_a: float = 4.53        # A at 4 K in the chi3 couplings
    coupling_b: float = 3.41        # B at 4 K
    gamma_exp: float = 1.8
    beta_exp: float = 1.62
    crystal_length: float = 50.0    # um
    wavelength: float | None = None  # nm; derived from photon energy if None
    vacuum_impedance: float = 376.73  # Ohm

    def __post_init__(self):
        if self.base_linewidths is not None:
            clean = {int(k): float(v) for k, v in self.base_linewidths.items()}
            object.__setattr__(self, "base_linewidths", clean)
        self.validate()

    def validate(self):
        if self.n_min < 2:
            raise ConfigError("n_min must be >= 2 (the series sum starts at n = 2)")
        if self.n_max < self.n_min:
            raise ConfigError("n_max must be >= n_min")
        if not 0.0 <= self.quantum_defect < 1.0:
            raise ConfigError("quantum_defect must lie in [0, 1)")
        for name in ("gap_energy", "rydberg_energy", "epsilon_b", "delta_lt",
                     "bohr_radius", "crystal_length", "vacuum_impedance"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be strictly positive")
        # r0 = 0 is the pure-Coulomb limit of the oscillator strengths and is allowed
        if self.coherence_radius < 0:
            raise ConfigError("coherence_radius must be >= 0")
        if self.extra_broadening < 0:
            raise ConfigError("extra_broadening must be >= 0")
        if self.wavelength is not None and self.wavelength <= 0:
            raise ConfigError("wavelength must be strictly positive")
        if self.gamma0 is None and self.base_linewidths is None:
            raise ConfigError("missing required config field: gamma0 (or base_linewidths)")
        if self.gamma0 is not None and self.gamma0 <= 0:
            raise ConfigError("gamma0 must be strictly positive")
        if self.base_linewidths is not None:
            missing = [n for n in self.n_range() if n not in self.base_linewidths]
            if missing:
                raise ConfigError(f"base_linewidths missing entries for n = {missing}")
            if any(v <= 0 for v in self.base_linewidths.values()):
                raise ConfigError("base_linewidths must be strictly positive")

    def n_range(self) -> range:
        return range(self.n_min, self.n_max + 1)

    def linewidth(self, n: int) -> float:
        """Total linewidth Gamma_n in eV, extra broadening included."""
        if self.base_linewidths is not None:
            base = self.base_linewidths[int(n)]
        else:
            base = self.gamma0 / float(n) ** 3
        return base + self.extra_broadening

    def vacuum_wavelength_nm(self, energy):
        """Probe wavelength in nm, fixed by config or derived from energy."""
        if self.wavelength is not None:
            return self.wavelength * np.ones_like(np.asarray(energy, dtype=float))
        return HC_EV_NM / np.asarray(energy, dtype=float)

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "base_linewidths":
                value = {str(k): v for k, v in value.items()}
            out[f.name] = value
        return out

    def replace(self, **changes) -> "ExcitonSeriesConfig":
        return replace(self, **changes)


def default_config(**values) -> ExcitonSeriesConfig:
    """Build a config from published defaults plus user-supplied open values.

    Fields without a published value (see REQUIRED_FIELDS, plus a linewidth
    model) must be passed as keyword arguments; everything else may be
    overridden the same way.
    """
    for name in REQUIRED_FIELDS:
        if name not in values:
            raise ConfigError(f"missing required config field: {name}")
    if "gamma0" not in values and "base_linewidths" not in values:
        raise ConfigError("missing required config field: gamma0 (or base_linewidths)")
    return from_dict(values)


_FIELD_NAMES = {f.name for f in fields(ExcitonSeriesConfig)}
#: Top-level config-file keys handled by other modules.
_FOREIGN_KEYS = {"blockade"}


def from_dict(data: dict, source: str = "config") -> ExcitonSeriesConfig:
    unknown = sorted(set(data) - _FIELD_NAMES - _FOREIGN_KEYS)
    if unknown:
        warnings.warn(f"{source}: ignoring unknown fields: {', '.join(unknown)}")
    kwargs = {k: v for k, v in data.items() if k in _FIELD_NAMES}
    for name in REQUIRED_FIELDS:
        if name not in kwargs:
            raise ConfigError(f"missing required config field: {name}")
    try:
        return ExcitonSeriesConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExcitonSeriesConfig:
    """Read an ExcitonSeriesConfig from a JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return from_dict(data, source=str(path))


def save_config(path, cfg: ExcitonSeriesConfig, blockade_dict: dict | None = None):
    data = cfg.to_dict()
    if blockade_dict:
        data["blockade"] = blockade_dict
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def rydberg_level(n: int, gap_energy: float, rydberg_energy: float,
                  quantum_defect: float) -> float:
    """Transverse exciton energy E_Tn = E_gap - Ry* / (n - delta)^2 in eV."""
    n_eff = n - quantum_defect
    if n_eff <= 0:
        raise ValueError(f"n - quantum_defect must be positive, got {n_eff}")
    return gap_energy - rydberg_energy / n_eff**2


def exciton_energy(n: int, cfg: ExcitonSeriesConfig) -> float:
    """Resonance energy of the nP exciton line in eV.

    Raises ValueError for n below the configured series start.
    """
    if n < cfg.n_min:
        raise ValueError(f"n = {n} is below n_min = {cfg.n_min}")
    return rydberg_level(n, cfg.gap_energy, cfg.rydberg_energy, cfg.quantum_defect)


@dataclass(frozen=True)
class SpectralGrid:
    """Strictly increasing photon-energy sampling axis in eV."""

    energies: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.energies, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise ConfigError("spectral grid must be a non-empty 1-D energy array")
        if not np.all(np.diff(arr) > 0):
            raise ConfigError("spectral grid energies must be strictly increasing")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "energies", arr)

    def __len__(self):
        return self.energies.size

    @property
    def step(self) -> float:
        """Largest spacing between neighbouring samples."""
        if len(self) < 2:
            return 0.0
        return float(np.max(np.diff(self.energies)))

    @classmethod
    def from_range(cls, e_min: float, e_max: float, step: float) -> "SpectralGrid":
        if step <= 0 or e_max <= e_min:
            raise ConfigError("grid requires e_max > e_min and step > 0")
        n = int(math.floor((e_max - e_min) / step + 0.5)) + 1
        return cls(e_min + step * np.arange(n))

    @classmethod
    def from_binding_energy(cls, cfg: ExcitonSeriesConfig, eb_min: float,
                            eb_max: float, step: float) -> "SpectralGrid":
        """Grid over binding energy E_b = E_gap - E, all in eV.

        eb_min may be negative (energies above the gap).
        """
        binding = cls.from_range(eb_min, eb_max, step)
        return cls(np.sort(cfg.gap_energy - binding.energies))

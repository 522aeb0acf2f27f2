"""Rydberg blockade saturation models for the nonlinear response.

Two mechanisms are provided and can be selected per evaluation:

* ``broadening``: exciton-exciton interaction treated as a power-dependent
  linewidth, Gamma_n' = Gamma_n + c * n^4 * P.  Relative broadening grows
  as n^7 for n^-3 base linewidths.
* ``saturable``: each n' family of third-order terms is scaled by
  1 / (1 + I / I_sat(n')), capping the exciton density.  Per-state
  saturation intensities default to the blockade-volume power law
  I_sat(n) = A * (n - delta)^-7.

``combined`` applies both transforms at once.  It is experimental: the two
mechanisms overlap and double-count part of the saturation, so use it only
for qualitative comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Mapping

import numpy as np

from .errors import ConfigError

VARIANTS = ("none", "broadening", "saturable", "combined")

#: The broadening constant is expressed in ueV per (mW/mm^2) per n^4; the
#: published 2.1e-2 was fitted to one specific beam geometry, so keep it
#: adjustable.
_UEV = 1e-6


@dataclass(frozen=True)
class BlockadeMode:
    """Selects how the blockade modifies the third-order response."""

    variant: str = "none"
    broadening_constant: float = 2.1e-2   # ueV / (mW/mm^2) / n^4
    isat_scale: float | None = None       # A in I_sat(n) = A (n - delta)^b, mW/mm^2
    isat_exponent: float = -7.0
    isat_per_n: Mapping[int, float] | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(
                f"unknown blockade mode {self.variant!r}; expected one of {VARIANTS}")
        if self.broadening_constant < 0:
            raise ConfigError("broadening_constant must be >= 0")
        if self.isat_scale is not None and self.isat_scale <= 0:
            raise ConfigError("isat_scale must be strictly positive")
        if self.isat_per_n is not None:
            clean = {int(k): float(v) for k, v in self.isat_per_n.items()}
            if any(v <= 0 for v in clean.values()):
                raise ConfigError("per-n saturation intensities must be positive")
            object.__setattr__(self, "isat_per_n", clean)

    @property
    def saturates(self) -> bool:
        return self.variant in ("saturable", "combined")

    @property
    def broadens(self) -> bool:
        return self.variant in ("broadening", "combined")

    @classmethod
    def none(cls) -> "BlockadeMode":
        return cls("none")

    @classmethod
    def broadening(cls, constant: float = 2.1e-2) -> "BlockadeMode":
        return cls("broadening", broadening_constant=constant)

    @classmethod
    def saturable(cls, isat_scale: float | None = None, isat_exponent: float = -7.0,
                  isat_per_n: Mapping[int, float] | None = None) -> "BlockadeMode":
        return cls("saturable", isat_scale=isat_scale, isat_exponent=isat_exponent,
                   isat_per_n=isat_per_n)

    def to_dict(self) -> dict:
        out = {"variant": self.variant}
        for f in fields(self):
            if f.name == "variant":
                continue
            value = getattr(self, f.name)
            if value is None:
                continue
            if f.name == "isat_per_n":
                value = {str(k): v for k, v in value.items()}
            out[f.name] = value
        return out


_MODE_FIELDS = {f.name for f in fields(BlockadeMode)}


def from_dict(data: Mapping | None) -> BlockadeMode:
    """Build a BlockadeMode from the "blockade" section of a config file."""
    if not data:
        return BlockadeMode.none()
    unknown = sorted(set(data) - _MODE_FIELDS - {"mode"})
    if unknown:
        raise ConfigError(f"unknown blockade settings: {', '.join(unknown)}")
    kwargs = dict(data)
    if "mode" in kwargs:
        kwargs["variant"] = kwargs.pop("mode")
    return BlockadeMode(**kwargs)


def saturable_scale(intensity, isat):
    """Dimensionless density cap 1 / (1 + I / I_sat), in (0, 1].

    Accepts scalar or array intensity; I_sat must be strictly positive.
    """
    isat = float(isat)
    if isat <= 0:
        raise ValueError(f"I_sat must be strictly positive, got {isat}")
    intensity = np.asarray(intensity, dtype=float)
    out = 1.0 / (1.0 + intensity / isat)
    return out if out.ndim else float(out)


def broadened_linewidth(n: int, power, mode: BlockadeMode, base_linewidth):
    """Power-broadened linewidth Gamma_n + c * n^4 * P in eV.

    ``power`` is the in-crystal average intensity in mW/mm^2 and the mode
    constant is read in ueV per (mW/mm^2), so the added term for the
    default constant at n = 10, P = 1 is 210 ueV.
    """
    power = np.asarray(power, dtype=float)
    if np.any(power < 0):
        raise ValueError("power must be >= 0")
    extra = mode.broadening_constant * _UEV * float(n) ** 4 * power
    out = base_linewidth + extra
    return out if out.ndim else float(out)


def predict_isat(n: int, scale: float, delta: float, exponent: float = -7.0) -> float:
    """Blockade-volume saturation intensity A * (n - delta)^exponent."""
    if scale <= 0:
        raise ValueError("scale must be strictly positive")
    n_eff = n - delta
    if n_eff <= 0:
        raise ValueError(f"n - delta must be positive, got {n_eff}")
    return scale * n_eff**exponent


def isat_for(n: int, mode: BlockadeMode, quantum_defect: float) -> float:
    """Per-state saturation intensity used by the saturable mode."""
    if mode.isat_per_n is not None and int(n) in mode.isat_per_n:
        return mode.isat_per_n[int(n)]
    if mode.isat_scale is None:
        raise ConfigError(
            "saturable blockade mode needs isat_scale or a per-n I_sat entry "
            f"for n = {n}")
    return predict_isat(n, mode.isat_scale, quantum_defect, mode.isat_exponent)

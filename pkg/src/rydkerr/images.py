"""2-D field maps and their file formats.

Real maps (intensity images, phase maps) travel as RKF1 files: one ASCII
header line ``RKF1 <width> <height> <pixel_pitch_um>`` optionally followed
by ``key=value`` tokens on the same line, then raw little-endian float32
values in row-major order.  16-bit grayscale PNG interferograms are
accepted on import with values mapped to [0, 1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .errors import GridMismatchError

RKF_MAGIC = "RKF1"
DEFAULT_PIXEL_PITCH = 2.5  # um, ten-pixel fringes are then 25 um


@dataclass
class ScalarFieldMap:
    """Real-valued image with pixel pitch metadata (row-major, float64)."""

    values: np.ndarray
    pixel_pitch: float = DEFAULT_PIXEL_PITCH
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2 or min(arr.shape) < 8:
            raise ValueError("field maps must be 2-D with both sides >= 8 pixels")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field map values must be finite")
        if self.pixel_pitch <= 0:
            raise ValueError("pixel_pitch must be positive")
        self.values = arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def same_grid(self, other: "ScalarFieldMap") -> bool:
        return (self.values.shape == other.values.shape
                and np.isclose(self.pixel_pitch, other.pixel_pitch))

    def require_same_grid(self, other: "ScalarFieldMap", what: str = "maps"):
        if not self.same_grid(other):
            raise GridMismatchError(
                f"{what} have mismatched grids: {self.values.shape} @ "
                f"{self.pixel_pitch} um vs {other.values.shape} @ "
                f"{other.pixel_pitch} um")

    def with_values(self, values, extra_warnings: tuple[str, ...] = ()) -> "ScalarFieldMap":
        return ScalarFieldMap(values, self.pixel_pitch, self.warnings + extra_warnings)


@dataclass
class ComplexFieldMap:
    """Complex beam cross-section (amplitude and phase) on a pixel grid."""

    values: np.ndarray
    pixel_pitch: float = DEFAULT_PIXEL_PITCH

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=complex)
        if arr.ndim != 2 or min(arr.shape) < 8:
            raise ValueError("field maps must be 2-D with both sides >= 8 pixels")
        if self.pixel_pitch <= 0:
            raise ValueError("pixel_pitch must be positive")
        self.values = arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @classmethod
    def from_intensity_phase(cls, intensity: ScalarFieldMap,
                             phase: ScalarFieldMap | np.ndarray | float = 0.0
                             ) -> "ComplexFieldMap":
        """Beam with amplitude sqrt(I) and the given phase map."""
        if isinstance(phase, ScalarFieldMap):
            intensity.require_same_grid(phase, "intensity and phase maps")
            phase = phase.values
        amplitude = np.sqrt(np.clip(intensity.values, 0.0, None))
        return cls(amplitude * np.exp(1j * np.asarray(phase, dtype=float)),
                   intensity.pixel_pitch)


def _atomic_write_bytes(path, payload: bytes):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(payload)
    os.replace(tmp, path)


def write_rkf(path, fmap: ScalarFieldMap, extra: dict | None = None):
    """Write a ScalarFieldMap as an RKF1 file (atomically)."""
    tokens = [RKF_MAGIC, str(fmap.width), str(fmap.height), repr(float(fmap.pixel_pitch))]
    for key, value in (extra or {}).items():
        tokens.append(f"{key}={value}")
    header = " ".join(tokens) + "\n"
    data = np.ascontiguousarray(fmap.values, dtype="<f4").tobytes()
    _atomic_write_bytes(path, header.encode("ascii") + data)


def read_rkf_header(path) -> dict:
    """Parse the RKF1 header line into width/height/pixel_pitch plus extras."""
    with open(path, "rb") as fh:
        line = fh.readline()
    tokens = line.decode("ascii").split()
    if len(tokens) < 4 or tokens[0] != RKF_MAGIC:
        raise ValueError(f"{path}: not an {RKF_MAGIC} file")
    meta = {"width": int(tokens[1]), "height": int(tokens[2]),
            "pixel_pitch": float(tokens[3])}
    for token in tokens[4:]:
        key, _, value = token.partition("=")
        meta[key] = value
    return meta


def read_rkf(path) -> ScalarFieldMap:
    with open(path, "rb") as fh:
        header = fh.readline()
        payload = fh.read()
    tokens = header.decode("ascii").split()
    if len(tokens) < 4 or tokens[0] != RKF_MAGIC:
        raise ValueError(f"{path}: not an {RKF_MAGIC} file")
    width, height = int(tokens[1]), int(tokens[2])
    pitch = float(tokens[3])
    expected = width * height * 4
    if len(payload) != expected:
        raise ValueError(f"{path}: expected {expected} payload bytes, got {len(payload)}")
    values = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return ScalarFieldMap(values.astype(float), pitch)


def read_png16(path, pixel_pitch: float = DEFAULT_PIXEL_PITCH) -> ScalarFieldMap:
    """Import a 16-bit grayscale PNG interferogram, scaled to [0, 1]."""
    with Image.open(path) as img:
        if img.mode not in ("I", "I;16", "I;16B", "I;16L"):
            img = img.convert("I")
        arr = np.asarray(img, dtype=float)
    return ScalarFieldMap(arr / 65535.0, pixel_pitch)

import numpy as np
import pytest
from PIL import Image

from rydkerr.errors import GridMismatchError
from rydkerr.images import (
    ComplexFieldMap,
    ScalarFieldMap,
    read_png16,
    read_rkf,
    read_rkf_header,
    write_rkf,
)


def test_scalar_map_validation():
    with pytest.raises(ValueError):
        ScalarFieldMap(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        ScalarFieldMap(np.full((16, 16), np.nan))
    with pytest.raises(ValueError):
        ScalarFieldMap(np.zeros((16, 16)), pixel_pitch=0.0)
    fmap = ScalarFieldMap(np.zeros((16, 32)))
    assert (fmap.height, fmap.width) == (16, 32)


def test_grid_mismatch_raises():
    a = ScalarFieldMap(np.zeros((16, 16)), 2.5)
    b = ScalarFieldMap(np.zeros((16, 16)), 5.0)
    c = ScalarFieldMap(np.zeros((16, 32)), 2.5)
    a.require_same_grid(ScalarFieldMap(np.ones((16, 16)), 2.5))
    with pytest.raises(GridMismatchError):
        a.require_same_grid(b)
    with pytest.raises(GridMismatchError):
        a.require_same_grid(c)


def test_complex_map_from_intensity_phase():
    intensity = ScalarFieldMap(np.full((8, 8), 4.0), 2.5)
    phase = ScalarFieldMap(np.full((8, 8), np.pi / 3), 2.5)
    field = ComplexFieldMap.from_intensity_phase(intensity, phase)
    assert np.allclose(np.abs(field.values), 2.0)
    assert np.allclose(np.angle(field.values), np.pi / 3)


def test_rkf_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    values = rng.random((24, 40)).astype(np.float32).astype(float)
    fmap = ScalarFieldMap(values, 3.25)
    path = tmp_path / "map.rkf"
    write_rkf(path, fmap, extra={"seed": 42})
    again = read_rkf(path)
    np.testing.assert_array_equal(again.values, values)
    assert again.pixel_pitch == 3.25
    header = read_rkf_header(path)
    assert header["width"] == 40 and header["height"] == 24
    assert header["seed"] == "42"
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii")
    assert first.startswith("RKF1 40 24 3.25")


def test_rkf_rejects_garbage(tmp_path):
    path = tmp_path / "bad.rkf"
    path.write_bytes(b"NOPE 4 4 1.0\n" + b"\0" * 64)
    with pytest.raises(ValueError, match="RKF1"):
        read_rkf(path)
    short = tmp_path / "short.rkf"
    short.write_bytes(b"RKF1 8 8 2.5\n" + b"\0" * 10)
    with pytest.raises(ValueError, match="payload"):
        read_rkf(short)


def test_png16_import(tmp_path):
    values = (np.arange(16 * 16, dtype=np.uint32).reshape(16, 16)
              * (65535 // (16 * 16 - 1))).astype(np.int32)
    img = Image.fromarray(values, mode="I")
    path = tmp_path / "ifg.png"
    img.save(path)
    fmap = read_png16(path, pixel_pitch=2.0)
    assert fmap.values.min() == 0.0
    assert fmap.values.max() <= 1.0
    assert fmap.values.max() == pytest.approx(values.max() / 65535.0)
    assert fmap.pixel_pitch == 2.0

import numpy as np
import pytest

from diffwos.errors import ConfigError
from diffwos.fields import GridLookupField, LinearField, ZeroField, make_field
from diffwos.gridfield import GridField, read_gridfield, write_gridfield


def test_single_cell_roundtrip(tmp_path):
    g = GridField(1, 1, (0, 0, 1, 1), np.array([[[0.5]]]))
    p = tmp_path / "one.grid"
    write_gridfield(p, g)
    back = read_gridfield(p)
    assert back.nx == back.ny == 1
    assert back.values[0, 0, 0] == 0.5


def test_text_roundtrip_lossless(tmp_path):
    gen = np.random.default_rng(0)
    g = GridField(5, 3, (-1, -2, 3, 4), gen.normal(size=(3, 5, 2)))
    p = tmp_path / "f.grid"
    write_gridfield(p, g)
    back = read_gridfield(p)
    assert back.bbox == pytest.approx(g.bbox)
    assert np.array_equal(back.values, g.values)  # repr() round-trip is exact


def test_binary_matches_text_within_float32(tmp_path):
    gen = np.random.default_rng(1)
    g = GridField(4, 4, (0, 0, 1, 1), gen.normal(size=(4, 4, 1)))
    pt, pb = tmp_path / "t.grid", tmp_path / "b.grid"
    write_gridfield(pt, g)
    write_gridfield(pb, g, binary=True)
    t, b = read_gridfield(pt), read_gridfield(pb)
    assert np.allclose(t.values, b.values, atol=1e-6)


def test_payload_length_mismatch(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("2 2 1 0 0 1 1\n1.0 2.0 3.0\n")
    with pytest.raises(ConfigError):
        read_gridfield(p)


def test_malformed_header_reports_line(tmp_path):
    p = tmp_path / "bad.grid"
    p.write_text("2 2 nonsense\n1 2 3 4\n")
    with pytest.raises(ConfigError) as e:
        read_gridfield(p)
    assert "line 1" in str(e.value)


def test_bilinear_sampling():
    vals = np.array([[[0.0], [1.0]], [[2.0], [3.0]]])  # (ny, nx, 1)
    g = GridField(2, 2, (0, 0, 1, 1), vals)
    assert g.sample(0, 0) == 0.0
    assert g.sample(1, 0) == 1.0
    assert g.sample(0.5, 0.5) == pytest.approx(1.5)
    assert g.sample(-5, -5) == 0.0  # clamped


def test_grid_lookup_field_gradient():
    # values = x + 2y sampled on a grid; gradient should recover (1, 2)
    n = 17
    xs = np.linspace(0, 1, n)
    vals = xs[None, :, None] + 2 * xs[:, None, None]
    f = GridLookupField(GridField(n, n, (0, 0, 1, 1), vals))
    assert f.value((0.5, 0.25)) == pytest.approx(1.0, abs=1e-9)
    gx, gy = f.gradient((0.4, 0.6))
    assert gx == pytest.approx(1.0, abs=1e-6)
    assert gy == pytest.approx(2.0, abs=1e-6)


def test_make_field_variants(tmp_path):
    assert isinstance(make_field(None), ZeroField)
    assert make_field(2.5).value((0, 0)) == 2.5
    f = make_field({"kind": "linear", "a": [1, -1], "b": 0.5})
    assert isinstance(f, LinearField)
    assert f.value((2.0, 1.0)) == pytest.approx(1.5)
    with pytest.raises(ConfigError):
        make_field({"kind": "linear", "a": [1, 0], "bogus": 1})
    with pytest.raises(ConfigError):
        make_field({"kind": "unknown"})
    g = GridField(2, 2, (0, 0, 1, 1), np.ones((2, 2, 1)))
    write_gridfield(tmp_path / "g.grid", g)
    gf = make_field({"kind": "grid", "path": "g.grid"}, base_dir=str(tmp_path))
    assert gf.value((0.5, 0.5)) == 1.0

import io as stdio
import json

import numpy as np
import pytest

from clampedplate import io
from clampedplate.fdsolver import make_domain, sample_field


class TestFormatting:
    """Number formatting and table writers."""

    @pytest.mark.parametrize("value, text", [
        (0.56433912, "0.564339"), (1234567.0, "1.23457e+06"), (3, "3"), (np.int64(7), "7"),
        (True, "1"), (np.float64(1e-20), "1e-20"), ("disk", "disk"),
    ])
    def test_fmt(self, value, text):
        assert io.fmt(value) == text

    def test_write_csv_stream(self):
        buf = stdio.StringIO()
        io.write_csv(buf, ("a", "b"), [(1, 0.1234567), (2, 2.0)])
        assert buf.getvalue() == "a,b\n1,0.123457\n2,2\n"

    def test_write_columns(self, tmp_path):
        p = tmp_path / "cols.txt"
        io.write_columns(p, [(0.0, 1.0), (0.5, 0.25)], comment="r v")
        assert p.read_text() == "# r v\n0 1\n0.5 0.25\n"


class TestDomainSpec:
    """Validation of JSON domain specs."""

    @pytest.mark.parametrize("spec, msg", [
        ([], "JSON object"),
        ({"shape": "circle", "params": [1], "resolution": 64}, "unknown shape"),
        ({"shape": "disk", "params": [1, 2], "resolution": 64}, "1 parameter"),
        ({"shape": "disk", "params": [-1], "resolution": 64}, "positive"),
        ({"shape": "disk", "params": [1], "resolution": 2}, "resolution"),
        ({"shape": "disk", "params": ["1"], "resolution": 64}, "numbers"),
        ({"shape": "mask", "params": [], "mask": ["01", "1"]}, "equal-length"),
    ])
    def test_rejects(self, spec, msg):
        with pytest.raises(ValueError, match=msg):
            io.validate_domain_spec(spec)

    def test_load_and_override(self, tmp_path):
        p = tmp_path / "d.json"
        p.write_text(json.dumps({"shape": "square", "params": [2.0], "resolution": 40}))
        spec = io.load_domain_spec(p)
        assert io.domain_from_spec(spec).h == pytest.approx(0.05)
        assert io.domain_from_spec(spec, 80).h == pytest.approx(0.025)

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "d.json"
        p.write_text("{shape: disk")
        with pytest.raises(ValueError, match="invalid JSON"):
            io.load_domain_spec(p)


class TestFieldCsv:
    """Field files round-trip through CSV."""

    def test_round_trip_with_domain(self, tmp_path, disk64):
        f = sample_field(disk64, lambda x, y: 1 - x**2 - y**2)
        p = tmp_path / "f.csv"
        io.write_field_csv(p, f)
        back = io.read_field_csv(p, disk64)
        np.testing.assert_allclose(back.values, f.values, rtol=1e-5)

    def test_round_trip_inferred(self, tmp_path):
        dom = make_domain("annulus", [0.4, 1.0], 32)
        f = sample_field(dom, lambda x, y: x + 2 * y)
        p = tmp_path / "f.csv"
        io.write_field_csv(p, f)
        back = io.read_field_csv(p)
        assert back.domain.n_interior == dom.n_interior
        assert back.domain.area == pytest.approx(dom.area)
        assert back.integral() == pytest.approx(f.integral(), abs=1e-4)

    def test_wrong_columns(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError, match="columns"):
            io.read_field_csv(p)

    def test_off_grid_nodes(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("index,x,y,value\n0,0,0,1\n1,0.1,0,1\n2,0.25,0,1\n")
        with pytest.raises(ValueError, match="uniform grid"):
            io.read_field_csv(p)

    def test_domain_mismatch(self, tmp_path, disk64):
        small = make_domain("disk", [0.5], 32)
        p = tmp_path / "f.csv"
        io.write_field_csv(p, sample_field(small, lambda x, y: x))
        with pytest.raises(ValueError):
            io.read_field_csv(p, disk64)

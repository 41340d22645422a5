import json
import pickle
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinporous.errors import InputError
from thinporous.forcing import Forcing
from thinporous.geometry import build_channel_grid
from thinporous.io import dumps, svg_plot, svg_slice, to_jsonable, write_csv, write_stokes_csv
from thinporous.rheology import FluidModel
from thinporous.stokes import StokesProblem, solve_stokes

Z = np.linspace(-0.5, 0.5, 21)


def test_forcing_kinds():
    assert np.all(Forcing("constant", {"value": 2.0})(Z) == 2.0)
    assert np.allclose(Forcing("cosine", {"amplitude": 2.0, "k": 1})(Z), 2 * np.cos(np.pi * Z))
    assert np.allclose(Forcing("polynomial", {"coefficients": [1, 0, 3]})(Z), 1 + 3 * Z**2)
    assert Forcing("samples", {"values": [0.0, 2.0]})(0.0) == pytest.approx(1.0)
    with pytest.raises(InputError):
        Forcing("square")
    with pytest.raises(InputError):
        Forcing("constant", {"value": float("inf")})


@pytest.mark.parametrize("f", [
    Forcing("sine", {"amplitude": 1.5, "k": 2}),
    Forcing("polynomial", {"coefficients": [1, 2, 3, 4]}),
    Forcing("samples", {"values": [0.0, 1.0, 5.0, 2.0]}),
    Forcing("cosine", {"k": 3}),
])
def test_forcing_mirror_and_pickle(f):
    assert np.allclose(f.mirrored()(Z), f(-Z))
    g = pickle.loads(pickle.dumps(f))
    assert np.array_equal(g(Z), f(Z))
    assert json.loads(json.dumps(f.to_dict()))["kind"] == f.kind


def test_csv_roundtrip(tmp_path):
    x = np.array([0.1, 1 / 3, 2e-300])
    write_csv(tmp_path / "a.csv", {"x": x, "n": [1, 2, 3], "flag": [True, False, True]})
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "x,n,flag"
    assert [float(l.split(",")[0]) for l in lines[1:]] == list(x)
    assert lines[2].endswith(",2,false")
    with pytest.raises(ValueError):
        write_csv(tmp_path / "b.csv", {"a": [1, 2], "b": [1]})


def test_json_conversion():
    obj = {"f": Fraction(3, 2), "i": Fraction(2), "a": np.arange(3), "nan": float("nan"),
           "b": np.bool_(True), 3: np.float64(0.5)}
    out = json.loads(dumps(obj))
    assert out == {"f": "3/2", "i": 2, "a": [0, 1, 2], "nan": "nan", "b": True, "3": 0.5}
    assert to_jsonable((1, 2)) == [1, 2]


@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=30))
def test_svg_is_wellformed(tmp_path_factory, ys):
    import xml.etree.ElementTree as ET

    path = tmp_path_factory.mktemp("svg") / "p.svg"
    svg_plot(path, [("a<b", np.arange(1, len(ys) + 1), ys), ("empty", [], [])],
             xlabel="eps", ylabel="norm", title="t & u", loglog=True)
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")


def test_stokes_exports(tmp_path):
    prob = StokesProblem(build_channel_grid(8, 4), FluidModel(2.0), 1.0)
    sol = solve_stokes(prob)
    write_stokes_csv(tmp_path / "s.csv", sol)
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "x1,x2,u1,u2,p" and len(rows) == 1 + 4 * 7
    svg_slice(tmp_path / "s.svg", sol, title="profile")
    assert "polyline" in (tmp_path / "s.svg").read_text()

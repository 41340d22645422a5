import pickle

import numpy as np
import pytest
from hypothesis import given, strategies as st

from thinporous.errors import (
    ContractError, DomainError, GeometryError, RegimeError, ResourceError,
)
from thinporous.geometry import (
    FILM, POROUS, FilmProfile, ObstacleShape, PerforatedDomain, UnitCell,
    band_field, build_channel_grid, build_perforated_domain, build_unit_cell_grid,
    mask_from_text, mask_to_text, rescale_field, unscale_field, unit_cell_mask,
)


def test_obstacle_area_and_validation():
    assert ObstacleShape.disk(0.25).area() == pytest.approx(np.pi / 16)
    assert ObstacleShape.rectangle((0.1, 0.2)).area() == pytest.approx(0.08)
    tri = ObstacleShape.polygon([(-0.2, -0.2), (0.2, -0.2), (0.0, 0.2)])
    assert tri.area() == pytest.approx(0.08)
    with pytest.raises(GeometryError):
        ObstacleShape.disk(0.5)
    with pytest.raises(GeometryError):
        ObstacleShape.disk(0.0)
    with pytest.raises(GeometryError):
        ObstacleShape("blob")


def test_polygon_contains_matches_rectangle():
    rect = ObstacleShape.rectangle((0.2, 0.1), (0.05, 0.0))
    poly = ObstacleShape.polygon([(-0.15, -0.1), (0.25, -0.1), (0.25, 0.1), (-0.15, 0.1)])
    y = np.linspace(-0.49, 0.49, 57)
    Y1, Y2 = np.meshgrid(y, y)
    assert np.array_equal(rect.contains(Y1, Y2), poly.contains(Y1, Y2))


@given(st.floats(0.05, 0.3), st.floats(-0.1, 0.1), st.floats(-0.1, 0.1))
def test_mirrored_mask_is_flipped(rad, cx, cy):
    ob = ObstacleShape.disk(rad, (cx, cy))
    n = 64
    a = unit_cell_mask(ob, n)
    b = unit_cell_mask(ob.mirrored_x(), n)
    # disagreement only on cells whose centre sits on the boundary
    assert np.mean(a[::-1, :] != b) < 0.01


def test_unit_cell_grid():
    g = build_unit_cell_grid(UnitCell(ObstacleShape.disk(0.25)), 64)
    assert (g.nx, g.ny, g.periodic) == (64, 64, (True, True))
    assert abs(g.fluid_fraction - (1 - np.pi / 16)) < 0.01
    with pytest.raises(DomainError):
        build_unit_cell_grid(UnitCell(ObstacleShape.disk(0.25)), 8)
    with pytest.raises(GeometryError):
        build_unit_cell_grid(UnitCell(None), 32)
    with pytest.raises(GeometryError):
        build_unit_cell_grid(UnitCell(ObstacleShape.disk(0.49)), 16)


def test_channel_grid():
    g = build_channel_grid(16, 4)
    assert g.ny == 15 and g.dy == pytest.approx(1 / 16)
    assert g.yc()[0] == pytest.approx(1 / 16) and g.yc()[-1] == pytest.approx(15 / 16)


def test_film_profiles():
    g = FilmProfile.from_spec("cosine", {"mean": 1.0, "amplitude": 0.25, "waves": 1})
    assert g.a == pytest.approx(0.75, abs=1e-5) and g.b == pytest.approx(1.25)
    lin = FilmProfile.from_spec("linear", {"left": 1.0, "right": 2.0})
    assert lin(0.0) == pytest.approx(1.5)
    s = FilmProfile.from_spec("samples", {"values": [1.0, 2.0, 1.0]})
    assert s(0.0) == pytest.approx(2.0) and s(0.25) == pytest.approx(1.5)
    with pytest.raises(GeometryError):
        FilmProfile.constant(0.0)
    with pytest.raises(GeometryError):
        FilmProfile.from_spec("constant", {"value": 1.0}, a=1.5, b=2.0)
    with pytest.raises(GeometryError):
        FilmProfile.from_spec("zigzag", {})


def test_film_pickle():
    g = FilmProfile.from_spec("cosine", {"mean": 1.0, "amplitude": 0.3})
    h = pickle.loads(pickle.dumps(g))
    x = np.linspace(-0.5, 0.5, 11)
    assert np.array_equal(g(x), h(x)) and h.to_dict() == g.to_dict()
    with pytest.raises(TypeError):
        pickle.dumps(FilmProfile(lambda x: 1.0 + 0 * x))


def test_perforated_domain():
    p = PerforatedDomain(0.125, 0.25, 0.5, ObstacleShape.disk(0.25), FilmProfile.constant(1.0))
    grid = build_perforated_domain(p, 16)
    assert grid.nx == 128 and grid.sigma_row == 64 and grid.ny == 64 + 32
    assert np.all(grid.medium[:, :64] == FILM) and np.all(grid.medium[:, 64:] == POROUS)
    assert not grid.solid[:, :64].any()
    assert grid.solid[:, 64:].sum() == 8 * 2 * unit_cell_mask(p.obstacle, 16).sum()
    with pytest.raises(ResourceError):
        build_perforated_domain(p, 16, max_cells=1000)
    with pytest.raises(DomainError):
        PerforatedDomain(0.3, 0.5, 0.6, p.obstacle, p.g)
    with pytest.raises(RegimeError):
        PerforatedDomain(0.25, 0.5, 0.125, p.obstacle, p.g)


def test_band_field_rescale_roundtrip():
    p = PerforatedDomain(0.25, 0.5, 0.5, ObstacleShape.disk(0.2), FilmProfile.constant(1.0))
    grid = build_perforated_domain(p, 16)
    vals = np.random.default_rng(0).normal(size=(grid.nx, grid.ny))
    f = band_field(grid, vals, "film")
    ref = rescale_field(f, "film", 0.5)
    assert ref.x2.min() >= -1.0 and ref.x2.max() <= 0.0
    back = unscale_field(ref, 0.5)
    assert np.allclose(back.x2, f.x2)
    # norm picks up exactly the Jacobian of the dilatation
    assert ref.lp_norm(2.0) ** 2 * 0.5 == pytest.approx(f.lp_norm(2.0) ** 2)
    with pytest.raises(ContractError):
        rescale_field(f, "porous", 0.5)
    with pytest.raises(ContractError):
        rescale_field(ref, "film", 0.5)


def test_mask_text_roundtrip():
    m = unit_cell_mask(ObstacleShape.disk(0.3), 20)
    assert np.array_equal(mask_from_text(mask_to_text(m)), m)
    with pytest.raises(ContractError):
        mask_from_text("01\n0\n")

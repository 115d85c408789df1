import numpy as np
import pytest
from hypothesis import given, strategies as st

from flyrl.errors import GeometryError, ParameterError
from flyrl.grid import Grid, GridSpec, stretched_faces
from flyrl.ibm import Stencil, roma_kernel


def test_default_grid_shape_and_core():
    g = Grid(GridSpec())
    assert g.xf.shape == (129,) and g.yf.shape == (129,)
    assert g.xf[0] == -250 and g.xf[-1] == 250
    core = np.abs(g.xc) < 8
    assert np.allclose(g.dx[core], g.dx[core][0])
    assert g.dx[core][0] == pytest.approx(16 / 64)
    assert np.all(np.diff(g.xf) > 0)


def test_default_grid_is_mirror_symmetric():
    g = Grid(GridSpec())
    assert np.max(np.abs(g.xf + g.xf[::-1])) < 1e-9
    assert np.max(np.abs(g.xf - g.yf)) == 0.0


@given(st.integers(8, 64), st.floats(-5, 5), st.floats(1, 10))
def test_stretched_faces_monotone_and_bounded(n, c, hw):
    f = stretched_faces(-50.0, 50.0, 2 * n, c, hw, 0.5)
    assert len(f) == 2 * n + 1
    assert f[0] == -50.0 and f[-1] == 50.0
    assert np.all(np.diff(f) > 0)


def test_uniform_grid_volumes_sum_to_area():
    g = Grid(GridSpec(nx=10, ny=12, domain_min=(0, 0), domain_max=(2, 3), cluster_center=None))
    assert g.cell_volume.sum() == pytest.approx(6.0)
    assert g.u_volume.sum() == pytest.approx(6.0)
    assert g.v_volume.sum() == pytest.approx(6.0)


def test_invalid_specs():
    with pytest.raises(ParameterError):
        GridSpec(nx=4)
    with pytest.raises(ParameterError):
        GridSpec(domain_min=(0, 0), domain_max=(0, 1))
    with pytest.raises(ParameterError):
        GridSpec(cluster_center=(240.0, 0.0), core_halfwidth=20.0)


def test_check_inside():
    g = Grid(GridSpec())
    g.check_inside(np.array([[0.0, 0.0], [249.0, -249.0]]))
    with pytest.raises(GeometryError):
        g.check_inside(np.array([[251.0, 0.0]]))


def test_roma_kernel_moments():
    x = np.linspace(-0.5, 0.5, 41)
    for s in x:
        r = np.arange(-3, 4) - s
        w = roma_kernel(r)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.dot(w, r) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-3, 3), st.floats(-3, 3))
def test_interpolation_exact_for_linear_fields_on_uniform_grid(px, py):
    n = np.linspace(-6, 6, 49)
    X, Y = np.meshgrid(n, n, indexing="ij")
    h = np.array([n[1] - n[0]])
    s = Stencil(n, n, np.array([[px, py]]), h, h)
    assert s.interpolate(2.0 + 0 * X)[0] == pytest.approx(2.0, abs=1e-12)
    assert s.interpolate(1.5 * X - 0.5 * Y)[0] == pytest.approx(1.5 * px - 0.5 * py, abs=1e-12)


@given(st.lists(st.tuples(st.floats(-20, 20), st.floats(-20, 20)), min_size=1, max_size=8),
       st.lists(st.floats(-5, 5), min_size=8, max_size=8))
def test_spread_conserves_total(points, vals):
    g = Grid(GridSpec(nx=64, ny=64, domain_min=(-40, -40), domain_max=(40, 40),
                      cluster_center=(0, 0), core_halfwidth=24))
    pts = np.array(points)
    v = np.array(vals[:len(pts)])
    hx, hy = g.local_spacing(pts)
    s = Stencil(g.xc, g.yc, pts, hx, hy)
    dens = s.spread(v, g.cell_volume)
    assert np.sum(dens * g.cell_volume) == pytest.approx(v.sum(), abs=1e-10)

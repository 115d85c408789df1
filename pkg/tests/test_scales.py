import math

import pytest
from hypothesis import given, strategies as st

from flyrl.errors import ParameterError
from flyrl.scales import PhysicalParams, default_groups, derive_nondim_groups

KINDS = ("length", "time", "velocity", "flow_time", "kinematic_velocity", "acceleration",
         "angular_velocity", "force", "moment")


def test_reynolds_from_given_viscosity():
    g = derive_nondim_groups(PhysicalParams(kinematic_viscosity=15.0))
    assert g.reynolds == pytest.approx(84.8, abs=0.1)


def test_default_groups_match_reference_values():
    g = default_groups()
    assert g.reynolds == pytest.approx(84.8, abs=0.1)
    assert g.froude == pytest.approx(9810.0 / (4 * 0.75 * 200.0**2))
    assert g.froude == pytest.approx(0.08175, rel=1e-12)
    assert g.mass_ratio == pytest.approx(6e-4 / (1.2e-3 * 4.5 * 0.75 * 7.5e-4))
    assert g.mass_ratio == pytest.approx(197.5, rel=2e-3)
    assert g.density_ratio == pytest.approx(1000.0)
    assert g.tension == pytest.approx(7.4e6, rel=1e-12)
    assert g.bending == pytest.approx(2.0e4, rel=1e-12)
    assert g.time_ref == pytest.approx(1.0 / 400.0)


def test_inertia_formula():
    g = default_groups()
    assert g.inertia == pytest.approx(g.mass_ratio * (9 / 12 + 1 / 4))


def test_inertia_reference_number():
    # mass ratio 197.5 with L_b = 3, r_b = 1 gives exactly 197.5
    assert 197.5 * (3.0**2 / 12 + 1.0**2 / 4) == pytest.approx(197.5)


def test_stiffness_round_trip():
    p = PhysicalParams()
    q = PhysicalParams(tension_dim=p.tension_dim, bending_dim=p.bending_dim)
    g = derive_nondim_groups(q)
    c, h, rho, fr = q.chord, q.wing_thickness, q.fluid_density, q.ref_frequency
    assert g.tension * 4 * rho * c**2 * h * fr**2 == pytest.approx(q.tension_dim, rel=1e-14)
    assert g.bending * 4 * rho * c**4 * h * fr**2 == pytest.approx(q.bending_dim, rel=1e-14)


@pytest.mark.parametrize("name", ["chord", "ref_frequency", "fluid_density", "body_mass",
                                  "gravity", "kinematic_viscosity"])
def test_non_positive_rejected(name):
    with pytest.raises(ParameterError):
        PhysicalParams(**{name: 0.0})
    with pytest.raises(ParameterError):
        PhysicalParams(**{name: -1.0})


def test_aspect_ratio_below_one_rejected():
    with pytest.raises(ParameterError):
        PhysicalParams(aspect_ratio=0.5)


def test_unknown_kind():
    with pytest.raises(ParameterError):
        default_groups().scale_of("temperature")


@given(st.floats(-1e6, 1e6, allow_nan=False), st.sampled_from(KINDS))
def test_dimensional_round_trip(x, kind):
    g = default_groups()
    back = g.nondimensionalize(g.dimensionalize(x, kind), kind)
    assert back == pytest.approx(x, rel=1e-12, abs=1e-300)


@given(st.floats(0.3, 3.0), st.floats(50.0, 400.0))
def test_reynolds_held_when_viscosity_back_solved(c, fr):
    g = derive_nondim_groups(PhysicalParams(chord=c, ref_frequency=fr))
    assert g.reynolds == pytest.approx(84.8, rel=1e-12)
    assert g.time_ref == pytest.approx(1 / (2 * fr))


def test_reference_angular_velocity_conversion():
    g = default_groups()
    # one rad per t_ref expressed in units of pi f_r / 3
    assert g.omega_to_ref == pytest.approx(400.0 / (math.pi * 200.0 / 3.0))

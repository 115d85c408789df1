"""Reference scales and non-dimensional groups of the fruit-fly flyer.

Units: lengths in mm, masses in g, times in s.  Every other module works
in non-dimensional quantities built from these scales:

* length: chord ``c``
* time: ``1 / (2 f_r)``  (one unit = 2.5 ms at 200 Hz)
* velocity (flow solver): ``U_r = pi f_r A_r``
* force / moment: ``4 rho_f c^4 f_r^2`` / ``4 rho_f c^5 f_r^2``

The flow solver runs in ``U_r`` velocity units with time ``c / U_r`` so that
its Reynolds number is the authoritative 84.8; ``NondimGroups.flow_scale``
(= ``U_r t_ref / c``) converts between the two clocks.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

from .errors import ParameterError

_DEFAULT_RE = 84.8
_DEFAULT_KT = 7.4e6
_DEFAULT_KB = 2.0e4


@dataclass(frozen=True)
class PhysicalParams:
    chord: float = 0.75                 # mm
    ref_frequency: float = 200.0        # Hz
    ref_amplitude: float = 3.6          # chords
    fluid_density: float = 1.2e-6       # g/mm^3
    wing_density: float = 1.2e-3        # g/mm^3
    wing_thickness: float = 7.5e-4      # mm
    body_mass: float = 6.0e-4           # g
    body_length: float = 3.0            # chords
    body_radius: float = 1.0            # chords
    aspect_ratio: float = 6.0
    kinematic_viscosity: float | None = None   # mm^2/s, back-solved from Re=84.8
    gravity: float = 9810.0             # mm/s^2
    tension_dim: float | None = None    # g/s^2, back-solved from K_T=7.4e6
    bending_dim: float | None = None    # g mm^2/s^2, back-solved from K_B=2e4

    def __post_init__(self):
        c, fr, h, rho_f = self.chord, self.ref_frequency, self.wing_thickness, self.fluid_density
        if self.kinematic_viscosity is None:
            ur = math.pi * fr * self.ref_amplitude * c
            object.__setattr__(self, "kinematic_viscosity", ur * c / _DEFAULT_RE)
        if self.tension_dim is None:
            object.__setattr__(self, "tension_dim", _DEFAULT_KT * 4 * rho_f * c**2 * h * fr**2)
        if self.bending_dim is None:
            object.__setattr__(self, "bending_dim", _DEFAULT_KB * 4 * rho_f * c**4 * h * fr**2)
        for f in fields(self):
            val = getattr(self, f.name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ParameterError(f"{f.name} must be strictly positive, got {val!r}")
        if self.aspect_ratio < 1:
            raise ParameterError(f"aspect_ratio must be >= 1, got {self.aspect_ratio}")

    @property
    def span(self):
        return self.aspect_ratio * self.chord

    @property
    def wing_mass(self):
        return self.wing_density * self.span * self.chord * self.wing_thickness


@dataclass(frozen=True)
class NondimGroups:
    reynolds: float
    froude: float
    mass_ratio: float
    density_ratio: float
    inertia: float
    tension: float
    bending: float
    time_ref: float
    velocity_ref: float
    force_ref: float
    moment_ref: float
    length_ref: float
    thickness: float          # h / c
    aspect_ratio: float
    body_length: float        # chords
    body_radius: float        # chords
    angular_velocity_ref: float   # rad/s, pi f_r / 3
    flow_scale: float         # U_r t_ref / c

    @property
    def span_mass(self):
        """Denominator ``A_R h rho_wf`` of the body equations."""
        return self.aspect_ratio * self.thickness * self.density_ratio

    @property
    def weight(self):
        """Flyer weight ``m_bw Fr`` in body-equation units."""
        return self.mass_ratio * self.froude

    @property
    def omega_to_ref(self):
        """Convert rad per t_ref into units of the reference angular velocity."""
        return (1.0 / self.time_ref) / self.angular_velocity_ref

    def scale_of(self, kind):
        """Dimensional value of one non-dimensional unit of ``kind``."""
        table = {
            "length": self.length_ref,
            "time": self.time_ref,
            "velocity": self.velocity_ref,
            "flow_time": self.length_ref / self.velocity_ref,
            "kinematic_velocity": self.length_ref / self.time_ref,
            "acceleration": self.length_ref / self.time_ref**2,
            "angular_velocity": self.angular_velocity_ref,
            "force": self.force_ref,
            "moment": self.moment_ref,
        }
        try:
            return table[kind]
        except KeyError:
            raise ParameterError(f"unknown quantity kind {kind!r}") from None

    def dimensionalize(self, value, kind):
        return value * self.scale_of(kind)

    def nondimensionalize(self, value, kind):
        return value / self.scale_of(kind)


def derive_nondim_groups(p: PhysicalParams) -> NondimGroups:
    c, fr = p.chord, p.ref_frequency
    ur = math.pi * fr * p.ref_amplitude * c
    h = p.wing_thickness
    rho_f = p.fluid_density
    mbw = p.body_mass / p.wing_mass
    t_ref = 1.0 / (2.0 * fr)
    return NondimGroups(
        reynolds=ur * c / p.kinematic_viscosity,
        froude=p.gravity / (4.0 * c * fr**2),
        mass_ratio=mbw,
        density_ratio=p.wing_density / rho_f,
        inertia=mbw * (p.body_length**2 / 12.0 + p.body_radius**2 / 4.0),
        tension=p.tension_dim / (4.0 * rho_f * c**2 * h * fr**2),
        bending=p.bending_dim / (4.0 * rho_f * c**4 * h * fr**2),
        time_ref=t_ref,
        velocity_ref=ur,
        force_ref=4.0 * rho_f * c**4 * fr**2,
        moment_ref=4.0 * rho_f * c**5 * fr**2,
        length_ref=c,
        thickness=h / c,
        aspect_ratio=p.aspect_ratio,
        body_length=p.body_length,
        body_radius=p.body_radius,
        angular_velocity_ref=math.pi * fr / 3.0,
        flow_scale=ur * t_ref / c,
    )


def default_groups() -> NondimGroups:
    return derive_nondim_groups(PhysicalParams())

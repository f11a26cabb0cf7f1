"""Resonance-tuned feedback delay networks for spherical and rectangular enclosures."""

from .acoustics import BoxSpec, ModeSeries, SphereSpec, speed_of_sound, sphere_mode_series
from .allpass import LoopDesign, allpass_loop_phase, fit_loop, loop_resonances, retune_first_pole
from .bessel import find_roots, spherical_j, spherical_j_prime
from .fdn import FdnConfig, FdnState, build_box_fdn, build_sphere_fdn, process, render

__version__ = "0.1.0"

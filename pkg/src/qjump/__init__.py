"""Quantum-jump simulations of the driven, damped Jaynes-Cummings model.

Submodules
----------
fock
    Truncated Fock / atom-Fock spaces, states and phase-space functions.
models
    Model parameters, Hamiltonians and master equations.
semiclassical
    Maxwell-Bloch equations, neoclassical bistability roots, localization times.
analytics
    Closed-form null-record results and the jump overlay.
mcwf
    Monte Carlo wavefunction trajectories under direct photodetection.
heterodyne
    Heterodyne unraveling and the cumulative-charge readout.
steady
    Steady states and the analytic Kerr Wigner function.
cli
    The ``qjump`` command.
"""

from .models import ModelParams

__version__ = "0.1.0"

__all__ = ["ModelParams", "__version__"]

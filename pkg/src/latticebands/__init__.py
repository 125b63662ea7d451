"""Band spectra of periodic Schrödinger operators ``Delta + V`` on the square lattice.

Modules
-------
core        periods, potentials, phases, energy intervals and file formats
laplace1d   closed-form data of the 1D twisted Laplacian
floquet     fiber matrices, eigensolvers and eigenvalue counts
bands       Brillouin-zone sweeps, certified bands, spectra and count quilts
verify      exceptional energies, interior certificates and compliance checks
cli         command-line front end
"""

from .bands import compute_bands, find_gaps, nested_spectra, quilt, spectrum
from .core import BlochPhase, EnergyInterval, Period, Potential, SpectrumApproximation, load_potential
from .floquet import count_below, fiber_eigenvalues, multiplicity_profile
from .kernels import BACKEND
from .verify import certify_interior, exceptional_energies, kruger_gap, verify_theorem_sweep

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BlochPhase",
    "EnergyInterval",
    "Period",
    "Potential",
    "SpectrumApproximation",
    "certify_interior",
    "compute_bands",
    "count_below",
    "exceptional_energies",
    "fiber_eigenvalues",
    "find_gaps",
    "kruger_gap",
    "load_potential",
    "multiplicity_profile",
    "nested_spectra",
    "quilt",
    "spectrum",
    "verify_theorem_sweep",
]

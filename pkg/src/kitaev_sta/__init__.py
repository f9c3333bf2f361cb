"""Minimal-action shortcuts to adiabaticity for the Kitaev chain.

Bulk momentum-space propagation, exact diagonalization in Fock space and
two-point-measurement work statistics, with estimator-style drive protocols.
"""
__version__ = "0.1.0"

from .model import (Boundary, ChainParams, GapLandscape, PhaseLabel, bulk_spectrum,
                    gap_landscape, momentum_grid, phase_of, s3_window, sector_gap)
from .protocols import (DriveEndpoints, LinearRamp, MinimalActionRamp, Protocol,
                        TabulatedProtocol, TwoPlateauRamp, linear_ramp, ma_single,
                        ma_two_plateau, plateau_coefficients, sector_coefficients)
from .action import DivergentActionError, adiabatic_action, kitaev_alpha
from .bulk import (DegenerateSectorError, FidelityResult, bulk_work_distribution,
                   evolve_sector, fidelity_even, fidelity_odd, sector_hamiltonian)
from .ed import (DimensionCapError, ManyBodyState, SpectrumTable, build_hamiltonian,
                 ed_fidelity, full_spectrum, lowest_states, propagate)
from .work import WorkDistribution, convolve, moments, tpm_distribution

__all__ = [name for name in dir() if not name.startswith("_")]

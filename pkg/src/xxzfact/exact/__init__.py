"""Brute-force exact diagonalization in total-magnetization sectors."""
from .basis import (HilbertBudgetError, SectorBasis, SectorError, full_basis,
                    sector_basis, sector_labels, to_two)
from .hamiltonian import (BlockHamiltonian, SectorSystem, build_full, build_sector,
                          direction_operator, exchange_matrix, site_operator)
from .spectrum import (DEGENERACY_RTOL, LocalFieldSpectra, SectorSpectrum, SpectrumResult,
                       degeneracy_tol, expectation_sz, ground_scan,
                       local_parallel_field_spectrum, lowest_eigenpairs, plateau_direction,
                       sector_extremes, sector_ground_state)

__all__ = [
    "BlockHamiltonian", "DEGENERACY_RTOL", "HilbertBudgetError", "LocalFieldSpectra",
    "SectorBasis", "SectorError", "SectorSpectrum", "SectorSystem", "SpectrumResult",
    "build_full", "build_sector", "degeneracy_tol", "direction_operator", "exchange_matrix",
    "expectation_sz", "full_basis", "ground_scan", "local_parallel_field_spectrum",
    "lowest_eigenpairs", "plateau_direction", "sector_basis", "sector_extremes",
    "sector_ground_state", "sector_labels", "site_operator", "to_two",
]

"""Dice-Haldane lattice with gain/loss and non-reciprocal hopping:
exceptional-point cartography and non-Hermitian skin-effect diagnostics."""

from .errors import (ConvergenceFailure, DiceHaldaneError, GapClosure,
                     GeometryError, InsufficientDynamicRange, NegativeRadicand,
                     NoClosure, NoEdgeStates, NoEPInBracket,
                     ReferenceOnSpectrum, ZeroVector)
from .model import (GAMMA_POINT, K_POINT, K_PRIME_POINT, M_POINT, T_DEFAULT,
                    KPath, ModelParams, MomentumPoint,
                    analytic_dispersion_delta, analytic_ep_locus, bands_csv,
                    bands_on_path, bloch_hamiltonian, pt_commutator_norm)
from .spectra import (BiorthogonalSystem, decompose, find_ep, min_rigidity,
                      phase_rigidity, rigidity_scaling_fit)
from .ep import (HermitianPhase, PhaseDiagramGrid, chern_number, classify_gap,
                 critical_mass, ep_phase_diagram)
from .ribbon import (DisorderSpec, RibbonGeometry, build_ribbon,
                     edge_state_fraction, hermitian_bulk_gap,
                     ribbon_bands_kx, slab_hamiltonian)
from .nhse import (SkinDiagnostics, SpectralAreaResult, disorder_sweep,
                   edge_probability, ipr, ldos, skin_diagnostics,
                   spectral_area, spectral_winding, torus_spectrum,
                   winding_report)

__version__ = "0.1.0"

"""Parameter-space cartography: exceptional-point phase diagrams over
(delta, m/t2), lattice Chern numbers, gap classification, and the
critical staggered mass of the Hermitian topological transition."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GapClosure, NoClosure
from .model import (K_POINT, K_PRIME_POINT, ModelParams, MomentumPoint,
                    bloch_hamiltonian)
from .spectra import min_rigidity

EXCEPTIONAL_RIGIDITY = 1e-3
MESH_GAP_TOL = 1e-8
TOUCH_TOL_FACTOR = 1e-6

# Dual-basis vectors (units of 2*pi/a) satisfying b_i . a_j = delta_ij
# for the Bravais vectors used by the Bloch construction.
B1 = np.array([1.0, -1.0 / math.sqrt(3.0)])
B2 = np.array([0.0, 2.0 / math.sqrt(3.0)])


@dataclass(frozen=True)
class PhaseDiagramGrid:
    """Min-over-states phase rigidity on a (delta, m/t2) grid at fixed k."""

    delta_axis: np.ndarray
    mass_ratio_axis: np.ndarray
    rigidity: np.ndarray

    def exceptional_mask(self) -> np.ndarray:
        return self.rigidity < EXCEPTIONAL_RIGIDITY


@dataclass(frozen=True)
class HermitianPhase:
    chern_numbers: tuple
    gap_class: str
    in_topological_region: bool


def ep_phase_diagram(k: MomentumPoint, delta_range, mass_ratio_range,
                     t2: float, phi: float, resolution=(40, 40),
                     t: float = None) -> PhaseDiagramGrid:
    """Minimum phase rigidity at momentum k over a grid of gain/loss
    strength (rows) and mass-to-t2 ratio (columns)."""
    n_d, n_m = resolution
    if n_d < 2 or n_m < 2:
        raise ValueError("resolution must be at least 2x2")
    kwargs = {} if t is None else {"t": t}
    deltas = np.linspace(delta_range[0], delta_range[1], n_d)
    ratios = np.linspace(mass_ratio_range[0], mass_ratio_range[1], n_m)
    grid = np.empty((n_d, n_m))
    for i, d in enumerate(deltas):
        for j, r in enumerate(ratios):
            p = ModelParams(t2=t2, phi=phi, m=r * t2, delta=d, **kwargs)
            grid[i, j] = min_rigidity(bloch_hamiltonian(p, k))
    return PhaseDiagramGrid(delta_axis=deltas, mass_ratio_axis=ratios,
                            rigidity=grid)


def _bz_mesh(grid_n: int):
    """Fractional mesh points of the reciprocal cell, endpoint excluded."""
    f = np.arange(grid_n) / grid_n
    return f


def _bloch_on_mesh(p: ModelParams, grid_n: int) -> np.ndarray:
    f = _bz_mesh(grid_n)
    hs = np.empty((grid_n, grid_n, 3, 3), dtype=complex)
    for i, f1 in enumerate(f):
        for j, f2 in enumerate(f):
            kx, ky = f1 * B1 + f2 * B2
            hs[i, j] = bloch_hamiltonian(p, MomentumPoint(kx, ky))
    return hs


def chern_number(p: ModelParams, band: int, grid_n: int = 48) -> int:
    """Integer Chern number of one band via plaquette Berry-flux summation
    on a grid_n x grid_n mesh of the reciprocal cell.

    Requires a Hermitian parameter set and a band separated from its
    neighbors everywhere on the mesh (else GapClosure).
    """
    if not p.is_hermitian:
        raise ValueError("Chern numbers are computed for delta = gamma = 0")
    if band not in (0, 1, 2):
        raise ValueError("band index must be 0, 1, or 2")
    hs = _bloch_on_mesh(p, grid_n)
    vecs = np.empty((grid_n, grid_n, 3), dtype=complex)
    for i in range(grid_n):
        for j in range(grid_n):
            evals, evecs = np.linalg.eigh(hs[i, j])
            for nb in (band - 1, band + 1):
                if 0 <= nb <= 2 and abs(evals[band] - evals[nb]) <= MESH_GAP_TOL:
                    raise GapClosure(
                        f"band {band} touches band {nb} on the mesh")
            vecs[i, j] = evecs[:, band]
    flux_sum = 0.0
    for i in range(grid_n):
        for j in range(grid_n):
            u1 = np.vdot(vecs[i, j], vecs[(i + 1) % grid_n, j])
            u2 = np.vdot(vecs[(i + 1) % grid_n, j], vecs[(i + 1) % grid_n, (j + 1) % grid_n])
            u3 = np.vdot(vecs[(i + 1) % grid_n, (j + 1) % grid_n], vecs[i, (j + 1) % grid_n])
            u4 = np.vdot(vecs[i, (j + 1) % grid_n], vecs[i, j])
            flux_sum += np.angle(u1 * u2 * u3 * u4)
    return int(round(flux_sum / (2.0 * np.pi)))


def classify_gap(p: ModelParams, grid_n: int = 96) -> HermitianPhase:
    """Classify the Hermitian three-band structure by which inter-band
    gaps survive: all-gapped (AG), valence-gapped (VG), conduction-gapped
    (CG), or metallic.

    A gap counts as open when the indirect separation between the band
    ranges exceeds 1e-6 * t; touching or overlapping ranges close it.
    """
    if not p.is_hermitian:
        raise ValueError("gap classification requires delta = gamma = 0")
    f = _bz_mesh(grid_n)
    bands = np.empty((grid_n, grid_n, 3))
    for i, f1 in enumerate(f):
        for j, f2 in enumerate(f):
            kx, ky = f1 * B1 + f2 * B2
            bands[i, j] = np.linalg.eigvalsh(
                bloch_hamiltonian(p, MomentumPoint(kx, ky)))
    tol = TOUCH_TOL_FACTOR * p.t
    lower_sep = bands[..., 1].min() - bands[..., 0].max()
    upper_sep = bands[..., 2].min() - bands[..., 1].max()
    lower_open = lower_sep > tol
    upper_open = upper_sep > tol
    if lower_open and upper_open:
        gap_class = "AG"
    elif lower_open:
        gap_class = "VG"
    elif upper_open:
        gap_class = "CG"
    else:
        gap_class = "metallic"

    boundary = 3.0 * math.sqrt(3.0) * abs(p.t2) * abs(math.sin(p.phi))
    topo = abs(p.m) < boundary and boundary > 0.0
    cherns = []
    for band in range(3):
        try:
            cherns.append(chern_number(p, band, grid_n=24))
        except GapClosure:
            cherns.append(0)
    return HermitianPhase(chern_numbers=tuple(cherns), gap_class=gap_class,
                          in_topological_region=topo)


def _valley_gap(t2: float, phi: float, m: float, t: float) -> float:
    """Smallest direct inter-band separation over the two valley momenta."""
    p = ModelParams(t=t, t2=t2, phi=phi, m=m)
    gap = np.inf
    for k in (K_POINT, K_PRIME_POINT):
        evals = np.linalg.eigvalsh(bloch_hamiltonian(p, k))
        gap = min(gap, np.diff(evals).min())
    return float(gap)


def critical_mass(t2: float, phi: float, t: float = None,
                  bracket_hi: float = None) -> float:
    """Boundary staggered mass where the direct gap at a valley momentum
    closes, found by golden-section search over m >= 0.

    The closure is checked at both valley momenta; the boundary value is
    the same for either sign of the mass.  Raises NoClosure when the gap
    never reaches 1e-9 inside the bracket.
    """
    if not t2 > 0:
        raise ValueError("t2 must be positive")
    from .model import T_DEFAULT
    t = T_DEFAULT if t is None else t
    # The boundary grows linearly with t2; 12*t2 + 1e-3 safely brackets it.
    hi = bracket_hi if bracket_hi is not None else 12.0 * t2 + 1e-3

    def gap(m):
        return _valley_gap(t2, phi, m, t)

    if gap(0.0) < 1e-9:
        return 0.0

    def refine(a, b):
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        fc, fd = gap(c), gap(d)
        while b - a > 1e-13:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - invphi * (b - a)
                fc = gap(c)
            else:
                a, c, fc = c, d, fd
                d = a + invphi * (b - a)
                fd = gap(d)
        return (a + b) / 2.0

    # The gap can close at more than one mass (for example at phi = 0 it
    # also closes where the rim level crosses the flat band); the boundary
    # is the smallest closure, so local minima are refined in order of m.
    grid = np.linspace(0.0, hi, 400)
    vals = np.array([gap(m) for m in grid])
    for i in range(1, len(grid) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            m_star = refine(grid[i - 1], grid[i + 1])
            if gap(m_star) < 1e-9:
                return m_star
    raise NoClosure(f"gap does not close for m in [0, {hi}]")

"""Real-space dice-Haldane lattices on ribbons, cylinders, and tori.

Geometry conventions: unit cells are indexed by (row r, column c) with
r in [0, ny) counting hexagonal layers stacked along y and c in [0, nx)
counting cells along the chain direction x.  Each cell holds the three
sublattice sites A, B (hub), C with dense ids 3*(r*nx + c) + s.  The
non-reciprocal bond is the same-cell A-B / B-C bond, amplified in the
backward (toward smaller x) direction for gamma > 0.

The site table is drawn sheared-to-rectangular: x depends only on the
position along the chain and y only on the layer index, so edge masks by
x-rank or by row are geometry-independent.  Bond connectivity is defined
by the builder, not inferred from drawn positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .errors import GeometryError, NoEdgeStates
from .model import ModelParams, MomentumPoint, bloch_hamiltonian

SUBLATTICES = ("A", "B", "C")
ROW_SPACING = math.sqrt(3.0) / 2.0
CELL_SPACING = math.sqrt(3.0) / 2.0
SUBLATTICE_X_OFFSET = (-1.0 / math.sqrt(3.0), 0.0, 1.0 / math.sqrt(3.0))

# Bond offset tables, applied from the cell of the A (or B) site to the
# cell of its partner B (or C) site, as (d_row, d_col).  The (0, 0) entry
# is the same-cell bond that carries the non-reciprocity.
NN_OFFSETS = ((0, 0), (0, -1), (-1, -1))
NNN_OFFSETS = ((1, 0), (-1, -1), (0, 1))

DENSE_FALLBACK_N = 64
BULK_GAP_MESH = 96


@dataclass(frozen=True)
class RibbonGeometry:
    """Finite lattice layout: nx cells per layer, ny layers, boundary
    conditions per axis, and the drawn site table."""

    nx: int
    ny: int
    bc_x: str = "open"
    bc_y: str = "open"

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise GeometryError("nx and ny must be positive")
        for bc in (self.bc_x, self.bc_y):
            if bc not in ("open", "periodic"):
                raise GeometryError(f"unknown boundary condition {bc!r}")

    @property
    def n_sites(self) -> int:
        return 3 * self.nx * self.ny

    def site_id(self, r: int, c: int, s: int) -> int:
        return 3 * (r * self.nx + c) + s

    def site_table(self):
        """Rows of (site id, sublattice, x, y)."""
        table = []
        for r in range(self.ny):
            for c in range(self.nx):
                for s in range(3):
                    table.append((self.site_id(r, c, s), SUBLATTICES[s],
                                  c * CELL_SPACING + SUBLATTICE_X_OFFSET[s],
                                  r * ROW_SPACING))
        return table

    def site_arrays(self):
        """(x, y, row, col, sublattice index) as parallel arrays."""
        n = self.n_sites
        xs = np.empty(n)
        ys = np.empty(n)
        rows = np.empty(n, dtype=int)
        cols = np.empty(n, dtype=int)
        subs = np.empty(n, dtype=int)
        for r in range(self.ny):
            for c in range(self.nx):
                for s in range(3):
                    i = self.site_id(r, c, s)
                    xs[i] = c * CELL_SPACING + SUBLATTICE_X_OFFSET[s]
                    ys[i] = r * ROW_SPACING
                    rows[i], cols[i], subs[i] = r, c, s
        return xs, ys, rows, cols, subs

    def wrap(self, r: int, c: int):
        """Map a possibly out-of-range cell index to a lattice cell, or
        None when the bond leaves an open boundary."""
        if self.bc_y == "periodic":
            r %= self.ny
        if self.bc_x == "periodic":
            c %= self.nx
        if 0 <= r < self.ny and 0 <= c < self.nx:
            return r, c
        return None


@dataclass(frozen=True)
class DisorderSpec:
    """Seeded i.i.d. on-site disorder: each site gets strength * omega
    with omega uniform on [-1, 1] (independent real and imaginary draws
    in complex mode)."""

    strength: float
    kind: str = "real"
    seed: int = 0

    def __post_init__(self):
        if self.strength < 0:
            raise ValueError("disorder strength must be nonnegative")
        if self.kind not in ("real", "imaginary", "complex"):
            raise ValueError(f"unknown disorder kind {self.kind!r}")

    def sample(self, n: int, realization: int = 0) -> np.ndarray:
        rng = np.random.default_rng([self.seed, realization])
        if self.kind == "real":
            return self.strength * rng.uniform(-1.0, 1.0, n).astype(complex)
        if self.kind == "imaginary":
            return 1j * self.strength * rng.uniform(-1.0, 1.0, n)
        re = rng.uniform(-1.0, 1.0, n)
        im = rng.uniform(-1.0, 1.0, n)
        return self.strength * (re + 1j * im)


def build_ribbon(geom: RibbonGeometry, p: ModelParams,
                 dis: DisorderSpec | None = None,
                 nonreciprocity_region: str = "bulk",
                 realization: int = 0):
    """Assemble the real-space Hamiltonian on the given geometry.

    Returns a CSR sparse matrix, or a dense ndarray when the site count
    is below the dense fallback threshold.  nonreciprocity_region picks
    where the gamma asymmetry applies: everywhere ('bulk'), only in the
    first and last layer ('edges_only'), or nowhere ('none', requiring
    gamma = 0).
    """
    if nonreciprocity_region not in ("bulk", "edges_only", "none"):
        raise GeometryError(
            f"unknown nonreciprocity region {nonreciprocity_region!r}")
    if nonreciprocity_region == "none" and p.gamma != 0.0:
        raise GeometryError("gamma must be zero when region is 'none'")
    if nonreciprocity_region == "edges_only" and geom.bc_y == "periodic":
        raise GeometryError("edges_only region needs open y boundaries")
    n = geom.n_sites
    rows, cols, vals = [], [], []

    def add(i, j, v):
        rows.append(i)
        cols.append(j)
        vals.append(v)

    t, t2, phi = p.t, p.t2, p.phi
    fwd_a = t2 * np.exp(-1j * phi)
    bwd_a = t2 * np.exp(1j * phi)
    for r in range(geom.ny):
        edge_row = r in (0, geom.ny - 1)
        gam = p.gamma
        if nonreciprocity_region == "edges_only" and not edge_row:
            gam = 0.0
        if nonreciprocity_region == "none":
            gam = 0.0
        for c in range(geom.nx):
            for dr, dc in NN_OFFSETS:
                tgt = geom.wrap(r + dr, c + dc)
                if tgt is None:
                    continue
                rb, cb = tgt
                same_cell = (dr, dc) == (0, 0)
                wf = t + gam if same_cell else t
                wb = t - gam if same_cell else t
                add(geom.site_id(r, c, 0), geom.site_id(rb, cb, 1), wf)
                add(geom.site_id(rb, cb, 1), geom.site_id(r, c, 0), wb)
                add(geom.site_id(r, c, 1), geom.site_id(rb, cb, 2), wf)
                add(geom.site_id(rb, cb, 2), geom.site_id(r, c, 1), wb)
            if t2 != 0.0:
                for dr, dc in NNN_OFFSETS:
                    tgt = geom.wrap(r + dr, c + dc)
                    if tgt is None:
                        continue
                    r2, c2 = tgt
                    add(geom.site_id(r, c, 0), geom.site_id(r2, c2, 0), fwd_a)
                    add(geom.site_id(r2, c2, 0), geom.site_id(r, c, 0), bwd_a)
                    add(geom.site_id(r, c, 2), geom.site_id(r2, c2, 2), bwd_a)
                    add(geom.site_id(r2, c2, 2), geom.site_id(r, c, 2), fwd_a)
            add(geom.site_id(r, c, 0), geom.site_id(r, c, 0), p.m + 1j * p.delta)
            add(geom.site_id(r, c, 2), geom.site_id(r, c, 2), -p.m - 1j * p.delta)
    h = sp.csr_matrix((vals, (rows, cols)), shape=(n, n), dtype=complex)
    if dis is not None and dis.strength > 0.0:
        h = h + sp.diags(dis.sample(n, realization))
    if n < DENSE_FALLBACK_N:
        return h.toarray()
    return h.tocsr()


def hamiltonian_entries(h):
    """Coordinate-format entries (row, col, amplitude) of a built matrix."""
    m = sp.coo_matrix(h)
    return list(zip(m.row.tolist(), m.col.tolist(), m.data.tolist()))


def slab_hamiltonian(p: ModelParams, n_open: int, periodic_axis: str,
                     k: float) -> np.ndarray:
    """Mixed-boundary Bloch Hamiltonian: periodic along one axis with
    dimensionless momentum k in [0, 1), open along the other with n_open
    cells.

    periodic_axis 'x' keeps k conjugate to steps along the chains and
    stacks n_open open layers; 'y' keeps k conjugate to layer steps and
    leaves n_open open cells along the chains.
    """
    if periodic_axis not in ("x", "y"):
        raise GeometryError(f"unknown periodic axis {periodic_axis!r}")
    if n_open < 2:
        raise GeometryError("n_open must be at least 2")
    ph = np.exp(2j * np.pi * k)
    n = 3 * n_open
    h = np.zeros((n, n), dtype=complex)
    t, t2, phi, gamma = p.t, p.t2, p.phi, p.gamma

    def sid(i, s):
        return 3 * i + s

    for i in range(n_open):
        for dr, dc in NN_OFFSETS:
            if periodic_axis == "x":
                j, f = i + dr, ph ** dc
            else:
                j, f = i + dc, ph ** dr
            if not 0 <= j < n_open:
                continue
            same_cell = (dr, dc) == (0, 0)
            wf = t + gamma if same_cell else t
            wb = t - gamma if same_cell else t
            h[sid(i, 0), sid(j, 1)] += wf * f
            h[sid(j, 1), sid(i, 0)] += wb * np.conj(f)
            h[sid(i, 1), sid(j, 2)] += wf * f
            h[sid(j, 2), sid(i, 1)] += wb * np.conj(f)
        if t2 != 0.0:
            for dr, dc in NNN_OFFSETS:
                if periodic_axis == "x":
                    j, f = i + dr, ph ** dc
                else:
                    j, f = i + dc, ph ** dr
                if not 0 <= j < n_open:
                    continue
                h[sid(i, 0), sid(j, 0)] += t2 * np.exp(-1j * phi) * f
                h[sid(j, 0), sid(i, 0)] += t2 * np.exp(1j * phi) * np.conj(f)
                h[sid(i, 2), sid(j, 2)] += t2 * np.exp(1j * phi) * f
                h[sid(j, 2), sid(i, 2)] += t2 * np.exp(-1j * phi) * np.conj(f)
        h[sid(i, 0), sid(i, 0)] += p.m + 1j * p.delta
        h[sid(i, 2), sid(i, 2)] += -p.m - 1j * p.delta
    return h


def ribbon_bands_kx(p: ModelParams, ny: int, n_k: int):
    """Complex band structure of the ribbon periodic along x and open
    over ny layers, sampled on the momentum path X-Gamma-X (kx from -1/2
    to 1/2 in dimensionless units).

    Returns (kx values, energies) where energies[i] holds the 3*ny
    eigenvalues at kx[i], sorted by real part.
    """
    if ny < 2:
        raise GeometryError("ny must be at least 2")
    kxs = np.linspace(-0.5, 0.5, n_k)
    energies = np.empty((n_k, 3 * ny), dtype=complex)
    for i, kx in enumerate(kxs):
        evals = np.linalg.eigvals(slab_hamiltonian(p, ny, "x", kx))
        energies[i] = evals[np.lexsort((evals.imag, evals.real))]
    return kxs, energies


@lru_cache(maxsize=128)
def hermitian_bulk_gap(p: ModelParams, mesh_n: int = BULK_GAP_MESH) -> float:
    """Indirect gap between the lowest and highest band of the clean
    Hermitian reference (delta = gamma = 0) over a Brillouin-zone mesh."""
    from .ep import B1, B2
    p0 = p.replace(delta=0.0, gamma=0.0)
    f = np.arange(mesh_n) / mesh_n
    lo = -np.inf
    hi = np.inf
    for f1 in f:
        for f2 in f:
            kx, ky = f1 * B1 + f2 * B2
            evals = np.linalg.eigvalsh(bloch_hamiltonian(p0, MomentumPoint(kx, ky)))
            lo = max(lo, evals[0])
            hi = min(hi, evals[2])
    return float(hi - lo)


def edge_state_fraction(p: ModelParams, ny: int, n_k: int = 60,
                        dissipation_tol: float | None = None,
                        edge_rows: int = 1) -> float:
    """Fraction of topological edge states that stay free of dissipation
    or amplification.

    Edge states are in-gap states (|Re E| below half the clean Hermitian
    bulk gap) carrying more than half their weight on a single outermost
    layer of the x-periodic ribbon.  The returned fraction counts those
    with |Im E| below dissipation_tol; the tolerance defaults to the
    clean bulk gap, the energy scale below which an edge state is still
    spectrally distinguishable from the dissipative bulk.

    Raises NoEdgeStates when the Hermitian reference finds no edge
    states at all (for example outside the topological region).
    """
    if ny < 2:
        raise GeometryError("ny must be at least 2")
    gap = hermitian_bulk_gap(p)
    if dissipation_tol is None:
        dissipation_tol = gap
    window = gap / 2.0

    def edge_states(params):
        found = []
        for k in np.linspace(0.0, 1.0, n_k, endpoint=False):
            h = slab_hamiltonian(params, ny, "x", k)
            evals, evecs = np.linalg.eig(h)
            weights = np.abs(evecs) ** 2
            weights /= weights.sum(axis=0)
            per_layer = weights.reshape(ny, 3, -1).sum(axis=1)
            top = per_layer[:edge_rows].sum(axis=0)
            bottom = per_layer[-edge_rows:].sum(axis=0)
            in_gap = np.abs(evals.real) < window
            on_edge = np.maximum(top, bottom) > 0.5
            found.extend(evals[in_gap & on_edge])
        return np.array(found)

    reference = edge_states(p.replace(delta=0.0, gamma=0.0))
    if reference.size == 0:
        raise NoEdgeStates("the Hermitian reference ribbon has no edge states")
    states = edge_states(p)
    if states.size == 0:
        return 0.0
    clean = np.abs(states.imag) < dissipation_tol
    return float(np.count_nonzero(clean)) / states.size

"""Skin-effect diagnostics: local density of states, inverse
participation ratios, edge probabilities, complex-spectrum area, and
spectral winding numbers, plus disorder-averaged sweeps.

For non-reciprocal ribbons with open boundaries the eigenproblem is
solved in a balanced gauge: a diagonal similarity transform that turns
the same-cell bond pair (t + gamma, t - gamma) into a reciprocal
effective amplitude.  This removes the exponential non-normality of the
raw matrix, so eigenvectors (and therefore LDOS, IPR, and edge
probabilities) stay numerically trustworthy at large gamma, and the
physical amplitudes are recovered exactly by undoing the site-wise
rescaling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.ndimage as ndi
import scipy.sparse as sp

from .errors import ConvergenceFailure, GeometryError, ReferenceOnSpectrum, ZeroVector
from .ep import B1, B2
from .model import ModelParams, MomentumPoint, bloch_hamiltonian
from .ribbon import (DisorderSpec, RibbonGeometry, build_ribbon,
                     slab_hamiltonian)

SPECTRUM_DISTANCE_TOL = 1e-6
DEFAULT_RESOLUTION = 512
DEFAULT_MIN_PIXELS = 16
DEFAULT_X_EDGE = 5


@dataclass(frozen=True)
class SkinDiagnostics:
    """Per-site LDOS and per-state IPR, edge probability, and complex
    energy, with states sorted by Re(E)."""

    ldos: np.ndarray
    ipr: np.ndarray
    edge_prob: np.ndarray
    energies: np.ndarray


@dataclass(frozen=True)
class SpectralAreaResult:
    """Rasterized complex-spectrum area in pixel-normalized energy^2
    units; zero when the enclosed interior is below the arc-thickness
    threshold."""

    area: float
    occupied_pixels: int
    interior_pixels: int
    resolution: int
    bounding_box: tuple


def ipr(psi: np.ndarray) -> float:
    """Inverse participation ratio sum|psi|^4 / (sum|psi|^2)^2."""
    w = np.abs(np.asarray(psi)) ** 2
    norm = w.sum()
    if norm == 0.0:
        raise ZeroVector("IPR of the zero vector is undefined")
    return float((w ** 2).sum() / norm ** 2)


def _edge_mask(geom: RibbonGeometry, x_edge: int) -> np.ndarray:
    xs = geom.site_arrays()[0]
    distinct = np.unique(np.round(xs, 9))
    if x_edge < 1 or x_edge > distinct.size:
        raise GeometryError("x_edge outside the range of distinct x values")
    return xs <= distinct[x_edge - 1] + 1e-9


def edge_probability(psi: np.ndarray, geom: RibbonGeometry,
                     x_edge: int = DEFAULT_X_EDGE) -> float:
    """Weight fraction carried by the x_edge leftmost distinct x
    positions (five lattice sites per layer by default)."""
    psi = np.asarray(psi)
    if psi.shape[0] != geom.n_sites:
        raise GeometryError("state dimension does not match the geometry")
    w = np.abs(psi) ** 2
    norm = w.sum()
    if norm == 0.0:
        raise ZeroVector("edge probability of the zero vector is undefined")
    return float(w[_edge_mask(geom, x_edge)].sum() / norm)


def _gauge_powers(geom: RibbonGeometry, p: ModelParams):
    """Site exponents u and base rho of the balancing similarity
    S = diag(rho^u) for the same-cell non-reciprocal bonds."""
    n = geom.n_sites
    u = np.empty(n)
    for r in range(geom.ny):
        for c in range(geom.nx):
            i = geom.site_id(r, c, 0)
            u[i] = 1 - c
            u[i + 1] = -c
            u[i + 2] = -1 - c
    rho = np.sqrt(complex(p.t - p.gamma) / complex(p.t + p.gamma))
    return u, rho


def balanced_hamiltonian(geom: RibbonGeometry, p: ModelParams,
                         dis: DisorderSpec | None = None,
                         realization: int = 0) -> np.ndarray:
    """Gauge-transformed dense Hamiltonian S H S^{-1} for a fully open
    geometry with bulk non-reciprocity.  Same spectrum as build_ribbon;
    same-cell bonds become the reciprocal sqrt((t+gamma)(t-gamma))."""
    if geom.bc_x != "open" or geom.bc_y != "open":
        raise GeometryError("the balanced gauge requires open boundaries")
    u, rho = _gauge_powers(geom, p)
    n = geom.n_sites
    h = np.zeros((n, n), dtype=complex)
    t, t2, phi = p.t, p.t2, p.phi
    wbar = np.sqrt(complex(p.t + p.gamma) * complex(p.t - p.gamma))
    from .ribbon import NN_OFFSETS, NNN_OFFSETS
    for r in range(geom.ny):
        for c in range(geom.nx):
            for dr, dc in NN_OFFSETS:
                tgt = geom.wrap(r + dr, c + dc)
                if tgt is None:
                    continue
                r2, c2 = tgt
                w = wbar if (dr, dc) == (0, 0) else t
                for s_from, s_to in ((0, 1), (1, 2)):
                    i = geom.site_id(r, c, s_from)
                    j = geom.site_id(r2, c2, s_to)
                    h[i, j] += w
                    h[j, i] += w
            if t2 != 0.0:
                for dr, dc in NNN_OFFSETS:
                    tgt = geom.wrap(r + dr, c + dc)
                    if tgt is None:
                        continue
                    r2, c2 = tgt
                    for s, fwd, bwd in ((0, np.exp(-1j * phi), np.exp(1j * phi)),
                                        (2, np.exp(1j * phi), np.exp(-1j * phi))):
                        i = geom.site_id(r, c, s)
                        j = geom.site_id(r2, c2, s)
                        h[i, j] += t2 * fwd * rho ** (u[i] - u[j])
                        h[j, i] += t2 * bwd * rho ** (u[j] - u[i])
            ia = geom.site_id(r, c, 0)
            h[ia, ia] += p.m + 1j * p.delta
            h[ia + 2, ia + 2] += -p.m - 1j * p.delta
    if dis is not None and dis.strength > 0.0:
        h[np.diag_indices(n)] += dis.sample(n, realization)
    return h


def _dense(h) -> np.ndarray:
    return h.toarray() if sp.issparse(h) else np.asarray(h)


def ldos(h) -> np.ndarray:
    """Per-site local density of states: sum over all eigenstates of the
    unit-normalized right-eigenvector weight at each site."""
    mat = _dense(h)
    try:
        if np.allclose(mat, mat.conj().T, atol=1e-12):
            # orthonormal basis keeps degenerate subspaces honest
            _, vecs = np.linalg.eigh(mat)
        else:
            _, vecs = np.linalg.eig(mat)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    w = np.abs(vecs) ** 2
    w /= w.sum(axis=0)
    return w.sum(axis=1)


def skin_diagnostics(geom: RibbonGeometry, p: ModelParams,
                     dis: DisorderSpec | None = None,
                     nonreciprocity_region: str = "bulk",
                     x_edge: int = DEFAULT_X_EDGE,
                     realization: int = 0) -> SkinDiagnostics:
    """Full diagonalization of a finite lattice with per-site LDOS and
    per-state IPR / edge probability, using the balanced gauge whenever
    it applies (open boundaries, bulk non-reciprocity, gamma != 0)."""
    use_gauge = (p.gamma != 0.0 and nonreciprocity_region == "bulk"
                 and geom.bc_x == "open" and geom.bc_y == "open")
    if use_gauge:
        h = balanced_hamiltonian(geom, p, dis, realization)
    else:
        h = _dense(build_ribbon(geom, p, dis, nonreciprocity_region,
                                realization))
    try:
        evals, vecs = np.linalg.eig(h)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    if use_gauge:
        u, rho = _gauge_powers(geom, p)
        scale = np.abs(rho) ** (-u)
        mags = scale[:, None] * np.abs(vecs)
        mags /= np.sqrt((mags ** 2).sum(axis=0))
    else:
        mags = np.abs(vecs)
        mags /= np.sqrt((mags ** 2).sum(axis=0))
    order = np.lexsort((evals.imag, evals.real))
    evals = evals[order]
    mags = mags[:, order]
    w = mags ** 2
    site_ldos = w.sum(axis=1)
    state_ipr = (w ** 2).sum(axis=0)
    mask = _edge_mask(geom, x_edge)
    state_edge = w[mask].sum(axis=0)
    return SkinDiagnostics(ldos=site_ldos, ipr=state_ipr,
                           edge_prob=state_edge, energies=evals)


def torus_spectrum(p: ModelParams, mesh_n: int = 120) -> np.ndarray:
    """Complex Bloch eigenvalues accumulated over a mesh_n x mesh_n
    periodic momentum mesh (the spectrum of a commensurate torus)."""
    out = np.empty(3 * mesh_n * mesh_n, dtype=complex)
    f = np.arange(mesh_n) / mesh_n
    idx = 0
    for f1 in f:
        for f2 in f:
            kx, ky = f1 * B1 + f2 * B2
            out[idx:idx + 3] = np.linalg.eigvals(
                bloch_hamiltonian(p, MomentumPoint(kx, ky)))
            idx += 3
    return out


def _rasterize(energies: np.ndarray, resolution: int):
    e = np.asarray(energies, dtype=complex)
    re_lo, re_hi = e.real.min(), e.real.max()
    im_lo, im_hi = e.imag.min(), e.imag.max()
    span_re = max(re_hi - re_lo, 1e-12)
    span_im = max(im_hi - im_lo, 1e-12)
    re_lo -= 0.05 * span_re
    re_hi += 0.05 * span_re
    im_lo -= 0.05 * span_im
    im_hi += 0.05 * span_im
    ix = np.clip(((e.real - re_lo) / (re_hi - re_lo) * resolution).astype(int),
                 0, resolution - 1)
    iy = np.clip(((e.imag - im_lo) / (im_hi - im_lo) * resolution).astype(int),
                 0, resolution - 1)
    occ = np.zeros((resolution, resolution), dtype=bool)
    occ[iy, ix] = True
    return occ, (re_lo, re_hi, im_lo, im_hi)


def spectral_area(energies, resolution: int = DEFAULT_RESOLUTION,
                  min_pixels: int = DEFAULT_MIN_PIXELS) -> SpectralAreaResult:
    """Area enclosed by a complex eigenvalue cloud.

    Rasterizes the energies on a resolution^2 grid over the 5%-padded
    bounding box, fills holes unreachable from the outside, and reports
    (occupied + interior) pixel area in energy^2 units.  Arcs, whose
    interiors fall below min_pixels, report zero area.
    """
    e = np.atleast_1d(np.asarray(energies, dtype=complex))
    if e.size < 1:
        raise ValueError("need at least one energy")
    if resolution < 32:
        raise ValueError("resolution must be at least 32")
    occ, box = _rasterize(e, resolution)
    filled = ndi.binary_fill_holes(occ)
    interior = int(filled.sum() - occ.sum())
    px_area = ((box[1] - box[0]) / resolution) * ((box[3] - box[2]) / resolution)
    if interior < min_pixels:
        area = 0.0
    else:
        area = float(filled.sum() * px_area)
    return SpectralAreaResult(area=area, occupied_pixels=int(occ.sum()),
                              interior_pixels=interior, resolution=resolution,
                              bounding_box=box)


def _axis_of(geometry: str) -> str:
    if geometry == "pbc_x_obc_y":
        return "x"
    if geometry == "pbc_y_obc_x":
        return "y"
    raise GeometryError(f"unknown geometry {geometry!r}")


def spectral_winding(p: ModelParams, geometry: str, e_ref: complex,
                     n_k: int = 600, n_open: int = 24) -> int:
    """Integer winding of det(H_1D(k) - e_ref) around zero as k
    traverses the periodic axis of the mixed-boundary geometry.

    Raises ReferenceOnSpectrum when e_ref sits within 1e-6 of the
    sampled spectral curve.
    """
    axis = _axis_of(geometry)
    ks = np.arange(n_k) / n_k
    angles = np.empty(n_k + 1)
    min_dist = np.inf
    for i, k in enumerate(ks):
        h = slab_hamiltonian(p, n_open, axis, k)
        evals = np.linalg.eigvals(h)
        min_dist = min(min_dist, np.abs(evals - e_ref).min())
        sign, _ = np.linalg.slogdet(h - e_ref * np.eye(h.shape[0]))
        angles[i] = np.angle(sign)
    if min_dist < SPECTRUM_DISTANCE_TOL:
        raise ReferenceOnSpectrum(
            f"e_ref within {min_dist:.2e} of the spectral curve")
    angles[-1] = angles[0]
    total = np.unwrap(angles)
    return int(round((total[-1] - total[0]) / (2.0 * np.pi)))


def winding_report(p: ModelParams, geometry: str, n_open: int = 24,
                   n_k_cloud: int = 120, n_k: int = 600,
                   resolution: int = DEFAULT_RESOLUTION,
                   min_pixels: int = DEFAULT_MIN_PIXELS) -> dict:
    """Acceptance-rule winding: rasterize the mixed-boundary spectrum,
    locate enclosed interior regions, evaluate the determinant winding
    at the innermost point of each region, and report the maximum
    |winding| (0 when no region encloses at least min_pixels)."""
    axis = _axis_of(geometry)
    cloud = []
    for k in np.arange(n_k_cloud) / n_k_cloud:
        cloud.append(np.linalg.eigvals(slab_hamiltonian(p, n_open, axis, k)))
    cloud = np.concatenate(cloud)
    occ, box = _rasterize(cloud, resolution)
    filled = ndi.binary_fill_holes(occ)
    interior = filled & ~occ
    labels, n_regions = ndi.label(interior)
    refs, windings = [], []
    for lab in range(1, n_regions + 1):
        region = labels == lab
        if region.sum() < min_pixels:
            continue
        dist = ndi.distance_transform_edt(region)
        iy, ix = np.unravel_index(np.argmax(dist), dist.shape)
        e_ref = complex(box[0] + (ix + 0.5) / resolution * (box[1] - box[0]),
                        box[2] + (iy + 0.5) / resolution * (box[3] - box[2]))
        try:
            w = spectral_winding(p, geometry, e_ref, n_k=n_k, n_open=n_open)
        except ReferenceOnSpectrum:
            continue
        refs.append(e_ref)
        windings.append(w)
    w_max = max((abs(w) for w in windings), default=0)
    return {"W": int(w_max), "e_refs": refs, "windings": windings}


def disorder_sweep(geom: RibbonGeometry, p: ModelParams,
                   dis_template: DisorderSpec, n_realizations: int,
                   nonreciprocity_region: str = "bulk",
                   x_edge: int = DEFAULT_X_EDGE) -> SkinDiagnostics:
    """Ensemble-averaged diagnostics over seeded disorder realizations.

    Realization i draws from a generator seeded by (base seed, i), so the
    sweep is deterministic given the template seed.  Per-site LDOS is
    averaged directly; per-state quantities are averaged after sorting
    states by Re(E) within each realization.
    """
    if n_realizations < 1:
        raise ValueError("need at least one realization")
    acc = None
    for i in range(n_realizations):
        try:
            d = skin_diagnostics(geom, p, dis_template, nonreciprocity_region,
                                 x_edge, realization=i)
        except Exception as exc:
            raise ConvergenceFailure(
                f"realization {i} (seed ({dis_template.seed}, {i})) failed: {exc}"
            ) from exc
        if acc is None:
            acc = [d.ldos.copy(), d.ipr.copy(), d.edge_prob.copy(),
                   d.energies.copy()]
        else:
            acc[0] += d.ldos
            acc[1] += d.ipr
            acc[2] += d.edge_prob
            acc[3] += d.energies
    return SkinDiagnostics(ldos=acc[0] / n_realizations,
                           ipr=acc[1] / n_realizations,
                           edge_prob=acc[2] / n_realizations,
                           energies=acc[3] / n_realizations)

import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from dicehaldane.ep import B1, B2
from dicehaldane.errors import GeometryError, NoEdgeStates
from dicehaldane.model import ModelParams, MomentumPoint, bloch_hamiltonian
from dicehaldane.ribbon import (DisorderSpec, RibbonGeometry, build_ribbon,
                                edge_state_fraction, hamiltonian_entries,
                                hermitian_bulk_gap, ribbon_bands_kx,
                                slab_hamiltonian)

T2 = 0.03
PHI = math.pi / 2


def dense(h):
    return h.toarray() if sp.issparse(h) else np.asarray(h)


def torus_vs_bloch_error(nx, ny, p):
    geom = RibbonGeometry(nx, ny, "periodic", "periodic")
    real = np.linalg.eigvals(dense(build_ribbon(geom, p)))
    bloch = []
    # rows (ny, stacking axis) advance along a1, columns (nx, chain axis)
    # along a2, so their commensurate fractions pair with the dual
    # vectors B1 and B2 respectively
    for i in range(nx):
        for j in range(ny):
            kx, ky = (j / ny) * B1 + (i / nx) * B2
            bloch.extend(np.linalg.eigvals(
                bloch_hamiltonian(p, MomentumPoint(kx, ky))))
    bloch = np.array(bloch)
    cost = np.abs(real[:, None] - bloch[None, :])
    from scipy.optimize import linear_sum_assignment
    r, c = linear_sum_assignment(cost)
    return cost[r, c].max()


def test_geometry_site_count_and_reference_scales():
    assert RibbonGeometry(24, 36).n_sites == 2592
    assert RibbonGeometry(24, 12).n_sites == 864
    assert RibbonGeometry(8, 12).n_sites == 288


def test_geometry_validation():
    with pytest.raises(GeometryError):
        RibbonGeometry(0, 4)
    with pytest.raises(GeometryError):
        RibbonGeometry(4, 4, bc_x="twisted")


def test_site_table_dense_ids():
    geom = RibbonGeometry(3, 2)
    table = geom.site_table()
    assert [row[0] for row in table] == list(range(geom.n_sites))
    assert {row[1] for row in table} == {"A", "B", "C"}


def test_torus_matches_bloch_hermitian_and_not():
    rng = np.random.default_rng(11)
    for _ in range(3):
        p = ModelParams(t2=rng.uniform(0, 0.08), phi=rng.uniform(-3, 3),
                        m=rng.uniform(-0.2, 0.2))
        assert torus_vs_bloch_error(3, 2, p) < 1e-9
    for _ in range(3):
        p = ModelParams(t2=rng.uniform(0, 0.08), phi=rng.uniform(-3, 3),
                        m=rng.uniform(-0.2, 0.2), delta=rng.uniform(0, 1.5),
                        gamma=rng.uniform(0, 1.5))
        assert torus_vs_bloch_error(2, 3, p) < 1e-9


def test_hermiticity_bookkeeping():
    geom = RibbonGeometry(4, 3)
    p = ModelParams(t2=T2, phi=PHI, m=0.06)
    h = dense(build_ribbon(geom, p))
    assert np.abs(h - h.conj().T).max() == 0.0
    dis = DisorderSpec(strength=0.5, kind="real", seed=3)
    h = dense(build_ribbon(geom, p, dis))
    assert np.abs(h - h.conj().T).max() == 0.0
    dis_im = DisorderSpec(strength=0.5, kind="imaginary", seed=3)
    h = dense(build_ribbon(geom, p, dis_im))
    anti = h - h.conj().T
    off_diag = anti - np.diag(np.diag(anti))
    assert np.abs(off_diag).max() == 0.0
    assert np.abs(np.diag(anti)).max() > 0.0


def test_gamma_bond_orientation():
    """Each same-cell bond carries t + gamma forward (A->B, B->C) and
    t - gamma backward."""
    geom = RibbonGeometry(3, 3)
    p = ModelParams(gamma=0.4)
    h = dense(build_ribbon(geom, p))
    i = geom.site_id(1, 1, 0)
    assert h[i, i + 1] == pytest.approx(p.t + 0.4)
    assert h[i + 1, i] == pytest.approx(p.t - 0.4)
    assert h[i + 1, i + 2] == pytest.approx(p.t + 0.4)
    assert h[i + 2, i + 1] == pytest.approx(p.t - 0.4)


def test_disorder_reproducibility():
    geom = RibbonGeometry(4, 4)
    p = ModelParams(t2=T2, phi=PHI)
    dis = DisorderSpec(strength=1.0, kind="complex", seed=42)
    h1 = dense(build_ribbon(geom, p, dis))
    h2 = dense(build_ribbon(geom, p, dis))
    assert np.array_equal(h1, h2)
    other = DisorderSpec(strength=1.0, kind="complex", seed=43)
    h3 = dense(build_ribbon(geom, p, other))
    assert not np.array_equal(np.diag(h1), np.diag(h3))
    h4 = dense(build_ribbon(geom, p, dis, realization=1))
    assert not np.array_equal(np.diag(h1), np.diag(h4))


def test_disorder_continuity_at_zero_strength():
    geom = RibbonGeometry(3, 3)
    p = ModelParams(t2=T2, phi=PHI)
    clean = dense(build_ribbon(geom, p))
    tiny = dense(build_ribbon(geom, p, DisorderSpec(strength=1e-13, seed=1)))
    assert np.abs(clean - tiny).max() < 1e-12


def test_disorder_spec_validation():
    with pytest.raises(ValueError):
        DisorderSpec(strength=-0.1)
    with pytest.raises(ValueError):
        DisorderSpec(strength=0.1, kind="gaussian")


def test_coordination_audit_on_torus():
    """Nearest-neighbor bond counts per site: hubs 6, rims 3."""
    geom = RibbonGeometry(4, 4, "periodic", "periodic")
    h = dense(build_ribbon(geom, ModelParams()))
    counts = (np.abs(h) > 1e-12).sum(axis=1)
    subs = geom.site_arrays()[4]
    assert np.all(counts[subs == 1] == 6)
    assert np.all(counts[subs == 0] == 3)
    assert np.all(counts[subs == 2] == 3)


def test_sparse_and_dense_storage():
    small = build_ribbon(RibbonGeometry(2, 2), ModelParams())
    assert isinstance(small, np.ndarray)
    big = build_ribbon(RibbonGeometry(6, 6), ModelParams())
    assert sp.issparse(big)
    entries = hamiltonian_entries(big)
    assert all(np.isfinite(v) for _, _, v in entries)


def test_edges_only_region():
    geom = RibbonGeometry(4, 5)
    p = ModelParams(gamma=0.5)
    h_edges = dense(build_ribbon(geom, p, nonreciprocity_region="edges_only"))
    h_none = dense(build_ribbon(geom, p.replace(gamma=0.0),
                                nonreciprocity_region="none"))
    diff = np.abs(h_edges - h_none)
    rows = geom.site_arrays()[2]
    touched = np.where(diff.sum(axis=1) + diff.sum(axis=0) > 0)[0]
    assert set(rows[touched]) <= {0, geom.ny - 1}
    assert touched.size > 0


def test_region_validation():
    geom = RibbonGeometry(3, 3)
    with pytest.raises(GeometryError):
        build_ribbon(geom, ModelParams(gamma=0.5),
                     nonreciprocity_region="none")
    with pytest.raises(GeometryError):
        build_ribbon(geom, ModelParams(), nonreciprocity_region="everywhere")
    with pytest.raises(GeometryError):
        build_ribbon(RibbonGeometry(3, 3, bc_y="periodic"), ModelParams(),
                     nonreciprocity_region="edges_only")


def test_slab_matches_ribbon_at_k_zero():
    """The 1D-Bloch slab at k=0 on the x-periodic axis equals the real
    ribbon with one cell per row and periodic x."""
    p = ModelParams(t2=T2, phi=PHI, m=0.06, delta=0.3)
    ny = 4
    slab = slab_hamiltonian(p, ny, "x", 0.0)
    geom = RibbonGeometry(1, ny, bc_x="periodic", bc_y="open")
    real = dense(build_ribbon(geom, p))
    assert np.abs(slab - real).max() < 1e-12


def test_ribbon_bands_shapes_and_hermitian_reality():
    p = ModelParams(t2=T2, phi=PHI, m=0.06)
    kxs, energies = ribbon_bands_kx(p, 6, 11)
    assert energies.shape == (11, 18)
    assert np.abs(energies.imag).max() < 1e-10


def test_hermitian_bulk_gap_positive():
    gap = hermitian_bulk_gap(ModelParams(t2=T2, phi=PHI, m=0.06))
    assert 0.15 < gap < 0.25


def test_edge_state_fraction_hermitian_is_one():
    p = ModelParams(t2=T2, phi=PHI, m=0.06)
    assert edge_state_fraction(p, 12, n_k=31) == pytest.approx(1.0)


def test_edge_state_fraction_examples():
    p = ModelParams(t2=T2, phi=PHI, m=0.06)
    below = edge_state_fraction(p.replace(delta=0.5), 12, n_k=41)
    above = edge_state_fraction(p.replace(delta=1.5), 12, n_k=41)
    assert below >= 0.05
    assert above < 0.05


def test_edge_state_fraction_rejects_thin_ribbon():
    with pytest.raises(GeometryError):
        edge_state_fraction(ModelParams(t2=T2, phi=PHI, m=0.06), 1)

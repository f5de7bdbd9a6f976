import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from dicehaldane.errors import InsufficientDynamicRange, NoEPInBracket
from dicehaldane.model import (M_POINT, ModelParams, MomentumPoint,
                               bloch_hamiltonian)
from dicehaldane.spectra import (BiorthogonalSystem, decompose, find_ep,
                                 min_rigidity, phase_rigidity,
                                 rigidity_scaling_fit)

complex_entries = st.complex_numbers(max_magnitude=2.0, allow_nan=False,
                                     allow_infinity=False)


def random_hermitian(draw_matrix):
    return (draw_matrix + draw_matrix.conj().T) / 2.0


@given(hnp.arrays(np.complex128, (3, 3), elements=complex_entries))
@settings(max_examples=60, deadline=None)
def test_hermitian_rigidity_is_one(a):
    h = random_hermitian(a)
    evals = np.linalg.eigvalsh(h)
    assume(np.diff(evals).min() > 1e-6)
    sys = decompose(h)
    for alpha in range(3):
        assert phase_rigidity(sys, alpha) == pytest.approx(1.0, abs=1e-8)


@given(hnp.arrays(np.complex128, (4, 4), elements=complex_entries))
@settings(max_examples=40, deadline=None)
def test_rigidity_bounded(a):
    sys = decompose(a)
    for alpha in range(4):
        r = phase_rigidity(sys, alpha)
        assert 0.0 <= r <= 1.0 + 1e-12


def test_decompose_validates_input():
    with pytest.raises(ValueError):
        decompose(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        decompose(np.array([[np.inf, 0], [0, 1]]))


def test_decompose_pairing_diagonal():
    h = np.diag([1.0 + 2.0j, -0.5, 3.0 - 1.0j])
    sys = decompose(h)
    assert sys.pairing_residual < 1e-12
    assert not sys.degenerate_pairing
    for alpha in range(3):
        # left and right vectors of a normal matrix coincide up to phase
        overlap = abs(np.vdot(sys.left_vectors[:, alpha],
                              sys.right_vectors[:, alpha]))
        assert overlap == pytest.approx(1.0, abs=1e-12)


def test_degenerate_pairing_flagged():
    """Exactly degenerate eigenvalues make the left-right pairing
    ambiguous and must be flagged."""
    sys = decompose(np.diag([1.0 + 0.0j, 1.0, 2.0]))
    assert sys.degenerate_pairing
    sys = decompose(np.diag([1.0 + 0.0j, 1.5, 2.0]))
    assert not sys.degenerate_pairing


def test_min_rigidity_dips_at_ep():
    clean = min_rigidity(bloch_hamiltonian(ModelParams(delta=0.3), M_POINT))
    at_ep = min_rigidity(bloch_hamiltonian(ModelParams(delta=1.0), M_POINT))
    assert at_ep < 1e-6 < clean


def test_scaling_fit_slope_flat_band_ep3():
    p = ModelParams()
    slope, stderr = rigidity_scaling_fit(p, M_POINT, "delta", 1.0)
    assert slope == pytest.approx(1.0, abs=0.05)
    assert stderr < 0.05


def test_scaling_fit_dimer_control():
    """Canonical two-level gain/loss dimer: rigidity ~ sqrt(distance),
    slope 1/2, order 2."""

    def dimer(g):
        return np.array([[1j * g, 1.0], [1.0, -1j * g]])

    p = ModelParams()
    slope, _ = rigidity_scaling_fit(p, M_POINT, "delta", 1.0,
                                    matrix_factory=dimer)
    assert slope == pytest.approx(0.5, abs=0.05)


def test_scaling_fit_needs_dynamic_range():
    p = ModelParams()
    with pytest.raises(InsufficientDynamicRange):
        # far from any EP the rigidity barely moves over the window
        rigidity_scaling_fit(p, M_POINT, "delta", 8.0)


def test_find_ep_nn_gain_loss():
    p = ModelParams()
    value, order = find_ep(p, M_POINT, "delta", (0.5, 1.5))
    assert value == pytest.approx(1.0, abs=1e-6)
    assert order == 3


def test_find_ep_rejects_empty_bracket():
    p = ModelParams()
    with pytest.raises(NoEPInBracket):
        find_ep(p, M_POINT, "delta", (1.5, 2.5))
    with pytest.raises(ValueError):
        find_ep(p, M_POINT, "delta", (1.5, 0.5))


def test_with_unknown_param_kind():
    p = ModelParams()
    with pytest.raises(ValueError):
        rigidity_scaling_fit(p, M_POINT, "mass", 1.0)

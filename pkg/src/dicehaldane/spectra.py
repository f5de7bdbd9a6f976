"""Biorthogonal eigendecomposition, phase rigidity, and rigidity-scaling
fits used to locate and classify exceptional points."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .errors import ConvergenceFailure, InsufficientDynamicRange, NoEPInBracket
from .model import ModelParams, MomentumPoint, bloch_hamiltonian

RIGIDITY_EP_THRESHOLD = 1e-6
RIGIDITY_DIP_THRESHOLD = 1e-3
DEGENERATE_PAIRING_TOL = 1e-10


@dataclass(frozen=True)
class BiorthogonalSystem:
    """Paired eigenvalues with unit-normalized right and left vectors.

    right_vectors[:, a] solves H psi = lambda_a psi; left_vectors[:, a]
    solves H^dagger phi = conj(lambda_a) phi.  pairing_residual is the
    largest |conj(lambda_left) - lambda_right| over the matching;
    degenerate_pairing flags matches closer than 1e-10 (near an
    exceptional point the pairing is then ambiguous).
    """

    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    pairing_residual: float
    degenerate_pairing: bool


def decompose(h: np.ndarray) -> BiorthogonalSystem:
    """Eigendecompose a square complex matrix into a biorthogonal system.

    Left vectors come from the adjoint eigenproblem and are paired to the
    right spectrum by greedy minimal |conj(lambda_left) - lambda_right|
    assignment.  All vectors are unit-normalized in the Euclidean norm.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 1:
        raise ValueError("decompose expects a square matrix")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix entries must be finite")
    try:
        evals, right = np.linalg.eig(h)
        evals_l, left = np.linalg.eig(h.conj().T)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc

    n = len(evals)
    targets = np.conj(evals_l)
    available = list(range(n))
    order = np.empty(n, dtype=int)
    residual = 0.0
    degenerate = False
    for a in range(n):
        dists = [abs(targets[j] - evals[a]) for j in available]
        pick = int(np.argmin(dists))
        best = dists[pick]
        rest = dists[:pick] + dists[pick + 1:]
        if rest and min(rest) - best < DEGENERATE_PAIRING_TOL:
            degenerate = True
        order[a] = available.pop(pick)
        residual = max(residual, best)

    left = left[:, order]
    right = right / np.linalg.norm(right, axis=0)
    left = left / np.linalg.norm(left, axis=0)
    return BiorthogonalSystem(
        eigenvalues=evals,
        right_vectors=right,
        left_vectors=left,
        pairing_residual=float(residual),
        degenerate_pairing=bool(degenerate),
    )


def phase_rigidity(sys: BiorthogonalSystem, alpha: int) -> float:
    """|<phi_alpha|psi_alpha>| with unit-normalized vectors.

    Equals 1 for a Hermitian (more generally normal) matrix and tends to
    0 as the state approaches coalescence at an exceptional point.
    """
    phi = sys.left_vectors[:, alpha]
    psi = sys.right_vectors[:, alpha]
    return float(abs(np.vdot(phi, psi)))


def min_rigidity(h: np.ndarray) -> float:
    """Minimum phase rigidity over all states of a matrix."""
    sys = decompose(h)
    return min(phase_rigidity(sys, a) for a in range(len(sys.eigenvalues)))


def _with_strength(p: ModelParams, param_kind: str, value: float) -> ModelParams:
    if param_kind == "delta":
        return dc_replace(p, delta=value)
    if param_kind == "gamma":
        return dc_replace(p, gamma=value)
    raise ValueError(f"unknown param_kind: {param_kind!r}")


def rigidity_scaling_fit(p: ModelParams, k: MomentumPoint, param_kind: str,
                         ep_value: float, window=(1e-4, 1e-1), n_samples: int = 40,
                         matrix_factory=None):
    """Least-squares slope of log min-rigidity versus log distance to the
    critical strength, sampled geometrically inside the window.

    The coalescence order estimate is N = 2*slope + 1.  Raises
    InsufficientDynamicRange when rigidity spans less than one decade.
    matrix_factory overrides the Bloch matrix construction (used by the
    canonical two-level control).
    """
    lo, hi = window
    if not (0 < lo < hi):
        raise ValueError("window offsets must be positive with min < max")
    offsets = np.geomspace(lo, hi, n_samples)
    rigs = []
    for off in offsets:
        value = ep_value + off
        if matrix_factory is not None:
            h = matrix_factory(value)
        else:
            h = bloch_hamiltonian(_with_strength(p, param_kind, value), k)
        rigs.append(min_rigidity(h))
    rigs = np.array(rigs)
    if np.max(rigs) <= 0 or np.min(rigs) <= 0:
        raise InsufficientDynamicRange("rigidity vanished inside the window")
    if np.log10(np.max(rigs) / np.min(rigs)) < 1.0:
        raise InsufficientDynamicRange("rigidity spans less than one decade")
    x = np.log(offsets)
    y = np.log(rigs)
    coeffs, residuals, *_ = np.polyfit(x, y, 1, full=True)
    slope = float(coeffs[0])
    dof = max(n_samples - 2, 1)
    ss = float(residuals[0]) if len(residuals) else 0.0
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(ss / dof / sxx) if sxx > 0 else float("nan")
    return slope, stderr


def find_ep(p: ModelParams, k: MomentumPoint, param_kind: str, bracket,
            tol: float = 1e-10):
    """Locate the strength inside the bracket minimizing the smallest
    phase rigidity, then classify the coalescence order by the scaling
    fit.  Returns (ep_value, order).

    Raises NoEPInBracket when the dip never reaches 1e-3.
    """
    lo, hi = bracket
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")

    def objective(value: float) -> float:
        return min_rigidity(bloch_hamiltonian(_with_strength(p, param_kind, value), k))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = objective(d)
    ep_value = (a + b) / 2.0
    dip = objective(ep_value)
    if dip > RIGIDITY_DIP_THRESHOLD:
        raise NoEPInBracket(f"min rigidity {dip:.3e} stays above 1e-3")
    slope, _ = rigidity_scaling_fit(p, k, param_kind, ep_value)
    order = int(round(2.0 * slope + 1.0))
    return ep_value, order

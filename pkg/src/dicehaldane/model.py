"""Momentum-space model of the dice lattice with Haldane flux and two
non-Hermitian couplings: balanced on-site gain/loss and non-reciprocal
nearest-neighbor hopping.

Conventions (fixed once here, used everywhere):

* Bravais vectors a1 = (1, 0), a2 = (1/2, sqrt(3)/2) in units of the
  lattice constant; momenta are dimensionless, measured in units of
  2*pi/a, so the Bloch phase of a hop by n1*a1 + n2*a2 is
  exp(-2*pi*i*(k . (n1*a1 + n2*a2))).
* Sublattice basis order (A, B, C).  B is the six-fold hub; A and C are
  the three-fold rims.  There is no direct A-C nearest-neighbor bond.
* Nearest-neighbor hops connect B to the A and C of the same cell and of
  the cells displaced by -a2 and -(a1 + a2) relative phases; at ky = 0
  this reproduces the closed-form dispersion in
  :func:`analytic_dispersion_delta`.
* Next-nearest hops close the triangles a1, a2 - a1, -a2 around each hub
  with phase +phi for counterclockwise circulation; the circulation
  sense is opposite on the A and C sublattices, which is what produces
  valence-band Chern number magnitude 2 at m = 0, phi = pi/2.
* Gain/loss enters as +i*delta on (A, A) and -i*delta on (C, C).
* Non-reciprocity replaces t -> t + gamma for hopping onto the rim site
  of the same cell (the bond drawn perpendicular to the ribbon rows) and
  t -> t - gamma for the reverse hop, in both the A-B and B-C blocks.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass

import numpy as np

T_DEFAULT = 1.0 / math.sqrt(2.0)

A1 = np.array([1.0, 0.0])
A2 = np.array([0.5, math.sqrt(3.0) / 2.0])
# The three triangle edges circulated counterclockwise around a hub site.
NNN_TRIANGLE = (A1, A2 - A1, -A2)


@dataclass(frozen=True)
class ModelParams:
    """All couplings defining one Hamiltonian instance.

    t is the nearest-neighbor hopping energy and sets the scale; t2 and
    phi are the next-nearest amplitude and flux phase; m is the
    staggered (Semenoff) mass; delta the gain/loss strength; gamma the
    non-reciprocity strength.
    """

    t: float = T_DEFAULT
    t2: float = 0.0
    phi: float = 0.0
    m: float = 0.0
    delta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if not self.t > 0:
            raise ValueError("t must be positive")
        for name in ("t", "t2", "phi", "m", "delta", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @property
    def is_hermitian(self) -> bool:
        return self.delta == 0.0 and self.gamma == 0.0

    def replace(self, **kwargs) -> "ModelParams":
        return dataclasses.replace(self, **kwargs)


@dataclass(frozen=True)
class MomentumPoint:
    """Dimensionless momentum in units of 2*pi/a."""

    kx: float
    ky: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.kx) and math.isfinite(self.ky)):
            raise ValueError("momentum components must be finite")


GAMMA_POINT = MomentumPoint(0.0, 0.0)
K_POINT = MomentumPoint(2.0 / 3.0, 0.0)
K_PRIME_POINT = MomentumPoint(-2.0 / 3.0, 0.0)
M_POINT = MomentumPoint(1.0, 0.0)


@dataclass(frozen=True)
class KPath:
    """Piecewise-linear momentum path with per-segment sampling."""

    vertices: tuple
    samples_per_segment: int = 50

    def __post_init__(self) -> None:
        if len(self.vertices) < 2:
            raise ValueError("a path needs at least two vertices")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be positive")

    def sample(self):
        """Yield (arclength, MomentumPoint) including both segment ends."""
        s = 0.0
        out = []
        for a, b in zip(self.vertices[:-1], self.vertices[1:]):
            dx, dy = b.kx - a.kx, b.ky - a.ky
            seg = math.hypot(dx, dy)
            for j in range(self.samples_per_segment + 1):
                if out and j == 0:
                    continue
                f = j / self.samples_per_segment
                out.append((s + f * seg, MomentumPoint(a.kx + f * dx, a.ky + f * dy)))
            s += seg
        return out


def bloch_hamiltonian(p: ModelParams, k: MomentumPoint) -> np.ndarray:
    """Return the 3x3 Bloch matrix at momentum k in the (A, B, C) basis."""
    kvec = 2.0 * np.pi * np.array([k.kx, k.ky])
    e2 = np.exp(-1j * (kvec @ A2))
    e21 = np.exp(-1j * (kvec @ (A2 - A1)))
    off = p.t * (e2 + e21)
    h = np.zeros((3, 3), dtype=complex)
    h[0, 1] = (p.t + p.gamma) + off
    h[1, 0] = (p.t - p.gamma) + np.conj(off)
    h[1, 2] = (p.t + p.gamma) + off
    h[2, 1] = (p.t - p.gamma) + np.conj(off)
    if p.t2 != 0.0:
        ha = 2.0 * p.t2 * sum(np.cos(kvec @ nu + p.phi) for nu in NNN_TRIANGLE)
        hc = 2.0 * p.t2 * sum(np.cos(kvec @ nu - p.phi) for nu in NNN_TRIANGLE)
    else:
        ha = hc = 0.0
    h[0, 0] = p.m + 1j * p.delta + ha
    h[2, 2] = -p.m - 1j * p.delta + hc
    return h


def analytic_dispersion_delta(kx: float, delta: float):
    """Closed-form dispersive pair at ky = 0 for the nearest-neighbor model
    with gain/loss: +/- sqrt(3 - delta^2 + 4 cos(pi kx) + 2 cos(2 pi kx)).

    The flat band at E = 0 is implied and not returned.
    """
    radicand = complex(3.0 - delta * delta + 4.0 * math.cos(math.pi * kx)
                       + 2.0 * math.cos(2.0 * math.pi * kx))
    root = np.sqrt(radicand)
    return root, -root


def analytic_ep_locus(kx: float, kind: str) -> float:
    """Critical non-Hermiticity strength at momentum (kx, 0) where the
    dispersive pair coalesces with the flat band.

    kind is "gain_loss" or "nonreciprocal"; the latter equals the former
    divided by sqrt(2).  Raises NegativeRadicand where no real critical
    strength exists.
    """
    from .errors import NegativeRadicand

    if kind not in ("gain_loss", "nonreciprocal"):
        raise ValueError(f"unknown kind: {kind!r}")
    radicand = 3.0 + 4.0 * math.cos(math.pi * kx) + 2.0 * math.cos(2.0 * math.pi * kx)
    if radicand < 0.0:
        raise NegativeRadicand(f"no real critical strength at kx={kx}")
    value = math.sqrt(radicand)
    if kind == "nonreciprocal":
        value /= math.sqrt(2.0)
    return value


def bands_on_path(p: ModelParams, path: KPath) -> list:
    """Eigenvalues along a momentum path.

    Returns a list of (arclength, kx, ky, (e1, e2, e3)) with eigenvalues
    sorted lexicographically by (Re, Im) for deterministic output.
    """
    rows = []
    for s, k in path.sample():
        evals = np.linalg.eigvals(bloch_hamiltonian(p, k))
        order = np.lexsort((evals.imag, evals.real))
        evals = evals[order]
        rows.append((s, k.kx, k.ky, tuple(evals)))
    return rows


def bands_csv(rows) -> str:
    """Render bands_on_path rows as CSV with 17-significant-digit floats."""
    buf = io.StringIO()
    buf.write("s,kx,ky,reE1,imE1,reE2,imE2,reE3,imE3\n")
    for s, kx, ky, evals in rows:
        cells = [s, kx, ky]
        for e in evals:
            cells.extend((e.real, e.imag))
        buf.write(",".join(format(c, ".17g") for c in cells) + "\n")
    return buf.getvalue()


PT_EXCHANGE = np.array([[0.0, 0.0, 1.0],
                        [0.0, 1.0, 0.0],
                        [1.0, 0.0, 0.0]])


def pt_commutator_norm(p: ModelParams, k: MomentumPoint) -> float:
    """Frobenius norm of P conj(H(-k)) P - H(k), with P the A<->C exchange.

    The antiunitary part acts as complex conjugation combined with
    momentum reversal.  For the nearest-neighbor model with pure
    gain/loss this vanishes identically for every k and delta.
    """
    h_k = bloch_hamiltonian(p, k)
    h_mk = bloch_hamiltonian(p, MomentumPoint(-k.kx, -k.ky))
    return float(np.linalg.norm(PT_EXCHANGE @ np.conj(h_mk) @ PT_EXCHANGE - h_k))

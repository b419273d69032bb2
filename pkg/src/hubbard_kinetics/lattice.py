"""Discretized Brillouin zone, dispersion relations, and the kinematics of
the two-body collision manifold.

Momenta live on the periodic unit interval [0, 1); the grid k_j = j/n keeps
all index arithmetic exact, and n = 0 (mod 4) makes the reflection
k -> 1/2 - k an exact permutation of the nodes.
"""

import csv
import enum
from dataclasses import dataclass, field

import numpy as np


class Dispersion(enum.Enum):
    """Single-particle band variants."""

    NEAREST_NEIGHBOR = "nearest_neighbor"
    NEXT_NEAREST_NEIGHBOR = "next_nearest_neighbor"

    def evaluate(self, k):
        if self is Dispersion.NEAREST_NEIGHBOR:
            return omega(k)
        return omega_nnn(k)


def omega(k):
    """Nearest-neighbor band energy 1 - cos(2 pi k); range [0, 2]."""
    return 1.0 - np.cos(2.0 * np.pi * np.asarray(k, dtype=float))


def omega_nnn(k):
    """Band energy with a next-nearest-neighbor term, 1 - cos(2 pi k) - cos(4 pi k)/2."""
    k = np.asarray(k, dtype=float)
    return 1.0 - np.cos(2.0 * np.pi * k) - 0.5 * np.cos(4.0 * np.pi * k)


def omega_bar(k1, k3, k4):
    """Energy mismatch omega(k1) + omega(k2) - omega(k3) - omega(k4) with
    k2 = k3 + k4 - k1 eliminated by momentum conservation, in the factorized
    form 4 sin(pi(k1-k3)) sin(pi(k1-k4)) cos(pi(k3+k4)) valid for the
    nearest-neighbor band."""
    k1 = np.asarray(k1, dtype=float)
    k3 = np.asarray(k3, dtype=float)
    k4 = np.asarray(k4, dtype=float)
    return (4.0 * np.sin(np.pi * (k1 - k3)) * np.sin(np.pi * (k1 - k4))
            * np.cos(np.pi * (k3 + k4)))


def omega_bar_direct(k1, k3, k4, dispersion: Dispersion = Dispersion.NEAREST_NEIGHBOR):
    """Energy mismatch evaluated term by term (no factorization); works for
    any dispersion variant. k2 is resolved mod 1."""
    k2 = np.mod(np.asarray(k3, dtype=float) + np.asarray(k4, dtype=float)
                - np.asarray(k1, dtype=float), 1.0)
    w = dispersion.evaluate
    return w(k1) + w(k2) - w(k3) - w(k4)


def jacobian_weight(k1, k3, eps):
    """Mollified contour Jacobian (4 pi^2 (sin 2pi k3 - sin 2pi k1)^2 + eps^2)^(-1/2).

    The same expression serves the k4 = k1 and the k3 + k4 = 1/2 contours;
    eps > 0 caps the would-be singularity at sin 2pi k3 = sin 2pi k1.
    """
    if eps <= 0:
        raise ValueError("mollifier eps must be positive")
    diff = np.sin(2.0 * np.pi * np.asarray(k3, dtype=float)) - np.sin(2.0 * np.pi * np.asarray(k1, dtype=float))
    return 1.0 / np.sqrt(4.0 * np.pi ** 2 * diff ** 2 + eps * eps)


@dataclass(frozen=True)
class BrillouinGrid:
    """Uniform n-point grid k_j = j/n on the periodic zone, n = 0 (mod 4).

    Quadrature is the trapezoidal rule for periodic data: node weight 1/n.
    """

    n: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n <= 0 or self.n % 4 != 0:
            raise ValueError(f"grid size must be a positive multiple of 4, got {self.n}")
        nodes = np.arange(self.n, dtype=float) / self.n
        nodes.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)

    @property
    def weight(self) -> float:
        return 1.0 / self.n

    def wrap(self, j):
        return np.mod(j, self.n)

    def reflect(self, j):
        """Index of 1/2 - k_j, exact because n is a multiple of 4."""
        return np.mod(self.n // 2 - np.asarray(j), self.n)

    @property
    def reflection(self) -> np.ndarray:
        """Permutation array r with k_{r[j]} = 1/2 - k_j mod 1."""
        return self.reflect(np.arange(self.n))


@dataclass(frozen=True)
class ContourNodes:
    """On-grid index pairs (j3, j4) of the three collision contours for a
    fixed external momentum index j1."""

    j1: int
    gamma1: np.ndarray  # k3 = k1, k4 running
    gamma2: np.ndarray  # k4 = k1, k3 running
    gamma_diag: np.ndarray  # k3 + k4 = 1/2, k3 running


def manifold_contours(j1: int, grid: BrillouinGrid) -> ContourNodes:
    """Index sets of the collision contours through fixed k_{j1}.

    Every returned pair satisfies omega_bar = 0 exactly; the diagonal
    contour is on-grid because n = 0 (mod 4).
    """
    n = grid.n
    run = np.arange(n)
    g1 = np.stack([np.full(n, j1 % n), run], axis=1)
    g2 = np.stack([run, np.full(n, j1 % n)], axis=1)
    gd = np.stack([run, grid.reflect(run)], axis=1)
    return ContourNodes(j1 % n, g1, g2, gd)


def export_manifold_csv(path, grid: BrillouinGrid, j1: int,
                        dispersion: Dispersion = Dispersion.NEAREST_NEIGHBOR) -> None:
    """Write the energy mismatch over the full (k3, k4) grid for fixed k1
    as CSV rows (k3, k4, omega_bar); contour plots of this table reproduce
    the collision-manifold figures for either dispersion variant."""
    k1 = grid.nodes[j1 % grid.n]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k3", "k4", "omega_bar"])
        for j3 in range(grid.n):
            k3 = grid.nodes[j3]
            wb = omega_bar_direct(k1, k3, grid.nodes, dispersion)
            for j4 in range(grid.n):
                writer.writerow([f"{k3:.17g}", f"{grid.nodes[j4]:.17g}", f"{wb[j4]:.17g}"])

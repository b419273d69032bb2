"""Conserved charges, entropy and entropy production, distances, Bloch
curves, decay-rate fits, and the trajectory record emitted by runs.

Entropy production comes in two independent formulations: the trace form
pairing log W - log(1-W) with the dissipative increment, and the manifestly
nonnegative eigen-factorized contour sum. Their agreement is the strongest
cross-check of the collision kernel and is enforced in the tests.
"""

import csv
from dataclasses import dataclass, field as dataclass_field
from typing import Optional

import numpy as np

from . import spin2
from .collision import CollisionKernelConfig, WignerField, _cd_weights, dissipative
from .lattice import Dispersion

EIGENVALUE_CLAMP = 1e-12


def _xlogx(x: np.ndarray) -> np.ndarray:
    """x log x with the limit value 0 at x = 0; x is clipped into [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    safe = np.where(x > 0.0, x, 1.0)
    return x * np.log(safe)


def entropy(field: WignerField) -> float:
    """Fermionic entropy -(1/n) sum_j (tr[W log W] + tr[(1-W) log(1-W)])."""
    eigs = spin2.eigvals2(field.values)
    return float(-np.mean(np.sum(_xlogx(eigs) + _xlogx(1.0 - eigs), axis=-1)))


def _clamped_eig(field: WignerField):
    dec = spin2.eig2(field.values)
    eps = np.clip(dec.eigenvalues, EIGENVALUE_CLAMP, 1.0 - EIGENVALUE_CLAMP)
    return eps, dec.eigenvectors


def entropy_production(field: WignerField, cfg: CollisionKernelConfig) -> float:
    """Entropy production as the eigen-factorized contour quadrature.

    Each summand is (x - y) log(x/y) >= 0 times a squared overlap
    determinant, so the result is nonnegative by construction; it vanishes
    exactly on the stationary family. All three contour families enter:
    after symmetrization over the collision-index interchanges, the k3 = k1
    contour carries weight even though the direct integrand vanishes there.
    """
    n = field.grid.n
    eps, vecs = _clamped_eig(field)
    log_e = np.log(eps)
    log_et = np.log1p(-eps)
    jac = _cd_weights(n, cfg.eps_d)
    refl = field.grid.reflection
    idx = np.arange(n)
    j1 = idx[:, None].repeat(n, axis=1)
    u = idx[None, :].repeat(n, axis=0)

    # overlap table <k_j, s | k_l, t>
    overlap = np.einsum('jas,lat->jlst', vecs.conj(), vecs)

    contours = []
    if cfg.include_gamma2:
        contours.append((j1, u, j1, u))      # k3 = k1 family
        contours.append((j1, u, u, j1))      # k4 = k1 family
    if cfg.include_gamma_diag:
        contours.append((j1, refl[j1], u, refl[u]))

    total = 0.0
    for (i1, i2, i3, i4) in contours:
        o13 = overlap[i1, i3]
        o24 = overlap[i2, i4]
        o14 = overlap[i1, i4]
        o23 = overlap[i2, i3]
        det = (np.einsum('xyac,xybd->xyabcd', o13, o24)
               - np.einsum('xyad,xybc->xyabcd', o14, o23))
        gsq = (det * det.conj()).real

        e1 = eps[i1][:, :, :, None, None, None]
        e2 = eps[i2][:, :, None, :, None, None]
        e3 = eps[i3][:, :, None, None, :, None]
        e4 = eps[i4][:, :, None, None, None, :]
        x = (1.0 - e1) * (1.0 - e2) * e3 * e4
        y = e1 * e2 * (1.0 - e3) * (1.0 - e4)
        log_ratio = (log_et[i1][:, :, :, None, None, None]
                     + log_et[i2][:, :, None, :, None, None]
                     + log_e[i3][:, :, None, None, :, None]
                     + log_e[i4][:, :, None, None, None, :]
                     - log_e[i1][:, :, :, None, None, None]
                     - log_e[i2][:, :, None, :, None, None]
                     - log_et[i3][:, :, None, None, :, None]
                     - log_et[i4][:, :, None, None, None, :])
        f = (x - y) * log_ratio
        total += float(np.einsum('xy,xyabcd->', jac, f * gsq))

    return np.pi / 4.0 * total / (n * n)


def entropy_production_trace(field: WignerField, cfg: CollisionKernelConfig) -> float:
    """Entropy production as -(1/n) sum_j tr[(log W - log(1-W)) C_d(k_j)].

    Independent route used to cross-validate the factorized form; the
    commutator part contributes nothing because log W commutes with W.
    """
    eps, vecs = _clamped_eig(field)
    log_diff = np.log(eps) - np.log1p(-eps)
    lmat = np.einsum('js,jas,jbs->jab', log_diff, vecs, vecs.conj())
    cd = dissipative(field, cfg)
    return float(-np.einsum('jab,jba->', lmat, cd).real / field.grid.n)


@dataclass(frozen=True)
class ConservedCharges:
    """Spin matrix (1/n) sum W, energy (1/n) sum omega tr W, and the
    reflection-odd trace profile h(k_j) = tr W(k_j) - tr W(1/2 - k_j)."""

    spin: np.ndarray
    energy: float
    h_profile: np.ndarray


def charges(field: WignerField, dispersion: Dispersion = Dispersion.NEAREST_NEIGHBOR) -> ConservedCharges:
    w = field.values
    spin = w.mean(axis=0)
    trace = np.trace(w, axis1=-2, axis2=-1).real
    energy = float(np.mean(dispersion.evaluate(field.grid.nodes) * trace))
    h = trace - trace[field.grid.reflection]
    return ConservedCharges(spin, energy, h)


def g_charge(field: WignerField, g: np.ndarray) -> float:
    """Conserved functional (1/n) sum g(k_j) tr W(k_j) for reflection-odd g.

    Raises ValueError if g fails g(k) = -g(1/2 - k) on the grid.
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (field.grid.n,):
        raise ValueError("g must be sampled on the grid nodes")
    defect = np.abs(g + g[field.grid.reflection]).max()
    if defect > 1e-12:
        raise ValueError(f"g is not reflection-odd on the grid: defect {defect:.3e}")
    trace = np.trace(field.values, axis1=-2, axis2=-1).real
    return float(np.mean(g * trace))


def _split_entries(diff: np.ndarray, part: str, basis: Optional[np.ndarray]) -> np.ndarray:
    if basis is not None:
        diff = np.einsum('ab,jbc,cd->jad', np.asarray(basis).conj().T, diff, np.asarray(basis))
    if part == "all":
        return diff.reshape(diff.shape[0], -1)
    if part == "diag":
        return np.stack([diff[:, 0, 0], diff[:, 1, 1]], axis=1)
    if part == "offdiag":
        return np.stack([diff[:, 0, 1], diff[:, 1, 0]], axis=1)
    raise ValueError(f"unknown part {part!r}; expected all|diag|offdiag")


def hs_distance(a: WignerField, b: WignerField, part: str = "all",
                basis: Optional[np.ndarray] = None) -> float:
    """Root-mean-square Hilbert-Schmidt distance between two fields.

    part restricts to diagonal or off-diagonal entries, measured in the
    supplied orthonormal basis (columns) -- conventionally the eigenbasis
    of the conserved spin matrix.
    """
    if a.grid.n != b.grid.n:
        raise ValueError("fields live on different grids")
    entries = _split_entries(a.values - b.values, part, basis)
    return float(np.sqrt(np.sum(np.abs(entries) ** 2) / a.grid.n))


def max_entry_distance(a: WignerField, b: WignerField, part: str = "all",
                       basis: Optional[np.ndarray] = None) -> float:
    """Largest entrywise deviation, restricted like hs_distance."""
    if a.grid.n != b.grid.n:
        raise ValueError("fields live on different grids")
    entries = _split_entries(a.values - b.values, part, basis)
    return float(np.abs(entries).max())


def bloch_curve(field: WignerField) -> np.ndarray:
    """Per-node Bloch vectors, shape (n, 3)."""
    return spin2.bloch(field.values)


@dataclass(frozen=True)
class FitResult:
    rate: float
    intercept: float
    residual: float
    r_squared: float


def fit_decay_rate(times, values, tail_fraction: float = 0.5) -> FitResult:
    """Least-squares line through (t, log value) over the trailing window.

    The rate is reported positive for decay (it is minus the slope); the
    intercept is in log units. Raises ValueError on nonpositive values
    inside the window or windows shorter than two samples.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape or times.ndim != 1:
        raise ValueError("times and values must be equal-length 1d arrays")
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must be in (0, 1]")
    start = int(np.floor(len(times) * (1.0 - tail_fraction)))
    t = times[start:]
    v = values[start:]
    if len(t) < 2:
        raise ValueError("fit window has fewer than two samples")
    if np.any(v <= 0.0):
        raise ValueError("fit window contains nonpositive values")
    logv = np.log(v)
    slope, intercept = np.polyfit(t, logv, 1)
    fitted = slope * t + intercept
    ss_res = float(np.sum((logv - fitted) ** 2))
    ss_tot = float(np.sum((logv - logv.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return FitResult(rate=float(-slope), intercept=float(intercept),
                     residual=float(np.sqrt(ss_res / len(t))), r_squared=float(r_squared))


DISTANCE_COLUMNS = ("hs_all", "hs_diag", "hs_offdiag", "max_diag", "max_offdiag")


@dataclass
class TrajectoryRecord:
    """Time series of observables sampled along a trajectory.

    When a target field is supplied, distance series (Hilbert-Schmidt and
    per-entry maxima, split in split_basis) are recorded as well.
    """

    target: Optional[WignerField] = None
    split_basis: Optional[np.ndarray] = None
    keep_snapshots: bool = False
    times: list = dataclass_field(default_factory=list)
    entropy: list = dataclass_field(default_factory=list)
    sigma: list = dataclass_field(default_factory=list)
    energy: list = dataclass_field(default_factory=list)
    spin: list = dataclass_field(default_factory=list)
    h_profiles: list = dataclass_field(default_factory=list)
    distances: dict = dataclass_field(default_factory=lambda: {c: [] for c in DISTANCE_COLUMNS})
    snapshots: list = dataclass_field(default_factory=list)

    def record(self, field: WignerField, cfg: CollisionKernelConfig) -> None:
        ch = charges(field)
        self.times.append(field.time)
        self.entropy.append(entropy(field))
        self.sigma.append(entropy_production(field, cfg))
        self.energy.append(ch.energy)
        self.spin.append(ch.spin)
        self.h_profiles.append(ch.h_profile)
        if self.target is not None:
            b = self.split_basis
            self.distances["hs_all"].append(hs_distance(field, self.target, "all", b))
            self.distances["hs_diag"].append(hs_distance(field, self.target, "diag", b))
            self.distances["hs_offdiag"].append(hs_distance(field, self.target, "offdiag", b))
            self.distances["max_diag"].append(max_entry_distance(field, self.target, "diag", b))
            self.distances["max_offdiag"].append(max_entry_distance(field, self.target, "offdiag", b))
        if self.keep_snapshots:
            self.snapshots.append((field.time, np.array(field.values)))

    def __len__(self) -> int:
        return len(self.times)

    def spin_drift(self) -> float:
        """Largest entrywise drift of the conserved spin matrix."""
        ref = self.spin[0]
        return max(float(np.abs(s - ref).max()) for s in self.spin)

    def energy_drift(self) -> float:
        ref = self.energy[0]
        return max(abs(e - ref) for e in self.energy)

    def h_drift(self) -> float:
        ref = self.h_profiles[0]
        return max(float(np.abs(h - ref).max()) for h in self.h_profiles)

    def to_csv(self, path) -> None:
        """One row per sample, full round-trip precision."""
        have_target = self.target is not None
        header = ["time", "entropy", "entropy_production", "energy",
                  "spin_uu", "spin_dd", "spin_ud_re", "spin_ud_im", "h_drift"]
        if have_target:
            header += [f"dist_{c}" for c in DISTANCE_COLUMNS]
        h0 = self.h_profiles[0] if self.h_profiles else None
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for i, t in enumerate(self.times):
                s = self.spin[i]
                row = [t, self.entropy[i], self.sigma[i], self.energy[i],
                       s[0, 0].real, s[1, 1].real, s[0, 1].real, s[0, 1].imag,
                       float(np.abs(self.h_profiles[i] - h0).max())]
                if have_target:
                    row += [self.distances[c][i] for c in DISTANCE_COLUMNS]
                writer.writerow([f"{x:.17g}" for x in row])


def write_bloch_csv(field: WignerField, path) -> None:
    """Per-node Bloch vectors as CSV rows (k, r_x, r_y, r_z)."""
    curve = bloch_curve(field)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "r_x", "r_y", "r_z"])
        for k, r in zip(field.grid.nodes, curve):
            writer.writerow([f"{k:.17g}", f"{r[0]:.17g}", f"{r[1]:.17g}", f"{r[2]:.17g}"])

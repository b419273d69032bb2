"""Collision operators on the discretized zone.

The dissipative operator is a sum of one-dimensional contour quadratures
(the k4 = k1 contour and the k3 + k4 = 1/2 contour; the k3 = k1 contour
drops out because both integrand pieces vanish there identically). The
conservative operator is the commutator with an effective Hamiltonian
built from a mollified principal-value double sum. Inner loops are
numba-compiled; everything else is plain numpy.

Index bookkeeping is exact: k2 = k3 + k4 - k1 is resolved in integer
arithmetic mod n, and the reflection k -> 1/2 - k is an exact permutation
because n = 0 (mod 4).
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numba import njit, prange

from . import spin2
from .lattice import BrillouinGrid, jacobian_weight

HERMITICITY_TOL = 1e-9


class NumericsError(RuntimeError):
    """A numerical integrity check failed (hermiticity, Fermi property, ...)."""


@dataclass(frozen=True)
class WignerField:
    """The simulation state: one Hermitian 2x2 matrix per grid node.

    values has shape (n, 2, 2), complex128, and is frozen after construction.
    time is the kinetic time stamp (weak-coupling units).
    """

    grid: BrillouinGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=complex)
        if values.shape != (self.grid.n, 2, 2):
            raise ValueError(f"field shape {values.shape} does not match grid n={self.grid.n}")
        defect = spin2.hermiticity_defect(values)
        if defect > HERMITICITY_TOL:
            raise NumericsError(f"field is not Hermitian: defect {defect:.3e}")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def with_values(self, values: np.ndarray, time=None) -> "WignerField":
        return WignerField(self.grid, values, self.time if time is None else time)

    def fermi_defect(self) -> float:
        """How far the eigenvalues stray outside [0, 1] (0 if none do)."""
        eigs = spin2.eigvals2(self.values)
        return float(max(-eigs.min(), eigs.max() - 1.0, 0.0))


@dataclass(frozen=True)
class CollisionKernelConfig:
    """Mollifier widths and contour toggles for both collision operators."""

    eps_d: float = 0.5
    eps_c: float = 0.5
    include_gamma2: bool = True
    include_gamma_diag: bool = True

    def __post_init__(self):
        if self.eps_d <= 0 or self.eps_c <= 0:
            raise ValueError("mollifier widths must be positive")


def a_quad(w1, w2, w3, w4) -> np.ndarray:
    """Quadruple-product part of the symmetrized collision integrand.

    Hermitian by construction (the four summands pair into adjoints);
    vanishes identically when (w3, w4) = (w1, w2) or (w2, w1).
    """
    w1t = spin2.IDENTITY2 - w1
    w2t = spin2.IDENTITY2 - w2
    w3t = spin2.IDENTITY2 - w3
    w4t = spin2.IDENTITY2 - w4
    return (-w1t @ w3 @ w2t @ w4 - w4 @ w2t @ w3 @ w1t
            + w1 @ w3t @ w2 @ w4t + w4t @ w2 @ w3t @ w1)


def a_tr(w1, w2, w3, w4) -> np.ndarray:
    """Trace-weighted part of the symmetrized collision integrand."""
    w1t = spin2.IDENTITY2 - w1
    w2t = spin2.IDENTITY2 - w2
    w3t = spin2.IDENTITY2 - w3
    w4t = spin2.IDENTITY2 - w4
    gain_tr = np.trace(w2t @ w4, axis1=-2, axis2=-1).real
    loss_tr = np.trace(w2 @ w4t, axis1=-2, axis2=-1).real
    return ((w1t @ w3 + w3 @ w1t) * gain_tr[..., None, None]
            - (w1 @ w3t + w3t @ w1) * loss_tr[..., None, None])


@lru_cache(maxsize=8)
def _cd_weights(n: int, eps: float) -> np.ndarray:
    """Mollified Jacobian J[j1, j3] shared by both dissipative contours."""
    k = np.arange(n) / n
    w = jacobian_weight(k[:, None], k[None, :], eps)
    w.flags.writeable = False
    return w

@lru_cache(maxsize=8)
def _heff_weights(n: int, eps: float) -> np.ndarray:
    """Mollified principal-value weight wb/(wb^2 + eps^2) on the (k1, k3, k4)
    grid, with wb the factorized energy mismatch."""
    k = np.arange(n) / n
    s13 = np.sin(np.pi * (k[:, None] - k[None, :]))
    c34 = np.cos(np.pi * (k[:, None] + k[None, :]))
    wb = 4.0 * s13[:, :, None] * s13[:, None, :] * c34[None, :, :]
    m = wb / (wb * wb + eps * eps)
    m.flags.writeable = False
    return m


@njit(inline="always")
def _mm(a00, a01, a10, a11, b00, b01, b10, b11):
    return (a00 * b00 + a01 * b10,
            a00 * b01 + a01 * b11,
            a10 * b00 + a11 * b10,
            a10 * b01 + a11 * b11)


@njit(inline="always")
def _trmul(a00, a01, a10, a11, b00, b01, b10, b11):
    return a00 * b00 + a01 * b10 + a10 * b01 + a11 * b11


@njit(cache=True)
def _cd_kernel(W, J, refl, include_g2, include_gd):
    n = W.shape[0]
    out = np.zeros((n, 2, 2), dtype=np.complex128)
    for j1 in range(n):
        a00 = W[j1, 0, 0]
        a01 = W[j1, 0, 1]
        a10 = W[j1, 1, 0]
        a11 = W[j1, 1, 1]
        at00 = 1.0 - a00
        at01 = -a01
        at10 = -a10
        at11 = 1.0 - a11
        r1 = refl[j1]
        c00 = W[r1, 0, 0]
        c01 = W[r1, 0, 1]
        c10 = W[r1, 1, 0]
        c11 = W[r1, 1, 1]
        ct00 = 1.0 - c00
        ct01 = -c01
        ct10 = -c10
        ct11 = 1.0 - c11
        s00 = s01 = s10 = s11 = 0.0 + 0.0j
        for u in range(n):
            wgt = J[j1, u]
            b00 = W[u, 0, 0]
            b01 = W[u, 0, 1]
            b10 = W[u, 1, 0]
            b11 = W[u, 1, 1]
            bt00 = 1.0 - b00
            bt01 = -b01
            bt10 = -b10
            bt11 = 1.0 - b11

            if include_g2:
                # trace part on the k4 = k1 contour: quadruple (W1, Wu, Wu, W1)
                g00, g01, g10, g11 = _mm(at00, at01, at10, at11, b00, b01, b10, b11)
                l00, l01, l10, l11 = _mm(a00, a01, a10, a11, bt00, bt01, bt10, bt11)
                gain_tr = (_trmul(bt00, bt01, bt10, bt11, a00, a01, a10, a11)).real
                loss_tr = (_trmul(b00, b01, b10, b11, at00, at01, at10, at11)).real
                s00 += wgt * ((g00 + np.conj(g00)) * gain_tr - (l00 + np.conj(l00)) * loss_tr)
                s01 += wgt * ((g01 + np.conj(g10)) * gain_tr - (l01 + np.conj(l10)) * loss_tr)
                s10 += wgt * ((g10 + np.conj(g01)) * gain_tr - (l10 + np.conj(l01)) * loss_tr)
                s11 += wgt * ((g11 + np.conj(g11)) * gain_tr - (l11 + np.conj(l11)) * loss_tr)

            if include_gd:
                # both parts on the k3 + k4 = 1/2 contour:
                # quadruple (W1, W_{1/2-k1}, Wu, W_{1/2-ku})
                ru = refl[u]
                d00 = W[ru, 0, 0]
                d01 = W[ru, 0, 1]
                d10 = W[ru, 1, 0]
                d11 = W[ru, 1, 1]
                dt00 = 1.0 - d00
                dt01 = -d01
                dt10 = -d10
                dt11 = 1.0 - d11

                # quad part: -(P + P^dag) + (Q + Q^dag) with
                # P = W1t Wu W2t W4, Q = W1 Wut W2 W4t
                p00, p01, p10, p11 = _mm(at00, at01, at10, at11, b00, b01, b10, b11)
                p00, p01, p10, p11 = _mm(p00, p01, p10, p11, ct00, ct01, ct10, ct11)
                p00, p01, p10, p11 = _mm(p00, p01, p10, p11, d00, d01, d10, d11)
                q00, q01, q10, q11 = _mm(a00, a01, a10, a11, bt00, bt01, bt10, bt11)
                q00, q01, q10, q11 = _mm(q00, q01, q10, q11, c00, c01, c10, c11)
                q00, q01, q10, q11 = _mm(q00, q01, q10, q11, dt00, dt01, dt10, dt11)
                s00 += wgt * (-(p00 + np.conj(p00)) + q00 + np.conj(q00))
                s01 += wgt * (-(p01 + np.conj(p10)) + q01 + np.conj(q10))
                s10 += wgt * (-(p10 + np.conj(p01)) + q10 + np.conj(q01))
                s11 += wgt * (-(p11 + np.conj(p11)) + q11 + np.conj(q11))

                # trace part on the same contour
                g00, g01, g10, g11 = _mm(at00, at01, at10, at11, b00, b01, b10, b11)
                l00, l01, l10, l11 = _mm(a00, a01, a10, a11, bt00, bt01, bt10, bt11)
                gain_tr = (_trmul(ct00, ct01, ct10, ct11, d00, d01, d10, d11)).real
                loss_tr = (_trmul(c00, c01, c10, c11, dt00, dt01, dt10, dt11)).real
                s00 += wgt * ((g00 + np.conj(g00)) * gain_tr - (l00 + np.conj(l00)) * loss_tr)
                s01 += wgt * ((g01 + np.conj(g10)) * gain_tr - (l01 + np.conj(l10)) * loss_tr)
                s10 += wgt * ((g10 + np.conj(g01)) * gain_tr - (l10 + np.conj(l01)) * loss_tr)
                s11 += wgt * ((g11 + np.conj(g11)) * gain_tr - (l11 + np.conj(l11)) * loss_tr)

        out[j1, 0, 0] = s00
        out[j1, 0, 1] = s01
        out[j1, 1, 0] = s10
        out[j1, 1, 1] = s11
    return out


@njit(cache=True, parallel=True)
def _heff_kernel(W, M):
    n = W.shape[0]
    out = np.zeros((n, 2, 2), dtype=np.complex128)
    tr = np.empty(n, dtype=np.complex128)
    for j in range(n):
        tr[j] = W[j, 0, 0] + W[j, 1, 1]
    for j1 in prange(n):
        s00 = s01 = s10 = s11 = 0.0 + 0.0j
        for j3 in range(n):
            b00 = W[j3, 0, 0]
            b01 = W[j3, 0, 1]
            b10 = W[j3, 1, 0]
            b11 = W[j3, 1, 1]
            for j4 in range(n):
                wgt = M[j1, j3, j4]
                j2 = (j3 + j4 - j1) % n
                c00 = W[j4, 0, 0]
                c01 = W[j4, 0, 1]
                c10 = W[j4, 1, 0]
                c11 = W[j4, 1, 1]
                d00 = W[j2, 0, 0]
                d01 = W[j2, 0, 1]
                d10 = W[j2, 1, 0]
                d11 = W[j2, 1, 1]
                # W3 W4 - W2 W3 - W3 W2 + (tr W2 - tr W4) W3 + W2
                x00, x01, x10, x11 = _mm(b00, b01, b10, b11, c00, c01, c10, c11)
                y00, y01, y10, y11 = _mm(d00, d01, d10, d11, b00, b01, b10, b11)
                z00, z01, z10, z11 = _mm(b00, b01, b10, b11, d00, d01, d10, d11)
                t = tr[j2] - tr[j4]
                s00 += wgt * (x00 - y00 - z00 + t * b00 + d00)
                s01 += wgt * (x01 - y01 - z01 + t * b01 + d01)
                s10 += wgt * (x10 - y10 - z10 + t * b10 + d10)
                s11 += wgt * (x11 - y11 - z11 + t * b11 + d11)
        out[j1, 0, 0] = s00
        out[j1, 0, 1] = s01
        out[j1, 1, 0] = s10
        out[j1, 1, 1] = s11
    return out


def dissipative(field: WignerField, cfg: CollisionKernelConfig) -> np.ndarray:
    """Dissipative collision increment, shape (n, 2, 2), Hermitian per node.

    Per node: pi/n times the Jacobian-weighted contour sums of the trace
    part (k4 = k1 contour) and of both parts (k3 + k4 = 1/2 contour).
    """
    n = field.grid.n
    J = _cd_weights(n, cfg.eps_d)
    refl = np.ascontiguousarray(field.grid.reflection, dtype=np.int64)
    out = _cd_kernel(field.values, J, refl, cfg.include_gamma2, cfg.include_gamma_diag)
    out *= np.pi / n
    return out


def effective_hamiltonian(field: WignerField, cfg: CollisionKernelConfig) -> np.ndarray:
    """Mean-field Hamiltonian from the mollified principal-value double sum.

    The k3 <-> k4 symmetry of the weight makes the result Hermitian up to
    roundoff; this is asserted (never silently symmetrized).
    """
    n = field.grid.n
    M = _heff_weights(n, cfg.eps_c)
    out = _heff_kernel(field.values, M)
    out /= n * n
    defect = spin2.hermiticity_defect(out)
    if defect > 1e-12:
        raise NumericsError(f"effective Hamiltonian lost hermiticity: defect {defect:.3e}")
    return out


def conservative(field: WignerField, cfg: CollisionKernelConfig) -> np.ndarray:
    """Commutator increment -i [H_eff, W] per node; traceless and Hermitian."""
    h = effective_hamiltonian(field, cfg)
    w = field.values
    return -1j * (h @ w - w @ h)

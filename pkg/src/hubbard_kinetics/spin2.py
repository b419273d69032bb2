"""Closed-form algebra for 2x2 complex Hermitian matrices.

Matrices are stored as complex ndarrays of shape (..., 2, 2); every routine
is vectorized over the leading axes, so a momentum field of n matrices is
just an (n, 2, 2) array. All functions are pure and allocate fresh outputs.
"""

from typing import NamedTuple

import numpy as np

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# eigenvalue gaps below this are treated as degenerate (canonical basis)
DEGENERACY_THRESHOLD = 1e-14


def hermitian(d_up, d_dn, off) -> np.ndarray:
    """Assemble Hermitian matrices from two real diagonals and the complex
    upper off-diagonal entry. Inputs broadcast against each other."""
    d_up, d_dn, off = np.broadcast_arrays(
        np.asarray(d_up, dtype=float),
        np.asarray(d_dn, dtype=float),
        np.asarray(off, dtype=complex),
    )
    out = np.empty(d_up.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = d_up
    out[..., 1, 1] = d_dn
    out[..., 0, 1] = off
    out[..., 1, 0] = np.conj(off)
    return out


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermiticity_defect(m: np.ndarray) -> float:
    """Largest entrywise deviation of m from its conjugate transpose."""
    return float(np.abs(m - dagger(m)).max()) if m.size else 0.0


def eigvals2(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of Hermitian 2x2 matrices, descending, shape (..., 2)."""
    half_sum = 0.5 * (m[..., 0, 0].real + m[..., 1, 1].real)
    half_diff = 0.5 * (m[..., 0, 0].real - m[..., 1, 1].real)
    radius = np.hypot(half_diff, np.abs(m[..., 0, 1]))
    return np.stack([half_sum + radius, half_sum - radius], axis=-1)


class EigenDecomposition2(NamedTuple):
    """Spectral data of Hermitian 2x2 matrices.

    eigenvalues:  (..., 2) real, descending.
    eigenvectors: (..., 2, 2) complex; column s is the unit eigenvector of
                  eigenvalues[..., s], phase fixed so the largest-magnitude
                  component is real positive. Degenerate matrices get the
                  canonical basis.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def eig2(m: np.ndarray) -> EigenDecomposition2:
    """Closed-form eigendecomposition of Hermitian 2x2 matrices."""
    m = np.asarray(m, dtype=complex)
    off = m[..., 0, 1]
    half_sum = 0.5 * (m[..., 0, 0].real + m[..., 1, 1].real)
    half_diff = 0.5 * (m[..., 0, 0].real - m[..., 1, 1].real)
    radius = np.hypot(half_diff, np.abs(off))
    eigenvalues = np.stack([half_sum + radius, half_sum - radius], axis=-1)

    # Eigenvector of the larger eigenvalue: a column of (m - eps_dn * I).
    # Of the two candidate columns (half_diff + radius, conj(off)) and
    # (off, radius - half_diff), pick the better-conditioned one per entry.
    use_first = half_diff >= 0.0
    v0 = np.where(use_first, half_diff + radius, off)
    v1 = np.where(use_first, np.conj(off), radius - half_diff)
    norm = np.sqrt(np.abs(v0) ** 2 + np.abs(v1) ** 2)
    degenerate = 2.0 * radius < DEGENERACY_THRESHOLD
    safe = np.where(degenerate, 1.0, norm)
    v0 = np.where(degenerate, 1.0, v0 / safe)
    v1 = np.where(degenerate, 0.0, v1 / safe)

    def _fix_phase(a0, a1):
        # largest-magnitude component made real positive; unit vectors only,
        # so the dominant magnitude is >= 1/sqrt(2) and division is safe
        dominant = np.where(np.abs(a0) >= np.abs(a1), a0, a1)
        phase = np.conj(dominant) / np.abs(dominant)
        return a0 * phase, a1 * phase

    v0, v1 = _fix_phase(v0, v1)
    # orthogonal partner of (v0, v1)
    u0, u1 = _fix_phase(-np.conj(v1), np.conj(v0))

    vecs = np.empty(m.shape, dtype=complex)
    vecs[..., 0, 0] = v0
    vecs[..., 1, 0] = v1
    vecs[..., 0, 1] = u0
    vecs[..., 1, 1] = u1
    return EigenDecomposition2(eigenvalues, vecs)


def reconstruct(decomp: EigenDecomposition2) -> np.ndarray:
    """Inverse of eig2: sum of eps_s P_s."""
    vals, vecs = decomp
    return np.einsum('...s,...as,...bs->...ab', vals, vecs, np.conj(vecs))


def conjugate_by_expi(m: np.ndarray, h: np.ndarray, s: float) -> np.ndarray:
    """exp(-i h s) m exp(+i h s) for Hermitian h, via the angle-axis form.

    The unitary is built in closed form from the Pauli coordinates of h
    (the traceful part cancels in the conjugation), so eigenvalues and trace
    of m are preserved to machine precision.
    """
    m = np.asarray(m, dtype=complex)
    h = np.asarray(h, dtype=complex)
    cz = 0.5 * (h[..., 0, 0].real - h[..., 1, 1].real)
    co = h[..., 0, 1]  # = cx - i cy
    rho = np.sqrt(cz * cz + (co * np.conj(co)).real)
    theta = s * rho
    # sin(theta)/rho with the rho -> 0 limit s
    small = rho < 1e-30
    q = np.where(small, s, np.sin(theta) / np.where(small, 1.0, rho))
    c = np.cos(theta)

    u = np.empty(np.broadcast_shapes(m.shape, h.shape), dtype=complex)
    u[..., 0, 0] = c - 1j * q * cz
    u[..., 0, 1] = -1j * q * co
    u[..., 1, 0] = -1j * q * np.conj(co)
    u[..., 1, 1] = c + 1j * q * cz
    return u @ m @ dagger(u)


def bloch(m: np.ndarray) -> np.ndarray:
    """Bloch coordinates r_i = tr[m sigma_i], shape (..., 3) real."""
    m = np.asarray(m, dtype=complex)
    rx = 2.0 * m[..., 0, 1].real
    ry = -2.0 * m[..., 0, 1].imag
    rz = m[..., 0, 0].real - m[..., 1, 1].real
    return np.stack([rx, ry, rz], axis=-1)


def from_bloch(r: np.ndarray, trace=1.0) -> np.ndarray:
    """Matrix with given Bloch vector and trace: (trace*I + r.sigma)/2."""
    r = np.asarray(r, dtype=float)
    tr = np.broadcast_to(np.asarray(trace, dtype=float), r.shape[:-1])
    return hermitian(
        0.5 * (tr + r[..., 2]),
        0.5 * (tr - r[..., 2]),
        0.5 * (r[..., 0] - 1j * r[..., 1]),
    )

"""Phase-space representations on the unit torus.

Classical densities are stored as truncated Fourier coefficients on the
square mode window [-K, K]^2 (SpectralDensity).  Quantum states are N x N
density matrices with effective Planck constant hbar = 1/(2 pi N), and their
chord view (ChordField) holds the expectation values of discrete phase-space
displacement operators, directly comparable to the classical coefficients
mode by mode.

Conventions
-----------
A real density rho(q, p) on [0,1)^2 is synthesised as

    rho(x) = sum_k coeff(k) exp(+2 pi i k.x),   coeff(-k) = conj(coeff(k)),

so coeff(k) = integral rho(x) exp(-2 pi i k.x) dx and coeff(0,0) = 1.

The displacement family is T(k)_{j'j} = e^{i pi kq kp / N} e^{2 pi i kq j/N}
delta_{j', j+kp mod N}.  The chord coefficient that matches the classical
convention above is

    W(kq, kp) = Tr[rho T(kq, -kp)^dag]
            = e^{-i pi kq kp / N} sum_j e^{-2 pi i kq j / N} rho[j, j+kp],

with the half-integer phase taken at the *integer* labels (kq, kp), not their
mod-N residues.  With this pairing a coherent state reproduces the classical
Gaussian coefficients at any centre, and conjugation by the quantised cat map
transports chords exactly along the classical mode flow k -> M^T k (mod N).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SpectralDensity",
    "DensityMatrix",
    "ChordField",
    "FullChordField",
    "make_coherent_classical",
    "make_coherent_quantum",
    "translation_operator",
    "chord_transform",
    "full_chord_transform",
    "inverse_chord",
    "real_space_sample",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-10
# Gaussian image sum |m| <= 3 keeps the periodisation error below 1e-12
# for N >= 8.
N_IMAGES = 3


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def mode_range(k_max: int) -> np.ndarray:
    """Integer mode labels -K .. K."""
    return np.arange(-k_max, k_max + 1)


def mode_grids(k_max: int) -> tuple[np.ndarray, np.ndarray]:
    """(kq, kp) integer grids of shape (2K+1, 2K+1), kq along axis 0."""
    k = mode_range(k_max)
    return np.meshgrid(k, k, indexing="ij")


@dataclass(frozen=True)
class SpectralDensity:
    """Classical density as Fourier coefficients on the window [-K, K]^2.

    values[kq + K, kp + K] = coeff(kq, kp).  Hermitian symmetry
    coeff(-k) = conj(coeff(k)) and coeff(0,0) = 1 are invariants; truncation
    may make the real-space density pointwise negative, which is accepted.
    """

    k_max: int
    values: np.ndarray

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        expect = (2 * self.k_max + 1,) * 2
        if self.values.shape != expect:
            raise ValueError(f"coefficient array must have shape {expect}")
        _freeze(self.values)

    def coeff(self, kq: int, kp: int) -> complex:
        K = self.k_max
        if abs(kq) > K or abs(kp) > K:
            raise IndexError("mode outside window")
        return complex(self.values[kq + K, kp + K])

    def check(self, tol: float = 1e-10) -> None:
        v = self.values
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite coefficient")
        if abs(v[self.k_max, self.k_max] - 1.0) > tol:
            raise ValueError("coeff(0,0) != 1")
        if np.abs(v - np.conj(v[::-1, ::-1])).max() > tol:
            raise ValueError("hermitian symmetry violated")


@dataclass(frozen=True)
class DensityMatrix:
    """N-dimensional quantum state; N fixes hbar = 1/(2 pi N)."""

    mat: np.ndarray

    def __post_init__(self):
        if self.mat.ndim != 2 or self.mat.shape[0] != self.mat.shape[1]:
            raise ValueError("density matrix must be square")
        if self.mat.shape[0] < 2:
            raise ValueError("need N >= 2")
        _freeze(self.mat)

    @property
    def n_dim(self) -> int:
        return self.mat.shape[0]

    @property
    def hbar(self) -> float:
        return 1.0 / (2.0 * np.pi * self.n_dim)

    def check(self) -> None:
        m = self.mat
        if np.abs(m - m.conj().T).max() > HERMITICITY_TOL:
            raise ValueError("density matrix not hermitian")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise ValueError("trace != 1")


@dataclass(frozen=True)
class ChordField:
    """Windowed chord (quantum Fourier) coefficients of a density matrix."""

    n_dim: int
    k_max: int
    values: np.ndarray

    def __post_init__(self):
        expect = (2 * self.k_max + 1,) * 2
        if self.values.shape != expect:
            raise ValueError(f"chord array must have shape {expect}")
        _freeze(self.values)

    def coeff(self, kq: int, kp: int) -> complex:
        K = self.k_max
        return complex(self.values[kq + K, kp + K])

    def check(self, tol: float = 1e-10) -> None:
        v = self.values
        if abs(v[self.k_max, self.k_max] - 1.0) > tol:
            raise ValueError("W(0,0) != 1")
        if np.abs(v - np.conj(v[::-1, ::-1])).max() > tol:
            raise ValueError("hermitian symmetry violated")


@dataclass(frozen=True)
class FullChordField:
    """Chord coefficients on every displacement label (kq, kp) in [0, N)^2."""

    n_dim: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.n_dim, self.n_dim):
            raise ValueError("full chord field must be N x N")
        _freeze(self.values)


def make_coherent_classical(center: tuple[float, float], hbar: float,
                            k_max: int) -> SpectralDensity:
    """Periodised isotropic Gaussian with variances sigma_q^2 = sigma_p^2 = hbar/2.

    coeff(k) = exp(-2 pi^2 (hbar/2) |k|^2) exp(-2 pi i k.center); the
    periodisation leaves the integer-mode coefficients equal to the continuum
    transform, so this is exact.
    """
    if hbar <= 0:
        raise ValueError("hbar must be positive")
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    kq, kp = mode_grids(k_max)
    q0, p0 = center
    vals = (np.exp(-2.0 * np.pi**2 * (hbar / 2.0) * (kq**2 + kp**2))
            * np.exp(-2j * np.pi * (kq * q0 + kp * p0)))
    return SpectralDensity(k_max=k_max, values=vals)


def make_coherent_quantum(center: tuple[float, float], n_dim: int) -> DensityMatrix:
    """Pure-state projector of the torus coherent state at the given centre.

    Position amplitudes psi_j ~ sum_{|m|<=3} exp(-pi N (j/N - q0 + m)^2)
    * exp(2 pi i N p0 (j/N + m/2)), normalised.
    """
    if n_dim < 2:
        raise ValueError("need N >= 2")
    q0, p0 = center
    j = np.arange(n_dim)
    psi = np.zeros(n_dim, dtype=complex)
    for m in range(-N_IMAGES, N_IMAGES + 1):
        psi += (np.exp(-np.pi * n_dim * (j / n_dim - q0 + m) ** 2)
                * np.exp(2j * np.pi * n_dim * p0 * (j / n_dim + m / 2.0)))
    psi /= np.linalg.norm(psi)
    return DensityMatrix(mat=np.outer(psi, psi.conj()))


def translation_operator(n_dim: int, k: tuple[int, int]) -> np.ndarray:
    """Discrete displacement T(k)_{j'j} = e^{i pi kq kp/N} e^{2 pi i kq j/N} delta_{j', j+kp}.

    The prefactor uses the integer labels as given; shifting a label by N
    flips the operator sign when the conjugate label is odd.
    """
    if n_dim < 2:
        raise ValueError("need N >= 2")
    kq, kp = k
    j = np.arange(n_dim)
    T = np.zeros((n_dim, n_dim), dtype=complex)
    T[(j + kp) % n_dim, j] = (np.exp(1j * np.pi * kq * kp / n_dim)
                              * np.exp(2j * np.pi * kq * j / n_dim))
    return T


def chord_displacement(n_dim: int, k: tuple[int, int]) -> np.ndarray:
    """Displacement paired with classical mode k: D(k) = T(kq, -kp)."""
    return translation_operator(n_dim, (k[0], -k[1]))


def _chord_diagonals(mat: np.ndarray, kp_values: np.ndarray) -> np.ndarray:
    """Generalised diagonals d[kp, j] = rho[j, (j + kp) mod N]."""
    n = mat.shape[0]
    j = np.arange(n)
    return mat[j[None, :], (j[None, :] + kp_values[:, None]) % n]


def chord_transform(rho: DensityMatrix, k_max: int) -> ChordField:
    """Chord coefficients W(k) = Tr[rho D(k)^dag] on the window [-K, K]^2.

    Requires k_max <= (N-1)//2 so the window fits inside one Brillouin zone;
    a larger window would enumerate the same operator twice.
    """
    n = rho.n_dim
    if k_max > (n - 1) // 2:
        raise ValueError(
            f"mode window k_max={k_max} does not fit inside one Brillouin "
            f"zone of N={n} (need k_max <= {(n - 1) // 2})")
    ks = mode_range(k_max)
    diags = _chord_diagonals(rho.mat, ks)          # rows kp, cols j
    F = np.fft.fft(diags, axis=1)                  # cols become kq mod N
    W = F[:, ks % n].T                             # -> [kq, kp]
    W = W * np.exp(-1j * np.pi * np.outer(ks, ks) / n)
    return ChordField(n_dim=n, k_max=k_max, values=W)


def full_chord_transform(rho: DensityMatrix) -> FullChordField:
    """Chord coefficients on all N^2 labels (kq, kp) in [0, N)^2."""
    n = rho.n_dim
    ks = np.arange(n)
    diags = _chord_diagonals(rho.mat, ks)
    F = np.fft.fft(diags, axis=1).T                # [kq, kp]
    F = F * np.exp(-1j * np.pi * np.outer(ks, ks) / n)
    return FullChordField(n_dim=n, values=F)


def inverse_chord(field: FullChordField) -> DensityMatrix:
    """Reconstruct rho = (1/N) sum_k W_k D(k) from a full chord field."""
    n = field.n_dim
    ks = np.arange(n)
    W = field.values * np.exp(1j * np.pi * np.outer(ks, ks) / n)
    diags = np.fft.ifft(W.T, axis=1)               # rows kp, cols j
    mat = np.zeros((n, n), dtype=complex)
    j = np.arange(n)
    mat[j[None, :], (j[None, :] + ks[:, None]) % n] = diags
    return DensityMatrix(mat=mat)


def real_space_sample(field: SpectralDensity, grid: int) -> np.ndarray:
    """Sample the density on a uniform G x G grid by inverse Fourier synthesis.

    Needs G >= 2 k_max + 1 to avoid aliasing.  The imaginary residue of the
    synthesis must stay below 1e-10 (hermitian-symmetric input); the returned
    array is real with mean exactly coeff(0,0) = 1.
    """
    K = field.k_max
    G = int(grid)
    if G < 2 * K + 1:
        raise ValueError(f"grid {G} too small for window 2*{K}+1")
    spec = np.zeros((G, G), dtype=complex)
    ks = mode_range(K)
    spec[np.ix_(ks % G, ks % G)] = field.values
    f = np.fft.ifft2(spec) * G * G
    resid = np.abs(f.imag).max()
    if resid > 1e-10:
        raise ValueError(f"imaginary residue {resid:.2e} exceeds 1e-10")
    return f.real

"""Frequency- and spatially-correlated Rayleigh MIMO-OFDM channel generator.

The joint correlation of the vectorized channel is the Kronecker product
``R_f (x) (R_t (x) R_r)``, so a vectorized draw is ordered with the
subcarrier index slowest and the receive antenna fastest::

    y[(l * Mt + s) * Mr + r] = h_rs(l)

Random streams: a run seeded with ``seed`` gives Monte-Carlo lane ``k`` the
generator ``stream(seed, k)``, i.e. ``SeedSequence(seed, spawn_key=(k,))``.
Lanes are independent of how many workers execute them.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError
from .numerics import hermitian_eig, kron, psd_factor

# Adjacent-subcarrier correlation magnitudes used for the two named profiles.
# Calibrated so the G = 1 transition statistics land near the published ones;
# they are surrogates, not measured channel parameters.
LOW_ADJACENT_CORR = 0.91
HIGH_ADJACENT_CORR = 0.997

# 3GPP macro-cell, Laplacian PAS, 5 degree azimuth spread.
MACROCELL_A = 0.4640 + 0.8499j
MACROCELL_B = -0.4802 + 0.7421j
MACROCELL_C = -0.7688 - 0.0625j

UNIT_DIAG_TOL = 1e-9


def stream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for lane ``key`` of a run seeded with ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def macrocell_spatial_correlation() -> tuple[np.ndarray, np.ndarray]:
    """Transmit (4x4) and receive (2x2) correlation matrices of the macro-cell scenario."""
    a, b, c = MACROCELL_A, MACROCELL_B, MACROCELL_C
    ac, bc, cc = np.conj(a), np.conj(b), np.conj(c)
    r_t = np.array(
        [
            [1, a, b, c],
            [ac, 1, a, b],
            [bc, ac, 1, a],
            [cc, bc, ac, 1],
        ],
        dtype=complex,
    )
    r_r = np.array([[1, a], [ac, 1]], dtype=complex)
    return r_t, r_r


def _check_correlation_matrix(m, size: int, name: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.shape != (size, size):
        raise DomainError(f"{name} must be {size}x{size}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains NaN or Inf")
    if np.linalg.norm(m - m.conj().T) > 1e-9 * max(np.linalg.norm(m), 1.0):
        raise DomainError(f"{name} is not Hermitian")
    if np.max(np.abs(np.diag(m) - 1)) > UNIT_DIAG_TOL:
        raise DomainError(f"{name} must have unit diagonal")
    return m


@dataclass(frozen=True, eq=False)
class CorrelationSpec:
    """Sizes plus frequency and spatial correlation of a channel.

    The frequency profile is either the exponential power-delay-profile
    model (``adjacent_corr`` = magnitude of the correlation between
    neighboring subcarriers) or an explicit ``freq_matrix``.  Spatial
    correlation is off unless both ``r_t`` and ``r_r`` are given.
    """

    L: int
    Mt: int
    Mr: int
    adjacent_corr: float = 0.0
    freq_matrix: np.ndarray | None = field(default=None, repr=False)
    r_t: np.ndarray | None = field(default=None, repr=False)
    r_r: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if min(self.L, self.Mt, self.Mr) < 1:
            raise DomainError("L, Mt and Mr must be positive")
        if not 0.0 <= self.adjacent_corr < 1.0:
            raise DomainError(f"adjacent_corr must lie in [0, 1), got {self.adjacent_corr}")
        if self.freq_matrix is not None:
            object.__setattr__(self, "freq_matrix", _check_correlation_matrix(self.freq_matrix, self.L, "R_f"))
        if (self.r_t is None) != (self.r_r is None):
            raise DomainError("spatial correlation needs both R_t and R_r")
        if self.r_t is not None:
            object.__setattr__(self, "r_t", _check_correlation_matrix(self.r_t, self.Mt, "R_t"))
            object.__setattr__(self, "r_r", _check_correlation_matrix(self.r_r, self.Mr, "R_r"))

    @property
    def spatial(self) -> bool:
        return self.r_t is not None

    @property
    def size(self) -> int:
        return self.L * self.Mt * self.Mr

    def spatial_factors(self) -> tuple[np.ndarray, np.ndarray]:
        if self.spatial:
            return self.r_t, self.r_r
        return np.eye(self.Mt, dtype=complex), np.eye(self.Mr, dtype=complex)


def exponential_pdp_correlation(L: int, adjacent_corr: float) -> np.ndarray:
    """R_f[n, m] = 1 / (1 + j 2 pi (n - m) df tau), df*tau set by |R_f[n, n+1]|."""
    if adjacent_corr == 0.0:
        return np.eye(L, dtype=complex)
    x = np.sqrt(1.0 / adjacent_corr**2 - 1.0) / (2 * np.pi)
    d = np.subtract.outer(np.arange(L), np.arange(L))
    return 1.0 / (1.0 + 2j * np.pi * d * x)


def build_freq_correlation(spec: CorrelationSpec) -> np.ndarray:
    if spec.freq_matrix is not None:
        _require_psd(spec.freq_matrix, "R_f")
        return spec.freq_matrix.copy()
    return exponential_pdp_correlation(spec.L, spec.adjacent_corr)


def _require_psd(m: np.ndarray, name: str) -> None:
    w = hermitian_eig(m).eigenvalues
    if w[-1] < -1e-6 * max(w[0], 0.0):
        raise DomainError(f"{name} is not positive semidefinite (min eigenvalue {w[-1]:.3g})")


def build_full_correlation(r_f, r_t, r_r, spec: CorrelationSpec | None = None) -> np.ndarray:
    """Joint correlation R_f (x) (R_t (x) R_r) of the vectorized channel."""
    r_f, r_t, r_r = (np.asarray(m, dtype=complex) for m in (r_f, r_t, r_r))
    for m, name in ((r_f, "R_f"), (r_t, "R_t"), (r_r, "R_r")):
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError(f"{name} must be square, got {m.shape}")
    if spec is not None and (r_f.shape[0], r_t.shape[0], r_r.shape[0]) != (spec.L, spec.Mt, spec.Mr):
        raise DomainError("correlation factor sizes do not match (L, Mt, Mr)")
    for m, name in ((r_f, "R_f"), (r_t, "R_t"), (r_r, "R_r")):
        _require_psd(m, name)
    return kron(r_f, kron(r_t, r_r))


def channel_factor(spec: CorrelationSpec) -> np.ndarray:
    """Square-root factor F of the joint correlation, F F^H = R.

    Built from the factors' own eigendecompositions; the Kronecker product
    of those is an eigendecomposition of R, so this equals P sqrt(Omega)
    up to column order without diagonalizing the full matrix.
    """
    r_t, r_r = spec.spatial_factors()
    f_f = psd_factor(build_freq_correlation(spec))
    return kron(f_f, kron(psd_factor(r_t), psd_factor(r_r)))


@dataclass(eq=False)
class ChannelTensor:
    """Channel of one OFDM symbol; ``gains[r, s, l]`` is h_rs(l)."""

    gains: np.ndarray

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=complex)
        if self.gains.ndim != 3:
            raise DomainError(f"gains must be (Mr, Mt, L), got {self.gains.shape}")
        if not np.all(np.isfinite(self.gains)):
            raise DomainError("channel gains contain NaN or Inf")

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.gains.shape

    def subcarrier(self, l: int) -> np.ndarray:
        return self.gains[:, :, l]

    def per_subcarrier(self) -> np.ndarray:
        """Stack of H(l) matrices, shape (L, Mr, Mt)."""
        return np.transpose(self.gains, (2, 0, 1))

    def vec(self) -> np.ndarray:
        return np.transpose(self.gains, (2, 1, 0)).reshape(-1)

    @classmethod
    def devec(cls, y, L: int, Mt: int, Mr: int) -> "ChannelTensor":
        y = np.asarray(y, dtype=complex)
        if y.shape != (L * Mt * Mr,):
            raise DomainError(f"expected vector of length {L * Mt * Mr}, got {y.shape}")
        return cls(np.transpose(y.reshape(L, Mt, Mr), (2, 1, 0)))


def draw_vectors(f: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
    """``count`` vectorized channels y = F x with x ~ CN(0, I); shape (count, n)."""
    n = f.shape[1]
    x = rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))
    x *= np.sqrt(0.5)
    return x @ f.T


def vectors_to_stack(y: np.ndarray, spec: CorrelationSpec) -> np.ndarray:
    """Turn vectorized draws (count, n) into H(l) stacks (count, L, Mr, Mt)."""
    return np.swapaxes(y.reshape(-1, spec.L, spec.Mt, spec.Mr), -1, -2)


def sample_channels(f: np.ndarray, spec: CorrelationSpec, rng: np.random.Generator, count: int) -> np.ndarray:
    """Batch of channels as H(l) stacks, shape (count, L, Mr, Mt)."""
    if f.shape != (spec.size, spec.size):
        raise DomainError(f"factor shape {f.shape} does not match spec size {spec.size}")
    return vectors_to_stack(draw_vectors(f, rng, count), spec)


def sample_channel(f: np.ndarray, spec: CorrelationSpec, rng: np.random.Generator) -> ChannelTensor:
    if f.shape != (spec.size, spec.size):
        raise DomainError(f"factor shape {f.shape} does not match spec size {spec.size}")
    return ChannelTensor.devec(draw_vectors(f, rng, 1)[0], spec.L, spec.Mt, spec.Mr)


def _as_gain_array(samples) -> np.ndarray:
    """Normalize input to a (count, Mr, Mt, L) gain array."""
    if isinstance(samples, np.ndarray):
        if samples.ndim != 4:
            raise DomainError("stacked samples must be (count, L, Mr, Mt)")
        return np.transpose(samples, (0, 2, 3, 1))
    samples = list(samples)
    if not samples:
        raise DomainError("no samples given")
    return np.stack([s.gains for s in samples])


def empirical_correlation(samples: Sequence[ChannelTensor] | np.ndarray, mode: str = "frequency") -> np.ndarray:
    """Sample average of h h^H.

    ``frequency`` averages the L x L outer products of every h_rs over all
    samples and antenna pairs; ``full`` averages the outer products of the
    vectorized channel.
    """
    g = _as_gain_array(samples)
    if g.shape[0] == 0:
        raise DomainError("no samples given")
    count, mr, mt, L = g.shape
    if mode == "frequency":
        h = g.reshape(-1, L)
        return h.T @ h.conj() / h.shape[0]
    if mode == "full":
        y = np.transpose(g, (0, 3, 2, 1)).reshape(count, -1)
        return y.T @ y.conj() / count
    raise DomainError(f"unknown mode {mode!r}")

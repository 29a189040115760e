"""Per-cluster codeword selection and the eigen-mode switching diagnostic."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelTensor
from .codebook import Codebook
from .errors import DomainError
from .numerics import right_singular_vectors

_CHUNK = 256


@dataclass(frozen=True)
class ClusterConfig:
    """L subcarriers split into M = L / G clusters of G adjacent subcarriers."""

    L: int
    G: int

    def __post_init__(self):
        if self.G < 1 or self.L < 1 or self.L % self.G:
            raise DomainError(f"cluster size G={self.G} must divide L={self.L}")

    @property
    def M(self) -> int:
        return self.L // self.G

    def center_subcarriers(self) -> np.ndarray:
        """0-based representative subcarrier of each cluster (the ceil(G/2)-th one)."""
        return np.arange(self.M) * self.G + (self.G + 1) // 2 - 1


def _as_stack(ch) -> np.ndarray:
    if isinstance(ch, ChannelTensor):
        return ch.per_subcarrier()
    return np.asarray(ch, dtype=complex)


def cluster_objectives(h: np.ndarray, G: int, cb: Codebook) -> np.ndarray:
    """min over the cluster of ||H v_i||^2 for every codeword.

    ``h`` has shape (..., L, Mr, Mt); the result has shape (..., L // G, N).
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[-1] != cb.Mt:
        raise DomainError(f"channel has Mt={h.shape[-1]}, codebook has Mt={cb.Mt}")
    L = h.shape[-3]
    if L % G:
        raise DomainError(f"cluster size G={G} must divide L={L}")
    gain = np.sum(np.abs(h @ cb.matrix) ** 2, axis=-2)
    return gain.reshape(*gain.shape[:-2], L // G, G, cb.N).min(axis=-2)


def select_cluster_codeword(h_slice, cb: Codebook) -> int:
    """Index maximizing the worst-subcarrier gain over one cluster (G, Mr, Mt).

    Ties go to the lowest index.
    """
    h_slice = np.asarray(h_slice, dtype=complex)
    if h_slice.ndim != 3 or h_slice.shape[0] < 1:
        raise DomainError("cluster slice must be (G, Mr, Mt) with G >= 1")
    obj = cluster_objectives(h_slice, h_slice.shape[0], cb)
    return int(np.argmax(obj[0]))


def select_indices(h: np.ndarray, G: int, cb: Codebook) -> np.ndarray:
    """Vectorized selection for stacks (..., L, Mr, Mt) -> (..., M) indices."""
    h = np.asarray(h, dtype=complex)
    if h.ndim == 3:
        return np.argmax(cluster_objectives(h, G, cb), axis=-1)
    flat = h.reshape(-1, *h.shape[-3:])
    out = np.empty((flat.shape[0], h.shape[-3] // G), dtype=np.int64)
    for start in range(0, flat.shape[0], _CHUNK):
        out[start:start + _CHUNK] = np.argmax(cluster_objectives(flat[start:start + _CHUNK], G, cb), axis=-1)
    return out.reshape(*h.shape[:-3], -1)


def select_all_clusters(ch, cfg: ClusterConfig, cb: Codebook) -> np.ndarray:
    """IndexVector of one OFDM symbol: one codeword index per cluster."""
    h = _as_stack(ch)
    if h.ndim != 3 or h.shape[0] != cfg.L:
        raise DomainError(f"channel has {h.shape[0] if h.ndim == 3 else '?'} subcarriers, config expects L={cfg.L}")
    return select_indices(h, cfg.G, cb)


def eigen_switching_rate(channels, cfg: ClusterConfig) -> float:
    """Fraction of neighboring cluster pairs whose dominant directions swap.

    For clusters m and m+1 the dominant right singular vector u of cluster
    m+1's center subcarrier is compared with the first two right singular
    vectors v1, v2 of cluster m's center subcarrier; a switch is counted
    when |u^H v2| > |u^H v1|.  Averaged over all symbols and pairs.
    """
    if isinstance(channels, np.ndarray):
        h = channels if channels.ndim == 4 else channels[None]
    else:
        h = np.stack([_as_stack(c) for c in channels])
    if h.shape[-2] < 2:
        raise DomainError("eigen switching needs Mr >= 2")
    if h.shape[1] != cfg.L:
        raise DomainError(f"channel has {h.shape[1]} subcarriers, config expects L={cfg.L}")
    if cfg.M < 2:
        raise DomainError("eigen switching needs at least two clusters")
    centers = h[:, cfg.center_subcarriers()]
    vecs, _ = right_singular_vectors(centers, 2)
    first, second = vecs[:, :-1, :, 0], vecs[:, :-1, :, 1]
    nxt = vecs[:, 1:, :, 0]
    c1 = np.abs(np.sum(nxt.conj() * first, axis=-1))
    c2 = np.abs(np.sum(nxt.conj() * second, axis=-1))
    return float(np.mean(c2 > c1))

"""Differential index coding with adaptively estimated Huffman codes.

Each OFDM symbol's feedback is the first cluster's codeword index as a raw
``log2(N)``-bit field, followed by Huffman codewords for the transition
symbols of clusters 2..M.  Transmitter and receiver hold identical
``CodecSession`` state: both code symbol t with tables built from the
counts of symbols 1..t-1 and then apply the same count update, so they
stay in lock-step without side information.

Bitstream layout: header (big-endian, fixed width) then payload codewords in
cluster order, packed MSB-first, zero-padded to a byte boundary only at the
end of the message.  ``bit_count`` is the unpadded length.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codebook import TransitionTable
from .errors import ConfigError, DomainError, FramingError

POOLED = "pooled"
PER_INDEX = "per-index"
MODES = (POOLED, PER_INDEX)


@dataclass(frozen=True)
class SymbolVector:
    """Raw first-cluster index plus the M - 1 transition symbols."""

    first_index: int
    transitions: tuple[int, ...]

    @property
    def M(self) -> int:
        return len(self.transitions) + 1


def differential_encode_indices(iv: Sequence[int], tt: TransitionTable) -> SymbolVector:
    iv = np.asarray(iv, dtype=np.int64)
    if iv.ndim != 1 or iv.size < 1:
        raise DomainError("index vector must be 1-D and non-empty")
    if iv.min() < 0 or iv.max() >= tt.N:
        raise DomainError(f"indices must lie in [0, {tt.N})")
    return SymbolVector(int(iv[0]), tuple(tt.xi[iv[:-1], iv[1:]].tolist()))


def differential_decode_indices(sv: SymbolVector, tt: TransitionTable) -> np.ndarray:
    out = np.empty(sv.M, dtype=np.int64)
    out[0] = sv.first_index
    for m, k in enumerate(sv.transitions):
        out[m + 1] = tt.order[out[m], k]
    return out


def transition_symbols(indices: np.ndarray, tt: TransitionTable) -> np.ndarray:
    """Vectorized differential mapping (..., M) -> (..., M - 1)."""
    indices = np.asarray(indices)
    return tt.xi[indices[..., :-1], indices[..., 1:]]


# -- Huffman ------------------------------------------------------------------

def huffman_lengths(weights: Sequence[float]) -> list[int]:
    """Optimal prefix-code lengths for positive weights.

    Merges always take the two lightest nodes; equal weights are ordered by
    the smallest symbol each node contains, so the result is a pure
    function of the weights.
    """
    n = len(weights)
    if n == 1:
        return [1]
    heap = [(w, s, [s]) for s, w in enumerate(weights)]
    heapq.heapify(heap)
    lengths = [0] * n
    while len(heap) > 1:
        w1, s1, l1 = heapq.heappop(heap)
        w2, s2, l2 = heapq.heappop(heap)
        for s in l1:
            lengths[s] += 1
        for s in l2:
            lengths[s] += 1
        heapq.heappush(heap, (w1 + w2, min(s1, s2), l1 + l2))
    return lengths


def canonical_codes(lengths: Sequence[int]) -> list[str]:
    """Assign codewords in (length, symbol) order."""
    codes = [""] * len(lengths)
    code, prev = 0, 0
    for s in sorted(range(len(lengths)), key=lambda s: (lengths[s], s)):
        code <<= lengths[s] - prev
        prev = lengths[s]
        codes[s] = format(code, f"0{prev}b")
        code += 1
    return codes


@dataclass(frozen=True)
class HuffmanCode:
    lengths: tuple[int, ...]
    codes: tuple[str, ...]

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "HuffmanCode":
        lengths = huffman_lengths(weights)
        return cls(tuple(lengths), tuple(canonical_codes(lengths)))

    @property
    def decode_map(self) -> dict[str, int]:
        return {c: s for s, c in enumerate(self.codes)}

    def mean_length(self, p: Sequence[float]) -> float:
        return float(np.dot(p, self.lengths))


def huffman_build(dist: Sequence[float]) -> HuffmanCode:
    """Canonical Huffman code for a strictly positive distribution."""
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise DomainError("distribution must be a non-empty vector")
    if np.any(p <= 0) or not np.all(np.isfinite(p)):
        raise DomainError("every probability must be positive (smooth the estimate first)")
    if abs(p.sum() - 1.0) > 1e-9:
        raise DomainError(f"probabilities sum to {p.sum()}, not 1")
    return HuffmanCode.from_weights(p.tolist())


def entropy_bits(p: Sequence[float]) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p)))


# -- probability model --------------------------------------------------------

class ProbabilityModel:
    """Transition-symbol counts with add-one smoothing.

    Pooled mode keeps one count vector; per-index mode keeps one per source
    codeword (the index of the previous cluster).
    """

    def __init__(self, N: int, mode: str = POOLED):
        if mode not in MODES:
            raise ConfigError(f"unknown probability mode {mode!r}")
        self.N = N
        self.mode = mode
        shape = (N,) if mode == POOLED else (N, N)
        self.counts = np.zeros(shape, dtype=np.int64)

    def __eq__(self, other):
        if not isinstance(other, ProbabilityModel):
            return NotImplemented
        return self.N == other.N and self.mode == other.mode and np.array_equal(self.counts, other.counts)

    def __repr__(self):
        return f"ProbabilityModel(N={self.N}, mode={self.mode!r}, total={int(self.counts.sum())})"

    def copy(self) -> "ProbabilityModel":
        m = ProbabilityModel(self.N, self.mode)
        m.counts = self.counts.copy()
        return m

    def _row(self, context: int | None) -> np.ndarray:
        if self.mode == POOLED:
            return self.counts
        if context is None:
            raise DomainError("per-index model needs a source index")
        return self.counts[context]

    def weights(self, context: int | None = None) -> np.ndarray:
        return self._row(context) + 1

    def probabilities(self, context: int | None = None) -> np.ndarray:
        row = self._row(context)
        return (row + 1) / (row.sum() + self.N)

    def update(self, sv: SymbolVector, tt: TransitionTable | None = None) -> "ProbabilityModel":
        """Add one OFDM symbol's transitions.

        Per-index mode needs the transition table to recover each
        transition's source index.
        """
        if not sv.transitions:
            return self
        k = np.asarray(sv.transitions, dtype=np.int64)
        if self.mode == POOLED:
            np.add.at(self.counts, k, 1)
        else:
            if tt is None:
                raise DomainError("per-index update needs the transition table")
            src = differential_decode_indices(sv, tt)[:-1]
            np.add.at(self.counts, (src, k), 1)
        return self


# -- messages and sessions ----------------------------------------------------

@dataclass(frozen=True)
class FeedbackMessage:
    header: str
    payload: str

    @property
    def bits(self) -> str:
        return self.header + self.payload

    @property
    def bit_count(self) -> int:
        return len(self.header) + len(self.payload)

    def to_bytes(self) -> bytes:
        bits = self.bits
        pad = -len(bits) % 8
        bits += "0" * pad
        return int(bits, 2).to_bytes(len(bits) // 8, "big") if bits else b""

    @classmethod
    def from_bytes(cls, data: bytes, bit_count: int, header_bits: int) -> "FeedbackMessage":
        if bit_count > 8 * len(data) or bit_count < header_bits:
            raise FramingError(f"cannot take {bit_count} bits from {len(data)} bytes")
        bits = format(int.from_bytes(data, "big"), f"0{8 * len(data)}b")[:bit_count] if data else ""
        return cls(bits[:header_bits], bits[header_bits:])


class CodecSession:
    """One side of the feedback link (``encoder`` at the receiver, ``decoder`` at the transmitter).

    Code tables are rebuilt from the current counts every ``rebuild_every``
    OFDM symbols (1 = before every symbol).  Operations on one session must
    be serialized.
    """

    def __init__(self, role: str, table: TransitionTable, mode: str = POOLED,
                 rebuild_every: int = 1, M: int | None = None):
        if role not in ("encoder", "decoder"):
            raise ConfigError(f"role must be 'encoder' or 'decoder', got {role!r}")
        n = table.N
        if n < 2 or n & (n - 1):
            raise ConfigError(f"codebook size N={n} must be a power of two")
        if rebuild_every < 1:
            raise ConfigError("rebuild_every must be >= 1")
        self.role = role
        self.table = table
        self.model = ProbabilityModel(n, mode)
        self.rebuild_every = rebuild_every
        self.M = M
        self.header_bits = n.bit_length() - 1
        self.t = 0
        self._snapshot = self.model.counts.copy()
        self._codes: dict[int | None, HuffmanCode] = {}
        self._decode_maps: dict[int | None, dict[str, int]] = {}

    @property
    def mode(self) -> str:
        return self.model.mode

    def _refresh(self) -> None:
        if self.t % self.rebuild_every:
            return
        counts = self.model.counts
        if self.mode == POOLED:
            if not np.array_equal(counts, self._snapshot):
                self._codes.clear()
                self._decode_maps.clear()
        else:
            for ctx in np.flatnonzero(np.any(counts != self._snapshot, axis=1)).tolist():
                self._codes.pop(ctx, None)
                self._decode_maps.pop(ctx, None)
        self._snapshot = counts.copy()

    def code(self, context: int | None = None) -> HuffmanCode:
        """Code table currently in force (for ``context`` in per-index mode)."""
        key = None if self.mode == POOLED else context
        code = self._codes.get(key)
        if code is None:
            row = self._snapshot if key is None else self._snapshot[key]
            code = HuffmanCode.from_weights((row + 1).tolist())
            self._codes[key] = code
        return code

    def _decode_map(self, key) -> dict[str, int]:
        dm = self._decode_maps.get(key)
        if dm is None:
            dm = self.code(key).decode_map
            self._decode_maps[key] = dm
        return dm

    def _advance(self, sv: SymbolVector) -> None:
        self.model.update(sv, self.table)
        self.t += 1

    def encode(self, sv: SymbolVector) -> FeedbackMessage:
        if self.role != "encoder":
            raise ConfigError("only an encoder session can encode")
        n = self.table.N
        if not 0 <= sv.first_index < n or any(not 0 <= k < n for k in sv.transitions):
            raise DomainError(f"symbols must lie in [0, {n})")
        if self.M is not None and sv.M != self.M:
            raise DomainError(f"expected {self.M} clusters, got {sv.M}")
        self._refresh()
        header = format(sv.first_index, f"0{self.header_bits}b")
        if self.mode == POOLED:
            codes = self.code().codes
            payload = "".join(codes[k] for k in sv.transitions)
        else:
            parts, ctx, order = [], sv.first_index, self.table.order
            for k in sv.transitions:
                parts.append(self.code(ctx).codes[k])
                ctx = int(order[ctx, k])
            payload = "".join(parts)
        self._advance(sv)
        return FeedbackMessage(header, payload)

    def decode(self, msg: FeedbackMessage) -> SymbolVector:
        if self.role != "decoder":
            raise ConfigError("only a decoder session can decode")
        if len(msg.header) != self.header_bits:
            raise FramingError(f"header must be {self.header_bits} bits, got {len(msg.header)}")
        self._refresh()
        first = int(msg.header, 2)
        payload = msg.payload
        out, ctx, pos, order = [], first, 0, self.table.order
        pooled = self.mode == POOLED
        dm = self._decode_map(None) if pooled else None
        while pos < len(payload):
            if not pooled:
                dm = self._decode_map(ctx)
            end = pos + 1
            while payload[pos:end] not in dm:
                if end >= len(payload):
                    raise FramingError(f"payload ended inside a codeword after {len(out)} symbols")
                end += 1
            k = dm[payload[pos:end]]
            out.append(k)
            pos = end
            ctx = int(order[ctx, k])
        if self.M is not None and len(out) != self.M - 1:
            raise FramingError(f"decoded {len(out)} transitions, expected {self.M - 1}")
        sv = SymbolVector(first, tuple(out))
        self._advance(sv)
        return sv


def frozen_lengths(counts: np.ndarray) -> np.ndarray:
    """Code lengths of add-one-smoothed Huffman codes for fixed counts.

    Shape follows ``counts``: (N,) pooled or (N, N) per source index.
    """
    counts = np.asarray(counts)
    if counts.ndim == 1:
        return np.array(huffman_lengths((counts + 1).tolist()))
    return np.array([huffman_lengths((row + 1).tolist()) for row in counts])


def log2_int(n: int) -> int:
    if n < 1 or n & (n - 1):
        raise ConfigError(f"N={n} must be a power of two")
    return int(math.log2(n))

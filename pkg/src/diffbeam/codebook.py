"""Beamforming codebooks and the per-codeword transition ordering.

Indices are 0-based throughout: codeword ``i`` is ``vectors[i]`` and the
self-transition is symbol 0.

File format (plain text, ``#`` starts a comment)::

    Mt N
    re(v_0[0]) im(v_0[0]) re(v_0[1]) im(v_0[1]) ...   # one line per codeword
    ...

Matrix files use the same layout with a ``rows cols`` header followed by
``rows`` lines of ``2 * cols`` reals; several blocks may follow each other.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import stream
from .errors import DomainError, LoadError

UNIT_NORM_TOL = 1e-9
LOAD_NORM_TOL = 1e-6
TIE_DECIMALS = 12


def min_distance(vectors) -> float:
    """Smallest chordal distance sqrt(1 - |v_k^H v_l|^2) over distinct pairs."""
    if isinstance(vectors, Codebook):
        vectors = vectors.vectors
    v = np.asarray(vectors, dtype=complex)
    a = np.abs(v.conj() @ v.T) ** 2
    iu = np.triu_indices(v.shape[0], k=1)
    return float(np.sqrt(np.clip(1.0 - a[iu].max(), 0.0, None)))


@dataclass(frozen=True, eq=False)
class Codebook:
    """N unit-norm codewords in C^Mt, stored as rows of ``vectors`` (N, Mt)."""

    vectors: np.ndarray
    source: str = "explicit"
    min_distance: float = field(default=float("nan"))

    def __post_init__(self):
        v = np.array(self.vectors, dtype=complex)
        if v.ndim != 2 or v.shape[0] < 2:
            raise DomainError(f"codebook needs at least 2 codewords, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DomainError("codebook contains NaN or Inf")
        norms = np.linalg.norm(v, axis=1)
        if np.max(np.abs(norms - 1.0)) > UNIT_NORM_TOL:
            raise DomainError("codewords must have unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        j = min_distance(v)
        if j <= 0.0:
            raise DomainError("codebook contains duplicate lines")
        if not math.isnan(self.min_distance) and abs(self.min_distance - j) > 1e-12:
            raise DomainError(f"stored min distance {self.min_distance} disagrees with {j}")
        object.__setattr__(self, "min_distance", j)

    @property
    def N(self) -> int:
        return self.vectors.shape[0]

    @property
    def Mt(self) -> int:
        return self.vectors.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Codewords as columns, shape (Mt, N)."""
        return self.vectors.T


# -- file I/O -----------------------------------------------------------------

def _numeric_lines(text: str, path) -> list[tuple[int, list[float]]]:
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            out.append((lineno, [float(tok) for tok in line.split()]))
        except ValueError:
            raise LoadError(f"{path}:{lineno}: cannot parse numbers in {raw.strip()!r}") from None
    return out


def _read_header(lines, pos: int, path) -> tuple[int, int]:
    if pos >= len(lines):
        raise LoadError(f"{path}: missing header line")
    lineno, vals = lines[pos]
    if len(vals) != 2 or any(x != int(x) or x < 1 for x in vals):
        raise LoadError(f"{path}:{lineno}: header must be two positive integers")
    return int(vals[0]), int(vals[1])


def _read_rows(lines, pos: int, nrows: int, ncols: int, path) -> np.ndarray:
    if pos + nrows > len(lines):
        have = len(lines) - pos
        raise LoadError(f"{path}: expected {nrows} rows after header, found {have}")
    rows = []
    for lineno, vals in lines[pos:pos + nrows]:
        if len(vals) != 2 * ncols:
            raise LoadError(f"{path}:{lineno}: expected {2 * ncols} reals, found {len(vals)}")
        arr = np.asarray(vals)
        rows.append(arr[0::2] + 1j * arr[1::2])
    return np.array(rows)


def _format_row(row: np.ndarray) -> str:
    return " ".join(f"{float(x.real)!r} {float(x.imag)!r}" for x in row)


def load_codebook(path) -> Codebook:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"{path}: {exc.strerror or exc}") from exc
    lines = _numeric_lines(text, path)
    mt, n = _read_header(lines, 0, path)
    v = _read_rows(lines, 1, n, mt, path)
    if len(lines) > n + 1:
        raise LoadError(f"{path}:{lines[n + 1][0]}: trailing data after {n} codewords")
    norms = np.linalg.norm(v, axis=1)
    for k, nrm in enumerate(norms):
        if abs(nrm - 1.0) > LOAD_NORM_TOL:
            raise LoadError(f"{path}:{lines[1 + k][0]}: codeword {k} has norm {nrm:.6g}, expected 1")
    off = np.abs(norms - 1.0) > UNIT_NORM_TOL
    v[off] /= norms[off, None]
    a = np.abs(v.conj() @ v.T) ** 2
    np.fill_diagonal(a, 0.0)
    if n < 2:
        raise LoadError(f"{path}: codebook needs at least 2 codewords")
    k, l = np.unravel_index(np.argmax(a), a.shape)
    if a[k, l] >= 1.0 - 1e-12:
        raise LoadError(f"{path}:{lines[1 + l][0]}: codeword {l} duplicates codeword {k} (line {lines[1 + k][0]})")
    return Codebook(v, source=str(path))


def save_codebook(cb: Codebook, path, comment: str | None = None) -> None:
    out = [f"# {comment or cb.source}", f"# min distance J = {float(cb.min_distance)!r}", f"{cb.Mt} {cb.N}"]
    out += [_format_row(row) for row in cb.vectors]
    Path(path).write_text("\n".join(out) + "\n")


def read_matrix_blocks(path) -> list[np.ndarray]:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise LoadError(f"{path}: {exc.strerror or exc}") from exc
    lines = _numeric_lines(text, path)
    blocks, pos = [], 0
    while pos < len(lines):
        rows, cols = _read_header(lines, pos, path)
        blocks.append(_read_rows(lines, pos + 1, rows, cols, path))
        pos += rows + 1
    if not blocks:
        raise LoadError(f"{path}: no matrix blocks")
    return blocks


def write_matrix_blocks(path, *blocks: np.ndarray) -> None:
    out = []
    for m in blocks:
        m = np.atleast_2d(np.asarray(m, dtype=complex))
        out.append(f"{m.shape[0]} {m.shape[1]}")
        out += [_format_row(row) for row in m]
    Path(path).write_text("\n".join(out) + "\n")


# -- codebook design ----------------------------------------------------------

def _coherence(v: np.ndarray) -> np.ndarray:
    a = np.abs(v.conj().T @ v) ** 2
    np.fill_diagonal(a, 0.0)
    return a


def _glp_restart(rng: np.random.Generator, mt: int, n: int, iterations: int) -> tuple[np.ndarray, list[float]]:
    # descend a soft-max of pairwise |v_k^H v_l|^2, sharpening it as we go
    v = rng.standard_normal((mt, n)) + 1j * rng.standard_normal((mt, n))
    v /= np.linalg.norm(v, axis=0)
    best_v, best_j = v.copy(), math.sqrt(max(1.0 - _coherence(v).max(), 0.0))
    history = []
    for it in range(iterations):
        frac = it / max(iterations - 1, 1)
        sharp = 40.0 * 16.0**frac
        lr = 0.05 * (1.0 - 0.8 * frac)
        c = v.conj().T @ v
        a = np.abs(c) ** 2
        np.fill_diagonal(a, 0.0)
        w = np.exp(sharp * (a - a.max()))
        np.fill_diagonal(w, 0.0)
        grad = v @ (w * c)
        grad -= v * np.sum(v.conj() * grad, axis=0).real
        gn = np.linalg.norm(grad)
        if gn == 0.0:
            break
        v = v - lr * math.sqrt(n) * grad / gn
        v /= np.linalg.norm(v, axis=0)
        j = math.sqrt(max(1.0 - _coherence(v).max(), 0.0))
        if j > best_j:
            best_v, best_j = v.copy(), j
        history.append(best_j)
    return best_v, history


def glp_search(Mt: int, N: int, seed: int = 0, restarts: int = 4, iterations: int = 3000):
    """Best-of-restarts packing; returns (vectors (N, Mt), running best-J history)."""
    if N < 2 or Mt < 2:
        raise DomainError("need N >= 2 and Mt >= 2")
    best_v, best_j, history = None, -1.0, []
    for r in range(restarts):
        v, hist = _glp_restart(stream(seed, r), Mt, N, iterations)
        history.extend(max(best_j, j) for j in hist)
        j = min_distance(v.T)
        if j > best_j:
            best_v, best_j = v, j
    return best_v.T.copy(), history


def generate_glp_codebook(Mt: int, N: int, seed: int = 0, restarts: int = 4, iterations: int = 3000) -> Codebook:
    """Grassmannian line packing by smoothed max-min-distance descent.

    Deterministic for a given seed; restart ``r`` draws from ``stream(seed, r)``.
    """
    v, _ = glp_search(Mt, N, seed, restarts, iterations)
    return Codebook(v, source=f"glp(Mt={Mt}, N={N}, seed={seed}, restarts={restarts}, iterations={iterations})")


def cyclic_codebook(Mt: int, N: int, max_candidates: int = 200_000, seed: int = 0) -> Codebook:
    """Packing restricted to a cyclic group orbit v_k = diag(exp(j 2pi u k / N)) v_0.

    The frequency vector ``u`` (u_0 = 0) is chosen to maximize the minimum
    distance; all subsets are tried when there are at most ``max_candidates``,
    otherwise a seeded random sample.  Because every codeword is a unitary
    image of every other, all codewords see the same distance spectrum and
    occupy congruent decision regions.
    """
    if N < 2 or Mt < 2:
        raise DomainError("need N >= 2 and Mt >= 2")
    if Mt > N:
        raise DomainError("cyclic design needs Mt <= N")
    total = math.comb(N - 1, Mt - 1)
    if total <= max_candidates:
        cands = np.array(list(itertools.combinations(range(1, N), Mt - 1)), dtype=int)
    else:
        rng = np.random.default_rng(seed)
        cands = np.sort(np.array([rng.choice(np.arange(1, N), Mt - 1, replace=False) for _ in range(max_candidates)]), axis=1)
    k = np.arange(1, N)
    best_u, best_c = None, np.inf
    for start in range(0, len(cands), 4096):
        u = np.concatenate([np.zeros((min(4096, len(cands) - start), 1), dtype=int), cands[start:start + 4096]], axis=1)
        ph = np.exp(2j * np.pi * k[None, :, None] * u[:, None, :] / N)
        coh = (np.abs(ph.sum(axis=2)) / Mt) ** 2
        worst = coh.max(axis=1)
        idx = int(np.argmin(worst))
        if worst[idx] < best_c - 1e-12:
            best_u, best_c = u[idx], worst[idx]
    v = np.exp(2j * np.pi * np.outer(np.arange(N), best_u) / N) / math.sqrt(Mt)
    return Codebook(v, source=f"cyclic(Mt={Mt}, N={N}, u={best_u.tolist()})")


def orthonormal_codebook(Mt: int) -> Codebook:
    return Codebook(np.eye(Mt, dtype=complex), source=f"orthonormal(Mt={Mt})")


# -- transition table ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TransitionTable:
    """Per source codeword i: targets ordered by decreasing |v_i^H v_j|^2.

    ``order[i, k]`` is the target at rank k (so ``order[i, 0] == i``),
    ``betas[i, k]`` its squared correlation, and ``xi[i, j]`` the rank of
    target j, i.e. the transition symbol for i -> j.
    """

    order: np.ndarray
    betas: np.ndarray
    xi: np.ndarray

    @property
    def N(self) -> int:
        return self.order.shape[0]

    def symbol(self, i: int, j: int) -> int:
        return int(self.xi[i, j])

    def target(self, i: int, k: int) -> int:
        return int(self.order[i, k])


def build_transition_table(cb: Codebook) -> TransitionTable:
    """Sort each codeword's correlations; equal values (to 12 decimals) keep ascending index."""
    v = cb.vectors
    alpha = np.abs(v.conj() @ v.T) ** 2
    key = np.rint(alpha * 10.0**TIE_DECIMALS)
    np.fill_diagonal(key, np.inf)
    order = np.argsort(-key, axis=1, kind="stable")
    betas = np.take_along_axis(alpha, order, axis=1)
    xi = np.empty_like(order)
    rows = np.arange(cb.N)[:, None]
    xi[rows, order] = np.arange(cb.N)[None, :]
    for arr in (order, betas, xi):
        arr.setflags(write=False)
    return TransitionTable(order, betas, xi)


def check_property1(tt: TransitionTable) -> float:
    """max over i, j, k of |beta_i(k) - beta_j(k)|."""
    return float(np.max(tt.betas.max(axis=0) - tt.betas.min(axis=0)))

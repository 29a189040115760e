"""Small dense complex linear algebra used by the rest of the package.

Matrices are plain ``numpy`` complex arrays.  Every routine accepts a stack
of matrices (leading batch axes) where that makes sense, because the
simulator calls them on thousands of 4x4 Gram matrices at once.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericError, ResourceError

MAX_SWEEPS = 100
HERMITIAN_TOL = 1e-9
PSD_CLAMP_TOL = 1e-6
KRON_MAX_ENTRIES = 1 << 24


@dataclass(frozen=True)
class EigResult:
    """Eigenvalues in descending order and the matching unit eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim < 2:
        raise DomainError(f"{name} must be at least 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError(f"{name} contains NaN or Inf")
    return m


@lru_cache(maxsize=None)
def _round_robin(n: int) -> tuple[tuple[np.ndarray, np.ndarray], ...]:
    """Rounds of disjoint (p, q) pairs that together cover every pair once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        ps, qs = [], []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                ps.append(min(p, q))
                qs.append(max(p, q))
        rounds.append((np.array(ps), np.array(qs)))
        players = [players[0], players[-1]] + players[1:-1]
    return tuple(rounds)


def _off_norm(a: np.ndarray) -> np.ndarray:
    n = a.shape[-1]
    off = a * (1.0 - np.eye(n))
    return np.sqrt(np.sum(np.abs(off) ** 2, axis=(-2, -1)))


def _rotate(a: np.ndarray, v: np.ndarray, p: np.ndarray, q: np.ndarray) -> None:
    """Apply one round of disjoint complex Jacobi rotations in place."""
    app = a[..., p, p].real
    aqq = a[..., q, q].real
    apq = a[..., p, q]
    b = np.abs(apq)
    # subnormal off-diagonals are already zero to working precision
    active = b > 1e-300
    safe_b = np.where(active, b, 1.0)
    phase = np.where(active, apq.real / safe_b + 1j * (apq.imag / safe_b), 1.0)
    theta = (aqq - app) / (2.0 * safe_b)
    t = np.where(theta >= 0, 1.0, -1.0) / (np.abs(theta) + np.hypot(theta, 1.0))
    t = np.where(active, t, 0.0)
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    se = s * phase
    sec = s * np.conj(phase)

    rp = a[..., p, :].copy()
    rq = a[..., q, :]
    a[..., p, :] = c[..., None] * rp - se[..., None] * rq
    a[..., q, :] = sec[..., None] * rp + c[..., None] * rq

    for m in (a, v):
        cp = m[..., :, p].copy()
        cq = m[..., :, q]
        m[..., :, p] = c[..., None, :] * cp - sec[..., None, :] * cq
        m[..., :, q] = se[..., None, :] * cp + c[..., None, :] * cq

    a[..., p, q] = 0.0
    a[..., q, p] = 0.0


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = MAX_SWEEPS) -> EigResult:
    """Cyclic Jacobi on a (stack of) Hermitian matrices, no input validation."""
    a = np.array(a, dtype=complex)
    n = a.shape[-1]
    a = 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    scale = np.sqrt(np.sum(np.abs(a) ** 2, axis=(-2, -1)))
    rounds = _round_robin(n)
    for _ in range(max_sweeps + 1):
        if n < 2 or np.all(_off_norm(a) <= tol * scale):
            break
        for p, q in rounds:
            _rotate(a, v, p, q)
    else:
        raise NumericError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.einsum("...ii->...i", a).real
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return EigResult(w, v)


def hermitian_eig(a) -> EigResult:
    """Full eigendecomposition of a Hermitian matrix (or stack of them).

    Raises DomainError for non-square or non-Hermitian input and NumericError
    if Jacobi needs more than ``MAX_SWEEPS`` sweeps.
    """
    a = as_matrix(a)
    if a.shape[-1] != a.shape[-2]:
        raise DomainError(f"matrix must be square, got shape {a.shape}")
    asym = np.linalg.norm(a - np.conj(np.swapaxes(a, -1, -2)), axis=(-2, -1))
    norm = np.linalg.norm(a, axis=(-2, -1))
    if np.any(asym > HERMITIAN_TOL * norm):
        raise DomainError("matrix is not Hermitian")
    return jacobi_eigh(a)


def _normalize_phase(v: np.ndarray) -> np.ndarray:
    # rotate so the first non-negligible entry is real and >= 0
    mag = np.abs(v)
    lead = np.argmax(mag > 1e-12 * np.max(mag, axis=-1, keepdims=True), axis=-1)
    x = np.take_along_axis(v, lead[..., None], axis=-1)
    ax = np.abs(x)
    rot = np.where(ax > 0, np.conj(x) / np.where(ax > 0, ax, 1.0), 1.0)
    return v * rot


def right_singular_vectors(h, k: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Leading ``k`` right singular vectors (as columns) and singular values of H.

    Works on stacks shaped (..., Mr, Mt) through the Mt x Mt Gram matrix H^H H.
    Columns are phase-normalized like ``dominant_right_singular_vector``.
    """
    h = as_matrix(h, "H")
    gram = np.conj(np.swapaxes(h, -1, -2)) @ h
    res = jacobi_eigh(gram)
    k = h.shape[-1] if k is None else k
    vecs = res.eigenvectors[..., :, :k]
    vecs = np.swapaxes(_normalize_phase(np.swapaxes(vecs, -1, -2)), -1, -2)
    sig = np.sqrt(np.maximum(res.eigenvalues[..., :k], 0.0))
    return vecs, sig


def dominant_right_singular_vector(h) -> tuple[np.ndarray, np.ndarray | float]:
    """Unit vector v maximizing ||H v|| and the largest singular value.

    The phase of v is fixed so its first nonzero entry is real and
    non-negative.  An all-zero H yields sigma = 0 and v = e1.
    """
    h = as_matrix(h, "H")
    vecs, sig = right_singular_vectors(h, 1)
    v = vecs[..., 0]
    zero = sig[..., 0] == 0
    if np.any(zero):
        e1 = np.zeros(h.shape[-1], dtype=complex)
        e1[0] = 1.0
        v = np.where(zero[..., None], e1, v)
    s = sig[..., 0]
    return v, (float(s) if s.ndim == 0 else s)


def kron(a, b, max_entries: int = KRON_MAX_ENTRIES) -> np.ndarray:
    """Kronecker product; block (i, j) of the result is a[i, j] * b."""
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    p, q = a.shape
    r, s = b.shape
    if p * q * r * s > max_entries:
        raise ResourceError(f"kron result {p * r}x{q * s} exceeds {max_entries} entries")
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(p * r, q * s)


def psd_factor(r) -> np.ndarray:
    """F = P sqrt(Omega) from R = P Omega P^H, so that F F^H = R.

    Slightly negative eigenvalues (down to -1e-6 * lambda_max) are clamped
    to zero; anything more negative is rejected as not PSD.
    """
    res = hermitian_eig(r)
    w = res.eigenvalues
    top = float(w[0])
    floor = -PSD_CLAMP_TOL * top if top > 0 else -PSD_CLAMP_TOL
    if w[-1] < floor:
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3g})")
    return res.eigenvectors * np.sqrt(np.clip(w, 0.0, None))

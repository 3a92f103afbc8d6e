"""Dense linear-algebra and combinatorial kernels used by every other module.

Conventions fixed here once:

* A "symmetric matrix" is complex square with ``M == M.T`` (not Hermitian).
* ``takagi`` factors a symmetric B as ``U @ diag(lam) @ U.T`` with U unitary
  and ``lam >= 0`` sorted descending, ties kept in original order.
* ``hafnian`` sums products over perfect matchings; computed by the
  inclusion-exclusion power-trace method in O(2^(n/2) poly(n)).  The direct
  matching enumeration is kept as an independent test oracle.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.linalg import block_diag, sqrtm

from .errors import ValidationError
from .seeding import STREAM_UNITARY, spawn_rng

LAMBDA_CLAMP = 1e-12  # Takagi values below this are treated as exact zeros


def ensure_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {m.shape}")
    if m.size and not np.all(np.isfinite(m)):
        raise ValidationError(f"{name} has non-finite entries")
    return m


def ensure_symmetric(m: np.ndarray, tol: float = 1e-12, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and return the exactly symmetrized matrix."""
    m = ensure_square(m, name)
    if m.size and np.max(np.abs(m - m.T)) > tol * max(1.0, np.max(np.abs(m))):
        raise ValidationError(f"{name} is not symmetric")
    return (m + m.T) / 2


def ensure_unitary(u: np.ndarray, tol: float = 1e-10, name: str = "unitary") -> np.ndarray:
    u = ensure_square(u, name)
    dev = np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) if u.size else 0.0
    if dev > tol:
        raise ValidationError(f"{name} deviates from unitarity by {dev:.3e} (tol {tol:.0e})")
    return u


def unitarity_deviation(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))))


# ---------------------------------------------------------------------------
# Takagi decomposition


def takagi(b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Factor a complex symmetric matrix as ``U diag(lam) U^T``.

    Real input takes the cheap eigendecomposition route: columns belonging to
    negative eigenvalues are rotated by 1j, which flips the sign under the
    transpose (not conjugate-transpose) product.  Complex input goes through
    the SVD with a block square root over degenerate singular subspaces.

    Returns:
        (u, lam): unitary u and non-negative values sorted descending,
        ties stable by original position.
    """
    b = ensure_symmetric(np.asarray(b, dtype=complex), name="takagi input")
    n = b.shape[0]
    if n == 0:
        return np.zeros((0, 0), dtype=complex), np.zeros(0)

    if np.all(b.imag == 0):
        eigvals, eigvecs = np.linalg.eigh(b.real)
        phases = np.where(eigvals < 0, 1j, 1.0 + 0j)
        u = eigvecs.astype(complex) * phases[np.newaxis, :]
        lam = np.abs(eigvals)
    else:
        v, s, wh = np.linalg.svd(b)
        w = wh.conj().T
        blocks = _degenerate_blocks(s)
        qs = []
        for start, stop in blocks:
            qs.append(sqrtm(v[:, start:stop].T @ w[:, start:stop]))
        u = v @ np.conj(block_diag(*qs))
        lam = s.copy()

    lam[lam < LAMBDA_CLAMP] = 0.0
    order = np.argsort(-lam, kind="stable")
    return u[:, order], lam[order]


def _degenerate_blocks(s: np.ndarray, rtol: float = 1e-8) -> list[tuple[int, int]]:
    """Group consecutive singular values that are equal within tolerance."""
    tol = rtol * max(1.0, float(s[0]) if s.size else 1.0)
    blocks = []
    start = 0
    for i in range(1, len(s)):
        if s[start] - s[i] > tol:
            blocks.append((start, i))
            start = i
    blocks.append((start, len(s)))
    return blocks


# ---------------------------------------------------------------------------
# Hafnian


def hafnian(m: np.ndarray) -> complex:
    """Hafnian by the inclusion-exclusion power-trace method.

    Odd dimension returns 0, the empty matrix returns 1.  Exact (up to
    round-off) for the desk-scale dimensions this toolkit needs (n <= 32).
    """
    m = ensure_symmetric(np.asarray(m, dtype=complex), name="hafnian input")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j

    half = n // 2
    total = 0.0 + 0.0j
    for mask in range(1, 1 << half):
        pairs = [z for z in range(half) if mask >> z & 1]
        idx = np.array([2 * z + o for z in pairs for o in (0, 1)])
        # X swaps the two rows of every pair block
        swap = idx.reshape(-1, 2)[:, ::-1].reshape(-1)
        xa = m[np.ix_(swap, idx)]
        eigs = np.linalg.eigvals(xa)
        powsums = np.array([np.sum(eigs ** j) for j in range(1, half + 1)])
        coeff = _series_exp_coeff(powsums / (2 * np.arange(1, half + 1)), half)
        total += (-1.0) ** (half - len(pairs)) * coeff
    return complex(total)


def _series_exp_coeff(q: np.ndarray, order: int) -> complex:
    """Coefficient of x^order in exp(sum_j q[j-1] x^j), truncated at x^order."""
    c = np.zeros(order + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, order + 1):
        acc = 0.0 + 0.0j
        for j in range(1, k + 1):
            acc += j * q[j - 1] * c[k - j]
        c[k] = acc / k
    return complex(c[order])


@lru_cache(maxsize=None)
def perfect_matchings(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All perfect matchings of {0..n-1} as tuples of (i, j) pairs, i < j."""
    if n % 2:
        return ()
    if n == 0:
        return ((),)
    out = []

    def rec(avail: tuple[int, ...], acc: tuple[tuple[int, int], ...]):
        if not avail:
            out.append(acc)
            return
        first, rest = avail[0], avail[1:]
        for k, partner in enumerate(rest):
            rec(rest[:k] + rest[k + 1:], acc + ((first, partner),))

    rec(tuple(range(n)), ())
    return tuple(out)


def hafnian_by_matchings(m: np.ndarray) -> complex:
    """Direct perfect-matching enumeration; the exponentially slower oracle."""
    m = ensure_symmetric(np.asarray(m, dtype=complex), name="hafnian input")
    n = m.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    total = 0.0 + 0.0j
    for matching in perfect_matchings(n):
        prod = 1.0 + 0.0j
        for i, j in matching:
            prod *= m[i, j]
        total += prod
    return complex(total)


# ---------------------------------------------------------------------------
# Haar-random unitaries


def random_unitary(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Gaussian matrix with the
    R diagonal phases absorbed into Q.  Deterministic per seed."""
    if dim < 1:
        raise ValidationError("random_unitary requires dim >= 1")
    rng = spawn_rng(seed, STREAM_UNITARY)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))

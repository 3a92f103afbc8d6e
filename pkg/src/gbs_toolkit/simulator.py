"""Exact simulation of the lossy Gaussian state prepared by a GbsProgram.

Convention, used everywhere in this module and restated in every formula:
quadrature ordering is (x_1..x_M, p_1..p_M) and the vacuum covariance is
I/2 (hbar = 1).  A squeezer with parameter r turns mode i's covariance into
diag(exp(-2r)/2, exp(+2r)/2); an interferometer U acts as the orthogonal
symplectic [[Re U, -Im U], [Im U, Re U]]; uniform loss eta on a mode sends
sigma -> sqrt(eta) sigma sqrt(eta) + (1 - eta)/2 I on its rows/columns.

Pattern probabilities follow the standard Gaussian sampling law: with
N = <a^dag a>, M = <a a> read off the covariance, form the ladder-ordered
Husimi matrix Q = [[conj(N) + I, M], [conj(M), N + I]] and
A = X (I - Q^{-1}), X the block swap.  Then

    p(nbar) = Haf(A_nbar) / (sqrt(det Q) * prod_i n_i!)

where A_nbar repeats mode i (in both halves) n_i times.  For pure states A
splits into conj(B) (+) B and the hafnian factors as |Haf(B_nbar)|^2, which
is also the fast path used for whole-sector enumeration.
"""

from __future__ import annotations

import itertools
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .encoding import GbsProgram
from .errors import GuardError, ValidationError
from .numerics import hafnian, perfect_matchings
from .seeding import STREAM_SAMPLER, spawn_rng

PATTERN_GUARD = 1_000_000
PHOTON_LIMIT = 16
PROB_CLAMP = -1e-12


class CapturedMassWarning(UserWarning):
    """Issued when the truncated distribution holds less than half the mass."""


@dataclass(frozen=True, eq=False)
class GaussianState:
    """Zero-mean Gaussian state given by its 2M x 2M quadrature covariance."""

    cov: np.ndarray

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or cov.shape[0] % 2:
            raise ValidationError(f"covariance must be 2M x 2M, got {cov.shape}")
        if not np.all(np.isfinite(cov)):
            raise ValidationError("covariance has non-finite entries")
        if np.max(np.abs(cov - cov.T)) > 1e-10:
            raise ValidationError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        m = cov.shape[0] // 2
        omega = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
        min_eig = float(np.min(np.linalg.eigvalsh(cov + 0.5j * omega)))
        if min_eig < -1e-9:
            raise ValidationError(f"covariance is unphysical (min eig {min_eig:.3e})")
        object.__setattr__(self, "cov", cov)

    @property
    def mode_count(self) -> int:
        return self.cov.shape[0] // 2


@dataclass(frozen=True)
class PhotonPattern:
    """Per-mode photon counts of one detection event."""

    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 or c != int(c) for c in self.counts):
            raise ValidationError("photon counts must be non-negative integers")
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def collision_free(self) -> bool:
        return all(c <= 1 for c in self.counts)

    def modes(self) -> tuple[int, ...]:
        """Occupied modes, each repeated by its count."""
        return tuple(m for m, c in enumerate(self.counts) for _ in range(c))


@dataclass(frozen=True, eq=False)
class Distribution:
    """Enumerated patterns (rows of ``pattern_counts``) with probabilities.

    ``probs`` sum to ``captured_mass``; ordering is lexicographically
    ascending in the occupied-mode tuples, matching the (1,2), (1,3), ...
    plotting convention.
    """

    pattern_counts: np.ndarray
    probs: np.ndarray
    captured_mass: float

    def __post_init__(self):
        counts = np.asarray(self.pattern_counts, dtype=np.int16)
        probs = np.asarray(self.probs, dtype=float)
        if counts.ndim != 2 or probs.shape != (counts.shape[0],):
            raise ValidationError("pattern_counts and probs shapes disagree")
        if np.any(probs < 0):
            raise ValidationError("probabilities must be >= 0")
        object.__setattr__(self, "pattern_counts", counts)
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return self.pattern_counts.shape[0]

    def pattern(self, i: int) -> PhotonPattern:
        return PhotonPattern(tuple(int(c) for c in self.pattern_counts[i]))

    def normalized_probs(self) -> np.ndarray:
        total = self.probs.sum()
        if total <= 0:
            raise ValidationError("distribution carries zero mass")
        return self.probs / total


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Monte-Carlo draws plus the truncated mass they were drawn from."""

    patterns: tuple[PhotonPattern, ...]
    captured_mass: float


# ---------------------------------------------------------------------------
# state preparation


def prepare_state(p: GbsProgram) -> GaussianState:
    """Compose squeezers, interferometer and per-mode loss into a covariance."""
    m = p.mode_count
    r = p.squeezing
    diag = np.concatenate([np.exp(-2 * r) / 2, np.exp(2 * r) / 2])
    cov = np.diag(diag)
    s = np.block([[p.unitary.real, -p.unitary.imag], [p.unitary.imag, p.unitary.real]])
    cov = s @ cov @ s.T
    if np.any(p.loss < 1.0):
        t = np.concatenate([np.sqrt(p.loss), np.sqrt(p.loss)])
        cov = t[:, None] * cov * t[None, :] + np.diag((1 - t ** 2) / 2)
    return GaussianState(cov)


# ---------------------------------------------------------------------------
# probability kernel


@dataclass(frozen=True, eq=False)
class _Kernel:
    a: np.ndarray
    sqrt_det_q: float
    pure: bool
    bmat: np.ndarray | None


def _state_kernel(state: GaussianState) -> _Kernel:
    m = state.mode_count
    cov = state.cov
    vxx, vxp, vpp = cov[:m, :m], cov[:m, m:], cov[m:, m:]
    eye = np.eye(m)
    nmat = (vxx + vpp - eye) / 2 + 0.5j * (vxp - vxp.T)
    mmat = (vxx - vpp) / 2 + 0.5j * (vxp + vxp.T)
    q = np.block([[nmat.conj() + eye, mmat], [mmat.conj(), nmat + eye]])
    sign, logdet = np.linalg.slogdet(q)
    if not np.isclose(abs(complex(sign)), 1.0) or complex(sign).real <= 0:
        raise GuardError("Husimi matrix has non-positive determinant")
    sqrt_det_q = float(np.exp(logdet / 2))
    qinv = np.linalg.inv(q)
    eye2 = np.eye(2 * m)
    x = np.block([[np.zeros((m, m)), eye], [eye, np.zeros((m, m))]])
    a = x @ (eye2 - qinv)
    off = max(np.max(np.abs(a[:m, m:])), np.max(np.abs(a[m:, :m]))) if m else 0.0
    pure = off <= 1e-10 and np.max(np.abs(a[:m, :m] - a[m:, m:].conj())) <= 1e-10
    return _Kernel(a=a, sqrt_det_q=sqrt_det_q, pure=pure,
                   bmat=a[m:, m:].copy() if pure else None)


def _finalize_probability(value: complex, context: str) -> float:
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise GuardError(f"{context}: imaginary residue {value.imag:.3e}")
    p = float(value.real)
    if p < 0:
        if p < PROB_CLAMP:
            raise GuardError(f"{context}: negative probability {p:.3e}")
        p = 0.0
    return p


def _pattern_factorial(counts: np.ndarray) -> float:
    out = 1.0
    for c in counts:
        out *= math.factorial(int(c))
    return out


def _probability_from_kernel(kernel: _Kernel, counts: np.ndarray) -> float:
    total = int(counts.sum())
    if total == 0:
        return _finalize_probability(1.0 / kernel.sqrt_det_q + 0j, "vacuum pattern")
    modes = np.repeat(np.arange(len(counts)), counts)
    norm = kernel.sqrt_det_q * _pattern_factorial(counts)
    if kernel.pure:
        if total % 2:
            return 0.0
        sub = kernel.bmat[np.ix_(modes, modes)]
        h = hafnian(sub)
        return _finalize_probability(abs(h) ** 2 / norm + 0j, "pure pattern")
    m = len(counts)
    idx = np.concatenate([modes, modes + m])
    h = hafnian(kernel.a[np.ix_(idx, idx)])
    return _finalize_probability(h / norm, "pattern")


def pattern_probability(s: GaussianState, n: PhotonPattern) -> float:
    """Probability of detecting pattern ``n`` in state ``s``."""
    if len(n.counts) != s.mode_count:
        raise ValidationError("pattern length must equal mode count")
    if n.total > PHOTON_LIMIT:
        raise GuardError(f"pattern too large: {n.total} photons exceeds the {PHOTON_LIMIT} kernel limit")
    return _probability_from_kernel(_state_kernel(s), np.asarray(n.counts, dtype=int))


# ---------------------------------------------------------------------------
# sector enumeration


def _sector_mode_tuples(m: int, k: int, collision_free: bool) -> np.ndarray:
    if collision_free:
        count = math.comb(m, k)
    else:
        count = math.comb(m + k - 1, k)
    if count > PATTERN_GUARD:
        raise GuardError(f"sector ({m} modes, {k} photons) has {count} patterns, "
                         f"exceeding the {PATTERN_GUARD} enumeration guard")
    gen = itertools.combinations(range(m), k) if collision_free \
        else itertools.combinations_with_replacement(range(m), k)
    flat = np.fromiter(itertools.chain.from_iterable(gen), dtype=np.int64, count=count * k)
    return flat.reshape(count, k)


def _counts_from_modes(mode_tuples: np.ndarray, m: int) -> np.ndarray:
    k = mode_tuples.shape[0]
    counts = np.zeros((k, m), dtype=np.int16)
    rows = np.repeat(np.arange(k), mode_tuples.shape[1])
    np.add.at(counts, (rows, mode_tuples.reshape(-1)), 1)
    return counts


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("GBS_TOOLKIT_THREADS", "1")))
    except ValueError:
        return 1


def _pure_sector_probs(kernel: _Kernel, mode_tuples: np.ndarray) -> np.ndarray:
    """Vectorized |Haf(B_S)|^2 over every pattern of one sector."""
    npat, k = mode_tuples.shape
    if k % 2:
        return np.zeros(npat)
    b = kernel.bmat
    matchings = perfect_matchings(k)
    out = np.zeros(npat)
    chunk = max(1, 200_000 // max(1, len(matchings)) * 8)
    for start in range(0, npat, chunk):
        sel = mode_tuples[start:start + chunk]
        h = np.zeros(sel.shape[0], dtype=complex)
        for matching in matchings:
            term = np.ones(sel.shape[0], dtype=complex)
            for i, j in matching:
                term = term * b[sel[:, i], sel[:, j]]
            h += term
        out[start:start + chunk] = np.abs(h) ** 2
    return out


def _sector_probs(kernel: _Kernel, mode_tuples: np.ndarray, m: int,
                  counts: np.ndarray, collision_free: bool) -> np.ndarray:
    if kernel.pure and collision_free:
        return _pure_sector_probs(kernel, mode_tuples) / kernel.sqrt_det_q

    def one(i: int) -> float:
        return _probability_from_kernel(kernel, counts[i].astype(int))

    n = counts.shape[0]
    threads = _threads()
    if threads > 1 and n > 256:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return np.fromiter(pool.map(one, range(n)), dtype=float, count=n)
    return np.fromiter((one(i) for i in range(n)), dtype=float, count=n)


def enumerate_distribution(s: GaussianState, total_photons: int,
                           collision_free: bool = False) -> Distribution:
    """Every pattern with the given photon total, with exact probabilities."""
    m = s.mode_count
    if total_photons < 0:
        raise ValidationError("total_photons must be >= 0")
    if collision_free and total_photons > m:
        raise ValidationError("collision-free total cannot exceed the mode count")
    if total_photons > PHOTON_LIMIT:
        raise GuardError(f"pattern too large: {total_photons} photons exceeds "
                         f"the {PHOTON_LIMIT} kernel limit")
    kernel = _state_kernel(s)
    mode_tuples = _sector_mode_tuples(m, total_photons, collision_free)
    counts = _counts_from_modes(mode_tuples, m)
    probs = _sector_probs(kernel, mode_tuples, m, counts, collision_free)
    probs = np.where((probs < 0) & (probs >= PROB_CLAMP), 0.0, probs)
    return Distribution(counts, probs, float(probs.sum()))


def truncated_distribution(s: GaussianState, max_total_photons: int,
                           collision_free: bool = False,
                           min_total_photons: int = 0) -> Distribution:
    """All patterns with min <= total <= max, stacked in ascending-total order."""
    if min_total_photons > max_total_photons:
        raise ValidationError("min_total_photons cannot exceed max_total_photons")
    parts = [enumerate_distribution(s, k, collision_free)
             for k in range(min_total_photons, max_total_photons + 1)]
    counts = np.vstack([p.pattern_counts for p in parts])
    probs = np.concatenate([p.probs for p in parts])
    return Distribution(counts, probs, float(probs.sum()))


def draw(dist: Distribution, n_samples: int, seed: int) -> SampleBatch:
    """Seeded categorical draws from a renormalized Distribution."""
    if n_samples < 0:
        raise ValidationError("n_samples must be >= 0")
    if dist.captured_mass <= 0:
        raise GuardError("truncated distribution carries zero mass; nothing to sample")
    rng = spawn_rng(seed, STREAM_SAMPLER)
    idx = rng.choice(len(dist), size=n_samples, p=dist.normalized_probs())
    patterns = tuple(dist.pattern(int(i)) for i in idx)
    return SampleBatch(patterns, dist.captured_mass)


def sample(s: GaussianState, n_samples: int, max_total_photons: int, seed: int,
           collision_free: bool = False, min_total_photons: int = 0) -> SampleBatch:
    """Categorical draws from the truncated, renormalized distribution.

    ``captured_mass`` reports the mass inside the truncation so the error is
    explicit; below 0.5 a CapturedMassWarning advises a higher cutoff.
    Deterministic per seed.
    """
    dist = truncated_distribution(s, max_total_photons, collision_free,
                                  min_total_photons)
    if dist.captured_mass < 0.5:
        warnings.warn(
            f"truncated distribution captures only {dist.captured_mass:.3g} of the "
            "state's mass; consider a higher max_total_photons cutoff",
            CapturedMassWarning)
    return draw(dist, n_samples, seed)


def empirical_distribution(samples, template: Distribution) -> Distribution:
    """Histogram of ``samples`` on the support of ``template``.

    Samples outside the template support raise; use this to compare Monte
    Carlo output against an exact sector distribution via ``tvd``.
    """
    index = {tuple(row): i for i, row in enumerate(np.asarray(template.pattern_counts))}
    hist = np.zeros(len(template))
    for pat in samples:
        key = tuple(int(c) for c in pat.counts)
        if key not in index:
            raise ValidationError(f"sample {key} lies outside the template support")
        hist[index[key]] += 1
    total = hist.sum()
    if total == 0:
        raise ValidationError("no samples to histogram")
    return Distribution(template.pattern_counts, hist / total, 1.0)


def tvd(p: Distribution, q: Distribution) -> float:
    """Total variation distance on the shared support, after renormalizing each."""
    if p.pattern_counts.shape != q.pattern_counts.shape or \
            not np.array_equal(p.pattern_counts, q.pattern_counts):
        raise ValidationError("distributions must share an identical pattern list")
    return float(0.5 * np.abs(p.normalized_probs() - q.normalized_probs()).sum())

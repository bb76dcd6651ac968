"""Lossy coding: entropy-constrained vector quantization and fixed lattices.

The ECVQ loop alternates three steps until the Lagrangian
E{distortion} + lambda * E{codeword length} stops improving: assign each
sample to the cluster minimizing squared distance plus lambda times its
length, set ideal lengths -log2 of cluster occupancy, and move centroids
to conditional means. The variant swaps the length rule for a bit-wise
one: cluster indices are embedded as fixed-width binary words, a
marginal-entropy search picks a permutation of them, and a cluster's
length is the sum of -log2 marginal bit probabilities of its transformed
index (kept only when it beats the previous permutation, so each sweep
still descends).

Fixed quantizers: the cubic integer lattice in any dimension, the
even-coordinate-sum lattice in four dimensions, and its eight-dimensional
two-coset extension, all truncated to a sphere of five source standard
deviations; samples landing outside are quantized to an admissible point
near the surface.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .bounds import standard_redundancy
from .distributions import JointDistribution, SymbolPermutation, binary_entropy, entropy_bits
from .search import block_bica, order_permutation

DEFAULT_SPHERE_STD = 5.0


@dataclass(frozen=True)
class QuantizerState:
    """Converged coder: centroids, sample assignment, per-cluster ideal
    codeword lengths (inf = retired), the final Lagrangian, and the
    Lagrangian after every full sweep."""

    centroids: np.ndarray
    assign: np.ndarray
    lengths: np.ndarray
    lagrangian: float
    mean_distortion: float
    mean_rate: float
    history: np.ndarray


def _init_centroids(x: np.ndarray, m_init: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    if m_init > n:
        raise ValueError("more initial clusters than samples")
    idx = rng.choice(n, size=m_init, replace=False)
    return x[idx].copy()


def _sweep_eval(x, centroids, lengths, assign, lam):
    diffs = x - centroids[assign]
    dist = float(np.mean(np.sum(diffs * diffs, axis=1)))
    rate = float(np.mean(lengths[assign]))
    return dist, rate, dist + lam * rate


def ecvq_fit(samples, m_init: int, lam: float, seed: int = 0,
             max_sweeps: int = 200, tol: float = 1e-9) -> QuantizerState:
    """Entropy-constrained VQ by alternating assignment / length / centroid
    steps; empty clusters are retired (their length would be infinite)."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("samples must be a non-empty (n, dim) array")
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = x.shape[0]
    centroids = _init_centroids(x, m_init, rng)
    lengths = np.full(m_init, math.log2(m_init) if m_init > 1 else 1.0)
    assign = np.zeros(n, dtype=np.int64)
    history = []
    prev = np.inf
    for _ in range(max_sweeps):
        bias = np.where(np.isfinite(lengths), lam * lengths, np.inf)
        kernels.ecvq_assign(x, centroids, bias, assign)
        counts = np.bincount(assign, minlength=m_init)
        occupied = counts > 0
        lengths = np.where(occupied, -np.log2(np.maximum(counts, 1) / n), np.inf)
        for c in np.nonzero(occupied)[0]:
            centroids[c] = x[assign == c].mean(axis=0)
        _, _, lag = _sweep_eval(x, centroids, lengths, assign, lam)
        history.append(lag)
        if prev - lag < tol:
            break
        prev = lag
    dist, rate, lag = _sweep_eval(x, centroids, lengths, assign, lam)
    return QuantizerState(centroids, assign, lengths, lag, dist, rate, np.array(history))


def _index_bit_lengths(probs: np.ndarray, g: SymbolPermutation) -> np.ndarray:
    """Per-cluster length under bit-wise coding of the transformed index:
    sum over bits of -log2 of the marginal probability of that bit value."""
    d = g.d
    y = g.map
    out = np.zeros(probs.size)
    for j in range(d):
        zero_mass = float(probs[(y >> j) & 1 == 0].sum())
        bitval = (y >> j) & 1
        q = np.where(bitval == 0, zero_mass, 1.0 - zero_mass)
        with np.errstate(divide="ignore"):
            out -= np.where(probs > 0, np.log2(np.maximum(q, 1e-300)), 0.0)
    return np.where(probs > 0, out, np.inf)


def bica_ecvq_fit(samples, m_init: int, lam: float, seed: int = 0,
                  method: str = "order", max_sweeps: int = 200,
                  tol: float = 1e-9) -> tuple[QuantizerState, SymbolPermutation]:
    """ECVQ with the length step replaced by bit-wise coding of transformed
    cluster indices. The new permutation is kept only when it lowers the
    marginal-entropy objective on the current occupancy, so the Lagrangian
    still never increases."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise ValueError("samples must be a non-empty (n, dim) array")
    if m_init > 1 << 16:
        raise ValueError("cluster budget exceeds the index embedding cap")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    n = x.shape[0]
    d_bits = max(1, math.ceil(math.log2(m_init))) if m_init > 1 else 1
    centroids = _init_centroids(x, m_init, rng)
    lengths = np.full(m_init, float(d_bits))
    g = SymbolPermutation.identity(d_bits)
    assign = np.zeros(n, dtype=np.int64)
    history = []
    prev = np.inf
    for _ in range(max_sweeps):
        bias = np.where(np.isfinite(lengths), lam * lengths, np.inf)
        kernels.ecvq_assign(x, centroids, bias, assign)
        counts = np.bincount(assign, minlength=m_init)
        occupied = counts > 0
        probs = np.zeros(1 << d_bits)
        probs[:m_init] = counts / n
        dist = JointDistribution(d_bits, probs)
        cand = block_bica(dist, method)
        prev_obj = float(np.sum(binary_entropy(
            np.array([probs[(g.map >> j) & 1 == 0].sum() for j in range(d_bits)]))))
        if cand.objective < prev_obj - 1e-15:
            g = cand.g
        lengths = _index_bit_lengths(probs, g)[:m_init]
        lengths = np.where(occupied, lengths, np.inf)
        for c in np.nonzero(occupied)[0]:
            centroids[c] = x[assign == c].mean(axis=0)
        _, _, lag = _sweep_eval(x, centroids, lengths, assign, lam)
        history.append(lag)
        if prev - lag < tol:
            break
        prev = lag
    dist_v, rate, lag = _sweep_eval(x, centroids, lengths, assign, lam)
    state = QuantizerState(centroids, assign, lengths, lag, dist_v, rate, np.array(history))
    return state, g


def brute_force_ecvq(x: np.ndarray, m: int, lam: float) -> float:
    """Exhaustive minimum of the ECVQ Lagrangian over all assignments of the
    samples into at most m clusters; oracle for tiny instances."""
    n = x.shape[0]
    if m ** n > 2_000_000:
        raise ValueError("instance too large for enumeration")
    best = np.inf
    import itertools
    for assign in itertools.product(range(m), repeat=n):
        a = np.array(assign)
        lag = 0.0
        for c in range(m):
            sel = x[a == c]
            if sel.size == 0:
                continue
            centroid = sel.mean(axis=0)
            p = sel.shape[0] / n
            d = np.sum((sel - centroid) ** 2) / n
            lag += d + lam * p * (-math.log2(p))
        best = min(best, lag)
    return best


# ---------------------------------------------------------------------------
# Fixed lattice quantizers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lattice:
    """A scaled classical lattice truncated to a sphere.

    kinds: 'cubic' (integer grid, any dimension), 'd4' (even coordinate
    sum, dimension 4), 'e8' (integer plus half-integer cosets of the
    even-sum lattice, dimension 8). ``radius`` is in source-std units.
    """

    kind: str
    dim: int
    scale: float
    radius: float = DEFAULT_SPHERE_STD

    def __post_init__(self):
        if self.kind not in ("cubic", "d4", "e8"):
            raise ValueError(f"unknown lattice kind {self.kind!r}")
        if self.kind == "d4" and self.dim != 4:
            raise ValueError("d4 lattice requires dim=4")
        if self.kind == "e8" and self.dim != 8:
            raise ValueError("e8 lattice requires dim=8")
        if self.scale <= 0 or self.dim < 1:
            raise ValueError("scale must be positive and dim >= 1")

    def nearest(self, x: np.ndarray) -> np.ndarray:
        """Nearest lattice point(s), ignoring the sphere truncation."""
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64)) / self.scale
        if self.kind == "cubic":
            q = np.rint(pts)
        elif self.kind == "d4":
            q = _nearest_even_sum(pts)
        else:
            a = _nearest_even_sum(pts)
            b = _nearest_even_sum(pts - 0.5) + 0.5
            da = np.sum((pts - a) ** 2, axis=1)
            db = np.sum((pts - b) ** 2, axis=1)
            q = np.where((da <= db)[:, None], a, b)
        q = q * self.scale
        return q if np.asarray(x).ndim == 2 else q[0]

    def covering_radius(self) -> float:
        if self.kind == "cubic":
            r = math.sqrt(self.dim) / 2
        elif self.kind == "d4":
            r = 1.0
        else:
            r = 1.0
        return r * self.scale


def _nearest_even_sum(pts: np.ndarray) -> np.ndarray:
    """Nearest point with even coordinate sum: round everything, and when
    the sum comes out odd re-round the worst coordinate the other way."""
    f = np.rint(pts)
    odd = (f.sum(axis=1).astype(np.int64) & 1) == 1
    if np.any(odd):
        f = f.copy()
        rows = np.nonzero(odd)[0]
        err = pts[rows] - f[rows]
        worst = np.argmax(np.abs(err), axis=1)
        step = np.where(err[np.arange(rows.size), worst] >= 0, 1.0, -1.0)
        f[rows, worst] += step
    return f


@dataclass(frozen=True)
class LatticeQuantization:
    indices: np.ndarray       # per-sample index into the occupied codebook
    codebook: np.ndarray      # occupied lattice points, (n_occ, dim)
    mse_per_dim: float
    distortion: float         # mean total squared error per sample


def lattice_quantize(samples, lattice: Lattice) -> LatticeQuantization:
    """Quantize to the nearest admissible lattice point inside the sphere of
    ``radius`` source standard deviations; out-of-sphere samples shrink
    toward the origin until their quantization lands inside."""
    x = np.ascontiguousarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != lattice.dim:
        raise ValueError("samples must be (n, dim) matching the lattice")
    sigma = math.sqrt(float(np.mean(np.var(x, axis=0)))) if x.shape[0] > 1 else 1.0
    r = lattice.radius * sigma
    q = lattice.nearest(x)
    bad = np.nonzero(np.linalg.norm(q, axis=1) > r)[0]
    for i in bad:
        v = x[i]
        shrink = r / max(np.linalg.norm(v), 1e-300)
        for _ in range(64):
            cand = lattice.nearest(v * shrink)
            if np.linalg.norm(cand) <= r:
                q[i] = cand
                break
            shrink *= 0.9
        else:
            q[i] = np.zeros(lattice.dim)
    codebook, indices = np.unique(q, axis=0, return_inverse=True)
    err = x - q
    total = float(np.mean(np.sum(err * err, axis=1)))
    return LatticeQuantization(indices.astype(np.int64), codebook,
                               total / lattice.dim, total)


def gaussian_rd(dim: int, distortion: float) -> float:
    """Rate-distortion reference for the unit-variance Gaussian vector:
    max((dim/2) log2(dim/D), 0) bits, D = total squared error."""
    if distortion <= 0:
        raise ValueError("distortion must be positive")
    return max(0.5 * dim * math.log2(dim / distortion), 0.0)


@dataclass(frozen=True)
class RateReport:
    distortion: float
    bits_per_sample: float
    total_bits: float


def lattice_rate_report(samples, lattice: Lattice, coder: str = "joint") -> RateReport:
    """Universal-coding totals for the quantized indices.

    'joint': empirical entropy of the (compacted) indices plus the
    regime-matched whole-alphabet redundancy. 'bica-marginal': ordering
    transform on the index distribution, per-bit empirical marginal
    entropies plus the binary per-bit redundancy.
    """
    quant = lattice_quantize(samples, lattice)
    n = quant.indices.size
    m_occ = quant.codebook.shape[0]
    counts = np.bincount(quant.indices, minlength=m_occ)
    probs = counts / n
    if coder == "joint":
        rate = entropy_bits(probs)
        total = n * rate + standard_redundancy(max(m_occ, 2), n)
    elif coder == "bica-marginal":
        d_bits = max(1, math.ceil(math.log2(max(m_occ, 2))))
        dist = JointDistribution.from_probs(probs, d_bits)
        rate = order_permutation(dist).objective
        total = n * rate + d_bits * 0.5 * math.log2(n / 2)
    else:
        raise ValueError(f"unknown coder {coder!r}")
    return RateReport(quant.distortion, rate, total)

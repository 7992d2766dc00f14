"""Weight quantization schemes, their shift-add cost, and weight compression.

The schemes differ in how a multiplication by a stored weight is realized:

* ``Float`` / ``FixedUniform``: a full b_w-bit multiplier, equivalent to at
  most ``b_w - 1`` adders in a shift-and-add decomposition.
* ``PoT``: weights are signed powers of two, so every multiplication is a
  single barrel shift and costs zero adders.
* ``APoT``: weights are sums of ``k`` distinct powers of two, so a
  multiplication is ``k`` shifts plus ``k - 1`` adders.

``x_w(scheme)`` exposes that adder count for the cost formulas. The module
also implements magnitude pruning and weight-sharing clustering, and the
pruning-aware multiplication count ``effective_rm``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import arch
from .arch import Conv1D, Dense, EchoState, GRU, LSTM, VanillaRNN
from .errors import DomainError, ShapeError


def _check_bw(b_w: int, minimum: int = 2):
    if isinstance(b_w, bool) or not isinstance(b_w, int):
        raise ValueError("b_w must be an integer")
    if not minimum <= b_w <= 64:
        raise ValueError(f"b_w must be in [{minimum}, 64]")


@dataclass(frozen=True)
class Float:
    """No quantization; b_w is the multiplier-width surrogate for cost formulas."""

    b_w: int = 32

    def __post_init__(self):
        _check_bw(self.b_w, minimum=1)


@dataclass(frozen=True)
class FixedUniform:
    """Symmetric uniform fixed-point weights with b_w bits."""

    b_w: int = 8

    def __post_init__(self):
        _check_bw(self.b_w)


@dataclass(frozen=True)
class PoT:
    """Signed power-of-two weights: one sign bit plus an exponent field."""

    b_w: int = 8

    def __post_init__(self):
        _check_bw(self.b_w)


@dataclass(frozen=True)
class APoT:
    """Signed sums of k_terms distinct powers of two."""

    b_w: int = 8
    k_terms: int = 2

    def __post_init__(self):
        _check_bw(self.b_w)
        if isinstance(self.k_terms, bool) or not isinstance(self.k_terms, int):
            raise ValueError("k_terms must be an integer")
        if self.k_terms < 1:
            raise ValueError("k_terms must be >= 1")
        if self.k_terms > self.b_w - 1:
            raise ValueError("k_terms must be <= b_w - 1 (one sign bit reserved)")


QuantScheme = Float | FixedUniform | PoT | APoT


def x_w(scheme: QuantScheme) -> int:
    """Adders required at most to realize one multiplication under the scheme."""
    if isinstance(scheme, (Float, FixedUniform)):
        return scheme.b_w - 1
    if isinstance(scheme, PoT):
        return 0
    if isinstance(scheme, APoT):
        return scheme.k_terms - 1
    raise TypeError(f"unknown scheme: {scheme!r}")


def _pot_exponent_range(b_w: int) -> int:
    # One sign bit, the rest encodes a nonpositive exponent down to -(2^(b_w-1)-1).
    return (1 << (b_w - 1)) - 1


@dataclass
class QuantizedWeights:
    """Quantized representation plus the exactly-representable dequantized values."""

    scheme: QuantScheme
    values: np.ndarray
    zero_mask: np.ndarray
    codes: np.ndarray | None = None
    scale: float = 1.0
    signs: np.ndarray | None = None
    exponents: np.ndarray | None = None
    terms: list | None = None

    def to_json(self) -> dict:
        payload = {
            "scheme": type(self.scheme).__name__.lower(),
            "values": self.values.tolist(),
            "zero_mask": self.zero_mask.tolist(),
            "scale": self.scale,
        }
        if self.codes is not None:
            payload["codes"] = self.codes.tolist()
        if self.exponents is not None:
            payload["signs"] = self.signs.tolist()
            payload["exponents"] = self.exponents.tolist()
        if self.terms is not None:
            payload["signs"] = self.signs.tolist()
            payload["terms"] = [list(t) for t in self.terms]
        return payload


def quantize_uniform(weights, b_w: int) -> QuantizedWeights:
    """Symmetric uniform quantizer: scale = max|w| / (2^(b_w-1) - 1).

    An all-zero input has no defined scale and degenerates to the all-zero
    representation.
    """
    _check_bw(b_w)
    w = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    scheme = FixedUniform(b_w)
    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    if max_abs == 0.0:
        codes = np.zeros(w.shape, dtype=np.int64)
        return QuantizedWeights(scheme, np.zeros_like(w),
                                np.ones(w.shape, dtype=bool), codes=codes,
                                scale=1.0)
    q_max = (1 << (b_w - 1)) - 1
    scale = max_abs / q_max
    codes = np.clip(np.round(w / scale), -q_max, q_max).astype(np.int64)
    values = codes * scale
    return QuantizedWeights(scheme, values, codes == 0, codes=codes,
                            scale=scale)


def _nearest_exponent(magnitude: float, e_min: int) -> int:
    """Exponent in [e_min, 0] whose power of two is closest in absolute error.

    Exact ties resolve toward the larger magnitude.
    """
    if magnitude >= 1.0:
        return 0
    lo = max(e_min, math.floor(math.log2(magnitude)))
    hi = min(0, lo + 1)
    err_lo = abs(magnitude - 2.0 ** lo)
    err_hi = abs(magnitude - 2.0 ** hi)
    return hi if err_hi <= err_lo else lo


def quantize_pot(weights, b_w: int) -> QuantizedWeights:
    """Round each weight to the nearest signed power of two.

    Weights with max magnitude above 1 are normalized first; the
    normalization scale is recorded so dequantization is exact. Zeros keep a
    dedicated zero code.
    """
    _check_bw(b_w)
    w = np.asarray(weights, dtype=float)
    scheme = PoT(b_w)
    e_min = -_pot_exponent_range(b_w)
    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    scale = max_abs if max_abs > 1.0 else 1.0
    signs = np.sign(w).astype(np.int64)
    flat = w.reshape(-1)
    exponents = np.zeros(flat.size, dtype=np.int64)
    values = np.zeros(flat.size)
    for idx, wi in enumerate(flat):
        if wi == 0.0:
            continue
        e = _nearest_exponent(abs(wi) / scale, e_min)
        exponents[idx] = e
        values[idx] = math.copysign(2.0 ** e * scale, wi)
    return QuantizedWeights(scheme, values.reshape(w.shape), w == 0.0,
                            scale=scale, signs=signs,
                            exponents=exponents.reshape(w.shape))


def _nearest_exponent_to_residual(residual: float, e_min: int) -> int:
    """Like _nearest_exponent but ties resolve toward the smaller power.

    Undershooting on a tie leaves a nonnegative residual that later terms
    can still cancel.
    """
    if residual >= 1.0:
        return 0
    lo = max(e_min, math.floor(math.log2(residual)))
    hi = min(0, lo + 1)
    err_lo = abs(residual - 2.0 ** lo)
    err_hi = abs(residual - 2.0 ** hi)
    return lo if err_lo <= err_hi else hi


def _apot_terms(magnitude: float, e_min: int, k_terms: int) -> tuple[int, ...]:
    """Greedy decomposition into distinct powers of two.

    Each step adds the exponent that most reduces the residual error and
    stops early once no further term strictly helps. A positive residual is
    always strictly below the last chosen power, so exponents never repeat.
    """
    chosen: list[int] = []
    residual = magnitude
    for _ in range(k_terms):
        if residual <= 0.0:
            break
        e = _nearest_exponent_to_residual(residual, e_min)
        if e in chosen or abs(residual - 2.0 ** e) >= residual:
            break
        chosen.append(e)
        residual -= 2.0 ** e
    return tuple(chosen)


def quantize_apot(weights, b_w: int, k_terms: int) -> QuantizedWeights:
    """Quantize to signed sums of up to k_terms distinct powers of two.

    The greedy term selection never does worse than the single-term
    power-of-two quantizer at equal b_w.
    """
    scheme = APoT(b_w, k_terms)
    w = np.asarray(weights, dtype=float)
    e_min = -_pot_exponent_range(b_w)
    max_abs = float(np.max(np.abs(w))) if w.size else 0.0
    scale = max_abs if max_abs > 1.0 else 1.0
    signs = np.sign(w).astype(np.int64)
    flat = w.reshape(-1)
    values = np.zeros(flat.size)
    terms: list[tuple[int, ...]] = []
    for idx, wi in enumerate(flat):
        if wi == 0.0:
            terms.append(())
            continue
        chosen = _apot_terms(abs(wi) / scale, e_min, k_terms)
        terms.append(chosen)
        total = sum(2.0 ** e for e in chosen) * scale
        values[idx] = math.copysign(total, wi)
    return QuantizedWeights(scheme, values.reshape(w.shape), w == 0.0,
                            scale=scale, signs=signs, terms=terms)


def quantize(weights, scheme: QuantScheme) -> QuantizedWeights:
    """Dispatch to the scheme's quantizer; Float passes values through."""
    if isinstance(scheme, Float):
        w = np.asarray(weights, dtype=float)
        return QuantizedWeights(scheme, w.copy(), w == 0.0)
    if isinstance(scheme, FixedUniform):
        return quantize_uniform(weights, scheme.b_w)
    if isinstance(scheme, PoT):
        return quantize_pot(weights, scheme.b_w)
    if isinstance(scheme, APoT):
        return quantize_apot(weights, scheme.b_w, scheme.k_terms)
    raise TypeError(f"unknown scheme: {scheme!r}")


@dataclass
class PruneMask:
    """Per-weight keep flags; ``sparsity`` is the fraction actually pruned."""

    keep: np.ndarray
    sparsity: float = field(init=False)

    def __post_init__(self):
        self.keep = np.asarray(self.keep, dtype=bool)
        pruned = int(self.keep.size - np.count_nonzero(self.keep))
        self.sparsity = pruned / self.keep.size if self.keep.size else 0.0

    def to_json(self) -> dict:
        return {"keep": self.keep.tolist(), "sparsity": self.sparsity}


def magnitude_prune(weights, sparsity: float) -> PruneMask:
    """Prune the ceil(sparsity * n) smallest-magnitude weights.

    Equal magnitudes are pruned lowest-index first. Kept weights are left
    untouched; the mask records which survive.
    """
    if not 0.0 <= sparsity < 1.0:
        raise DomainError("sparsity must be in [0, 1)")
    w = np.asarray(weights, dtype=float).reshape(-1)
    n = w.size
    n_prune = math.ceil(sparsity * n - 1e-12)
    keep = np.ones(n, dtype=bool)
    if n_prune > 0:
        order = np.argsort(np.abs(w), kind="stable")
        keep[order[:n_prune]] = False
    return PruneMask(keep)


@dataclass
class SharedWeights:
    """Clustered weights: shared centroid values plus per-weight assignments."""

    centroids: np.ndarray
    assignments: np.ndarray

    def distortion(self, weights) -> float:
        w = np.asarray(weights, dtype=float).reshape(-1)
        return float(np.sum((w - self.centroids[self.assignments]) ** 2))

    def to_json(self) -> dict:
        return {"centroids": self.centroids.tolist(),
                "assignments": self.assignments.tolist()}


def cluster_weights(weights, c: int) -> SharedWeights:
    """Share weight values via 1-D Lloyd clustering.

    Centroids start linearly spaced on [min w, max w] and iterate to a fixed
    point of assignments (at most 100 rounds). When c reaches the number of
    distinct values every distinct value becomes its own centroid, which is
    the zero-distortion fixed point that linear initialization can miss.
    """
    w = np.asarray(weights, dtype=float).reshape(-1)
    n = w.size
    if not 1 <= c <= n:
        raise DomainError("cluster count must satisfy 1 <= c <= n")
    distinct = np.unique(w)
    if c >= distinct.size:
        centroids = distinct
        assignments = np.searchsorted(distinct, w)
        return SharedWeights(centroids, assignments.astype(np.int64))
    centroids = np.linspace(w.min(), w.max(), c)
    assignments = np.argmin(np.abs(w[:, None] - centroids[None, :]), axis=1)
    for _ in range(100):
        new_centroids = centroids.copy()
        for j in range(c):
            members = w[assignments == j]
            if members.size:
                new_centroids[j] = members.mean()
        new_assignments = np.argmin(
            np.abs(w[:, None] - new_centroids[None, :]), axis=1)
        centroids = new_centroids
        if np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments
    return SharedWeights(centroids, assignments.astype(np.int64))


def multiplicative_weight_count(layer: arch.LayerSpec) -> int:
    """Number of stored weights that each feed a multiplication."""
    if isinstance(layer, Dense):
        return layer.n_n * layer.n_i
    if isinstance(layer, Conv1D):
        return layer.n_f * layer.n_i * layer.n_k
    if isinstance(layer, VanillaRNN):
        return layer.n_h * (layer.n_i + layer.n_h)
    if isinstance(layer, LSTM):
        return 4 * layer.n_h * (layer.n_i + layer.n_h)
    if isinstance(layer, GRU):
        return 3 * layer.n_h * (layer.n_i + layer.n_h)
    if isinstance(layer, EchoState):
        return (layer.N_r * layer.n_i + layer.N_r * layer.row_nonzeros
                + layer.n_o * layer.N_r)
    raise TypeError(f"unsupported layer: {layer!r}")


def _weight_reuse(layer: arch.LayerSpec) -> int:
    """How many multiplications one stored weight performs per inference."""
    if isinstance(layer, Dense):
        return 1
    if isinstance(layer, Conv1D):
        return layer.output_size
    return layer.n_s


def effective_rm(layer: arch.LayerSpec, mask: PruneMask) -> int:
    """Multiplication count after zero-skipping the pruned weights."""
    from .costmodel import rm_layer

    expected = multiplicative_weight_count(layer)
    if mask.keep.size != expected:
        raise ShapeError(
            f"mask has {mask.keep.size} entries, layer has {expected} "
            f"multiplicative weights")
    pruned = int(mask.keep.size - np.count_nonzero(mask.keep))
    return rm_layer(layer) - pruned * _weight_reuse(layer)

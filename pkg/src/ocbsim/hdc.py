"""Hypervector encoder and a small nearest-centroid classification harness.

The encoder is an N x D signed random projection evaluated segment by segment
exactly as the optical core does it: each arm multiplies a 9-wide slice of
the feature vector with the matching slice of one matrix column, and the
accumulation unit adds the per-segment partials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mapper import map_encoder, segment_bounds
from .model import OCBGeometry
from .photonics import accumulate

FULL_PRECISION = 32


class HDCError(ValueError):
    pass


@dataclass(frozen=True)
class EncodingMatrix:
    N: int
    D: int
    values: np.ndarray = field(repr=False)
    seed: int = 0
    value_bits: int = 4

    def __post_init__(self) -> None:
        if self.values.shape != (self.N, self.D):
            raise HDCError(f"matrix shape {self.values.shape} != ({self.N}, {self.D})")
        self.values.setflags(write=False)

    @property
    def code_range(self) -> tuple[int, int]:
        top = 1 if self.value_bits == 1 else (1 << (self.value_bits - 1)) - 1
        return -top, top


@dataclass(frozen=True)
class Hypervector:
    values: np.ndarray

    @property
    def D(self) -> int:
        return len(self.values)

    def __add__(self, other: "Hypervector") -> "Hypervector":
        return Hypervector(self.values + other.values)

    def binarize(self) -> "Hypervector":
        return Hypervector(np.where(self.values >= 0, 1, -1).astype(np.int64))


def generate_encoding(N: int, D: int, seed: int = 0, value_bits: int = 4) -> EncodingMatrix:
    """Seeded matrix with zero-mean entries.

    One bit gives bipolar +-1 entries; wider codes are uniform over the
    symmetric range ``[-(2**(b-1) - 1), 2**(b-1) - 1]``.
    """
    if N < 1 or D < 1 or value_bits < 1:
        raise HDCError("N, D and value_bits must all be >= 1")
    rng = np.random.default_rng(seed)
    if value_bits == 1:
        values = rng.choice(np.array([-1, 1], dtype=np.int64), size=(N, D))
    else:
        top = (1 << (value_bits - 1)) - 1
        values = rng.integers(-top, top, size=(N, D), endpoint=True, dtype=np.int64)
    return EncodingMatrix(N, D, values, seed, value_bits)


def encode(features: Sequence[float] | np.ndarray, matrix: EncodingMatrix,
           geom: OCBGeometry | None = None) -> Hypervector:
    """Project one feature vector (or a batch, one row per sample) to hypervectors.

    Integer features give exact integer accumulators.
    """
    geom = geom or OCBGeometry()
    x = np.asarray(features)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != matrix.N:
        raise HDCError(f"expected {matrix.N} features, got {x.shape[1]}")
    integer = np.issubdtype(x.dtype, np.integer) or x.dtype == bool
    w = matrix.values
    if integer:
        x = x.astype(np.int64)
        bound = int(np.abs(x).max(initial=0)) * int(np.abs(w).max(initial=0)) * matrix.N
        if bound < 2 ** 53:
            # BLAS float path is exact below 2**53 and far faster than int matmul.
            x, w = x.astype(np.float64), w.astype(np.float64)
        else:
            integer = False
            x = x.astype(object)
    plan = map_encoder(matrix.N, matrix.D, geom)
    segments = segment_bounds(matrix.N, geom.mrs_per_arm)
    assert len(segments) == plan.accumulation_fanin
    # One arm per (segment, output); all arms holding a segment see the same light.
    partials = [x[:, lo:hi] @ w[lo:hi, :] for lo, hi in segments]
    hv = accumulate(partials)
    if integer:
        hv = np.rint(hv).astype(np.int64)
    return Hypervector(hv[0]) if single else hv


def encode_reference(features: Sequence[float], matrix: EncodingMatrix) -> list:
    """Plain double loop matrix-vector product."""
    out = []
    for d in range(matrix.D):
        s = 0
        for n in range(matrix.N):
            s += features[n] * int(matrix.values[n, d])
        out.append(s)
    return out


def cosine_similarity(a: Hypervector | np.ndarray, b: Hypervector | np.ndarray) -> float:
    va = np.asarray(getattr(a, "values", a), dtype=float)
    vb = np.asarray(getattr(b, "values", b), dtype=float)
    if va.shape != vb.shape:
        raise HDCError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise HDCError("cosine similarity of a zero vector is undefined")
    return float(np.clip(va @ vb / (na * nb), -1.0, 1.0))


# --- desk-scale dimension x precision study ---------------------------------


@dataclass(frozen=True)
class SyntheticTask:
    """Gaussian clusters around non-negative class prototypes.

    Features are clipped at zero, like the post-ReLU outputs a backbone would
    hand the encoder.
    """

    n_classes: int = 50
    n_features: int = 256
    train_per_class: int = 20
    test_per_class: int = 50
    noise: float = 1.5
    prototype_scale: float = 1.0

    def generate(self, seed: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        if self.n_classes < 2:
            raise HDCError("the task needs at least two classes")
        rng = np.random.default_rng([seed, 1])
        protos = np.abs(rng.normal(0.0, self.prototype_scale, (self.n_classes, self.n_features)))

        def draw(per_class: int) -> tuple[np.ndarray, np.ndarray]:
            y = np.repeat(np.arange(self.n_classes), per_class)
            x = protos[y] + rng.normal(0.0, self.noise, (len(y), self.n_features))
            return np.maximum(x, 0.0), y

        xtr, ytr = draw(self.train_per_class)
        xte, yte = draw(self.test_per_class)
        return xtr, ytr, xte, yte


def quantize_features(x: np.ndarray, bits: int, lo: float, hi: float) -> np.ndarray:
    """Unsigned ``bits``-wide codes over ``[lo, hi]``; full precision passes through."""
    if bits >= FULL_PRECISION:
        return x
    levels = (1 << bits) - 1
    scaled = np.clip((x - lo) / (hi - lo), 0.0, 1.0) * levels
    return np.floor(scaled + 0.5).astype(np.int64)


def nearest_centroid_accuracy(htr: np.ndarray, ytr: np.ndarray, hte: np.ndarray,
                              yte: np.ndarray) -> float:
    classes = np.unique(ytr)
    cent = np.stack([htr[ytr == c].sum(axis=0) for c in classes]).astype(float)
    cent /= np.linalg.norm(cent, axis=1, keepdims=True)
    q = hte.astype(float)
    q /= np.maximum(np.linalg.norm(q, axis=1, keepdims=True), 1e-300)
    pred = classes[np.argmax(q @ cent.T, axis=1)]
    return float(np.mean(pred == yte))


@dataclass
class AccuracyGrid:
    dims: list[int]
    precisions: list[int]
    accuracy: np.ndarray  # shape (len(dims), len(precisions))
    seed: int

    def cell(self, dim: int, precision: int) -> float:
        return float(self.accuracy[self.dims.index(dim), self.precisions.index(precision)])

    def to_csv(self) -> str:
        lines = [f"# seed={self.seed}", "dim," + ",".join(_prec_label(p) for p in self.precisions)]
        for i, d in enumerate(self.dims):
            lines.append(f"{d}," + ",".join(f"{a:.6f}" for a in self.accuracy[i]))
        return "\n".join(lines) + "\n"


def _prec_label(bits: int) -> str:
    return "fp" if bits >= FULL_PRECISION else f"{bits}b"


def sweep_accuracy(task: SyntheticTask, dims: Sequence[int], precisions: Sequence[int],
                   seed: int = 0, value_bits: int = 1, binarize: bool = False) -> AccuracyGrid:
    """Accuracy of nearest-centroid cosine classification for each (dim, precision)."""
    if not dims:
        raise HDCError("dims must be non-empty")
    xtr, ytr, xte, yte = task.generate(seed)
    lo, hi = float(xtr.min()), float(xtr.max())
    acc = np.zeros((len(dims), len(precisions)))
    for j, bits in enumerate(precisions):
        qtr = quantize_features(xtr, bits, lo, hi)
        qte = quantize_features(xte, bits, lo, hi)
        for i, dim in enumerate(dims):
            matrix = generate_encoding(task.n_features, dim, seed=seed * 7919 + dim, value_bits=value_bits)
            htr, hte = encode(qtr, matrix), encode(qte, matrix)
            if binarize:
                htr, hte = np.where(htr >= 0, 1, -1), np.where(hte >= 0, 1, -1)
            acc[i, j] = nearest_centroid_accuracy(htr, ytr, hte, yte)
    return AccuracyGrid(list(dims), list(precisions), acc, seed)

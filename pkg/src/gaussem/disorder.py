"""Disorder realizations with prescribed covariance and reproducible streams.

Streams are counter-based: draw i of experiment e under master seed s uses a
Philox generator keyed by (s, sha256(e)) with counter i, so distinct draws
are independent, order does not matter, and concurrent generation is
race-free and bit-reproducible.
"""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DimensionMismatch, UnsupportedModel, ValidationError
from .models import CovarianceModel, CustomModel
from .spins import CoordinatePartition
from .util import extract_map, psd_factor


@dataclass(frozen=True)
class SeedPolicy:
    """Derives one independent Gaussian stream per (experiment, draw index).

    The (master seed, experiment label, draw index) triple is hashed into the
    128-bit Philox key; distinct keys give independent streams, and the
    counter (which Philox advances block by block while generating) always
    starts at zero.
    """

    master_seed: int = 0

    def stream(self, experiment: str, draw: int) -> np.random.Generator:
        digest = hashlib.sha256(
            f"{self.master_seed}|{experiment}|{draw}".encode("utf-8")
        ).digest()
        key = [
            int.from_bytes(digest[:8], "big"),
            int.from_bytes(digest[8:16], "big"),
        ]
        return np.random.Generator(np.random.Philox(counter=0, key=key))


@dataclass(frozen=True)
class DisorderDraw:
    """One realization of the full energy vector, in enumeration order."""

    n: int
    energies: np.ndarray
    provenance: tuple[str, int, int]  # (model/experiment id, master seed, draw index)

    def __post_init__(self) -> None:
        e = np.asarray(self.energies, dtype=float)
        if e.shape != (1 << self.n,):
            raise ValidationError(f"expected {1 << self.n} energies, got shape {e.shape}")
        object.__setattr__(self, "energies", e)


class StructuralSampler:
    """Draws the model's independent couplings and applies the linear map.

    Exact for every built-in model; cost is one matrix-vector product per
    draw (the identity map of the independent-energies model is skipped).
    """

    def __init__(self, model: CovarianceModel):
        self.model = model
        self.n = model.n
        if model.kind == "rem":
            self._weights = None
        else:
            self._weights = model.coupling_structure().weight_matrix()

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self._weights is None:
            return rng.standard_normal(1 << self.n)
        return self._weights @ rng.standard_normal(self._weights.shape[1])


class CholeskySampler:
    """Draws energies through a pivoted rank-revealing factor of the covariance."""

    def __init__(self, covariance: np.ndarray, frobenius_rtol: float = 1e-8):
        c = np.asarray(covariance, dtype=float)
        factor, rank, _, resid_min = psd_factor(c)
        maxdiag = float(c.diagonal().max())
        if resid_min < -1e-8 * max(maxdiag, 1.0):
            raise ValidationError(
                f"covariance is indefinite beyond tolerance (residual diagonal {resid_min!r})"
            )
        resid = np.linalg.norm(c - factor @ factor.T)
        scale = max(np.linalg.norm(c), 1.0)
        if resid > frobenius_rtol * scale:
            raise ValidationError(
                f"factorization residual {resid!r} exceeds {frobenius_rtol!r} (relative)"
            )
        self._factor = factor
        self.rank = rank
        self.n = c.shape[0].bit_length() - 1

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self._factor @ rng.standard_normal(self._factor.shape[1])


def make_sampler(model: CovarianceModel, method: str = "auto"):
    """Structural when the model has a coupling form, else factorization."""
    if method == "structural":
        return StructuralSampler(model)
    if method == "cholesky":
        return CholeskySampler(model.covariance_matrix())
    if method == "auto":
        if isinstance(model, CustomModel):
            return CholeskySampler(model.covariance_matrix())
        try:
            return StructuralSampler(model)
        except UnsupportedModel:
            return CholeskySampler(model.covariance_matrix())
    raise ValidationError(f"unknown sampling method {method!r}")


def sample_structural(model: CovarianceModel, rng: np.random.Generator) -> np.ndarray:
    """One structural draw of the energy vector (see StructuralSampler)."""
    return StructuralSampler(model).sample(rng)


def sample_cholesky(covariance: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One factorization draw of the energy vector (see CholeskySampler)."""
    return CholeskySampler(covariance).sample(rng)


def draw_disorder(model: CovarianceModel, policy: SeedPolicy, experiment: str,
                  draw: int, method: str = "auto") -> DisorderDraw:
    sampler = make_sampler(model, method)
    rng = policy.stream(experiment, draw)
    return DisorderDraw(
        n=model.n,
        energies=sampler.sample(rng),
        provenance=(f"{model.spec_string()}/{experiment}", policy.master_seed, draw),
    )


def lift(draw: DisorderDraw, partition: CoordinatePartition, block: int) -> DisorderDraw:
    """Embed a block-sized draw into the full space: E'_sigma = E_(block projection).

    The output is degenerate: constant on the fibers of the projection.
    """
    nk = partition.block_size(block)
    if draw.n != nk:
        raise DimensionMismatch(
            f"draw size {draw.n} != block {block} size {nk}"
        )
    amap = extract_map(partition.n, partition.block_mask(block))
    label, seed, idx = draw.provenance
    return DisorderDraw(
        n=partition.n,
        energies=draw.energies[amap],
        provenance=(f"lift{block}[{label}]", seed, idx),
    )


@dataclass(frozen=True)
class JointDraw:
    """Three mutually independent systems: full size plus one per block, lifted."""

    partition: CoordinatePartition
    full: DisorderDraw
    sub1: DisorderDraw
    sub2: DisorderDraw
    lift1: DisorderDraw
    lift2: DisorderDraw


class TripleSampler:
    """Reusable sampler for (full, block-1, block-2) joint draws.

    One stream per draw index, consumed in a fixed order, keeps the three
    systems independent while costing a single generator construction.
    """

    def __init__(self, model: CovarianceModel, partition: CoordinatePartition,
                 method: str = "auto"):
        if partition.n != model.n:
            raise DimensionMismatch(
                f"partition size {partition.n} != model size {model.n}"
            )
        self.model = model
        self.partition = partition
        self._full = make_sampler(model, method)
        self._s1 = make_sampler(model.submodel(partition, 1), method)
        self._s2 = make_sampler(model.submodel(partition, 2), method)
        self._map1 = extract_map(partition.n, partition.mask)
        self._map2 = extract_map(partition.n, partition.mask2)
        self._label = f"{model.spec_string()}|mask={partition.mask}"

    def draw(self, policy: SeedPolicy, experiment: str, index: int) -> JointDraw:
        rng = policy.stream(experiment, index)
        e = self._full.sample(rng)
        e1 = self._s1.sample(rng)
        e2 = self._s2.sample(rng)
        p = self.partition
        seed = policy.master_seed
        full = DisorderDraw(p.n, e, (f"{self._label}/{experiment}", seed, index))
        sub1 = DisorderDraw(p.n1, e1, (f"{self._label}/{experiment}#1", seed, index))
        sub2 = DisorderDraw(p.n2, e2, (f"{self._label}/{experiment}#2", seed, index))
        lift1 = DisorderDraw(p.n, e1[self._map1], sub1.provenance)
        lift2 = DisorderDraw(p.n, e2[self._map2], sub2.provenance)
        return JointDraw(p, full, sub1, sub2, lift1, lift2)


def joint_triple(model: CovarianceModel, partition: CoordinatePartition,
                 policy: SeedPolicy, experiment: str, index: int,
                 method: str = "auto") -> JointDraw:
    """One-off joint draw; loops should hold a TripleSampler instead."""
    return TripleSampler(model, partition, method).draw(policy, experiment, index)


def write_draws(fh: io.TextIOBase, draws: Iterable[DisorderDraw]) -> None:
    """Plain-text exchange format: one line per draw, energies in enumeration order."""
    for d in draws:
        fh.write(" ".join(repr(float(x)) for x in d.energies))
        fh.write("\n")


def read_draws(fh: io.TextIOBase, n: int) -> list[np.ndarray]:
    out = []
    for line in fh:
        if not line.strip():
            continue
        vec = np.array([float(tok) for tok in line.split()])
        if vec.shape != (1 << n,):
            raise ValidationError(f"expected {1 << n} energies per line, got {vec.size}")
        out.append(vec)
    return out

"""One-parameter blend between a full system and two independent sub-systems.

For a joint draw (E, E1, E2) over a split (n1, n2) of n, the blended
Hamiltonian at parameter t in [0, 1] is

    H(sigma, t) = -( sqrt(t n) E_sigma
                   + sqrt((1-t) n1) E1_(block 1 of sigma)
                   + sqrt((1-t) n2) E2_(block 2 of sigma) )

At t = 1 the partition sum equals the full system's; at t = 0 it factorizes
into the two blocks' partition sums.  The t-derivative of the disorder
average of (1/n) ln Z(t) equals

    -(beta**2 / 2) * < c_n - (n1/n) c_n1 - (n2/n) c_n2 >_t

where <.>_t is the two-replica Gibbs expectation under H(., t), evaluated
here by exact double enumeration per draw.  (Differentiating sqrt(t_j)
produces the 1/2; the finite-difference cross-check pins the constant.)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import audit as audit_mod
from .disorder import JointDraw, SeedPolicy, TripleSampler
from .errors import ValidationError
from .models import CovarianceModel
from .spins import CoordinatePartition, SpinConfig
from .thermo import QuenchedEstimate, mean_and_se
from .util import lse, pmap


@dataclass(frozen=True)
class InterpolationPoint:
    """Blend parameter with its derived system weights."""

    t: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.t <= 1.0:
            raise ValidationError(f"t must lie in [0, 1], got {self.t!r}")

    @property
    def t0(self) -> float:
        return self.t

    @property
    def t1(self) -> float:
        return 1.0 - self.t

    @property
    def t2(self) -> float:
        return 1.0 - self.t


def _scales(partition: CoordinatePartition, beta: float, t: float) -> tuple[float, float, float]:
    pt = InterpolationPoint(t)
    return (
        beta * math.sqrt(pt.t0 * partition.n),
        beta * math.sqrt(pt.t1 * partition.n1),
        beta * math.sqrt(pt.t2 * partition.n2),
    )


def _logits(triple: JointDraw, beta: float, t: float) -> np.ndarray:
    """-beta * H(., t) over all configurations, scalars folded first."""
    s0, s1, s2 = _scales(triple.partition, beta, t)
    return s0 * triple.full.energies + s1 * triple.lift1.energies + s2 * triple.lift2.energies


def interp_hamiltonian(triple: JointDraw, sigma: SpinConfig, t: float) -> float:
    """Blended Hamiltonian of one configuration (beta-free)."""
    if sigma.n != triple.partition.n:
        raise ValidationError(f"configuration size {sigma.n} != system size {triple.partition.n}")
    s0, s1, s2 = _scales(triple.partition, 1.0, t)
    i = sigma.bits
    return -(
        s0 * float(triple.full.energies[i])
        + s1 * float(triple.lift1.energies[i])
        + s2 * float(triple.lift2.energies[i])
    )


def log_partition_t(triple: JointDraw, beta: float, t: float) -> float:
    """ln sum_sigma exp(-beta H(sigma, t)), overflow-free."""
    if beta < 0:
        raise ValidationError(f"beta must be >= 0, got {beta!r}")
    return lse(_logits(triple, beta, t))


class TwoReplicaGibbs:
    """Product Gibbs weights over ordered configuration pairs, one realization."""

    def __init__(self, triple: JointDraw, beta: float, t: float):
        x = _logits(triple, beta, t)
        w = np.exp(x - x.max())
        w /= w.sum()
        self.single = w

    def pair_weight(self, sigma: SpinConfig, tau: SpinConfig) -> float:
        return float(self.single[sigma.bits] * self.single[tau.bits])

    def pair_expectation(self, matrix: np.ndarray) -> float:
        """Expectation of a pair observable given as a dense matrix."""
        return float(self.single @ matrix @ self.single)

    @property
    def total_weight(self) -> float:
        return float(self.single.sum()) ** 2


class _DerivativeMachine:
    """Shared plumbing: one gap matrix, one triple sampler, per-draw values."""

    def __init__(self, model: CovarianceModel, partition: CoordinatePartition,
                 beta: float, method: str = "auto"):
        if beta < 0:
            raise ValidationError(f"beta must be >= 0, got {beta!r}")
        self.model = model
        self.partition = partition
        self.beta = beta
        self.gaps = audit_mod.gap_matrix(model, partition)
        self.sampler = TripleSampler(model, partition, method)

    def derivative_of_draw(self, triple: JointDraw, t: float) -> float:
        w = TwoReplicaGibbs(triple, self.beta, t).single
        return -(self.beta**2 / 2.0) * float(w @ self.gaps @ w)

    def alpha_of_draw(self, triple: JointDraw, t: float) -> float:
        return log_partition_t(triple, self.beta, t) / self.partition.n


def derivative_estimator(model: CovarianceModel, partition: CoordinatePartition,
                         beta: float, t: float, samples: int, seeds: SeedPolicy,
                         experiment: str | None = None, method: str = "auto",
                         threads: int = 1) -> QuenchedEstimate:
    """Monte Carlo estimate of d/dt of the averaged per-spin log partition sum.

    The two-replica expectation is exact per draw (full double enumeration);
    only the disorder average is sampled.  Endpoints t = 0, 1 are fine: the
    evaluated expression has no 1/sqrt(t) singularities.
    """
    machine = _DerivativeMachine(model, partition, beta, method)
    label = experiment or (
        f"deriv|{model.spec_string()}|mask={partition.mask}|beta={beta!r}|t={t!r}"
    )

    def one(i: int) -> float:
        return machine.derivative_of_draw(machine.sampler.draw(seeds, label, i), t)

    vals = np.array(pmap(one, range(samples), threads))
    mean, se = mean_and_se(vals)
    return QuenchedEstimate(mean, se, samples, beta, partition.n, "dalpha/dt")


@dataclass(frozen=True)
class DerivativeComparison:
    """Central finite difference against the two-replica formula."""

    t: float
    h: float
    finite_difference: QuenchedEstimate
    estimator: QuenchedEstimate
    combined_se: float
    agree: bool
    h_warning: bool  # h > 0.1: O(h**2) bias may not be negligible


def finite_difference_check(model: CovarianceModel, partition: CoordinatePartition,
                            beta: float, t: float, h: float, samples: int,
                            seeds: SeedPolicy, method: str = "auto",
                            threads: int = 1) -> DerivativeComparison:
    """Cross-validate the derivative formula against a seed-coupled difference.

    The same joint draws are reused at t-h and t+h (common random numbers),
    so the difference quotient's spread reflects genuine disorder variation,
    not independent-sample noise.
    """
    if not (0.0 < t - h and t + h < 1.0):
        raise ValidationError(f"need 0 < t-h and t+h < 1, got t={t!r}, h={h!r}")
    machine = _DerivativeMachine(model, partition, beta, method)
    label = f"fd|{model.spec_string()}|mask={partition.mask}|beta={beta!r}|t={t!r}|h={h!r}"

    def one(i: int) -> float:
        triple = machine.sampler.draw(seeds, label, i)
        return (machine.alpha_of_draw(triple, t + h) - machine.alpha_of_draw(triple, t - h)) / (2 * h)

    vals = np.array(pmap(one, range(samples), threads))
    mean, se = mean_and_se(vals)
    fd = QuenchedEstimate(mean, se, samples, beta, partition.n, "dalpha/dt (central diff)")
    est = derivative_estimator(model, partition, beta, t, samples, seeds,
                               method=method, threads=threads)
    combined = math.sqrt(fd.std_error**2 + est.std_error**2)
    return DerivativeComparison(
        t=t, h=h, finite_difference=fd, estimator=est, combined_se=combined,
        agree=abs(fd.value - est.value) <= 3.0 * combined,
        h_warning=h > 0.1,
    )


@dataclass(frozen=True)
class ScanPoint:
    t: float
    estimate: QuenchedEstimate
    verdict: str  # NONNEGATIVE or NEGATIVE at 3 standard errors


@dataclass(frozen=True)
class MonotonicityScan:
    points: tuple[ScanPoint, ...]

    @property
    def all_nonnegative(self) -> bool:
        return all(p.verdict == "NONNEGATIVE" for p in self.points)


def monotonicity_scan(model: CovarianceModel, partition: CoordinatePartition,
                      beta: float, t_grid, samples: int, seeds: SeedPolicy,
                      method: str = "auto", threads: int = 1) -> MonotonicityScan:
    """Derivative estimates across a t grid; draws are shared across the grid."""
    machine = _DerivativeMachine(model, partition, beta, method)
    label = f"scan|{model.spec_string()}|mask={partition.mask}|beta={beta!r}"
    triples = pmap(lambda i: machine.sampler.draw(seeds, label, i), range(samples), threads)
    points = []
    for t in t_grid:
        vals = np.array([machine.derivative_of_draw(tr, float(t)) for tr in triples])
        mean, se = mean_and_se(vals)
        est = QuenchedEstimate(mean, se, samples, beta, partition.n, "dalpha/dt")
        verdict = "NONNEGATIVE" if mean >= -3.0 * se else "NEGATIVE"
        points.append(ScanPoint(float(t), est, verdict))
    return MonotonicityScan(tuple(points))

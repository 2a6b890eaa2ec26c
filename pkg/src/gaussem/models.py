"""Covariance rules for Gaussian energy families on the hypercube.

Every model fixes a unit-diagonal symmetric covariance c_n(sigma, tau) over
the 2**n configurations.  Models whose covariance is a rational function of
overlaps return exact fractions from ``covariance``; floats appear only where
the inputs are floats (tree variances, custom matrices).  Models with an
explicit coupling expansion expose the linear map from i.i.d. standard
Gaussians to the energy vector via ``coupling_structure``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Real
from typing import Callable, Mapping

import numpy as np

from . import grem as grem_mod
from .errors import (
    DimensionMismatch,
    MissingData,
    ResourceCapExceeded,
    UnsupportedModel,
    ValidationError,
)
from .spins import CoordinatePartition, SpinConfig, overlap
from .util import popcount

#: largest n for which dense 2**n x 2**n covariance matrices may be built
MATRIX_CAP = 12

WEIGHT_SUM_TOL = 1e-12


class CouplingStructure:
    """Independent Gaussian couplings plus the linear map to the energy vector."""

    def __init__(self, description: str, n: int, groups: tuple[tuple[str, int], ...],
                 build: Callable[[], np.ndarray]):
        self.description = description
        self.n = n
        self.groups = groups
        self._build = build
        self._matrix: np.ndarray | None = None

    @property
    def n_couplings(self) -> int:
        return sum(count for _, count in self.groups)

    def weight_matrix(self) -> np.ndarray:
        """Dense (2**n, n_couplings) map W with E = W @ g, g ~ N(0, I)."""
        if self._matrix is None:
            self._matrix = self._build()
        return self._matrix

    def __repr__(self) -> str:
        return f"CouplingStructure({self.description!r}, n={self.n}, couplings={self.n_couplings})"


def _config_signs(n: int) -> np.ndarray:
    """(2**n, n) matrix of +-1 coordinates in enumeration order."""
    c = np.arange(1 << n)
    return np.where((c[:, None] >> np.arange(n)[None, :]) & 1 == 1, 1.0, -1.0)


def _tensor_rows(signs: np.ndarray, p: int) -> np.ndarray:
    """Row-wise p-fold tensor power: row c is the flattened outer power of signs[c]."""
    rows, n = signs.shape
    if rows * n**p > 50_000_000:
        raise ResourceCapExceeded(f"coupling tensor of order {p} too large at n={n}")
    out = signs
    for _ in range(p - 1):
        out = (out[:, :, None] * signs[:, None, :]).reshape(rows, -1)
    return out


class CovarianceModel:
    """Base class; subclasses fix the covariance rule for one model kind."""

    kind: str = "abstract"
    #: covariance depends on the pair only through per-block disagreement counts
    count_reducible: bool = False

    def __init__(self, n: int):
        if n < 1:
            raise ValidationError(f"system size must be >= 1, got {n}")
        self.n = int(n)

    # -- covariance ---------------------------------------------------------

    def covariance(self, sigma: SpinConfig, tau: SpinConfig):
        raise NotImplementedError

    def _check_sizes(self, sigma: SpinConfig, tau: SpinConfig) -> None:
        if sigma.n != self.n or tau.n != self.n:
            raise DimensionMismatch(
                f"configuration sizes ({sigma.n}, {tau.n}) != model size {self.n}"
            )

    def covariance_matrix(self, cap: int = MATRIX_CAP) -> np.ndarray:
        """Dense covariance in enumeration order; unit diagonal."""
        if self.n > cap:
            raise ResourceCapExceeded(f"n={self.n} exceeds the matrix cap {cap}")
        c = np.arange(1 << self.n, dtype=np.int64)
        return self._matrix_from_xor(c[:, None] ^ c[None, :])

    def _matrix_from_xor(self, xor_words: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    # -- family structure ---------------------------------------------------

    def at_size(self, n: int) -> "CovarianceModel":
        """Same covariance rule at another system size."""
        raise UnsupportedModel(f"{self.kind} is not size-parametric")

    def submodel(self, partition: CoordinatePartition, block: int) -> "CovarianceModel":
        """Model governing the chosen block of a coordinate split."""
        if partition.n != self.n:
            raise DimensionMismatch(
                f"partition size {partition.n} != model size {self.n}"
            )
        return self.at_size(partition.block_size(block))

    def coupling_structure(self) -> CouplingStructure:
        raise UnsupportedModel(
            f"{self.kind} has no structural coupling form; use the factorization sampler"
        )

    def spec_string(self) -> str:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}(n={self.n})"


class _OverlapPolynomialModel(CovarianceModel):
    """Covariance psi(q) for a polynomial psi with rational coefficients."""

    count_reducible = True

    def psi(self, q: Fraction) -> Fraction:
        raise NotImplementedError

    def psi_float(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def covariance(self, sigma: SpinConfig, tau: SpinConfig) -> Fraction:
        self._check_sizes(sigma, tau)
        return self.psi(overlap(sigma, tau))

    def _matrix_from_xor(self, xor_words: np.ndarray) -> np.ndarray:
        q = 1.0 - 2.0 * popcount(xor_words) / self.n
        return self.psi_float(q)

    def at_size(self, n: int) -> "CovarianceModel":
        return type(self)(n)


class SKModel(_OverlapPolynomialModel):
    """Full pair-interaction model: all n**2 couplings, covariance q**2."""

    kind = "sk"

    def psi(self, q: Fraction) -> Fraction:
        return q * q

    def psi_float(self, q: np.ndarray) -> np.ndarray:
        return q**2

    def coupling_structure(self) -> CouplingStructure:
        n = self.n

        def build() -> np.ndarray:
            return _tensor_rows(_config_signs(n), 2) / n

        return CouplingStructure(
            f"{n * n} pair couplings J[i,j], E = (1/n) sum_ij J[i,j] s_i s_j",
            n, (("J[i,j]", n * n),), build,
        )

    def spec_string(self) -> str:
        return "sk"


class SKStandardModel(SKModel):
    """Upper-triangular pair model, exposed through the full model's covariance.

    The i<j normalization differs from the full model only by a temperature
    rescaling plus a configuration-independent shift, so covariance queries
    return the full-model value q**2; the rescaling identity itself is
    checked by thermo.sk_rescaling_check.
    """

    kind = "sk_standard"

    def spec_string(self) -> str:
        return "sk_standard"


class PSpinModel(_OverlapPolynomialModel):
    """Order-p interaction model, covariance q**p (odd p allowed on purpose)."""

    kind = "pspin"

    def __init__(self, n: int, p: int):
        super().__init__(n)
        if int(p) != p or p < 1:
            raise ValidationError(f"interaction order must be a positive integer, got {p!r}")
        self.p = int(p)

    def psi(self, q: Fraction) -> Fraction:
        return q**self.p

    def psi_float(self, q: np.ndarray) -> np.ndarray:
        return q**self.p

    def at_size(self, n: int) -> "PSpinModel":
        return PSpinModel(n, self.p)

    def coupling_structure(self) -> CouplingStructure:
        n, p = self.n, self.p

        def build() -> np.ndarray:
            return _tensor_rows(_config_signs(n), p) * n ** (-p / 2)

        return CouplingStructure(
            f"{n**p} order-{p} couplings, E = n**(-{p}/2) sum J[i1..ip] s_i1..s_ip",
            n, ((f"J[i1..i{p}]", n**p),), build,
        )

    def spec_string(self) -> str:
        return f"pspin:{self.p}"

    def __repr__(self) -> str:
        return f"PSpinModel(n={self.n}, p={self.p})"


class MixedModel(_OverlapPolynomialModel):
    """Variance-weighted mixture: covariance sum_p w_p q**p with sum_p w_p = 1."""

    kind = "mixed"

    def __init__(self, n: int, weights: Mapping[int, Real | Fraction]):
        super().__init__(n)
        problems = []
        clean: dict[int, Fraction] = {}
        for p, w in sorted(weights.items()):
            if int(p) != p or p < 1:
                problems.append(f"interaction order {p!r} must be a positive integer")
                continue
            wf = Fraction(w)
            if wf < 0:
                problems.append(f"weight for p={p} is negative ({w!r})")
            clean[int(p)] = wf
        total = sum(clean.values(), Fraction(0))
        if not clean:
            problems.append("at least one interaction order is required")
        elif abs(total - 1) > WEIGHT_SUM_TOL:
            problems.append(f"weights sum to {float(total)!r}, expected 1")
        if problems:
            raise ValidationError("; ".join(problems))
        self.weights = clean

    def psi(self, q: Fraction) -> Fraction:
        return sum((w * q**p for p, w in self.weights.items()), Fraction(0))

    def psi_float(self, q: np.ndarray) -> np.ndarray:
        out = np.zeros_like(q, dtype=float)
        for p, w in self.weights.items():
            out += float(w) * q**p
        return out

    def at_size(self, n: int) -> "MixedModel":
        return MixedModel(n, self.weights)

    def coupling_structure(self) -> CouplingStructure:
        n = self.n
        weights = self.weights

        def build() -> np.ndarray:
            signs = _config_signs(n)
            blocks = [
                np.sqrt(float(w)) * _tensor_rows(signs, p) * n ** (-p / 2)
                for p, w in weights.items()
            ]
            return np.hstack(blocks)

        groups = tuple((f"sqrt(w_{p})-weighted order-{p}", n**p) for p in weights)
        return CouplingStructure(
            "concatenated per-order couplings scaled by sqrt(w_p)", n, groups, build,
        )

    def spec_string(self) -> str:
        parts = ",".join(f"{p}={_weight_str(w)}" for p, w in self.weights.items())
        return f"mixed:{parts}"


def _weight_str(w: Fraction) -> str:
    f = float(w)
    return repr(f) if Fraction(repr(f)) == w or Fraction(f) == w else f"{w.numerator}/{w.denominator}"


class REMModel(CovarianceModel):
    """All 2**n energies independent: covariance is the Kronecker delta."""

    kind = "rem"
    count_reducible = True

    def covariance(self, sigma: SpinConfig, tau: SpinConfig) -> Fraction:
        self._check_sizes(sigma, tau)
        return Fraction(1) if sigma.bits == tau.bits else Fraction(0)

    def _matrix_from_xor(self, xor_words: np.ndarray) -> np.ndarray:
        return (xor_words == 0).astype(float)

    def at_size(self, n: int) -> "REMModel":
        return REMModel(n)

    def coupling_structure(self) -> CouplingStructure:
        n = self.n

        def build() -> np.ndarray:
            if n > MATRIX_CAP:
                raise ResourceCapExceeded(f"identity coupling map too large at n={n}")
            return np.eye(1 << n)

        return CouplingStructure(
            f"{1 << n} independent unit couplings, one per configuration",
            n, (("per-configuration", 1 << n),), build,
        )

    def spec_string(self) -> str:
        return "rem"


class GREMModel(CovarianceModel):
    """Tree-structured covariance: v at the merge level of the two leaves."""

    kind = "grem"

    def __init__(self, tree: grem_mod.GremTree):
        super().__init__(tree.n_spins)
        self.tree = tree

    def covariance(self, sigma: SpinConfig, tau: SpinConfig) -> float:
        self._check_sizes(sigma, tau)
        return grem_mod.grem_covariance(self.tree, sigma, tau)

    def _matrix_from_xor(self, xor_words: np.ndarray) -> np.ndarray:
        v = np.asarray(self.tree.cumulative_variance)
        return v[grem_mod.merge_level_matrix(self.tree, xor_words)]

    def submodel(self, partition: CoordinatePartition, block: int) -> "GREMModel":
        if partition.n != self.n:
            raise DimensionMismatch(
                f"partition size {partition.n} != model size {self.n}"
            )
        return GREMModel(self.tree.sub_tree(partition, block))

    def at_size(self, n: int) -> "CovarianceModel":
        raise UnsupportedModel(
            "a tree model changes with the coordinate split; use submodel(partition, block)"
        )

    def coupling_structure(self) -> CouplingStructure:
        tree = self.tree
        groups = tuple(
            (f"layer {i + 1} (var {a!r})", count)
            for i, (count, a) in enumerate(zip(tree.branch_counts, tree.variances))
        )
        return CouplingStructure(
            "one coupling per branch, scaled by sqrt(layer variance)",
            self.n, groups, lambda: grem_mod.branch_weight_matrix(tree),
        )

    def spec_string(self) -> str:
        return self.tree.spec_string()


class CustomModel(CovarianceModel):
    """Covariance given directly as a matrix in enumeration order.

    Condition audits additionally need the covariances of the projected
    systems; supply them as a size-indexed family of matrices.
    """

    kind = "custom"

    def __init__(self, matrix: np.ndarray, family: Mapping[int, np.ndarray] | None = None,
                 name: str = "custom"):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"covariance must be square, got shape {m.shape}")
        dim = m.shape[0]
        n = dim.bit_length() - 1
        if 1 << n != dim:
            raise ValidationError(f"matrix dimension {dim} is not a power of two")
        super().__init__(n)
        if np.abs(m - m.T).max() > 1e-12:
            raise ValidationError("covariance matrix is not symmetric within 1e-12")
        if np.abs(m.diagonal() - 1.0).max() > 1e-9:
            raise ValidationError("covariance matrix does not have unit diagonal")
        self.matrix = m
        self.family = {int(k): np.asarray(v, dtype=float) for k, v in (family or {}).items()}
        self.name = name

    def covariance(self, sigma: SpinConfig, tau: SpinConfig) -> float:
        self._check_sizes(sigma, tau)
        return float(self.matrix[sigma.bits, tau.bits])

    def _matrix_from_xor(self, xor_words: np.ndarray) -> np.ndarray:
        raise UnsupportedModel("custom matrices are stored, not generated")

    def covariance_matrix(self, cap: int = MATRIX_CAP) -> np.ndarray:
        return self.matrix.copy()

    def at_size(self, n: int) -> "CovarianceModel":
        if n == self.n:
            return self
        if n not in self.family:
            raise MissingData(
                f"custom model has no covariance matrix for size {n}; "
                f"available sizes: {sorted(self.family) or 'none'}"
            )
        return CustomModel(self.family[n], self.family, name=self.name)

    def spec_string(self) -> str:
        return f"custom:{self.name}"

"""Problem descriptions: stochastic map oracles, constraint families, the game generator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .numkit import (
    BoxSet,
    DimensionMismatchError,
    RealVec,
    SeededStream,
    gaussian_vector,
    random_sym_with_spectrum,
    spectral_norm_power,
)


class ContractViolationError(RuntimeError):
    """Raised when an oracle is queried outside its domain."""


@dataclass(frozen=True)
class MappingOracle:
    """Stochastic mapping F-hat(x, xi) = mean_map(x) + xi.

    noise_stddev is the per-coordinate standard deviation of the additive
    gaussian noise. L and M are the growth constants of the mean map over Y:
    ||F(x) - F(y)|| <= L ||x - y|| + M.
    """

    mean_map: Callable[[RealVec], RealVec]
    noise_stddev: float
    lipschitz: float
    discontinuity: float = 0.0

    @property
    def variance_bound(self) -> float:
        """sigma^2 upper bound for a given dimension is stddev^2 * dim."""
        return self.noise_stddev**2


@dataclass(frozen=True)
class QuadraticConstraint:
    """Convex level-set function g(x) = z^T B z + c^T z - d on a coordinate block.

    z = x[start : start + len(c)]. B must be PSD so g is convex. start > 0
    lifts a per-player constraint into the joint space; the subgradient is
    zero outside the block.
    """

    quad: np.ndarray
    lin: RealVec
    offset: float
    start: int = 0

    def __post_init__(self):
        q = np.asarray(self.quad, dtype=np.float64)
        c = np.asarray(self.lin, dtype=np.float64)
        object.__setattr__(self, "quad", q)
        object.__setattr__(self, "lin", c)
        if q.shape != (c.size, c.size):
            raise DimensionMismatchError("quad must be square and match lin")

    @property
    def block_dim(self) -> int:
        return self.lin.size

    def _block(self, x: RealVec) -> RealVec:
        if x.size < self.start + self.block_dim:
            raise DimensionMismatchError("point too short for constraint block")
        return x[self.start : self.start + self.block_dim]

    def value(self, x: RealVec) -> float:
        z = self._block(x)
        return float(z @ self.quad @ z + self.lin @ z - self.offset)

    def plus_subgradient(self, x: RealVec) -> tuple[float, RealVec]:
        """(max(g(x), 0), subgradient). Feasible points get the unit vector e1,
        which downstream steps never use (the step length is zero there)."""
        g = self.value(x)
        d = np.zeros_like(x)
        if g > 0:
            z = self._block(x)
            d[self.start : self.start + self.block_dim] = 2.0 * self.quad @ z + self.lin
            return g, d
        d[0] = 1.0
        return 0.0, d


def constraint_value(c: QuadraticConstraint, x: RealVec) -> float:
    return c.value(x)


def constraint_plus_subgradient(c: QuadraticConstraint, x: RealVec):
    return c.plus_subgradient(x)


class ConstraintFamily:
    """Finite family of quadratic constraints with an analytic subgradient bound.

    groups optionally names subsets of members (e.g. per player) for
    reporting. For an infinite family supply a GenerativeFamily instead.
    """

    def __init__(self, members: Sequence[QuadraticConstraint], box: BoxSet,
                 groups: dict[str, list[int]] | None = None):
        self.members = list(members)
        self.groups = groups or {}
        self.subgrad_bound = self._compute_subgrad_bound(box)
        self._stack = self._build_stack()

    @property
    def finite(self) -> bool:
        return True

    def __len__(self) -> int:
        return len(self.members)

    def _compute_subgrad_bound(self, box: BoxSet) -> float:
        # max over members of 2 ||B||_2 r + ||c||, r the block circumradius
        bound = 0.0
        for m in self.members:
            r = box.circumradius(m.start, m.start + m.block_dim)
            bnorm = float(np.abs(np.linalg.eigvalsh(0.5 * (m.quad + m.quad.T))).max())
            bound = max(bound, 2.0 * bnorm * r + float(np.linalg.norm(m.lin)))
        return bound

    def _build_stack(self):
        """Stacked arrays for the vectorized/compiled paths; None if the
        members have heterogeneous block sizes."""
        if not self.members:
            return None
        p = self.members[0].block_dim
        if any(m.block_dim != p for m in self.members):
            return None
        quad = np.stack([m.quad for m in self.members])
        lin = np.stack([m.lin for m in self.members])
        off = np.array([m.offset for m in self.members])
        start = np.array([m.start for m in self.members], dtype=np.int64)
        return quad, lin, off, start

    @property
    def stack(self):
        return self._stack

    def eval_all(self, points: np.ndarray) -> np.ndarray:
        """g values for every (point, member) pair; points has shape (n, dim)."""
        pts = np.atleast_2d(points)
        if self._stack is not None:
            quad, lin, off, start = self._stack
            p = quad.shape[1]
            out = np.empty((pts.shape[0], len(self.members)))
            # batch members sharing a block so the cost is one einsum per block
            for st in np.unique(start):
                idx = np.nonzero(start == st)[0]
                z = pts[:, st : st + p]
                out[:, idx] = (np.einsum("np,jpq,nq->nj", z, quad[idx], z)
                               + z @ lin[idx].T - off[idx])
            return out
        return np.array([[m.value(x) for m in self.members] for x in pts])


class GenerativeFamily:
    """Infinite constraint family given by a sampler law and a stated M_g."""

    def __init__(self, draw: Callable[[SeededStream], QuadraticConstraint],
                 subgrad_bound: float):
        self.draw = draw
        self.subgrad_bound = subgrad_bound

    @property
    def finite(self) -> bool:
        return False


@dataclass(frozen=True)
class ProblemSpec:
    """Full problem: oracle + base box Y + constraint family defining X."""

    oracle: MappingOracle
    base_set: BoxSet
    family: ConstraintFamily | GenerativeFamily
    regularity_c: float | None = None
    payoff: np.ndarray | None = None
    joint_matrix: np.ndarray | None = None

    def _check_domain(self, x: RealVec):
        if not self.base_set.contains(x):
            raise ContractViolationError("oracle queried at a point outside Y")


def map_mean(spec: ProblemSpec, x: RealVec) -> RealVec:
    spec._check_domain(x)
    return np.asarray(spec.oracle.mean_map(x), dtype=np.float64)


def map_sample(spec: ProblemSpec, x: RealVec, rng: SeededStream) -> RealVec:
    spec._check_domain(x)
    mean = np.asarray(spec.oracle.mean_map(x), dtype=np.float64)
    return mean + gaussian_vector(x.size, spec.oracle.noise_stddev, rng)


def operator_bound_B(lipschitz: float, diameter_sq: float, discontinuity: float,
                     ref_norm: float) -> float:
    """B = L sqrt(D) + M + ||F(x_ref)||, a norm bound for F over Y."""
    for name, v in (("L", lipschitz), ("D", diameter_sq),
                    ("M", discontinuity), ("Fref_norm", ref_norm)):
        if v < 0:
            raise ValueError(f"{name} must be nonnegative, got {v}")
    return lipschitz * np.sqrt(diameter_sq) + discontinuity + ref_norm


def make_zero_sum_game(n: int, num_constraints: int, seeds: SeededStream,
                       map_eig_range=(0.0, 4.0), constraint_eig_range=(0.0, 2.0),
                       c_range=(-10.0, -5.0), d_range=(-1.0, 0.0),
                       noise_stddev: float = 0.5) -> ProblemSpec:
    """Two-player zero-sum game on [-1,1]^(2n) with quadratic level-set constraints.

    Payoff matrix A = Q diag(U[0,4]) Q^T gives the skew joint map
    F(x) = [[0, A], [-A^T, 0]] x. Each of the num_constraints quadratic
    constraints (B_i spectra U[0,2], c_i ~ U[-10,-5] per coordinate,
    d_i ~ U[-1,0]) applies to both players' blocks.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if num_constraints < 0:
        raise ValueError("num_constraints must be >= 0")

    rng_map = seeds.substream("map")
    a = random_sym_with_spectrum(rng_map.uniform(*map_eig_range, size=n), rng_map)
    atilde = np.zeros((2 * n, 2 * n))
    atilde[:n, n:] = a
    atilde[n:, :n] = -a.T

    box = BoxSet(-np.ones(2 * n), np.ones(2 * n))

    rng_cons = seeds.substream("constraints")
    members = []
    p1_idx, p2_idx = [], []
    for _ in range(num_constraints):
        b = random_sym_with_spectrum(rng_cons.uniform(*constraint_eig_range, size=n),
                                     rng_cons)
        c = rng_cons.uniform(*c_range, size=n)
        d = float(rng_cons.uniform(*d_range))
        p1_idx.append(len(members))
        members.append(QuadraticConstraint(b, c, d, start=0))
        p2_idx.append(len(members))
        members.append(QuadraticConstraint(b, c, d, start=n))
    family = ConstraintFamily(members, box, groups={"p1": p1_idx, "p2": p2_idx})

    lip = spectral_norm_power(a, rng=seeds.substream("power"))
    oracle = MappingOracle(
        mean_map=lambda x: atilde @ x,
        noise_stddev=noise_stddev,
        lipschitz=lip,
        discontinuity=0.0,
    )
    return ProblemSpec(oracle=oracle, base_set=box, family=family,
                       payoff=a, joint_matrix=atilde)

"""Merit estimation (modified dual gap), infeasibility surrogates, projection oracles."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import BoxSet, RealVec, SeededStream, project_box
from .problem import ConstraintFamily, GenerativeFamily, ProblemSpec, map_mean


class EmptyCloudError(RuntimeError):
    """Rejection sampling produced no feasible point; enlarge the candidate pool."""


@dataclass(frozen=True)
class GapEstimate:
    value: float
    num_samples: int
    num_feasible: int


@dataclass(frozen=True)
class FeasiblePointCloud:
    """Feasible points of S = X intersect Y, found by rejection sampling, with
    the mean map precomputed at every point."""

    points: np.ndarray      # (m, dim)
    map_values: np.ndarray  # (m, dim)
    num_candidates: int

    def __len__(self) -> int:
        return self.points.shape[0]


def sample_feasible_points(spec: ProblemSpec, n_candidates: int,
                           rng: SeededStream) -> FeasiblePointCloud:
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    box = spec.base_set
    cands = rng.uniform(box.lo, box.hi, size=(n_candidates, box.dim))
    family = spec.family
    if isinstance(family, GenerativeFamily):
        raise NotImplementedError("feasible-cloud sampling needs a finite family")
    if len(family) == 0:
        keep = cands
    else:
        vals = family.eval_all(cands)
        keep = cands[np.all(vals <= 0.0, axis=1)]
    if keep.shape[0] == 0:
        raise EmptyCloudError(f"no feasible point among {n_candidates} candidates")
    fvals = np.stack([map_mean(spec, x) for x in keep])
    return FeasiblePointCloud(points=keep, map_values=fvals,
                              num_candidates=n_candidates)


def estimate_modified_dual_gap(y: RealVec, cloud: FeasiblePointCloud,
                               spec: ProblemSpec) -> GapEstimate:
    """|max over cloud points x of <F(x), y - x>| with the deterministic mean map."""
    if len(cloud) == 0:
        raise EmptyCloudError("empty cloud")
    inner = np.einsum("md,md->m", cloud.map_values, y[None, :] - cloud.points)
    return GapEstimate(value=abs(float(inner.max())),
                       num_samples=cloud.num_candidates,
                       num_feasible=len(cloud))


def signed_dual_gap(y: RealVec, cloud: FeasiblePointCloud) -> float:
    """max over the cloud of <F(x), y - x>, before the absolute value."""
    inner = np.einsum("md,md->m", cloud.map_values, y[None, :] - cloud.points)
    return float(inner.max())


def infeasibility_surrogate(x: RealVec, family: ConstraintFamily,
                            member_indices=None) -> float:
    """Sum of positive constraint residuals, a computable stand-in for dist(x, X)."""
    if isinstance(family, GenerativeFamily):
        raise NotImplementedError("surrogate needs a finite family")
    vals = family.eval_all(x[None, :])[0]
    if member_indices is not None:
        vals = vals[np.asarray(member_indices, dtype=np.int64)]
    return float(np.maximum(vals, 0.0).sum())


def project_halfspace(x: RealVec, a: RealVec, b: float) -> RealVec:
    viol = float(a @ x) - b
    if viol <= 0.0:
        return x
    return x - (viol / float(a @ a)) * a


def dykstra_projection(x: RealVec, box: BoxSet, halfspaces, iters: int = 200) -> RealVec:
    """Dykstra's alternating projections onto box intersect halfspaces.

    halfspaces is a list of (a, b) pairs for {z | <a, z> <= b}. Test oracle for
    exact projections; not used by the solvers themselves.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    sets = [("box", None)] + [("half", hs) for hs in halfspaces]
    z = x.copy()
    corrections = [np.zeros_like(x) for _ in sets]
    for _ in range(iters):
        z_prev = z
        for i, (kind, hs) in enumerate(sets):
            w = z + corrections[i]
            if kind == "box":
                z = project_box(w, box)
            else:
                a, b = hs
                z = project_halfspace(w, np.asarray(a, dtype=np.float64), float(b))
            corrections[i] = w - z
        if float(np.max(np.abs(z - z_prev))) <= 1e-15:
            break
    return z


def distance_to_feasible(x: RealVec, projector) -> float:
    """||x - P_S(x)|| for a supplied exact projection oracle."""
    return float(np.linalg.norm(x - projector(x)))


def fit_loglog_rate(ks, vals) -> float:
    """Least-squares slope of log(val) against log(k)."""
    ks = np.asarray(ks, dtype=np.float64)
    vals = np.asarray(vals, dtype=np.float64)
    if ks.size < 3:
        raise ValueError("need at least 3 points")
    if np.any(vals <= 0.0) or np.any(ks <= 0.0):
        raise ValueError("values and indices must be positive")
    slope, _ = np.polyfit(np.log(ks), np.log(vals), 1)
    return float(slope)


def fit_linear(xs, ys):
    """Slope, intercept and R^2 of a plain least-squares line."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    slope, intercept = np.polyfit(xs, ys, 1)
    pred = slope * xs + intercept
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2

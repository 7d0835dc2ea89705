"""Projective fiber measures and tests of holonomy invariance.

Fiber measures are empirical atom clouds in RP^{2d-1}, estimated by pushing
a uniform cloud forward from the past along the orbit.  Distances between
measures are 1-Wasserstein with the projective angle as ground metric:
exact on RP^1 (a circle of length pi), sliced over random 2-planes above.

Any two independently estimated clouds differ by sampling noise, so the
defects reported here are debiased with a second, independent replicate of
every measure: the per-pair statistic is the excess of the cross distance
(transported vs target) over the within distance (replicate vs replicate).
It has mean zero when the transport relation holds exactly.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .base import SuspensionPoint
from .cocycle import CocycleField
from .holonomy import HOLONOMY_NMAX, HOLONOMY_TOL, HomoclinicLoop, holonomy_along_leaf
from .lyapunov import ExponentEstimate, integrated_exponent

N_SLICES = 32


@dataclass(frozen=True)
class FiberMeasure:
    atoms: np.ndarray = field(repr=False)  # (n, 2d) unit vectors
    weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if atoms.ndim != 2 or atoms.shape[0] != w.shape[0]:
            raise ValueError("atoms and weights disagree in length")
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must sum to 1")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", w)

    @property
    def n_atoms(self) -> int:
        return self.atoms.shape[0]

    @classmethod
    def uniform_cloud(cls, vectors) -> "FiberMeasure":
        v = np.asarray(vectors, dtype=float)
        v = v / np.linalg.norm(v, axis=-1, keepdims=True)
        return cls(v, np.full(v.shape[0], 1.0 / v.shape[0]))

    @classmethod
    def dirac(cls, vector) -> "FiberMeasure":
        return cls.uniform_cloud(np.atleast_2d(vector))


def push_measure(B, m: FiberMeasure) -> FiberMeasure:
    B = np.asarray(B, dtype=float)
    v = m.atoms @ B.T
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return FiberMeasure(v, m.weights)


def _push_batch(B: np.ndarray, atoms: np.ndarray) -> np.ndarray:
    """Push stacked clouds (N, n, 2d) by stacked matrices (N, 2d, 2d)."""
    v = atoms @ np.swapaxes(B, -1, -2)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def estimate_fiber_clouds(A, points, n_transient: int, n_atoms: int, seed: int) -> np.ndarray:
    """Atom clouds (N, n_atoms, 2d) for a batch of points; equal weights.

    ``A`` is a CocycleField (points a batched SuspensionPoint) or a
    CircleCocycle (points an array of circle coordinates).
    """
    past = A.past_matrices(points, n_transient)
    shape = np.shape(points) if not isinstance(points, SuspensionPoint) else points.shape
    N = int(np.prod(shape)) if shape else 1
    dim = past[0].shape[-1] if past else 2 * getattr(A, "d", getattr(A, "cocycle", A).d)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    v = rng.standard_normal((N, n_atoms, dim))
    v /= np.linalg.norm(v, axis=-1, keepdims=True)
    for G in past:
        v = _push_batch(G.reshape(N, dim, dim), v)
    return v


def estimate_fiber_measures(A, points, n_transient: int, n_atoms: int, seed: int) -> list[FiberMeasure]:
    clouds = estimate_fiber_clouds(A, points, n_transient, n_atoms, seed)
    return [FiberMeasure.uniform_cloud(c) for c in clouds]


# -- distances ---------------------------------------------------------------------


def _circle_w1(a: np.ndarray, wa: np.ndarray, b: np.ndarray, wb: np.ndarray, L: float) -> np.ndarray:
    """Exact W1 on a circle of length L, batched over leading axes.

    With D the difference of the two CDFs, W1 = min_c int |D - c|, attained
    at a length-weighted median of D.
    """
    pos = np.concatenate([a, b], axis=-1)
    w = np.concatenate([wa, -wb], axis=-1)
    order = np.argsort(pos, axis=-1, kind="stable")
    pos = np.take_along_axis(pos, order, axis=-1)
    D = np.cumsum(np.take_along_axis(w, order, axis=-1), axis=-1)
    lengths = np.diff(pos, axis=-1, append=pos[..., :1] + L)
    o = np.argsort(D, axis=-1, kind="stable")
    Ds = np.take_along_axis(D, o, axis=-1)
    ls = np.take_along_axis(lengths, o, axis=-1)
    cl = np.cumsum(ls, axis=-1)
    k = np.argmax(cl >= 0.5 * cl[..., -1:], axis=-1)
    med = np.take_along_axis(Ds, k[..., None], axis=-1)
    return np.sum(lengths * np.abs(D - med), axis=-1)


def _line_angles(v: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(v[..., 1], v[..., 0]), np.pi)


def _slice_frames(dim: int, n_slices: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((n_slices, dim, 2))
    Q, _ = np.linalg.qr(G)
    return Q


def cloud_distance(u: np.ndarray, wu: np.ndarray, v: np.ndarray, wv: np.ndarray, n_slices: int = N_SLICES, seed: int = 0):
    """Projective W1 between stacked clouds (..., n, 2d); batched."""
    dim = u.shape[-1]
    if dim == 2:
        return _circle_w1(_line_angles(u), wu, _line_angles(v), wv, np.pi)
    frames = _slice_frames(dim, n_slices, seed)
    total = 0.0
    for Q in frames:
        total = total + _circle_w1(_line_angles(u @ Q), wu, _line_angles(v @ Q), wv, np.pi)
    return total / n_slices


def projective_distance(m1: FiberMeasure, m2: FiberMeasure, n_slices: int = N_SLICES, seed: int = 0) -> float:
    if m1.atoms.shape[1] != m2.atoms.shape[1]:
        raise ValueError("measures live in different projective spaces")
    return float(cloud_distance(m1.atoms, m1.weights, m2.atoms, m2.weights, n_slices, seed))


def _equal_weights(clouds: np.ndarray) -> np.ndarray:
    n = clouds.shape[-2]
    return np.full(clouds.shape[:-1], 1.0 / n)


# -- defects -----------------------------------------------------------------------


@dataclass(frozen=True)
class DefectReport:
    mean_defect: float
    bootstrap_se: float
    n_pairs: int
    transport_metric: str = "projective-W1-debiased"
    per_pair: np.ndarray = field(default=None, repr=False)
    raw_mean: float = 0.0
    noise_mean: float = 0.0
    sides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mean_defect < 0:
            raise ValueError("mean defect must be non-negative")

    def below(self, k: float = 2.0) -> bool:
        return self.mean_defect <= k * self.bootstrap_se

    def to_dict(self) -> dict:
        out = {
            "mean_defect": self.mean_defect,
            "bootstrap_se": self.bootstrap_se,
            "n_pairs": self.n_pairs,
            "transport_metric": self.transport_metric,
            "raw_mean": self.raw_mean,
            "noise_mean": self.noise_mean,
        }
        if self.sides:
            out["sides"] = {k: v.to_dict() for k, v in self.sides.items()}
        return out

    def per_pair_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["pair", "excess"])
        for i, v in enumerate(self.per_pair):
            w.writerow([i, repr(float(v))])
        return buf.getvalue()


def bootstrap_se(values: np.ndarray, n_boot: int = 500, seed: int = 0) -> float:
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_boot, values.size))
    return float(np.std(values[idx].mean(axis=1), ddof=1))


def transport_defect(H, src1, src2, dst1, dst2, n_boot: int = 500, seed: int = 0, label: str = "") -> DefectReport:
    """Debiased defect of the relation dst = H_* src over a batch of pairs.

    ``src1, src2`` (and ``dst1, dst2``) are independent replicate clouds of
    shape (N, n, 2d); ``H`` has shape (N, 2d, 2d).
    """
    w = _equal_weights(src1)
    p1, p2 = _push_batch(H, src1), _push_batch(H, src2)
    cross = 0.5 * (cloud_distance(p1, w, dst2, w) + cloud_distance(p2, w, dst1, w))
    within = 0.5 * (cloud_distance(dst1, w, dst2, w) + cloud_distance(p1, w, p2, w))
    excess = np.atleast_1d(cross - within)
    return DefectReport(
        max(0.0, float(np.mean(excess))),
        bootstrap_se(excess, n_boot, seed),
        int(excess.size),
        "projective-W1-debiased" + (f":{label}" if label else ""),
        excess,
        float(np.mean(cross)),
        float(np.mean(within)),
    )


def pool_reports(reports: dict, n_boot: int = 500, seed: int = 0) -> DefectReport:
    excess = np.concatenate([r.per_pair for r in reports.values()])
    raw = np.mean([r.raw_mean for r in reports.values()])
    noise = np.mean([r.noise_mean for r in reports.values()])
    return DefectReport(
        max(0.0, float(np.mean(excess))),
        bootstrap_se(excess, n_boot, seed),
        int(excess.size),
        "projective-W1-debiased",
        excess,
        float(raw),
        float(noise),
        dict(reports),
    )


@dataclass(frozen=True)
class LeafPairs:
    """Endpoint pairs (y, z) with z = y + offset * v_side."""

    y: SuspensionPoint
    z: SuspensionPoint
    offset: np.ndarray
    side: str


def sample_leaf_pairs(model, n_pairs: int, max_offset: float = 0.05, seed: int = 0, side: str = "s") -> LeafPairs:
    rng = np.random.default_rng(seed)
    y = model.volume_sample(n_pairs, int(rng.integers(2**31)))
    offset = rng.uniform(-max_offset, max_offset, n_pairs)
    shift = model.stable_leaf_point if side == "s" else model.unstable_leaf_point
    return LeafPairs(y, shift(y, offset), offset, side)


def su_defect(
    A: CocycleField,
    pairs: list[LeafPairs],
    n_transient: int = 60,
    n_atoms: int = 200,
    seed: int = 0,
    tol: float = HOLONOMY_TOL,
    n_max: int = HOLONOMY_NMAX,
    n_boot: int = 500,
) -> DefectReport:
    """Pooled stable/unstable holonomy-invariance defect of the estimated fiber measures."""
    ss = np.random.SeedSequence(seed)
    reports = {}
    for k, (lp, child) in enumerate(zip(pairs, ss.spawn(len(pairs)))):
        s1, s2, s3, s4 = (int(c.generate_state(1)[0]) for c in child.spawn(4))
        H = holonomy_along_leaf(A, lp.y, lp.offset, lp.side, tol, n_max).matrix
        src1 = estimate_fiber_clouds(A, lp.y, n_transient, n_atoms, s1)
        src2 = estimate_fiber_clouds(A, lp.y, n_transient, n_atoms, s2)
        dst1 = estimate_fiber_clouds(A, lp.z, n_transient, n_atoms, s3)
        dst2 = estimate_fiber_clouds(A, lp.z, n_transient, n_atoms, s4)
        label = lp.side if lp.side not in reports else f"{lp.side}{k}"
        reports[label] = transport_defect(H, src1, src2, dst1, dst2, n_boot, seed + k, label)
    return pool_reports(reports, n_boot, seed)


def suc_defect(
    loop: HomoclinicLoop,
    s_grid,
    j: int = 1,
    n_transient: int = 60,
    n_atoms: int = 200,
    seed: int = 0,
    n_boot: int = 500,
) -> DefectReport:
    """Defect of m_{h^j(s)} = (H^j_s)_* m_s over a circle grid on the leaf."""
    from .cocycle import CircleCocycle

    s_grid = np.asarray(s_grid, dtype=float)
    circle = CircleCocycle(loop.cocycle, loop.leaf)
    end, H = loop.iterate(j, s_grid)
    ss = np.random.SeedSequence(seed)
    s1, s2, s3, s4 = (int(c.generate_state(1)[0]) for c in ss.spawn(4))
    src1 = estimate_fiber_clouds(circle, s_grid, n_transient, n_atoms, s1)
    src2 = estimate_fiber_clouds(circle, s_grid, n_transient, n_atoms, s2)
    if j == 0:
        dst1, dst2 = src1, src2
    else:
        dst1 = estimate_fiber_clouds(circle, end, n_transient, n_atoms, s3)
        dst2 = estimate_fiber_clouds(circle, end, n_transient, n_atoms, s4)
    return transport_defect(H, src1, src2, dst1, dst2, n_boot, seed, f"loop^{j}")


def equivariance_defect(A, points, n_transient: int = 60, n_atoms: int = 200, seed: int = 0, n_boot: int = 500) -> DefectReport:
    """Defect of m_{f(x)} = A(x)_* m_x for the estimator itself."""
    ss = np.random.SeedSequence(seed)
    s1, s2, s3, s4 = (int(c.generate_state(1)[0]) for c in ss.spawn(4))
    nxt = A.model.flow(points, 1.0)
    B = A.evaluate(points)
    src1 = estimate_fiber_clouds(A, points, n_transient, n_atoms, s1)
    src2 = estimate_fiber_clouds(A, points, n_transient, n_atoms, s2)
    dst1 = estimate_fiber_clouds(A, nxt, n_transient, n_atoms, s3)
    dst2 = estimate_fiber_clouds(A, nxt, n_transient, n_atoms, s4)
    return transport_defect(B, src1, src2, dst1, dst2, n_boot, seed, "equivariance")


def zero_exponent_check(A, samples, n: int, tol: float) -> tuple[bool, ExponentEstimate]:
    est = integrated_exponent(A, samples, n)
    return abs(est.value) < tol, est

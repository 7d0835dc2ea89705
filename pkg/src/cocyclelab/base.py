"""Suspension flows over hyperbolic toral automorphisms.

The phase space is ``{(x, t) : x in T^2, 0 <= t < r(x)}`` with
``(x, r(x)) ~ (F x, 0)``; the flow moves the height at unit speed and the
base dynamics of interest is the time-one map.  Points are batched: a
:class:`SuspensionPoint` holds ``x`` of shape ``(..., 2)`` and ``t`` of
shape ``(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trig import TrigPolynomial

SEAM_TOL = 1e-12


def wrap_torus(x) -> np.ndarray:
    """Reduce to [0, 1) and snap values within SEAM_TOL of the seam to 0."""
    x = np.mod(np.asarray(x, dtype=float), 1.0)
    return np.where((x > 1.0 - SEAM_TOL) | (x < SEAM_TOL), 0.0, x)


def torus_delta(x, y) -> np.ndarray:
    """Shortest representative of y - x in [-1/2, 1/2)^2."""
    return np.mod(np.asarray(y, float) - np.asarray(x, float) + 0.5, 1.0) - 0.5


def torus_dist(x, y) -> np.ndarray:
    return np.linalg.norm(torus_delta(x, y), axis=-1)


@dataclass(frozen=True)
class SuspensionPoint:
    x: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        t = np.asarray(self.t, dtype=float)
        if x.shape[-1] != 2 or x.shape[:-1] != t.shape:
            raise ValueError(f"inconsistent shapes x{x.shape} t{t.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", t)

    @property
    def shape(self):
        return self.t.shape

    def __len__(self):
        return len(self.t)

    def __getitem__(self, idx) -> "SuspensionPoint":
        return SuspensionPoint(self.x[idx], self.t[idx])

    @classmethod
    def stack(cls, points) -> "SuspensionPoint":
        points = list(points)
        return cls(np.stack([p.x for p in points]), np.stack([p.t for p in points]))

    @classmethod
    def concat(cls, points) -> "SuspensionPoint":
        points = list(points)
        return cls(
            np.concatenate([np.atleast_2d(p.x) for p in points]),
            np.concatenate([np.atleast_1d(p.t) for p in points]),
        )

    def allclose(self, other: "SuspensionPoint", atol: float = 1e-10) -> bool:
        return bool(
            np.all(torus_dist(self.x, other.x) <= atol) and np.allclose(self.t, other.t, atol=atol)
        )


@dataclass(frozen=True)
class TorusAutomorphism:
    """Hyperbolic element of GL(2, Z) acting on T^2."""

    matrix: np.ndarray = field(default_factory=lambda: np.array([[2, 1], [1, 1]]))

    def __post_init__(self):
        M = np.array(self.matrix, dtype=np.int64)
        if M.shape != (2, 2):
            raise ValueError("expected a 2x2 integer matrix")
        det = int(round(np.linalg.det(M)))
        if abs(det) != 1:
            raise ValueError(f"|det F| must be 1, got {det}")
        if abs(int(np.trace(M))) <= 2:
            raise ValueError("F is not hyperbolic (|trace| <= 2)")
        M.setflags(write=False)
        object.__setattr__(self, "matrix", M)
        w, V = np.linalg.eig(M.astype(float))
        iu = int(np.argmax(np.abs(w)))
        vu, vs = V[:, iu], V[:, 1 - iu]
        vu = vu / np.linalg.norm(vu) * (1 if vu[0] >= 0 else -1)
        vs = vs / np.linalg.norm(vs) * (1 if vs[0] >= 0 else -1)
        object.__setattr__(self, "mu", float(w[iu]))
        object.__setattr__(self, "mu_s", float(w[1 - iu]))
        object.__setattr__(self, "v_u", vu)
        object.__setattr__(self, "v_s", vs)
        inv = np.round(np.linalg.inv(M)).astype(np.int64)
        inv.setflags(write=False)
        object.__setattr__(self, "inverse_matrix", inv)
        # dyadic grid on which F and F^-1 act exactly in float64, so that
        # backward orbits retrace forward ones bit for bit
        width = int(max(np.abs(M).sum(axis=1).max(), np.abs(inv).sum(axis=1).max()))
        object.__setattr__(self, "grid", 2.0 ** (52 - int(np.ceil(np.log2(width + 1)))))

    @property
    def det(self) -> int:
        return int(round(np.linalg.det(self.matrix)))

    @property
    def contraction(self) -> float:
        """1/|leading eigenvalue|."""
        return 1.0 / abs(self.mu)

    def apply(self, x, n: int = 1) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        M = self.matrix if n >= 0 else self.inverse_matrix
        if n != 0:
            x = np.round(x * self.grid) / self.grid
        for _ in range(abs(n)):
            x = wrap_torus(x @ M.T)
        return x

    def power(self, k: int) -> np.ndarray:
        if k >= 0:
            return np.linalg.matrix_power(self.matrix, k)
        return np.linalg.matrix_power(self.inverse_matrix, -k)

    def inverse(self) -> "TorusAutomorphism":
        return TorusAutomorphism(self.inverse_matrix)


CAT_MAP = TorusAutomorphism(np.array([[2, 1], [1, 1]]))


@dataclass(frozen=True)
class RoofFunction:
    poly: TrigPolynomial = field(default_factory=lambda: TrigPolynomial.constant(1.0))

    def __post_init__(self):
        if self.poly.depends_on_height:
            raise ValueError("roof cannot depend on the height coordinate")
        if self.poly.lower_bound() <= 0:
            raise ValueError("roof must be bounded below by a positive constant")

    @classmethod
    def constant(cls, value: float = 1.0) -> "RoofFunction":
        return cls(TrigPolynomial.constant(value))

    @property
    def kind(self) -> str:
        return "constant" if self.poly.is_constant else "trig"

    @property
    def lower(self) -> float:
        return self.poly.lower_bound()

    @property
    def upper(self) -> float:
        return self.poly.const + sum(abs(t.amp) for t in self.poly.terms)

    def __call__(self, x) -> np.ndarray:
        return self.poly(x)

    def mean(self) -> float:
        return self.poly.const

    def mean_square(self) -> float:
        """Integral of r^2 over T^2 (distinct nonzero frequencies assumed)."""
        return self.poly.const**2 + 0.5 * sum(t.amp**2 for t in self.poly.terms)


@dataclass(frozen=True)
class HyperbolicityConstants:
    lam: float
    gamma: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError("lambda must lie in (0, 1)")
        if not (self.lam < self.gamma <= 1.0):
            raise ValueError("need lambda < gamma <= 1")


@dataclass(frozen=True)
class HomoclinicPoint:
    z: np.ndarray
    a: float  # z = p0 + a v_u
    b: float  # z = target + b v_s
    m: tuple[int, int]
    target_index: int = 0


@dataclass(frozen=True)
class PeriodicLeaf:
    """Compact center leaf through an F-periodic point, in circle coordinates.

    Circle coordinate ``s`` in [0, T) sits at flow time ``s`` from
    ``(base_point, 0)``; the time-one map acts by ``s -> s + 1 mod T``.
    """

    model: "SuspensionModel" = field(repr=False)
    base_point: np.ndarray
    k: int
    orbit: np.ndarray = field(repr=False)
    T: float

    @property
    def rotation_number(self) -> float:
        return 1.0 / self.T

    @property
    def heights(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.model.roof(self.orbit))])

    def rotate(self, s, n: int = 1):
        return np.mod(np.asarray(s, dtype=float) + n, self.T)

    def point_at(self, s) -> SuspensionPoint:
        s = np.mod(np.asarray(s, dtype=float), self.T)
        cum = self.heights
        i = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, self.k - 1)
        return SuspensionPoint(self.orbit[i], s - cum[i])

    def coordinate_of(self, P: SuspensionPoint, tol: float = 1e-8) -> np.ndarray:
        """Circle coordinate of points lying on the leaf."""
        d = torus_dist(P.x[..., None, :], self.orbit)
        i = np.argmin(d, axis=-1)
        if np.any(np.take_along_axis(d, i[..., None], axis=-1) > tol):
            raise ValueError("point is not on this center leaf")
        return np.mod(self.heights[i] + P.t, self.T)


def _group_closure(gens: list[np.ndarray], D: int) -> np.ndarray:
    seen = {(0, 0)}
    frontier = [(0, 0)]
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = ((v[0] + g[0]) % D, (v[1] + g[1]) % D)
                if w not in seen:
                    seen.add(w)
                    nxt.append(w)
        frontier = nxt
    return np.array(sorted(seen), dtype=np.int64)


def periodic_numerators(F: TorusAutomorphism, k: int) -> tuple[np.ndarray, int]:
    """Exact solutions of (F^k - I) x in Z^2 as numerators over D = |det(F^k - I)|."""
    if k < 1:
        raise ValueError("period must be >= 1")
    N = F.power(k) - np.eye(2, dtype=np.int64)
    det = int(N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0])
    if det == 0:
        raise ValueError("F^k - I is singular")
    D = abs(det)
    adj = np.array([[N[1, 1], -N[0, 1]], [-N[1, 0], N[0, 0]]], dtype=np.int64)
    if det < 0:
        adj = -adj
    # N^{-1} Z^2 = adj Z^2 / D, generated mod 1 by the columns of adj
    return _group_closure([adj[:, 0] % D, adj[:, 1] % D], D), D


def periodic_points(F: TorusAutomorphism, k: int) -> np.ndarray:
    num, D = periodic_numerators(F, k)
    return num / D


def minimal_period(F: TorusAutomorphism, x, max_k: int = 1000, tol: float = 1e-9) -> int:
    y = np.asarray(x, dtype=float)
    for k in range(1, max_k + 1):
        y = F.apply(y)
        if torus_dist(y, x) < tol:
            return k
    raise ValueError("no period found")


def homoclinic_points(
    F: TorusAutomorphism, p0, window: int, target=None, target_index: int = 0
) -> list[HomoclinicPoint]:
    """Points of W^u(p0) meeting W^s(target), target on the orbit of p0.

    Solves ``a v_u - b v_s = (target - p0) + m`` over integer ``m`` with
    ``|m|_inf <= window``; when ``target`` is ``p0`` the trivial solution
    ``m = 0`` is dropped.
    """
    p0 = np.asarray(p0, dtype=float)
    tgt = p0 if target is None else np.asarray(target, dtype=float)
    shift = tgt - p0
    same = target is None or torus_dist(tgt, p0) < 1e-12
    basis = np.column_stack([F.v_u, -F.v_s])
    out = []
    rng = range(-window, window + 1)
    for m1 in rng:
        for m2 in rng:
            if same and m1 == 0 and m2 == 0:
                continue
            a, b = np.linalg.solve(basis, shift + np.array([m1, m2]))
            z = wrap_torus(p0 + a * F.v_u)
            out.append(HomoclinicPoint(z, float(a), float(b), (m1, m2), target_index))
    out.sort(key=lambda h: (abs(h.a) + abs(h.b), h.m))
    return out


class SuspensionModel:
    """Suspension of a toral automorphism ``F`` under a roof ``r``."""

    def __init__(self, F: TorusAutomorphism | None = None, roof: RoofFunction | None = None):
        self.F = F if F is not None else CAT_MAP
        self.roof = roof if roof is not None else RoofFunction.constant(1.0)

    def __repr__(self):
        return f"SuspensionModel(F={self.F.matrix.tolist()}, roof='{self.roof.poly}')"

    @property
    def constant_roof(self) -> bool:
        return self.roof.kind == "constant"

    def _require_unit_roof(self, what: str):
        if not self.constant_roof or self.roof.poly.const != 1.0:
            raise ValueError(f"{what} needs the constant unit roof")

    def point(self, x, t) -> SuspensionPoint:
        return self.normalize(SuspensionPoint(wrap_torus(x), np.asarray(t, dtype=float)))

    def normalize(self, P: SuspensionPoint) -> SuspensionPoint:
        return self.flow(P, 0.0)

    # -- flow -----------------------------------------------------------------
    def flow(self, P: SuspensionPoint, s) -> SuspensionPoint:
        x = wrap_torus(P.x).copy()
        t = np.array(P.t + np.asarray(s, dtype=float), dtype=float)
        x = np.broadcast_to(x, t.shape + (2,)).copy()
        while True:
            r = self.roof(x)
            up = t >= r - SEAM_TOL
            if not np.any(up):
                break
            t = np.where(up, np.maximum(t - r, 0.0), t)
            x[up] = self.F.apply(x[up])
        while True:
            down = t < 0
            if not np.any(down):
                break
            x[down] = self.F.apply(x[down], -1)
            t = np.where(down, t + self.roof(x), t)
            # landing within SEAM_TOL of the roof means the seam itself
            snap = down & (t >= self.roof(x) - SEAM_TOL)
            if np.any(snap):
                x[snap] = self.F.apply(x[snap])
                t = np.where(snap, 0.0, t)
        return SuspensionPoint(x, t)

    def time_one(self, P: SuspensionPoint, n: int = 1) -> SuspensionPoint:
        """f^n for the time-one map f; applied one unit at a time."""
        step = 1.0 if n >= 0 else -1.0
        for _ in range(abs(n)):
            P = self.flow(P, step)
        return P

    def orbit(self, P: SuspensionPoint, n: int) -> SuspensionPoint:
        """Stack (f^0 P, ..., f^{n} P) along a new leading axis (n < 0 runs f^-1)."""
        pts = [P]
        step = 1.0 if n >= 0 else -1.0
        for _ in range(abs(n)):
            pts.append(self.flow(pts[-1], step))
        return SuspensionPoint.stack(pts)

    # -- strong leaves (unit roof only) -----------------------------------------
    def stable_leaf_point(self, P: SuspensionPoint, a) -> SuspensionPoint:
        self._require_unit_roof("strong stable leaves")
        return self._shift_along(P, a, self.F.v_s)

    def unstable_leaf_point(self, P: SuspensionPoint, a) -> SuspensionPoint:
        self._require_unit_roof("strong unstable leaves")
        return self._shift_along(P, a, self.F.v_u)

    @staticmethod
    def _shift_along(P: SuspensionPoint, a, v) -> SuspensionPoint:
        x = P.x + np.asarray(a, dtype=float)[..., None] * v
        return SuspensionPoint(wrap_torus(x), np.broadcast_to(P.t, x.shape[:-1]).copy())

    def leaf_orbit(self, P: SuspensionPoint, offset, n: int, side: str = "s"):
        """Orbits of P and of its partner at leaf offset ``offset``.

        ``side="s"`` follows f forward and the partner P + offset v_s;
        ``side="u"`` follows f backward with the partner P + offset v_u.
        The partner orbit is rebuilt from the exact leaf contraction rather
        than iterated, so rounding growth along the expanding direction
        cannot separate the pair.  Returns two arrays of base points with
        shape ``(n + 1, ..., 2)``; heights are unchanged under the unit roof.
        """
        self._require_unit_roof("leaf orbits")
        offset = np.asarray(offset, dtype=float)
        if side == "s":
            M, v, rate = self.F.matrix, self.F.v_s, self.F.mu_s
        elif side == "u":
            M, v, rate = self.F.inverse_matrix, self.F.v_u, 1.0 / self.F.mu
        else:
            raise ValueError("side must be 's' or 'u'")
        x = np.broadcast_to(wrap_torus(P.x), offset.shape + (2,) if offset.ndim else P.x.shape)
        xs = [x]
        for _ in range(n):
            xs.append(wrap_torus(xs[-1] @ M.T))
        xs = np.stack(xs)
        scale = rate ** np.arange(n + 1)
        shape = (n + 1,) + (1,) * (xs.ndim - 2)
        ys = wrap_torus(xs + (scale.reshape(shape) * offset)[..., None] * v)
        return xs, ys

    def leaf_offset(self, P: SuspensionPoint, Q: SuspensionPoint, side: str = "s", tol: float = 1e-9):
        """Signed offset a with Q = P + a v (v = v_s or v_u), for nearby points."""
        v = self.F.v_s if side == "s" else self.F.v_u
        delta = torus_delta(P.x, Q.x)
        a = delta @ v
        resid = np.linalg.norm(delta - a[..., None] * v, axis=-1)
        if np.any(resid > tol) or np.any(np.abs(P.t - Q.t) > tol):
            raise ValueError(f"points are not on a common local {side}-leaf")
        return a

    # -- metric -----------------------------------------------------------------
    def dist(self, P: SuspensionPoint, Q: SuspensionPoint) -> np.ndarray:
        """Flat distance minimised over the seam unwindings of either point."""

        def chart(x1, t1, x2, t2):
            return np.sqrt(torus_dist(x1, x2) ** 2 + (t1 - t2) ** 2)

        best = chart(P.x, P.t, Q.x, Q.t)
        for A, B in ((P, Q), (Q, P)):
            down = self.F.apply(B.x, -1)
            best = np.minimum(best, chart(A.x, A.t, down, B.t + self.roof(down)))
            best = np.minimum(best, chart(A.x, A.t, self.F.apply(B.x), B.t - self.roof(B.x)))
        return best

    # -- constants, sampling ----------------------------------------------------
    def hyperbolicity_constants(self) -> HyperbolicityConstants:
        lam = self.F.contraction ** (1.0 / self.roof.upper)
        gamma = 1.0 if self.constant_roof else self.roof.lower / self.roof.upper
        return HyperbolicityConstants(lam, gamma)

    def volume_sample(self, n: int, seed: int) -> SuspensionPoint:
        """i.i.d. points from normalised volume dx dt under the roof."""
        rng = np.random.default_rng(seed)
        if self.constant_roof:
            x = rng.random((n, 2))
            return SuspensionPoint(wrap_torus(x), rng.random(n) * self.roof.poly.const)
        xs, ts = [], []
        got = 0
        top = self.roof.upper
        while got < n:
            x = rng.random((2 * n, 2))
            t = rng.random(2 * n) * top
            keep = t < self.roof(x)
            xs.append(x[keep])
            ts.append(t[keep])
            got += int(keep.sum())
        return SuspensionPoint(wrap_torus(np.concatenate(xs)[:n]), np.concatenate(ts)[:n])

    def mean_height(self) -> float:
        return 0.5 * self.roof.mean_square() / self.roof.mean()

    # -- periodic data ------------------------------------------------------------
    def periodic_points(self, k: int) -> np.ndarray:
        return periodic_points(self.F, k)

    def center_leaf(self, p, k: int | None = None) -> PeriodicLeaf:
        p = wrap_torus(p)
        if k is None:
            k = minimal_period(self.F, p)
        orbit = [p]
        for _ in range(k - 1):
            orbit.append(self.F.apply(orbit[-1]))
        orbit = np.array(orbit)
        if torus_dist(self.F.apply(orbit[-1]), p) > 1e-10:
            raise ValueError(f"point is not F-periodic with period {k}")
        T = float(np.sum(self.roof(orbit)))
        return PeriodicLeaf(self, p, k, orbit, T)

    def leaf_with_period(self, k: int, index: int = 0) -> PeriodicLeaf:
        """Center leaf of the index-th point of minimal period exactly k."""
        num, D = periodic_numerators(self.F, k)
        found = []
        for v in num:
            w = v.copy()
            per = None
            for j in range(1, k + 1):
                w = (self.F.matrix @ w) % D
                if np.array_equal(w, v):
                    per = j
                    break
            if per == k:
                orbit_keys = set()
                w = v.copy()
                for _ in range(k):
                    orbit_keys.add(tuple(w))
                    w = (self.F.matrix @ w) % D
                if not any(tuple(v) in o for o in found):
                    found.append(orbit_keys)
                    if len(found) > index:
                        return self._exact_leaf(v, D, k)
        raise ValueError(f"fewer than {index + 1} orbits of minimal period {k}")

    def _exact_leaf(self, v, D: int, k: int) -> PeriodicLeaf:
        nums = [np.asarray(v, dtype=np.int64)]
        for _ in range(k - 1):
            nums.append((self.F.matrix @ nums[-1]) % D)
        orbit = np.array(nums, dtype=float) / D
        T = float(np.sum(self.roof(orbit)))
        return PeriodicLeaf(self, orbit[0], k, orbit, T)

    def homoclinic_points(self, p0, window: int, target=None, target_index: int = 0):
        return homoclinic_points(self.F, p0, window, target, target_index)

    # -- config -----------------------------------------------------------------
    def to_config(self) -> dict:
        M = self.F.matrix
        return {
            "matrix": " ".join(str(int(v)) for v in M.ravel()),
            "roof": str(self.roof.poly),
        }

    @classmethod
    def from_config(cls, block: dict) -> "SuspensionModel":
        vals = [int(v) for v in str(block.get("matrix", "2 1 1 1")).split()]
        if len(vals) != 4:
            raise ValueError("model.matrix needs 4 integers")
        F = TorusAutomorphism(np.array(vals).reshape(2, 2))
        roof = RoofFunction(TrigPolynomial.parse(str(block.get("roof", "1.0"))))
        return cls(F, roof)

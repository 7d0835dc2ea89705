"""Symplectic cocycles over the time-one map of a suspension flow.

A :class:`CocycleField` is an ordered product of generator terms,
``A(P) = T_0(P) T_1(P) ... T_k(P)``.  Each term is exactly symplectic, so
the product is too, and every perturbation used downstream (a global
rotation, a bump-localised rotation) is just one more term at the front.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .base import SuspensionModel, SuspensionPoint
from .symplectic import (
    SymplecticMatrix,
    diagonal_block,
    is_symplectic,
    rotation_angle,
    rotation_block,
    sp_inverse,
    symplectic_defect,
    symplectify,
)
from .trig import TrigPolynomial

RENORM_EVERY = 25
NORM_GUARD = 1e150
EVAL_TOL = 1e-9


class BumpPlacementError(ValueError):
    def __init__(self, n: int, distance: float, radius: float):
        super().__init__(
            f"f^{n}(Q) is within {distance:.3g} of Q; need more than 2*radius = {2 * radius:.3g}"
        )
        self.n = n


def bump_profile(u) -> np.ndarray:
    """exp(1 - 1/(1 - u^2)) on [0, 1), zero beyond."""
    u = np.abs(np.asarray(u, dtype=float))
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


@dataclass(frozen=True)
class ConstantTerm:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if not is_symplectic(m, 1e-9):
            raise ValueError("constant term is not symplectic")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def evaluate(self, P: SuspensionPoint, d: int, model) -> np.ndarray:
        return np.broadcast_to(self.matrix, P.shape + self.matrix.shape)

    def lipschitz_bound(self) -> float:
        return 0.0

    def to_text(self) -> str:
        return "constant " + " ".join(repr(float(v)) for v in self.matrix.ravel())


@dataclass(frozen=True)
class RotationTerm:
    theta: TrigPolynomial

    def evaluate(self, P, d, model):
        return rotation_block(self.theta(P.x, P.t), d)

    def lipschitz_bound(self) -> float:
        return self.theta.lipschitz_bound()

    def to_text(self) -> str:
        return f"rotation {self.theta}"


@dataclass(frozen=True)
class DiagonalTerm:
    s: TrigPolynomial

    def evaluate(self, P, d, model):
        return diagonal_block(self.s(P.x, P.t), d)

    def lipschitz_bound(self) -> float:
        return np.exp(self.s.sup_bound()) * self.s.lipschitz_bound()

    def to_text(self) -> str:
        return f"diagonal {self.s}"


@dataclass(frozen=True)
class BumpTerm:
    """rotation_block(angle * phi(dist(P, center) / radius))."""

    center: SuspensionPoint
    radius: float
    angle: float

    def evaluate(self, P, d, model):
        u = model.dist(P, self.center) / self.radius
        return rotation_block(self.angle * bump_profile(u), d)

    def lipschitz_bound(self) -> float:
        # max |phi'| on [0, 1) is about 1.5
        return 1.5 * abs(self.angle) / self.radius

    def to_text(self) -> str:
        x1, x2 = (float(v) for v in self.center.x)
        return f"bump {x1!r} {x2!r} {float(self.center.t)!r} {float(self.radius)!r} {float(self.angle)!r}"


def parse_term(text: str, d: int):
    kind, _, rest = text.strip().partition(" ")
    if kind == "constant":
        vals = [float(v) for v in rest.split()]
        if len(vals) != 4 * d * d:
            raise ValueError(f"constant term needs {4 * d * d} entries")
        return ConstantTerm(np.array(vals).reshape(2 * d, 2 * d))
    if kind == "rotation":
        return RotationTerm(TrigPolynomial.parse(rest))
    if kind == "diagonal":
        return DiagonalTerm(TrigPolynomial.parse(rest))
    if kind == "bump":
        x1, x2, t, radius, angle = (float(v) for v in rest.split())
        return BumpTerm(SuspensionPoint(np.array([x1, x2]), np.array(t)), radius, angle)
    raise ValueError(f"unknown cocycle term {kind!r}")


def accumulate(matrices, shape, dim: int):
    """Running product of a matrix stream with scalar renormalisation."""
    M = np.broadcast_to(np.eye(dim), tuple(shape) + (dim, dim)).copy()
    log_scale = np.zeros(shape)
    for k, G in enumerate(matrices, start=1):
        M = G @ M
        big = np.linalg.norm(M, axis=(-2, -1))
        if k % RENORM_EVERY == 0 or np.any(big > NORM_GUARD):
            M = M / big[..., None, None]
            log_scale = log_scale + np.log(big)
        if not np.all(np.isfinite(M)):
            raise FloatingPointError(f"non-finite cocycle product at step {k}")
    return M, log_scale


@dataclass(frozen=True)
class CocycleIterate:
    """A^n(P) = exp(log_scale) * matrix, batched over base points."""

    matrix: np.ndarray
    log_scale: np.ndarray
    endpoint: SuspensionPoint

    @property
    def value(self) -> np.ndarray:
        out = np.exp(self.log_scale)[..., None, None] * self.matrix
        if not np.all(np.isfinite(out)):
            raise FloatingPointError("A^n overflows double precision; use matrix and log_scale")
        return out

    def log_norm(self) -> np.ndarray:
        return self.log_scale + np.log(np.linalg.norm(self.matrix, ord=2, axis=(-2, -1)))


@dataclass(frozen=True)
class HolderEstimate:
    sup_norm: float
    seminorm: float
    alpha: float
    n_pairs: int

    @property
    def total(self) -> float:
        return self.sup_norm + self.seminorm


@dataclass(frozen=True)
class CocycleField:
    model: SuspensionModel = field(repr=False)
    d: int = 1
    terms: tuple = ()
    alpha: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("Holder exponent must lie in (0, 1]")
        object.__setattr__(self, "terms", tuple(self.terms))

    # -- constructors -------------------------------------------------------------
    @classmethod
    def constant(cls, model, B, alpha: float = 1.0) -> "CocycleField":
        B = np.asarray(B, dtype=float)
        return cls(model, B.shape[0] // 2, (ConstantTerm(B),), alpha)

    @classmethod
    def rotation(cls, model, theta: TrigPolynomial, d: int = 1, alpha: float = 1.0):
        return cls(model, d, (RotationTerm(theta),), alpha)

    @classmethod
    def conjugated_rotation(cls, model, theta: TrigPolynomial, c: float, d: int = 1, alpha: float = 1.0):
        """C R(theta(P)) C^-1 with C = diag(e^c, e^-c): elliptic, zero exponents."""
        C = diagonal_block(c, d)
        return cls(
            model, d, (ConstantTerm(C), RotationTerm(theta), ConstantTerm(sp_inverse(C))), alpha
        )

    def with_terms(self, terms) -> "CocycleField":
        return replace(self, terms=tuple(terms))

    # -- evaluation -----------------------------------------------------------------
    def evaluate(self, P: SuspensionPoint) -> np.ndarray:
        out = np.broadcast_to(np.eye(2 * self.d), P.shape + (2 * self.d, 2 * self.d))
        for term in self.terms:
            out = out @ term.evaluate(P, self.d, self.model)
        out = np.array(out)
        defect = symplectic_defect(out)
        if np.any(defect > 1e-12):
            bad = np.argwhere(np.atleast_1d(defect) > 1e-12)
            flat = out.reshape(-1, 2 * self.d, 2 * self.d)
            for i in bad.ravel():
                flat[i] = symplectify(flat[i]).entries
        return out

    def __call__(self, P: SuspensionPoint) -> np.ndarray:
        return self.evaluate(P)

    def evaluate_symplectic(self, P: SuspensionPoint) -> SymplecticMatrix:
        return SymplecticMatrix.checked(self.evaluate(P), EVAL_TOL)

    def iter_matrices(self, P: SuspensionPoint, n: int):
        """Yield G_1, ..., G_|n| with A^n(P) = G_|n| ... G_1."""
        Q = P
        for _ in range(abs(n)):
            if n > 0:
                yield self.evaluate(Q)
                Q = self.model.flow(Q, 1.0)
            else:
                Q = self.model.flow(Q, -1.0)
                yield sp_inverse(self.evaluate(Q))

    def past_matrices(self, P: SuspensionPoint, n: int) -> list:
        """[A(f^-n P), ..., A(f^-1 P)], oldest first."""
        Q = P
        out = []
        for _ in range(n):
            Q = self.model.flow(Q, -1.0)
            out.append(self.evaluate(Q))
        return out[::-1]

    def iterate(self, P: SuspensionPoint, n: int) -> CocycleIterate:
        """A^n(P) along the time-one orbit, renormalised every 25 steps."""
        M, log_scale = accumulate(self.iter_matrices(P, n), P.shape, 2 * self.d)
        return CocycleIterate(M, log_scale, self.model.time_one(P, n))

    # -- Holder norm ------------------------------------------------------------------
    def holder_norm(self, n_pairs: int, seed: int = 0, max_radius: float = 0.25) -> HolderEstimate:
        """Monte Carlo lower estimate of sup|A| + sup |A(P)-A(Q)| / dist(P,Q)^alpha.

        Pairs are drawn as one block of rows, so a smaller ``n_pairs`` with
        the same seed uses a prefix of the same pairs.
        """
        rng = np.random.default_rng(seed)
        u = rng.random((n_pairs, 7))
        r = self.model.roof
        x = u[:, 0:2]
        t = u[:, 2] * r(x)
        direction = u[:, 3:6] - 0.5
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        radius = np.exp(np.log(1e-4) + u[:, 6] * (np.log(max_radius) - np.log(1e-4)))
        y = x + radius[:, None] * direction[:, :2]
        s = t + radius * direction[:, 2]
        # keep the partner inside the same sheet
        s = np.where((s < 0) | (s >= r(y)), t - radius * direction[:, 2], s)
        s = np.clip(s, 0.0, np.nextafter(r(y), 0))
        P = self.model.point(x, t)
        Q = self.model.point(y, s)
        AP, AQ = self.evaluate(P), self.evaluate(Q)
        sup_norm = float(np.max(np.linalg.norm(np.concatenate([AP, AQ]), ord=2, axis=(-2, -1))))
        dist = self.model.dist(P, Q)
        diff = np.linalg.norm(AP - AQ, ord=2, axis=(-2, -1))
        ok = dist > 0
        semi = float(np.max(diff[ok] / dist[ok] ** self.alpha)) if np.any(ok) else 0.0
        return HolderEstimate(sup_norm, semi, self.alpha, n_pairs)

    def sup_norm_bound(self) -> float:
        """Analytic upper bound on sup |A(P)| from the terms."""
        total = 1.0
        for term in self.terms:
            if isinstance(term, ConstantTerm):
                total *= np.linalg.norm(term.matrix, 2)
            elif isinstance(term, DiagonalTerm):
                total *= np.exp(term.s.sup_bound())
        return float(total)

    # -- perturbations -----------------------------------------------------------------
    def perturb_global_rotation(self, theta: float) -> "CocycleField":
        if theta == 0:
            return self
        return self.with_terms((ConstantTerm(rotation_block(theta, self.d)),) + self.terms)

    def perturb_bump(
        self, Q: SuspensionPoint, radius: float, sigma, orbit_window: int = 20
    ) -> "CocycleField":
        """sigma^{phi(dist(P, Q)/radius)} A(P), with sigma in the rotation family."""
        sigma = np.asarray(sigma, dtype=float)
        angle = rotation_angle(sigma)
        if np.abs(rotation_block(angle, self.d) - sigma).max() > 1e-12:
            raise ValueError("bump direction must be a rotation_block element")
        if radius <= 0:
            raise ValueError("bump radius must be positive")
        for n in list(range(1, orbit_window + 1)) + list(range(-1, -orbit_window - 1, -1)):
            dist = float(self.model.dist(self.model.time_one(Q, n), Q))
            if dist <= 2 * radius:
                raise BumpPlacementError(n, dist, radius)
        if angle == 0:
            return self
        return self.with_terms((BumpTerm(Q, float(radius), angle),) + self.terms)

    # -- config -------------------------------------------------------------------------
    def to_config(self) -> dict:
        block = {"d": str(self.d), "alpha": repr(float(self.alpha))}
        for i, term in enumerate(self.terms):
            block[f"term{i}"] = term.to_text()
        return block

    @classmethod
    def from_config(cls, model: SuspensionModel, block: dict) -> "CocycleField":
        d = int(block.get("d", 1))
        alpha = float(block.get("alpha", 1.0))
        keys = sorted((k for k in block if k.startswith("term")), key=lambda k: int(k[4:]))
        return cls(model, d, tuple(parse_term(block[k], d) for k in keys), alpha)


@dataclass(frozen=True)
class CircleCocycle:
    """Restriction of a cocycle to a compact center leaf.

    The base map is the rotation ``s -> s + 1 mod T`` in circle coordinates.
    """

    cocycle: CocycleField = field(repr=False)
    leaf: object = field(repr=False)

    @property
    def T(self) -> float:
        return self.leaf.T

    def rotate(self, s, n: int = 1):
        return self.leaf.rotate(s, n)

    def matrices(self, s) -> np.ndarray:
        return self.cocycle.evaluate(self.leaf.point_at(s))

    def _integer_period(self) -> int | None:
        T = self.leaf.T
        return int(round(T)) if abs(T - round(T)) < 1e-12 else None

    def iter_matrices(self, s, n: int):
        """Step matrices along the rotation orbit; cached over one period when T is an integer."""
        s = np.asarray(s, dtype=float)
        T = self._integer_period()
        if T is not None and abs(n) > T:
            step = 1 if n > 0 else -1
            starts = [self.rotate(s, step * m + (0 if n > 0 else -1)) for m in range(T)]
            cache = [self.matrices(st) for st in starts]
            if n < 0:
                cache = [sp_inverse(c) for c in cache]
            for k in range(abs(n)):
                yield cache[k % T]
            return
        for k in range(abs(n)):
            if n > 0:
                yield self.matrices(self.rotate(s, k))
            else:
                yield sp_inverse(self.matrices(self.rotate(s, -k - 1)))

    def past_matrices(self, s, n: int) -> list:
        return [self.matrices(self.rotate(s, -k)) for k in range(n, 0, -1)]

    def iterate(self, s, n: int) -> CocycleIterate:
        s = np.asarray(s, dtype=float)
        M, log_scale = accumulate(self.iter_matrices(s, n), s.shape, 2 * self.cocycle.d)
        return CocycleIterate(M, log_scale, self.rotate(s, n))

    def period_product(self, s) -> np.ndarray:
        """A^T at circle coordinate s; requires an integer flow period."""
        T = self._integer_period()
        if T is None:
            raise ValueError("period product needs an integer flow period")
        s = np.asarray(s, dtype=float)
        M = np.broadcast_to(np.eye(2 * self.cocycle.d), s.shape + (2 * self.cocycle.d,) * 2).copy()
        for k in range(T):
            M = self.matrices(self.rotate(s, k)) @ M
        return M


def restrict_to_center_leaf(A: CocycleField, leaf) -> CircleCocycle:
    return CircleCocycle(A, leaf)

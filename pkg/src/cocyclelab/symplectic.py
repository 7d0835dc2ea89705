"""Symplectic linear algebra on R^{2d}.

Matrices are plain ``numpy`` arrays; :class:`SymplecticMatrix` wraps one
together with its measured defect ``max |B^T J B - J|``.  Everything here
broadcasts over leading batch axes where that is cheap to support.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

SYM_TOL = 1e-10
CANON_TOL = 1e-12


class NotSymplecticError(ValueError):
    pass


class TransversalityError(RuntimeError):
    pass


def _half_dim(n: int) -> int:
    if n % 2:
        raise ValueError(f"symplectic matrices have even size, got {n}")
    return n // 2


@dataclass(frozen=True)
class StandardForm:
    d: int
    matrix: np.ndarray = field(repr=False)


def standard_form(d: int) -> StandardForm:
    """The form J = [[0, I_d], [-I_d, 0]]."""
    if d < 1:
        raise ValueError("half-dimension d must be >= 1")
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return StandardForm(d, J)


def J_matrix(d: int) -> np.ndarray:
    return standard_form(d).matrix


def symplectic_defect(B) -> float | np.ndarray:
    """Entrywise max of |B^T J B - J|, batched over leading axes."""
    B = np.asarray(B, dtype=float)
    J = J_matrix(_half_dim(B.shape[-1]))
    E = np.swapaxes(B, -1, -2) @ J @ B - J
    return np.abs(E).max(axis=(-2, -1))


def is_symplectic(B, tol: float = SYM_TOL) -> bool:
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("expected a square matrix")
    return bool(symplectic_defect(B) <= tol)


def sp_inverse(B: np.ndarray) -> np.ndarray:
    """Inverse of a symplectic matrix, -J B^T J (batched)."""
    J = J_matrix(_half_dim(B.shape[-1]))
    return -J @ np.swapaxes(B, -1, -2) @ J


@dataclass(frozen=True)
class SymplecticMatrix:
    entries: np.ndarray = field(repr=False)
    sym_defect: float = 0.0

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def d(self) -> int:
        return self.entries.shape[0] // 2

    @classmethod
    def checked(cls, B, tol: float = SYM_TOL) -> "SymplecticMatrix":
        B = np.asarray(B, dtype=float)
        defect = float(symplectic_defect(B))
        if defect > tol:
            raise NotSymplecticError(f"defect {defect:.3e} exceeds {tol:.1e}")
        det = np.linalg.det(B)
        if abs(det - 1.0) > 1e-8 * max(1.0, np.abs(B).max() ** B.shape[0]):
            raise NotSymplecticError(f"determinant {det} != 1")
        return cls(B, defect)

    def __matmul__(self, other):
        if isinstance(other, SymplecticMatrix):
            return symplectify(self.entries @ other.entries)
        return self.entries @ other

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def inverse(self) -> "SymplecticMatrix":
        return SymplecticMatrix(sp_inverse(self.entries), self.sym_defect)


def symplectify(B, max_steps: int = 4) -> SymplecticMatrix:
    """Pull a near-symplectic matrix back onto Sp(2d, R).

    The determinant is first normalised to 1, then Newton steps
    ``B <- B (I + J E / 2)`` with ``E = B^T J B - J`` remove the remaining
    defect; convergence is quadratic, so symplectic input comes back
    unchanged to rounding.
    """
    B = np.array(B, dtype=float)
    d = _half_dim(B.shape[-1])
    J = J_matrix(d)
    det = np.linalg.det(B)
    if not np.isfinite(det) or abs(det) < 1e-300:
        raise NotSymplecticError("singular matrix cannot be symplectified")
    E = B.T @ J @ B - J
    if np.abs(E).max() >= 0.1 * max(1.0, np.abs(B).max() ** 2):
        raise NotSymplecticError("matrix is too far from Sp(2d)")
    if det > 0:
        B = B / det ** (1.0 / (2 * d))
    I = np.eye(2 * d)
    for _ in range(max_steps):
        E = B.T @ J @ B - J
        if np.abs(E).max() <= 1e-15 * max(1.0, np.abs(B).max() ** 2):
            break
        B = B @ (I + 0.5 * J @ E)
    return SymplecticMatrix(B, float(symplectic_defect(B)))


def rotation_block(theta, d: int = 1) -> np.ndarray:
    """[[cos th I, sin th I], [-sin th I, cos th I]]; batched over ``theta``."""
    theta = np.asarray(theta, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.zeros(theta.shape + (2 * d, 2 * d))
    idx = np.arange(d)
    out[..., idx, idx] = c[..., None]
    out[..., idx + d, idx + d] = c[..., None]
    out[..., idx, idx + d] = s[..., None]
    out[..., idx + d, idx] = -s[..., None]
    return out


def diagonal_block(s, d: int = 1) -> np.ndarray:
    """diag(e^s I_d, e^-s I_d); batched over ``s``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (2 * d, 2 * d))
    idx = np.arange(d)
    out[..., idx, idx] = np.exp(s)[..., None]
    out[..., idx + d, idx + d] = np.exp(-s)[..., None]
    return out


def random_symplectic_near_identity(eps: float, seed: int, d: int = 1) -> SymplecticMatrix:
    """exp(J S) for a random symmetric S, scaled so that max|sigma - I| <= eps."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    S = rng.standard_normal((2 * d, 2 * d))
    S = 0.5 * (S + S.T)
    X = J_matrix(d) @ S
    # e^{|X|} - 1 <= eps bounds every entry of expm(X) - I
    X *= 0.9 * np.log1p(eps) / np.abs(X).sum(axis=1).max()
    return symplectify(expm(X))


@dataclass(frozen=True)
class Subspace:
    frame: np.ndarray = field(repr=False)

    @classmethod
    def span(cls, vectors, tol: float = 1e-12) -> "Subspace":
        """Orthonormal frame for the column span of ``vectors``."""
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.ndim == 2 and V.shape[0] == 1:
            V = V.T
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        k = int(np.sum(s > tol * s.max()))
        if k == 0:
            raise ValueError("zero subspace")
        return cls(U[:, :k])

    @property
    def ambient_dim(self) -> int:
        return self.frame.shape[0]

    @property
    def dim(self) -> int:
        return self.frame.shape[1]

    def image(self, B) -> "Subspace":
        return Subspace.span(np.asarray(B) @ self.frame)


def subspace_intersection_dim(V: Subspace, W: Subspace, tol: float = 1e-10) -> int:
    if V.ambient_dim != W.ambient_dim:
        raise ValueError("subspaces live in different ambient spaces")
    s = np.linalg.svd(np.hstack([V.frame, W.frame]), compute_uv=False)
    rank = int(np.sum(s > tol * s.max()))
    return V.dim + W.dim - rank


def principal_angle(V: Subspace, W: Subspace) -> float:
    """Largest principal angle between equal-dimensional subspaces."""
    s = np.linalg.svd(V.frame.T @ W.frame, compute_uv=False)
    return float(np.arccos(np.clip(s.min(), -1.0, 1.0)))


def _generic_dim(V: Subspace, W: Subspace) -> int:
    return max(0, V.dim + W.dim - V.ambient_dim)


def make_transverse(
    pairs,
    eps: float = 1e-2,
    seed: int = 0,
    max_tries: int = 20,
    tol: float = 1e-8,
    family: str = "general",
    allow_identity: bool = True,
) -> SymplecticMatrix:
    """Find sigma near the identity with sigma(V) and W in general position.

    ``family="rotation"`` draws sigma = rotation_block(angle) with
    |angle| <= eps instead of a general element; bump perturbations need
    that family.  With ``allow_identity`` the identity is tried first.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("no subspace pairs given")
    n = pairs[0][0].ambient_dim
    d = n // 2

    def generic(sigma):
        return all(
            subspace_intersection_dim(V.image(sigma), W, tol) == _generic_dim(V, W)
            for V, W in pairs
        )

    if allow_identity and generic(np.eye(n)):
        return SymplecticMatrix(np.eye(n), 0.0)
    ss = np.random.SeedSequence(seed)
    for i, child in enumerate(ss.spawn(max_tries)):
        if family == "rotation":
            rng = np.random.default_rng(child)
            angle = rng.uniform(0.25, 1.0) * eps * rng.choice([-1.0, 1.0])
            sigma = SymplecticMatrix(rotation_block(angle, d), 0.0)
        elif family == "general":
            sigma = random_symplectic_near_identity(eps, int(child.generate_state(1)[0]), d)
        else:
            raise ValueError(f"unknown family {family!r}")
        if generic(sigma.entries):
            return sigma
    raise TransversalityError(f"no transverse sigma found in {max_tries} tries at eps={eps}")


def rotation_angle(sigma) -> float:
    """Angle of a matrix in the rotation family (inverse of rotation_block)."""
    B = np.asarray(sigma)
    d = B.shape[0] // 2
    return float(np.arctan2(B[0, d], B[0, 0]))


def canonical_sign(v: np.ndarray, tol: float = CANON_TOL) -> np.ndarray:
    """Flip rows so the first coordinate with |v_i| > tol is positive."""
    v = np.asarray(v, dtype=float)
    big = np.abs(v) > tol
    first = np.argmax(big, axis=-1)
    lead = np.take_along_axis(v, first[..., None], axis=-1)
    return np.where(lead < 0, -v, v)


def normalize_projective(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    return canonical_sign(v)


@dataclass(frozen=True)
class ProjectivePoint:
    vector: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vector", normalize_projective(self.vector))

    def close_to(self, other: "ProjectivePoint", tol: float = 1e-10) -> bool:
        return projective_angle(self.vector, other.vector) <= tol


def projective_angle(u, v) -> float | np.ndarray:
    """Angle between lines [u] and [v], in [0, pi/2]."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    u = u / np.linalg.norm(u, axis=-1, keepdims=True)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    s = np.where(np.sum(u * v, axis=-1) < 0, -1.0, 1.0)[..., None]
    # half-angle form stays accurate for nearly equal lines
    return 2 * np.arctan2(np.linalg.norm(u - s * v, axis=-1), np.linalg.norm(u + s * v, axis=-1))


def projective_act(B, p: ProjectivePoint) -> ProjectivePoint:
    return ProjectivePoint(np.asarray(B, dtype=float) @ p.vector)

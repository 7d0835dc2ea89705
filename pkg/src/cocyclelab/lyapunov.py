"""Lyapunov exponents of linear cocycles.

Estimators consume a cocycle through its ``iter_matrices(P, n)`` stream, so
the same code serves a :class:`~cocyclelab.cocycle.CocycleField` over the
time-one map and a :class:`~cocyclelab.cocycle.CircleCocycle` on a compact
center leaf.  Top exponents use a scalar-renormalised running product;
full spectra use QR re-orthonormalisation.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .cocycle import NORM_GUARD, RENORM_EVERY, CircleCocycle, CocycleField
from .symplectic import Subspace

N_CHECKPOINTS = 4


class NoSpectralGap(RuntimeError):
    """No resolvable gap between consecutive exponents."""


@dataclass(frozen=True)
class ExponentEstimate:
    value: float
    std_error: float
    n: int
    n_samples: int = 1
    convergence: tuple = ()

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise FloatingPointError("exponent estimate is not finite")
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")

    def positive(self, k: float = 3.0) -> bool:
        return self.value > k * self.std_error

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n": self.n,
            "n_samples": self.n_samples,
        }


@dataclass(frozen=True)
class LyapunovSpectrum:
    exponents: np.ndarray
    pairing_residual: float
    n: int
    convergence: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)
    std_error: np.ndarray | None = None

    def __post_init__(self):
        e = np.asarray(self.exponents, dtype=float)
        if np.any(np.diff(e) > 0):
            raise ValueError("exponents must be sorted in descending order")
        object.__setattr__(self, "exponents", e)
        if self.std_error is None:
            object.__setattr__(self, "std_error", np.zeros_like(e))

    @property
    def top(self) -> float:
        return float(self.exponents[0])

    @property
    def exponent_sum(self) -> float:
        return float(self.exponents.sum())

    def to_dict(self) -> dict:
        return {
            "exponents": [float(v) for v in self.exponents],
            "pairing_residual": float(self.pairing_residual),
            "n": int(self.n),
            "std_error": [float(v) for v in self.std_error],
        }

    def convergence_csv(self) -> str:
        """Checkpoint series as CSV text: step, lambda_1, ..., lambda_2d."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step"] + [f"lambda_{i + 1}" for i in range(len(self.exponents))])
        for step, row in zip(checkpoint_steps(self.n), self.convergence):
            w.writerow([step] + [repr(float(v)) for v in row])
        return buf.getvalue()


def pairing_residual(exponents) -> float:
    e = np.sort(np.asarray(exponents, dtype=float))[::-1]
    return float(np.max(np.abs(e + e[::-1])))


def checkpoint_steps(n: int) -> list[int]:
    return sorted({max(1, (n * k) // N_CHECKPOINTS) for k in range(1, N_CHECKPOINTS + 1)})


def _dimension(A) -> int:
    if isinstance(A, CircleCocycle):
        return 2 * A.cocycle.d
    return 2 * A.d


def _batch_shape(A, P) -> tuple:
    if isinstance(A, CircleCocycle):
        return np.shape(P)
    return P.shape


def _checkpoint_se(values: np.ndarray) -> np.ndarray:
    if values.shape[0] < 2:
        return np.zeros(values.shape[1:])
    return np.std(values, axis=0, ddof=1)


def top_exponent_batch(A, P, n: int):
    """Top exponents at each point of a batch.

    Returns ``(values, std_errors, checkpoints)`` where ``checkpoints`` has
    one row per checkpoint step.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = _dimension(A)
    shape = _batch_shape(A, P)
    steps = checkpoint_steps(n)
    M = np.broadcast_to(np.eye(dim), tuple(shape) + (dim, dim)).copy()
    log_scale = np.zeros(shape)
    rows = []
    for k, G in enumerate(A.iter_matrices(P, n), start=1):
        M = G @ M
        if k % RENORM_EVERY == 0 or k in steps:
            big = np.linalg.norm(M, ord=2, axis=(-2, -1))
            if not np.all(np.isfinite(big)):
                raise FloatingPointError(f"non-finite cocycle product at step {k}")
            M = M / big[..., None, None]
            log_scale = log_scale + np.log(big)
            if k in steps:
                rows.append(log_scale / k)
        elif np.any(np.abs(M) > NORM_GUARD):
            big = np.linalg.norm(M, axis=(-2, -1))
            M = M / big[..., None, None]
            log_scale = log_scale + np.log(big)
    rows = np.array(rows)
    return rows[-1], _checkpoint_se(rows), rows


def top_exponent(A, P, n: int) -> ExponentEstimate:
    """(1/n) log |A^n(P)| at a single point, with checkpoint-dispersion SE."""
    values, se, rows = top_exponent_batch(A, P, n)
    if np.ndim(values) != 0:
        raise ValueError("top_exponent takes a single point; use integrated_exponent")
    return ExponentEstimate(float(values), float(se), n, 1, tuple(float(v) for v in rows))


def spectrum_batch(A, P, n: int):
    """QR running products; returns exponents (..., 2d) and checkpoint rows."""
    if n < 1:
        raise ValueError("n must be >= 1")
    dim = _dimension(A)
    shape = tuple(_batch_shape(A, P))
    steps = set(checkpoint_steps(n))
    Q = np.broadcast_to(np.eye(dim), shape + (dim, dim)).copy()
    acc = np.zeros(shape + (dim,))
    rows = []
    for k, G in enumerate(A.iter_matrices(P, n), start=1):
        Q, R = np.linalg.qr(G @ Q)
        diag = np.diagonal(R, axis1=-2, axis2=-1)
        if not np.all(np.isfinite(diag)) or np.any(diag == 0):
            raise FloatingPointError(f"degenerate cocycle product at step {k}")
        acc = acc + np.log(np.abs(diag))
        if k in steps:
            rows.append(np.sort(acc / k, axis=-1)[..., ::-1])
    rows = np.array(rows)
    return rows[-1], rows


def full_spectrum(A, P, n: int) -> LyapunovSpectrum:
    exps, rows = spectrum_batch(A, P, n)
    if exps.ndim != 1:
        raise ValueError("full_spectrum takes a single point")
    return LyapunovSpectrum(exps, pairing_residual(exps), n, rows, _checkpoint_se(rows))


def integrated_exponent(A, samples, n: int) -> ExponentEstimate:
    """Mean top exponent over sample points; SE combines sampling and finite-n spread."""
    values, se, _ = top_exponent_batch(A, samples, n)
    values = np.atleast_1d(values)
    se = np.atleast_1d(se)
    N = values.size
    sampling = float(np.std(values, ddof=1) / np.sqrt(N)) if N > 1 else 0.0
    finite_n = float(np.mean(se))
    return ExponentEstimate(
        float(np.mean(values)), float(np.hypot(sampling, finite_n)), n, N
    )


def periodic_exponents(A: CocycleField, leaf, s=0.0) -> LyapunovSpectrum:
    """Exact exponents at a leaf point from the eigenvalues of A^T."""
    circle = CircleCocycle(A, leaf)
    B = circle.period_product(s)
    mods = np.sort(np.abs(np.linalg.eigvals(B)))[::-1]
    exps = np.log(mods) / leaf.T
    return LyapunovSpectrum(exps, pairing_residual(exps), int(round(leaf.T)))


def circle_cocycle_exponent(circle: CircleCocycle, grid_size: int, n: int) -> ExponentEstimate:
    """Lebesgue average over the leaf of top exponents from a uniform grid."""
    s = np.arange(grid_size) * (circle.T / grid_size)
    values, se, _ = top_exponent_batch(circle, s, n)
    quad = float(np.std(values, ddof=1) / np.sqrt(grid_size)) if grid_size > 1 else 0.0
    return ExponentEstimate(
        float(np.mean(values)), float(np.hypot(quad, np.mean(se))), n, grid_size
    )


@dataclass(frozen=True)
class ThetaScan:
    thetas: np.ndarray
    estimates: tuple

    @property
    def values(self) -> np.ndarray:
        return np.array([e.value for e in self.estimates])

    @property
    def std_errors(self) -> np.ndarray:
        return np.array([e.std_error for e in self.estimates])

    @property
    def argmax(self) -> float:
        """theta with the largest value among positive entries (largest overall if none)."""
        vals = self.values
        pos = vals > 3 * self.std_errors
        idx = np.flatnonzero(pos) if np.any(pos) else np.arange(len(vals))
        return float(self.thetas[idx[np.argmax(vals[idx])]])

    @property
    def any_positive(self) -> bool:
        return bool(np.any(self.values > 3 * self.std_errors))

    def rows(self) -> list[tuple[float, ExponentEstimate]]:
        return list(zip((float(t) for t in self.thetas), self.estimates))


def theta_grid(T: float, half_width: float = 0.5) -> np.ndarray:
    """Symmetric grid with spacing at most 1/(4T), containing 0."""
    h = 1.0 / (4.0 * T)
    k = int(np.floor(half_width / h + 1e-12))
    return np.arange(-k, k + 1) * h


def theta_scan(A: CocycleField, leaf, thetas, grid_size: int = 32, n: int = 2000) -> ThetaScan:
    ests = []
    for theta in thetas:
        circle = CircleCocycle(A.perturb_global_rotation(float(theta)), leaf)
        ests.append(circle_cocycle_exponent(circle, grid_size, n))
    return ThetaScan(np.asarray(thetas, dtype=float), tuple(ests))


def finite_time_splitting(A, P, n: int, gap_index: int = 1):
    """Finite-time unstable/stable subspaces at P.

    V^s is spanned by the right singular vectors of A^n(P) for the bottom
    ``2d - i`` singular values (directions contracted in the future); V^u by
    the left singular vectors of A^n(f^-n P) for the top ``i`` singular
    values (directions favoured by the past).  Raises NoSpectralGap unless
    the observed gap exceeds 5 standard errors, where the error also
    includes the change of the estimate between n/2 and n.
    """
    dim = _dimension(A)
    if not 1 <= gap_index < dim:
        raise ValueError("gap index must lie in [1, 2d)")
    exps, rows = spectrum_batch(A, P, n)
    if exps.ndim != 1:
        raise ValueError("finite_time_splitting takes a single point")
    # bounded products drift like 1/n and fake a gap; the n/2 -> n change exposes that
    half = rows[len(rows) // 2 - 1] if len(rows) >= 2 else rows[-1]
    se = np.maximum(_checkpoint_se(rows), np.abs(rows[-1] - half))
    i = gap_index
    gap = exps[i - 1] - exps[i]
    if not gap > 5 * max(se[i - 1], se[i]) or gap < 1e-9:
        raise NoSpectralGap(f"gap {gap:.3e} at index {i} not resolved (SE {max(se[i - 1], se[i]):.2e})")
    future = A.iterate(P, n).matrix
    _, _, Vt = np.linalg.svd(future)
    V_s = Subspace(Vt[i:].T)
    past_start = A.iterate(P, -n).endpoint
    past = A.iterate(past_start, n).matrix
    U, _, _ = np.linalg.svd(past)
    V_u = Subspace(U[:, :i])
    return V_u, V_s


def spectrum_rows_csv(records) -> str:
    """CSV of (label, exponents..., pairing_residual, n)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for label, spec in records:
        w.writerow([label] + [repr(float(v)) for v in spec.exponents] + [repr(spec.pairing_residual), spec.n])
    return buf.getvalue()

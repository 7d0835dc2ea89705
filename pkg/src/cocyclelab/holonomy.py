"""Fiber bunching and strong stable/unstable linear holonomies.

Holonomies are truncated limits ``H_n = A^n(q)^{-1} A^n(p)`` computed
incrementally: with ``G_n = A^n(q)^{-1}`` and ``K_n = A^n(p)``,

    H_{n+1} = H_n + G_n B_q^{-1} (B_p - B_q) K_n

where ``B_p, B_q`` are the next step matrices.  Partner orbits are rebuilt
from the exact leaf contraction (see ``SuspensionModel.leaf_orbit``) so the
two orbits stay on a common leaf at every step.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import HyperbolicityConstants, HomoclinicPoint, PeriodicLeaf, SuspensionPoint, torus_delta
from .cocycle import CocycleField
from .symplectic import SymplecticMatrix, sp_inverse, symplectic_defect

HOLONOMY_TOL = 1e-10
HOLONOMY_NMAX = 200
LOCAL_RADIUS = 0.25
# bunched examples peak below ~40x their first increment; unbunched ones grow by 1e5 and more
GROWTH_LIMIT = 1e4


class HolonomyDivergenceError(RuntimeError):
    """Truncation increments failed to decay (bunching violated in practice)."""


@dataclass(frozen=True)
class FiberBunchingCertificate:
    alpha: float
    lam: float
    one_step_ratio: float
    fitted_theta: float
    C_estimate: float
    verdict: bool
    n_samples: int
    n_step_series: tuple = ()

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "lambda": self.lam,
            "one_step_ratio": self.one_step_ratio,
            "fitted_theta": self.fitted_theta,
            "C_estimate": self.C_estimate,
            "verdict": "pass" if self.verdict else "fail",
            "n_samples": self.n_samples,
        }


def bunching_certificate(
    A: CocycleField,
    alpha: float,
    constants: HyperbolicityConstants,
    n_samples: int = 200,
    n_max: int = 12,
    seed: int = 0,
) -> FiberBunchingCertificate:
    """Certify sup |A^n(p)| |A^n(p)^-1| lambda^{n alpha} <= C theta^n with theta < 1.

    The one-step bound (C = 1) is tried first.  Otherwise the n-step
    quantity is fitted on a log scale; the fit passes only when the slope is
    negative and the sequence actually decays from n = 1 to n_max.
    """
    lam = constants.lam
    P = A.model.volume_sample(n_samples, seed)
    M = A.evaluate(P)
    # |B^-1| = |B| for symplectic B
    norms = np.linalg.norm(M, ord=2, axis=(-2, -1))
    ratio = float(np.max(norms * norms) * lam**alpha)
    if ratio < 1:
        return FiberBunchingCertificate(alpha, lam, ratio, ratio, 1.0, True, n_samples, (ratio,))
    series = []
    prod = np.broadcast_to(np.eye(2 * A.d), M.shape).copy()
    Q = P
    for k in range(1, n_max + 1):
        prod = A.evaluate(Q) @ prod
        Q = A.model.flow(Q, 1.0)
        nrm = np.linalg.norm(prod, ord=2, axis=(-2, -1))
        series.append(float(np.max(2 * np.log(nrm)) + k * alpha * np.log(lam)))
    ks = np.arange(1, n_max + 1)
    slope, intercept = np.polyfit(ks, series, 1)
    theta = float(np.exp(slope))
    C = float(np.exp(np.max(np.array(series) - ks * slope)))
    ok = theta < 1 and series[-1] < series[0]
    return FiberBunchingCertificate(
        alpha, lam, ratio, theta, C, bool(ok), n_samples, tuple(float(np.exp(s)) for s in series)
    )


@dataclass(frozen=True)
class LinearHolonomy:
    """Batched holonomy matrices between endpoint pairs."""

    matrix: np.ndarray = field(repr=False)
    p: SuspensionPoint = field(repr=False)
    q: SuspensionPoint = field(repr=False)
    side: str
    truncation_n: np.ndarray
    tail_bound: np.ndarray
    increments: np.ndarray = field(repr=False)

    @property
    def symplectic(self) -> SymplecticMatrix:
        if self.matrix.ndim != 2:
            raise ValueError("symplectic view needs a single holonomy")
        return SymplecticMatrix(self.matrix, float(symplectic_defect(self.matrix)))

    def fitted_rates(self, start: int = 5) -> np.ndarray:
        """Per-pair geometric decay rate of the increments from ``start`` on."""
        inc = self.increments.reshape(self.increments.shape[0], -1)
        trunc = np.atleast_1d(self.truncation_n)
        return np.array([geometric_rate(inc[: max(int(n), 0), j], start) for j, n in enumerate(trunc)])

    def pooled_rate(self, start: int = 5, floor: float = 1e-14) -> float:
        """Common decay rate of all pairs' increments (log-linear fit with per-pair offsets)."""
        inc = self.increments.reshape(self.increments.shape[0], -1)
        trunc = np.atleast_1d(self.truncation_n)
        xs, ys = [], []
        for j, n in enumerate(trunc):
            seq = inc[start : int(n), j]
            k = np.arange(start, start + len(seq))
            keep = seq > floor
            if keep.sum() >= 2:
                xs.append(k[keep] - k[keep].mean())
                ys.append(np.log(seq[keep]) - np.log(seq[keep]).mean())
        if not xs:
            return 0.0
        x, y = np.concatenate(xs), np.concatenate(ys)
        return float(np.exp(np.dot(x, y) / np.dot(x, x)))


def _holonomy_core(A: CocycleField, base_x, heights, offsets, side: str, tol: float, n_max: int):
    """Truncated holonomy from base orbit points to partners at leaf offsets.

    ``base_x`` has shape (n_max + 2, N, 2): the base orbit (forward for
    stable, backward for unstable, index 0 the start).  Returns matrices
    mapping the fiber at the base point to the fiber at the partner.
    """
    model = A.model
    F = model.F
    if side == "s":
        v, rate = F.v_s, F.mu_s
    else:
        v, rate = F.v_u, 1.0 / F.mu
    steps, N = base_x.shape[0] - 1, base_x.shape[1]
    scale = rate ** np.arange(steps + 1)
    partner_x = base_x + (scale[:, None] * offsets[None, :])[..., None] * v
    t = np.broadcast_to(heights, (steps + 1, N))
    Mp = A.evaluate(model.point(base_x.reshape(-1, 2), t.reshape(-1))).reshape(steps + 1, N, 2 * A.d, 2 * A.d)
    Mq = A.evaluate(model.point(partner_x.reshape(-1, 2), t.reshape(-1))).reshape(steps + 1, N, 2 * A.d, 2 * A.d)
    if side == "s":
        Bp, Bq = Mp[:-1], Mq[:-1]
    else:
        # backward step from index k to k+1 uses A(x_{k+1})^{-1}
        Bp, Bq = sp_inverse(Mp[1:]), sp_inverse(Mq[1:])
    dim = 2 * A.d
    H = np.broadcast_to(np.eye(dim), (N, dim, dim)).copy()
    G = H.copy()
    K = H.copy()
    done = np.zeros(N, dtype=bool)
    trunc = np.full(N, n_max)
    incs = np.zeros((n_max, N))
    for n in range(n_max):
        Bq_inv = sp_inverse(Bq[n])
        delta = G @ Bq_inv @ (Bp[n] - Bq[n]) @ K
        size = np.linalg.norm(delta, ord=2, axis=(-2, -1))
        incs[n] = np.where(done, 0.0, size)
        newly = ~done & (size < tol)
        trunc[newly] = n
        done |= newly
        live = ~done
        if not np.any(live):
            break
        H[live] += delta[live]
        G[live] = (G @ Bq_inv)[live]
        K[live] = (Bp[n] @ K)[live]
    return H, trunc, incs, done


def geometric_rate(seq, start: int = 0, floor: float = 1e-14) -> float:
    """exp(slope) of a log-linear fit to increments above the rounding floor."""
    seq = np.asarray(seq, dtype=float)
    n = np.arange(len(seq))
    keep = (n >= start) & (seq > floor)
    if keep.sum() < 3:
        return 0.0
    slope = np.polyfit(n[keep], np.log(seq[keep]), 1)[0]
    return float(np.exp(slope))


def _tail_bound(incs: np.ndarray, trunc: np.ndarray, done: np.ndarray, tol: float, floor_rate: float):
    """Geometric tail C rate^n / (1 - rate) from the fitted decay rate."""
    N = incs.shape[1]
    out = np.zeros(N)
    for j in range(N):
        seq = incs[: int(trunc[j]), j] if done[j] else incs[:, j]
        seq = seq[seq > 0]
        if len(seq) == 0:
            continue
        rate = float(np.clip(max(geometric_rate(seq[-10:]), floor_rate), 0.0, 0.95))
        # C rate^n with C the smallest envelope constant over every observed increment
        envelope = np.max(seq * rate ** np.arange(len(seq), 0, -1))
        # increments are not monotone; allow a factor 2 over the fitted envelope
        out[j] = max(2.0 * envelope, seq[-1], tol if done[j] else 0.0) / (1.0 - rate)
    return out


def _run_holonomy(A, base_x, heights, offsets, side, tol, n_max, p, q, rate=None) -> LinearHolonomy:
    H, trunc, incs, done = _holonomy_core(A, base_x, heights, offsets, side, tol, n_max)
    # once the partner offset underflows the increments vanish, so a run can
    # "converge" after exponential growth; flag that as divergence too
    growth = incs.max(axis=0) / np.maximum(incs[0], max(tol, 1e-300))
    if np.any(growth > GROWTH_LIMIT):
        raise HolonomyDivergenceError(
            f"{side}-holonomy increments grew by {growth.max():.3e} before the leaf offset underflowed"
        )
    if not np.all(done):
        tail = incs[:, ~done]
        if np.any((tail[-1] >= tail[0]) & (tail[-1] > max(tol, 1e-12))):
            raise HolonomyDivergenceError(
                f"{side}-holonomy increments not decaying after {n_max} steps (last {tail[-1].max():.3e})"
            )
    # increments cannot decay faster than the base contraction in general
    floor_rate = abs(A.model.F.mu_s) if rate is None else rate
    tb = _tail_bound(incs, trunc, done, tol, floor_rate)
    if p.shape == ():
        H, trunc, tb, incs = H[0], trunc[0], tb[0], incs[:, 0]
    return LinearHolonomy(H, p, q, side, trunc, tb, incs)


def _base_orbit(model, P: SuspensionPoint, side: str, n: int):
    F = model.F
    M = F.matrix if side == "s" else F.inverse_matrix
    x = np.atleast_2d(P.x)
    xs = [x]
    for _ in range(n):
        xs.append(np.mod(xs[-1] @ M.T, 1.0))
    return np.stack(xs)


def holonomy_along_leaf(
    A: CocycleField,
    P: SuspensionPoint,
    offset,
    side: str = "s",
    tol: float = HOLONOMY_TOL,
    n_max: int = HOLONOMY_NMAX,
    rate: float | None = None,
) -> LinearHolonomy:
    """Holonomy from P to the leaf point at signed offset ``offset`` along v_s or v_u.

    The offset need not be local: the truncated limit contracts it along
    the orbit, which agrees with the extension formula.  ``rate`` (e.g. a
    certified bunching rate) is the decay assumed by the tail bound; it
    defaults to the base contraction.
    """
    A.model._require_unit_roof("strong holonomies")
    base = _base_orbit(A.model, P, side, n_max + 1)
    offsets = np.broadcast_to(np.asarray(offset, dtype=float), base.shape[1:2]).copy()
    heights = np.atleast_1d(P.t)
    shift = A.model.stable_leaf_point if side == "s" else A.model.unstable_leaf_point
    q = shift(P, offset)
    return _run_holonomy(A, base, heights, offsets, side, tol, n_max, P, q, rate)


def stable_holonomy(A, p: SuspensionPoint, q: SuspensionPoint, tol: float = HOLONOMY_TOL, n_max: int = HOLONOMY_NMAX):
    """H^s_{p,q} for q on the local strong stable leaf of p (batched)."""
    a = A.model.leaf_offset(p, q, "s")
    return holonomy_along_leaf(A, p, a, "s", tol, n_max)


def unstable_holonomy(A, p: SuspensionPoint, q: SuspensionPoint, tol: float = HOLONOMY_TOL, n_max: int = HOLONOMY_NMAX):
    a = A.model.leaf_offset(p, q, "u")
    return holonomy_along_leaf(A, p, a, "u", tol, n_max)


def extend_stable_holonomy(
    A: CocycleField,
    p: SuspensionPoint,
    offset: float,
    n_bridge: int,
    tol: float = HOLONOMY_TOL,
    n_max: int = HOLONOMY_NMAX,
) -> np.ndarray:
    """A^n(q)^{-1} H^s_{f^n p, f^n q} A^n(p) for q = p + offset v_s on the global leaf."""
    model = A.model
    lam = abs(model.F.mu_s)
    if abs(offset) * lam**n_bridge > LOCAL_RADIUS:
        raise ValueError(f"f^{n_bridge} does not bring the pair within the local leaf radius")
    xs, ys = model.leaf_orbit(p, offset, n_bridge, "s")
    t = np.broadcast_to(p.t, (n_bridge + 1,))
    Kp = np.eye(2 * A.d)
    Kq = np.eye(2 * A.d)
    for k in range(n_bridge):
        Kp = A.evaluate(SuspensionPoint(xs[k], t[k])) @ Kp
        Kq = A.evaluate(SuspensionPoint(ys[k], t[k])) @ Kq
    pn = SuspensionPoint(xs[n_bridge], t[n_bridge])
    local = holonomy_along_leaf(A, pn, offset * model.F.mu_s**n_bridge, "s", tol, n_max).matrix
    return sp_inverse(Kq) @ local @ Kp


# -- center Jacobian ----------------------------------------------------------------


def center_holonomy_point(model, p, z, t: float, n_sheets: int = 60):
    """Return (sheet_index, height, tau) for h^s(p, t) on the center leaf of z."""
    track = _SheetTrack(model, p, z, n_sheets)
    sheet, h = track.locate(0, t + track.tau)
    return sheet, h, track.tau


class _SheetTrack:
    def __init__(self, model, p, z, n_sheets: int):
        F = model.F
        p = np.asarray(p, dtype=float)
        z = np.asarray(z, dtype=float)
        delta = torus_delta(p, z)
        a = float(delta @ F.v_s)
        if np.linalg.norm(delta - a * F.v_s) > 1e-9:
            raise ValueError("z is not on the local strong stable leaf of p")
        self.first = -2
        ks = np.arange(self.first, n_sheets + 1)
        base = [F.apply(p, int(k)) if k < 0 else None for k in ks]
        x = p.copy()
        fwd = []
        for _ in range(n_sheets + 1):
            fwd.append(x)
            x = F.apply(x)
        base = np.array([b for b in base if b is not None] + fwd)
        self.p_orb = base
        self.z_orb = base + (a * F.mu_s ** ks.astype(float))[:, None] * F.v_s
        self.r_p = model.roof(self.p_orb)
        self.r_z = model.roof(self.z_orb)
        self.tau = float(np.sum(self.r_z[-self.first :] - self.r_p[-self.first :]))

    def locate(self, sheet: int, h: float, which: str = "z"):
        r = self.r_z if which == "z" else self.r_p
        i = sheet - self.first
        while h >= r[i]:
            h -= r[i]
            i += 1
        while h < 0:
            i -= 1
            h += r[i]
        return i + self.first, h

    def g(self, sheet: int, h: float, which: str) -> float:
        r = self.r_z if which == "z" else self.r_p
        i = sheet - self.first
        u = h / r[i]
        return 1.0 / ((1.0 - u) * r[i] + u * r[i + 1])


def center_jacobian(model, p, z, t: float, n_max: int = 40, return_series: bool = False):
    """Limit of the center-derivative ratio along the orbits of (p, t) and h^s(p, t).

    The center derivative of the time-one map at height t over x is
    ``g(f(P)) / g(P)`` with ``g = 1 / rtilde`` and ``rtilde`` the roof
    interpolated linearly in height between r(x) and r(Fx).
    """
    min_roof = model.roof.lower
    n_sheets = int(np.ceil(n_max / min_roof)) + 4
    track = _SheetTrack(model, p, z, n_sheets)
    sp, hp = track.locate(0, t, "p")
    sq, hq = track.locate(0, t + track.tau, "z")
    g_p0, g_q0 = track.g(sp, hp, "p"), track.g(sq, hq, "z")
    series = []
    for n in range(1, n_max + 1):
        a_s, a_h = track.locate(sp, hp + n, "p")
        b_s, b_h = track.locate(sq, hq + n, "z")
        jp = track.g(a_s, a_h, "p") / g_p0
        jq = track.g(b_s, b_h, "z") / g_q0
        series.append(jp / jq)
    value = series[-1]
    return (value, np.array(series)) if return_series else value


# -- homoclinic loop ---------------------------------------------------------------


@dataclass(frozen=True)
class HomoclinicLoop:
    """The map h(s) = s + omega on a unit-roof periodic leaf and its holonomy H_s."""

    cocycle: CocycleField = field(repr=False)
    leaf: PeriodicLeaf = field(repr=False)
    point: HomoclinicPoint
    omega: float
    tol: float = HOLONOMY_TOL
    n_max: int = HOLONOMY_NMAX

    def _check(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.leaf.T)
        if np.any((s < 1e-12) | (s > self.leaf.T - 1e-12)):
            raise ValueError("the loop map is undefined at circle coordinate 0")
        return s

    def h(self, s):
        return np.mod(self._check(s) + self.omega, self.leaf.T)

    def unstable_point(self, s) -> SuspensionPoint:
        """h^u(s): the point at flow time s from the homoclinic point."""
        s = self._check(s)
        i = np.floor(s).astype(int)
        x = self.leaf.orbit[i] + (self.point.a * self.cocycle.model.F.mu ** i)[..., None] * self.cocycle.model.F.v_u
        return self.cocycle.model.point(x, s - i)

    def _cyclic_orbit(self, start, side: str, steps: int):
        k = self.leaf.k
        step = 1 if side == "s" else -1
        idx = np.mod(start[None, :] + step * np.arange(steps + 1)[:, None], k)
        return self.leaf.orbit[idx]

    def factors(self, s):
        """(H^s_{h^u(s), h(s)}, H^u_{s, h^u(s)}), batched over s."""
        s = np.atleast_1d(self._check(s))
        A = self.cocycle
        F = A.model.F
        i = np.floor(s).astype(int)
        tau = s - i
        j = self.point.target_index
        base_u = self._cyclic_orbit(i, "u", self.n_max + 1)
        Hu, _, _, done_u = _holonomy_core(A, base_u, tau, self.point.a * F.mu**i, "u", self.tol, self.n_max)
        # F^i z = orbit[i + j] + b mu_s^i v_s; compute from the periodic side and invert
        base_s = self._cyclic_orbit(np.mod(i + j, self.leaf.k), "s", self.n_max + 1)
        Hs_rev, _, _, done_s = _holonomy_core(
            A, base_s, tau, self.point.b * F.mu_s**i, "s", self.tol, self.n_max
        )
        if not (np.all(done_u) and np.all(done_s)):
            raise HolonomyDivergenceError("loop holonomy did not converge")
        return sp_inverse(Hs_rev), Hu

    def matrix(self, s) -> np.ndarray:
        """H_s = H^s_{h^u(s), h(s)} H^u_{s, h^u(s)}, batched over s."""
        Hs, Hu = self.factors(s)
        return Hs @ Hu

    def measured_omega(self, s) -> np.ndarray:
        """omega recovered geometrically at each s (for consistency checks)."""
        s = self._check(s)
        F = self.cocycle.model.F
        hu = self.unstable_point(s)
        diff = torus_delta(self.leaf.orbit[None, :, :], hu.x[..., None, :])
        perp = np.abs(diff @ np.array([-F.v_s[1], F.v_s[0]]))
        m = np.argmin(perp, axis=-1)
        coord = self.leaf.heights[m] + hu.t
        return np.mod(coord - s, self.leaf.T)

    def iterate(self, j: int, s):
        """(h^j(s), H_{h^{j-1}(s)} ... H_s)."""
        if j < 0:
            raise ValueError("loop iterates are defined for j >= 0")
        s = np.atleast_1d(np.asarray(s, dtype=float))
        dim = 2 * self.cocycle.d
        M = np.broadcast_to(np.eye(dim), s.shape + (dim, dim)).copy()
        cur = np.mod(s, self.leaf.T)
        for _ in range(j):
            M = self.matrix(cur) @ M
            cur = self.h(cur)
        return cur, M


def homoclinic_loop_map(A: CocycleField, leaf: PeriodicLeaf, hp: HomoclinicPoint, **kw) -> HomoclinicLoop:
    """Build the loop; omega is the circle coordinate of the homoclinic target."""
    leaf.model._require_unit_roof("the homoclinic loop")
    target = SuspensionPoint(leaf.orbit[hp.target_index], np.array(0.0))
    omega = float(leaf.coordinate_of(target))
    return HomoclinicLoop(A, leaf, hp, omega, **kw)


def homoclinic_loop(A: CocycleField, leaf: PeriodicLeaf, hp: HomoclinicPoint, s):
    loop = homoclinic_loop_map(A, leaf, hp)
    return loop.h(s), loop.matrix(s)


def loop_iterate(loop: HomoclinicLoop, j: int, s):
    return loop.iterate(j, s)

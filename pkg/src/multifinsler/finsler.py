"""Multimetric Finsler norm and its pointwise tensors.

The norm is the sum of Riemannian norms F_mu = sqrt(y' a_mu(x) y).  The
fundamental tensor is assembled in factorized form

    g = l (x) l + sum_mu (F / F_mu) h_mu,        h_mu = a_mu - l_mu (x) l_mu,

and the Cartan tensor from closed-form fiber derivatives of that expression.
A finite-difference Hessian of F^2/2 is kept as an independent oracle.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .riemann import MetricField, NotPositiveDefiniteError


class SlitViolationError(Exception):
    """Fiber vector too close to the zero section."""


class ConvexityError(Exception):
    """Fundamental tensor failed to be positive definite at a sample."""


@dataclass(frozen=True)
class TangentSample:
    """A point (x, y) on the slit tangent bundle."""

    x: np.ndarray
    y: np.ndarray

    def __init__(self, x, y):
        object.__setattr__(self, "x", np.asarray(x, dtype=float))
        object.__setattr__(self, "y", np.asarray(y, dtype=float))


class MultiMetricSpace:
    """An ordered family of Riemannian metrics on a shared coordinate patch."""

    def __init__(self, metrics: Sequence[MetricField], eps_slit: float = 1e-8):
        if len(metrics) < 1:
            raise ValueError("need at least one metric")
        coords = metrics[0].coords
        for m in metrics:
            if m.coords != coords:
                raise ValueError(f"metric '{m.name}' does not share coordinates {coords}")
        self.metrics = tuple(metrics)
        self.coords = coords
        self.dim = len(coords)
        self.n_metrics = len(self.metrics)
        self.eps_slit = float(eps_slit)

    def metric_values(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(a_mu, inv_mu, det_mu) stacked over sectors, SPD-validated."""
        mats, invs, dets = [], [], []
        for m in self.metrics:
            a, inv, det = m.spd_value(x)
            mats.append(a)
            invs.append(inv)
            dets.append(det)
        return np.stack(mats), np.stack(invs), np.array(dets)

    def metric_derivatives(self, x) -> np.ndarray:
        """dA[mu, s, i, j] = d a^mu_ij / d x_s."""
        return np.stack([m.derivative(x) for m in self.metrics])

    def check_sample(self, sample: TangentSample):
        if len(sample.x) != self.dim:
            raise ValueError(f"point of length {len(sample.x)}, expected {self.dim}")
        if len(sample.y) != self.dim:
            raise ValueError(f"fiber vector of length {len(sample.y)}, expected {self.dim}")
        if float(np.linalg.norm(sample.y)) < self.eps_slit:
            raise SlitViolationError(
                f"|y| = {np.linalg.norm(sample.y):.3e} below slit tolerance {self.eps_slit:.3e}"
            )


@dataclass(frozen=True)
class FinslerState:
    """All pointwise data of the norm at one tangent-bundle sample."""

    x: np.ndarray
    y: np.ndarray
    F: float
    F_mu: np.ndarray          # (N,)
    l: np.ndarray             # (n,) covector dF/dy
    l_up: np.ndarray          # (n,) = y / F
    l_mu: np.ndarray          # (N, n) per-sector covectors
    h: np.ndarray             # (n, n) angular part, g - l (x) l
    h_mu: np.ndarray          # (N, n, n)
    g: np.ndarray             # (n, n) fundamental tensor
    g_inv: np.ndarray
    det_g: float
    C: np.ndarray             # (n, n, n) Cartan tensor
    a_mu: np.ndarray          # (N, n, n) sector metrics at x
    a_inv: np.ndarray
    a_det: np.ndarray


def _sym3(v: np.ndarray, H: np.ndarray) -> np.ndarray:
    """Fully symmetric combination v_i H_jk + v_j H_ik + v_k H_ij."""
    return (
        np.einsum("i,jk->ijk", v, H)
        + np.einsum("j,ik->ijk", v, H)
        + np.einsum("k,ij->ijk", v, H)
    )


def finsler_state(space: MultiMetricSpace, sample: TangentSample) -> FinslerState:
    """Evaluate the norm, fundamental tensor and Cartan tensor at a sample."""
    space.check_sample(sample)
    x, y = sample.x, sample.y
    a_mu, a_inv, a_det = space.metric_values(x)

    q = np.einsum("kij,i,j->k", a_mu, y, y)
    if np.any(q <= 0.0):
        raise NotPositiveDefiniteError(f"degenerate quadratic form at x={x.tolist()}")
    F_mu = np.sqrt(q)
    F = float(F_mu.sum())
    l_mu = np.einsum("kij,j->ki", a_mu, y) / F_mu[:, None]
    l = l_mu.sum(axis=0)
    h_mu = a_mu - np.einsum("ki,kj->kij", l_mu, l_mu)

    ratio = F / F_mu
    g = np.outer(l, l) + np.einsum("k,kij->ij", ratio, h_mu)
    w = np.linalg.eigvalsh(g)
    if w[0] <= 0.0:
        raise ConvexityError(
            f"fundamental tensor not positive definite at x={x.tolist()}, y={y.tolist()} "
            f"(eigenvalues {w.tolist()})"
        )
    g_inv = np.linalg.inv(g)
    det_g = float(np.linalg.det(g))
    h = g - np.outer(l, l)
    l_up = y / F

    # Cartan tensor, closed form:
    #   2C = sum_mu sym3(l, h_mu)/F_mu - sum_mu (F/F_mu^2) sym3(l_mu, h_mu)
    n = space.dim
    C = np.zeros((n, n, n))
    for k in range(space.n_metrics):
        C += _sym3(l, h_mu[k]) / F_mu[k]
        C -= (F / F_mu[k] ** 2) * _sym3(l_mu[k], h_mu[k])
    C *= 0.5

    return FinslerState(
        x=x, y=y, F=F, F_mu=F_mu, l=l, l_up=l_up, l_mu=l_mu, h=h, h_mu=h_mu,
        g=g, g_inv=g_inv, det_g=det_g, C=C, a_mu=a_mu, a_inv=a_inv, a_det=a_det,
    )


def finsler_norm(space: MultiMetricSpace, sample: TangentSample) -> tuple[float, np.ndarray]:
    """The norm F and the per-sector values F_mu at a sample."""
    space.check_sample(sample)
    a_mu, _, _ = space.metric_values(sample.x)
    q = np.einsum("kij,i,j->k", a_mu, sample.y, sample.y)
    if np.any(q <= 0.0):
        raise NotPositiveDefiniteError(f"degenerate quadratic form at x={sample.x.tolist()}")
    F_mu = np.sqrt(q)
    return float(F_mu.sum()), F_mu


def norm_squared(space: MultiMetricSpace, x, y) -> float:
    """F^2 without slit/SPD validation; evaluation hook for FD oracles."""
    a_mu = np.stack([m.value(x) for m in space.metrics])
    q = np.einsum("kij,i,j->k", a_mu, y, y)
    s = float(np.sqrt(q).sum())
    return s * s


def fd_fundamental_tensor(space: MultiMetricSpace, x, y, step: float | None = None) -> np.ndarray:
    """Central-difference Hessian of F^2/2 in y; the independent oracle for g.

    Evaluated in extended precision so the second differences at the stated
    step are not dominated by rounding.
    """
    y = np.asarray(y, dtype=float)
    n = len(y)
    h = step if step is not None else 1e-5 * float(np.linalg.norm(y))
    a_ld = np.stack([m.value(x) for m in space.metrics]).astype(np.longdouble)

    def f2(yy: np.ndarray) -> np.longdouble:
        q = np.einsum("kij,i,j->k", a_ld, yy, yy)
        s = np.sqrt(q).sum()
        return s * s

    y_ld = y.astype(np.longdouble)
    g = np.empty((n, n))
    f0 = f2(y_ld)
    for i in range(n):
        ei = np.zeros(n, dtype=np.longdouble)
        ei[i] = h
        g[i, i] = float((f2(y_ld + ei) - 2.0 * f0 + f2(y_ld - ei)) / np.longdouble(h) ** 2 / 2.0)
        for j in range(i + 1, n):
            ej = np.zeros(n, dtype=np.longdouble)
            ej[j] = h
            mixed = (
                f2(y_ld + ei + ej) - f2(y_ld + ei - ej) - f2(y_ld - ei + ej) + f2(y_ld - ei - ej)
            ) / (4.0 * np.longdouble(h) ** 2)
            g[i, j] = g[j, i] = float(mixed / 2.0)
    return g


def fundamental_tensor(space: MultiMetricSpace, sample: TangentSample, mode: str = "assembled") -> FinslerState:
    """FinslerState with g from the factorized assembly or from the FD Hessian oracle."""
    state = finsler_state(space, sample)
    if mode == "assembled":
        return state
    if mode == "hessian_oracle":
        g = fd_fundamental_tensor(space, sample.x, sample.y)
        w = np.linalg.eigvalsh(g)
        if w[0] <= 0.0:
            raise ConvexityError(f"FD Hessian not positive definite (eigenvalues {w.tolist()})")
        return dataclasses.replace(
            state, g=g, g_inv=np.linalg.inv(g), det_g=float(np.linalg.det(g)),
            h=g - np.outer(state.l, state.l),
        )
    raise ValueError(f"unknown mode '{mode}'")


def cartan_tensor(space: MultiMetricSpace, sample: TangentSample) -> np.ndarray:
    """Fully symmetric Cartan tensor C_ijk = (1/2) dg_jk/dy_i at a sample."""
    return finsler_state(space, sample).C


@dataclass(frozen=True)
class ConvexityReport:
    """Eigenvalue scan of the fundamental tensor over fiber directions."""

    x: np.ndarray
    directions: np.ndarray      # (m, n) unit vectors
    min_eigenvalues: np.ndarray  # (m,)
    all_positive: bool
    worst_index: int

    @property
    def min_eigenvalue(self) -> float:
        return float(self.min_eigenvalues[self.worst_index])

    @property
    def worst_direction(self) -> np.ndarray:
        return self.directions[self.worst_index]


def convexity_check(space: MultiMetricSpace, x, y_grid) -> ConvexityReport:
    """Smallest eigenvalue of g over a grid of unit fiber directions."""
    dirs = np.atleast_2d(np.asarray(y_grid, dtype=float))
    mins = np.empty(len(dirs))
    for k, y in enumerate(dirs):
        st = finsler_state(space, TangentSample(x, y))
        mins[k] = float(np.linalg.eigvalsh(st.g)[0])
    worst = int(np.argmin(mins))
    return ConvexityReport(
        x=np.asarray(x, dtype=float), directions=dirs, min_eigenvalues=mins,
        all_positive=bool(np.all(mins > 0.0)), worst_index=worst,
    )


PROPORTIONALITY_RTOL = 1e-10
PIVOT_FLOOR = 1e-12


@dataclass(frozen=True)
class RiemannianVerdict:
    """Outcome of the pointwise-proportionality test over a set of sample points."""

    riemannian: bool
    factors: np.ndarray | None          # (P, N) ratios per point and sector when riemannian
    counterexample: tuple[int, int, int, np.ndarray] | None  # (mu, i, j, point)

    def effective_metric(self, space: MultiMetricSpace, x) -> np.ndarray:
        """(sum_mu sqrt(phi_mu))^2 a_1(x) for a proportional family."""
        if not self.riemannian:
            raise ValueError("space is not Riemannian")
        a1 = space.metrics[0].value(x)
        phis = []
        for m in space.metrics:
            a = m.value(x)
            piv = np.unravel_index(np.argmax(np.abs(a1)), a1.shape)
            phis.append(a[piv] / a1[piv])
        return float(sum(np.sqrt(p) for p in phis)) ** 2 * a1


def riemannian_detect(space: MultiMetricSpace, sample_points) -> RiemannianVerdict:
    """Decide whether all sector metrics are pointwise proportional to the first."""
    pts = np.atleast_2d(np.asarray(sample_points, dtype=float))
    factors = np.empty((len(pts), space.n_metrics))
    for p, x in enumerate(pts):
        a1 = space.metrics[0].value(x)
        for k, m in enumerate(space.metrics):
            a = m.value(x)
            # pivot: largest-magnitude component of a_1, floor-protected
            piv = np.unravel_index(np.argmax(np.abs(a1)), a1.shape)
            if abs(a1[piv]) < PIVOT_FLOOR:
                raise NotPositiveDefiniteError(f"first metric vanishes at x={x.tolist()}")
            phi = a[piv] / a1[piv]
            factors[p, k] = phi
            scale = np.max(np.abs(a)) + np.max(np.abs(a1))
            resid = np.abs(a - phi * a1)
            if np.any(resid > PROPORTIONALITY_RTOL * scale):
                i, j = np.unravel_index(np.argmax(resid), a.shape)
                return RiemannianVerdict(False, None, (k, int(i), int(j), x))
    return RiemannianVerdict(True, factors, None)

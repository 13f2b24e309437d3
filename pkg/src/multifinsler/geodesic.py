"""Geodesics of the multimetric norm and the point-particle action.

The trajectory solves x'' + G(x, x') = 0 with the factorized spray, by
classical fixed-step fourth-order Runge-Kutta (no adaptivity, so runs are
reproducible bit for bit).  The norm F(x(t), x'(t)) is a first integral and
its drift is the integrator's self-check.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sciint

from .connection import _connection_from_state
from .finsler import MultiMetricSpace, TangentSample, finsler_norm, finsler_state


@dataclass(frozen=True)
class GeodesicPath:
    """Samples of a spray trajectory with the conserved-norm trace."""

    t: np.ndarray       # (K,)
    x: np.ndarray       # (K, n)
    y: np.ndarray       # (K, n) velocities
    F: np.ndarray       # (K,)
    step: float
    method: str = "rk4"


def _spray_rhs(space: MultiMetricSpace, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    state = finsler_state(space, TangentSample(x, y))
    return _connection_from_state(space, state).G


def integrate_geodesic(space: MultiMetricSpace, x0, y0, t_end: float, step: float) -> GeodesicPath:
    """Integrate the spray equation from (x0, y0) for parameter time t_end."""
    if step <= 0.0 or t_end <= 0.0:
        raise ValueError("step and t_end must be positive")
    x = np.asarray(x0, dtype=float).copy()
    y = np.asarray(y0, dtype=float).copy()
    space.check_sample(TangentSample(x, y))

    n_steps = max(1, int(round(t_end / step)))
    h = t_end / n_steps

    ts = np.empty(n_steps + 1)
    xs = np.empty((n_steps + 1, space.dim))
    ys = np.empty((n_steps + 1, space.dim))
    fs = np.empty(n_steps + 1)

    def record(k, t, xv, yv):
        ts[k] = t
        xs[k] = xv
        ys[k] = yv
        fs[k], _ = finsler_norm(space, TangentSample(xv, yv))

    record(0, 0.0, x, y)
    for k in range(n_steps):
        k1x, k1y = y, -_spray_rhs(space, x, y)
        k2x = y + 0.5 * h * k1y
        k2y = -_spray_rhs(space, x + 0.5 * h * k1x, k2x)
        k3x = y + 0.5 * h * k2y
        k3y = -_spray_rhs(space, x + 0.5 * h * k2x, k3x)
        k4x = y + h * k3y
        k4y = -_spray_rhs(space, x + h * k3x, k4x)
        x = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        y = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        space.check_sample(TangentSample(x, y))
        record(k + 1, (k + 1) * h, x, y)
    return GeodesicPath(t=ts, x=xs, y=ys, F=fs, step=h)


@dataclass(frozen=True)
class ActionResult:
    """Length-functional value and its per-sector decomposition."""

    total: float
    sector_totals: np.ndarray

    @property
    def decomposition_residual(self) -> float:
        return abs(self.total - float(self.sector_totals.sum()))


def _fd_velocities(t: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Second-order velocity estimates on a (possibly non-uniform) sample grid."""
    k, n = xs.shape
    if k < 2:
        raise ValueError("need at least two samples")
    v = np.empty_like(xs)
    for i in range(k):
        if 0 < i < k - 1:
            h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
            v[i] = (
                xs[i + 1] * h1 / (h2 * (h1 + h2))
                - xs[i - 1] * h2 / (h1 * (h1 + h2))
                + xs[i] * (h2 - h1) / (h1 * h2)
            )
        elif i == 0:
            h1, h2 = t[1] - t[0], t[2] - t[1] if k > 2 else t[1] - t[0]
            if k > 2:
                v[0] = (
                    -xs[0] * (2 * h1 + h2) / (h1 * (h1 + h2))
                    + xs[1] * (h1 + h2) / (h1 * h2)
                    - xs[2] * h1 / (h2 * (h1 + h2))
                )
            else:
                v[0] = (xs[1] - xs[0]) / h1
        else:
            h1 = t[k - 1] - t[k - 2]
            if k > 2:
                h2 = t[k - 2] - t[k - 3]
                v[i] = (
                    xs[k - 1] * (2 * h1 + h2) / (h1 * (h1 + h2))
                    - xs[k - 2] * (h1 + h2) / (h1 * h2)
                    + xs[k - 3] * h1 / (h2 * (h1 + h2))
                )
            else:
                v[i] = (xs[k - 1] - xs[k - 2]) / h1
    return v


def action_of_path(space: MultiMetricSpace, t, xs, ys=None) -> ActionResult:
    """Integral of F(x, x') along a sampled curve, with the per-sector split.

    Velocities are taken from ``ys`` when given, otherwise estimated by
    second-order finite differences of the position samples.
    """
    t = np.asarray(t, dtype=float)
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if len(t) != len(xs) or len(t) < 2:
        raise ValueError("need matching t and x arrays with at least two samples")
    v = np.atleast_2d(np.asarray(ys, dtype=float)) if ys is not None else _fd_velocities(t, xs)

    f_mu = np.empty((len(t), space.n_metrics))
    for k in range(len(t)):
        if float(np.linalg.norm(v[k])) < space.eps_slit:
            raise ValueError(f"zero-velocity segment at t={t[k]}")
        _, per = finsler_norm(space, TangentSample(xs[k], v[k]))
        f_mu[k] = per
    sectors = np.array([
        float(_sciint.simpson(f_mu[:, m], x=t)) for m in range(space.n_metrics)
    ])
    total = float(_sciint.simpson(f_mu.sum(axis=1), x=t))
    return ActionResult(total=total, sector_totals=sectors)


def path_action(space: MultiMetricSpace, path: GeodesicPath) -> ActionResult:
    return action_of_path(space, path.t, path.x, path.y)


def path_to_csv(path: GeodesicPath, dest, coords) -> None:
    """Write a trajectory as CSV with columns t, x1..xn, y1..yn, F."""
    with open(dest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *[f"x{i+1}" for i in range(len(coords))],
                         *[f"y{i+1}" for i in range(len(coords))], "F"])
        for k in range(len(path.t)):
            row = [path.t[k], *path.x[k], *path.y[k], path.F[k]]
            writer.writerow([format(float(v), ".17g") for v in row])

"""Spray coefficients, nonlinear and Chern connections, Landsberg/Berwald residuals.

Conventions: the spray satisfies G^i = N^i_j y^j, so for a single metric it
reduces to Gamma^i_jk y^j y^k and the geodesic equation reads
x'' + G(x, x') = 0.  The quarter-normalized variational spray used as an
oracle is converted by the factor 2 at the comparison boundary.

Horizontal derivatives combine exact symbolic x-derivatives of the metric
data with closed-form fiber derivatives; central finite differences (step
1e-5 per coordinate) are the documented fallback for objects without a
closed-form x-derivative.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .finsler import (
    FinslerState,
    MultiMetricSpace,
    TangentSample,
    _sym3,
    fd_fundamental_tensor,
    finsler_state,
)
from .riemann import christoffels_and_spray

FD_STEP = 1e-5
MIXED_FD_STEP = 1e-4

# Tolerance classes for reporting: analytic assembly, one finite difference,
# nested finite differences.
TOLERANCE_CLASSES = {"analytic": 1e-10, "fd": 1e-6, "nested-fd": 1e-4}


@dataclass(frozen=True)
class ConnectionState:
    """Spray and nonlinear-connection data at one sample."""

    state: FinslerState
    G: np.ndarray        # (n,) full spray
    G_mu: np.ndarray     # (N, n) per-sector Riemannian sprays
    N: np.ndarray        # (n, n) Cartan nonlinear connection N^i_j
    N_mu: np.ndarray     # (N, n, n) per-sector Riemannian connections
    dN_mu: np.ndarray    # (N, n, n) N - N_mu
    gamma_mu: np.ndarray  # (N, n, n, n) per-sector Christoffels


@dataclass(frozen=True)
class XDerivatives:
    """Exact x-derivatives of the assembled pointwise data (index s first)."""

    dF_mu: np.ndarray    # (N, n)
    dF: np.ndarray       # (n,)
    dl_mu: np.ndarray    # (N, n, n) [mu, s, i]
    dl: np.ndarray       # (n, n)    [s, i]
    dh_mu: np.ndarray    # (N, n, n, n) [mu, s, i, j]
    dg: np.ndarray       # (n, n, n) [s, i, j]
    dC: np.ndarray       # (n, n, n, n) [s, i, j, k]


def x_derivatives(space: MultiMetricSpace, state: FinslerState) -> XDerivatives:
    """Differentiate the assembled quantities in x via exact metric derivatives."""
    x, y = state.x, state.y
    n = space.dim
    dA = space.metric_derivatives(x)  # (N, s, i, j)

    dF_mu = 0.5 * np.einsum("ksij,i,j->ks", dA, y, y) / state.F_mu[:, None]
    dF = dF_mu.sum(axis=0)
    dl_mu = (
        np.einsum("ksij,j->ksi", dA, y) / state.F_mu[:, None, None]
        - np.einsum("ks,ki->ksi", dF_mu, state.l_mu) / state.F_mu[:, None, None]
    )
    dl = dl_mu.sum(axis=0)
    dh_mu = (
        dA
        - np.einsum("ksi,kj->ksij", dl_mu, state.l_mu)
        - np.einsum("ki,ksj->ksij", state.l_mu, dl_mu)
    )

    F, F_mu = state.F, state.F_mu
    dg = np.einsum("si,j->sij", dl, state.l) + np.einsum("i,sj->sij", state.l, dl)
    dC2 = np.zeros((n, n, n, n))  # x-derivative of 2C
    for k in range(space.n_metrics):
        wk = dF / F_mu[k] - F * dF_mu[k] / F_mu[k] ** 2
        dg += np.einsum("s,ij->sij", wk, state.h_mu[k]) + (F / F_mu[k]) * dh_mu[k]

        s3 = _sym3(state.l_mu[k], state.h_mu[k])
        s3full = _sym3(state.l, state.h_mu[k])
        ds3full = _dsym3(dl, state.h_mu[k], state.l, dh_mu[k])
        ds3 = _dsym3(dl_mu[k], state.h_mu[k], state.l_mu[k], dh_mu[k])
        dC2 += (
            -np.einsum("s,ijk->sijk", dF_mu[k] / F_mu[k] ** 2, s3full)
            + ds3full / F_mu[k]
        )
        dw = dF / F_mu[k] ** 2 - 2.0 * F * dF_mu[k] / F_mu[k] ** 3
        dC2 -= np.einsum("s,ijk->sijk", dw, s3) + (F / F_mu[k] ** 2) * ds3
    return XDerivatives(dF_mu=dF_mu, dF=dF, dl_mu=dl_mu, dl=dl, dh_mu=dh_mu, dg=dg, dC=0.5 * dC2)


def _dsym3(dv: np.ndarray, H: np.ndarray, v: np.ndarray, dH: np.ndarray) -> np.ndarray:
    """Derivative (leading index s) of sym3(v, H) given dv[s,i] and dH[s,i,j]."""
    return (
        np.einsum("si,jk->sijk", dv, H)
        + np.einsum("sj,ik->sijk", dv, H)
        + np.einsum("sk,ij->sijk", dv, H)
        + np.einsum("i,sjk->sijk", v, dH)
        + np.einsum("j,sik->sijk", v, dH)
        + np.einsum("k,sij->sijk", v, dH)
    )


def cartan_y_derivative(state: FinslerState) -> np.ndarray:
    """Closed-form fiber derivative dC[r,i,j,k] = dC_ijk / dy_r."""
    F, F_mu = state.F, state.F_mu
    l, l_mu, h, h_mu = state.l, state.l_mu, state.h, state.h_mu
    n = len(l)
    dl = h / F  # [r, i]
    d2C = np.zeros((n, n, n, n))
    for k in range(len(F_mu)):
        dlk = h_mu[k] / F_mu[k]
        dhk = -(
            np.einsum("ri,j->rij", h_mu[k], l_mu[k]) + np.einsum("i,rj->rij", l_mu[k], h_mu[k])
        ) / F_mu[k]
        s3 = _sym3(l_mu[k], h_mu[k])
        s3full = _sym3(l, h_mu[k])
        d2C += (
            -np.einsum("r,ijk->rijk", l_mu[k] / F_mu[k] ** 2, s3full)
            + _dsym3(dl, h_mu[k], l, dhk) / F_mu[k]
        )
        dw = l / F_mu[k] ** 2 - 2.0 * F * l_mu[k] / F_mu[k] ** 3
        d2C -= np.einsum("r,ijk->rijk", dw, s3) + (F / F_mu[k] ** 2) * _dsym3(dlk, h_mu[k], l_mu[k], dhk)
    return 0.5 * d2C


def _sector_data(space: MultiMetricSpace, x, y):
    gammas, sprays, nonlins = [], [], []
    for m in space.metrics:
        gam, g_i, n_ij = christoffels_and_spray(m, x, y)
        gammas.append(gam)
        sprays.append(g_i)
        nonlins.append(n_ij)
    return np.stack(gammas), np.stack(sprays), np.stack(nonlins)


def connection_state(space: MultiMetricSpace, sample: TangentSample) -> ConnectionState:
    """Assemble the spray and the Cartan nonlinear connection at a sample."""
    state = finsler_state(space, sample)
    return _connection_from_state(space, state)


def _connection_from_state(space: MultiMetricSpace, state: FinslerState) -> ConnectionState:
    x, y = state.x, state.y
    n = space.dim
    gamma_mu, G_mu, N_mu = _sector_data(space, x, y)
    F, F_mu = state.F, state.F_mu
    l, l_mu, h, h_mu = state.l, state.l_mu, state.h, state.h_mu

    # P_mu[r, j] = d(F l^mu_j)/dy_r = l_r l^mu_j + (F/F_mu) h^mu_rj
    P = np.einsum("r,kj->krj", l, l_mu) + (F / F_mu)[:, None, None] * h_mu
    b = np.einsum("krj,kj->r", P, G_mu)
    G = state.g_inv @ b

    # dP[mu, k, r, j] = d P_mu[r, j] / dy_k
    dP = (
        np.einsum("kr,mj->mkrj", h / F, l_mu)
        + np.einsum("r,mkj->mkrj", l, h_mu / F_mu[:, None, None])
        + np.einsum("mk,mrj->mkrj", (np.outer(1.0 / F_mu, l) - F * l_mu / F_mu[:, None] ** 2), h_mu)
        - np.einsum("m,mkr,mj->mkrj", F / F_mu**2, h_mu, l_mu)
        - np.einsum("m,mr,mkj->mkrj", F / F_mu**2, l_mu, h_mu)
    )

    raised_C = np.einsum("is,rt,kst->kir", state.g_inv, state.g_inv, state.C)
    term1 = -np.einsum("kir,r->ik", raised_C, b)
    term2 = 0.5 * np.einsum("ir,mkrj,mj->ik", state.g_inv, dP, G_mu)
    term3 = np.einsum("ir,mrj,mjk->ik", state.g_inv, P, N_mu)
    N = term1 + term2 + term3

    return ConnectionState(
        state=state, G=G, G_mu=G_mu, N=N, N_mu=N_mu,
        dN_mu=N[None, :, :] - N_mu, gamma_mu=gamma_mu,
    )


def spray(space: MultiMetricSpace, sample: TangentSample, mode: str = "factorized"):
    """Full spray and per-sector sprays; 'oracle' uses the variational formula via FD."""
    if mode == "factorized":
        cs = connection_state(space, sample)
        return cs.G, cs.G_mu
    if mode == "oracle":
        return variational_spray(space, sample)
    raise ValueError(f"unknown mode '{mode}'")


def variational_spray(space: MultiMetricSpace, sample: TangentSample):
    """Independent spray oracle from finite differences of F^2 alone.

    Computes 2 * (1/4) g^{il} (y^k d^2F^2/dx^k dy^l - dF^2/dx^l) with the
    Hessian g and all derivatives taken by central differences of F^2,
    evaluated in extended precision.
    """
    space.check_sample(sample)
    x, y = sample.x, sample.y
    n = space.dim
    _, G_mu, _ = _sector_data(space, x, y)

    def f2(xx, yy) -> np.longdouble:
        a = np.stack([m.value(xx) for m in space.metrics]).astype(np.longdouble)
        q = np.einsum("kij,i,j->k", a, yy, yy)
        s = np.sqrt(q).sum()
        return s * s

    x_ld = x.astype(np.longdouble)
    y_ld = y.astype(np.longdouble)
    hy = np.longdouble(MIXED_FD_STEP) * (1.0 + np.linalg.norm(y))
    hx = np.longdouble(MIXED_FD_STEP) * (1.0 + np.linalg.norm(x))

    g = fd_fundamental_tensor(space, x, y)
    g_inv = np.linalg.inv(g)

    mixed = np.empty((n, n))  # mixed[k, l] = d^2 F^2 / dx_k dy_l
    for k in range(n):
        ek = np.zeros(n, dtype=np.longdouble)
        ek[k] = hx
        for m in range(n):
            em = np.zeros(n, dtype=np.longdouble)
            em[m] = hy
            mixed[k, m] = float(
                (
                    f2(x_ld + ek, y_ld + em)
                    - f2(x_ld + ek, y_ld - em)
                    - f2(x_ld - ek, y_ld + em)
                    + f2(x_ld - ek, y_ld - em)
                )
                / (4.0 * hx * hy)
            )
    dx_f2 = np.empty(n)
    for k in range(n):
        ek = np.zeros(n, dtype=np.longdouble)
        ek[k] = hx
        dx_f2[k] = float((f2(x_ld + ek, y_ld) - f2(x_ld - ek, y_ld)) / (2.0 * hx))

    G = 0.5 * g_inv @ (y @ mixed - dx_f2)
    return G, G_mu


def nonlinear_connection(space: MultiMetricSpace, sample: TangentSample) -> np.ndarray:
    """Cartan nonlinear connection N^i_j at a sample."""
    return connection_state(space, sample).N


def nonlinear_connection_fd(space: MultiMetricSpace, sample: TangentSample, step: float | None = None) -> np.ndarray:
    """Oracle N = (1/2) dG/dy by central differences of the factorized spray."""
    x, y = sample.x, sample.y
    n = space.dim
    h = step if step is not None else FD_STEP * float(np.linalg.norm(y))
    out = np.empty((n, n))
    for j in range(n):
        ej = np.zeros(n)
        ej[j] = h
        gp = connection_state(space, TangentSample(x, y + ej)).G
        gm = connection_state(space, TangentSample(x, y - ej)).G
        out[:, j] = (gp - gm) / (2.0 * h)
    return 0.5 * out


def horizontal_compatibility_residual(space: MultiMetricSpace, sample: TangentSample) -> float:
    """Max |d_i F - N^j_i l_j|; zero for the Cartan nonlinear connection."""
    cs = connection_state(space, sample)
    xd = x_derivatives(space, cs.state)
    resid = xd.dF - np.einsum("ji,j->i", cs.N, cs.state.l)
    return float(np.max(np.abs(resid)))


def chern_connection(space: MultiMetricSpace, sample: TangentSample) -> np.ndarray:
    """Chern connection coefficients [k, i, j], symmetric in (i, j)."""
    cs = connection_state(space, sample)
    return _chern_from_state(space, cs)


def _chern_from_state(space: MultiMetricSpace, cs: ConnectionState) -> np.ndarray:
    state = cs.state
    xd = x_derivatives(space, state)
    # delta_s g_ij = d_s g_ij - N^r_s * 2 C_rij
    dgh = xd.dg - 2.0 * np.einsum("rs,rij->sij", cs.N, state.C)
    # T[i, s, j] = delta_i g_sj + delta_j g_si - delta_s g_ij
    inner = dgh + dgh.transpose(2, 1, 0) - dgh.transpose(1, 0, 2)
    return 0.5 * np.einsum("ks,isj->kij", state.g_inv, inner)


@dataclass(frozen=True)
class LandsbergBerwald:
    """Horizontal derivatives of the Cartan tensor and per-pair factorized residuals."""

    C_dot: np.ndarray            # (n, n, n) Landsberg tensor C_ijk|s y^s
    C_horizontal: np.ndarray     # (n, n, n, n) Berwald residual C_ijk|s, index s last
    pair_residuals: np.ndarray   # (N, N) max-abs residual of the factorized cubic condition


def landsberg_berwald(space: MultiMetricSpace, sample: TangentSample) -> LandsbergBerwald:
    cs = connection_state(space, sample)
    state = cs.state
    xd = x_derivatives(space, state)
    chern = _chern_from_state(space, cs)
    dyC = cartan_y_derivative(state)

    delta_C = xd.dC - np.einsum("rs,rijk->sijk", cs.N, dyC)  # [s, i, j, k]
    c_hor = (
        delta_C.transpose(1, 2, 3, 0)
        - np.einsum("rjk,ris->ijks", state.C, chern)
        - np.einsum("irk,rjs->ijks", state.C, chern)
        - np.einsum("ijr,rks->ijks", state.C, chern)
    )
    c_dot = np.einsum("ijks,s->ijk", c_hor, state.y)

    nm = space.n_metrics
    pair = np.zeros((nm, nm))
    chern_y = np.einsum("arj,j->ar", chern, state.y)
    for mu in range(nm):
        for nu in range(mu + 1, nm):
            resid = _pair_cubic_residual(space, state, cs, chern_y, mu, nu)
            pair[mu, nu] = pair[nu, mu] = resid
    return LandsbergBerwald(C_dot=c_dot, C_horizontal=c_hor, pair_residuals=pair)


def _pair_cubic_tensor(space: MultiMetricSpace, x, y, mu: int, nu: int) -> np.ndarray:
    """(1/F) * third fiber derivative of F_mu F_nu, closed form."""
    st = finsler_state(space, TangentSample(x, y))
    Fm, Fn = st.F_mu[mu], st.F_mu[nu]
    lm, ln = st.l_mu[mu], st.l_mu[nu]
    hm, hn = st.h_mu[mu], st.h_mu[nu]
    dhm = -(np.einsum("ri,j->rij", hm, lm) + np.einsum("i,rj->rij", lm, hm)) / Fm
    dhn = -(np.einsum("ri,j->rij", hn, ln) + np.einsum("i,rj->rij", ln, hn)) / Fn

    termA = (
        np.einsum("r,st->rst", ln / Fm - Fn * lm / Fm**2, hm) + (Fn / Fm) * dhm
    )
    termB = np.einsum("rt,s->rst", hm / Fm, ln) + np.einsum("t,rs->rst", lm, hn / Fn)
    termC = np.einsum("rs,t->rst", hm / Fm, ln) + np.einsum("s,rt->rst", lm, hn / Fn)
    termD = (
        np.einsum("r,st->rst", lm / Fn - Fm * ln / Fn**2, hn) + (Fm / Fn) * dhn
    )
    return (termA + termB + termC + termD) / st.F


def _pair_cubic_residual(space, state, cs, chern_y, mu, nu) -> float:
    """Max-abs of the horizontal spray derivative of the pair cubic tensor."""
    x, y = state.x, state.y
    n = space.dim
    hx = FD_STEP * (1.0 + float(np.linalg.norm(x)))
    hy = FD_STEP * (1.0 + float(np.linalg.norm(y)))

    acc = np.zeros((n, n, n))
    for s in range(n):
        es = np.zeros(n)
        es[s] = hx
        tp = _pair_cubic_tensor(space, x + es, y, mu, nu)
        tm = _pair_cubic_tensor(space, x - es, y, mu, nu)
        acc += y[s] * (tp - tm) / (2.0 * hx)
    for a in range(n):
        ea = np.zeros(n)
        ea[a] = hy
        tp = _pair_cubic_tensor(space, x, y + ea, mu, nu)
        tm = _pair_cubic_tensor(space, x, y - ea, mu, nu)
        acc -= cs.G[a] * (tp - tm) / (2.0 * hy)

    t0 = _pair_cubic_tensor(space, x, y, mu, nu)
    acc -= (
        np.einsum("ast,ar->rst", t0, chern_y)
        + np.einsum("rat,as->rst", t0, chern_y)
        + np.einsum("rsa,at->rst", t0, chern_y)
    )
    return float(np.max(np.abs(acc)))

"""2D frame machinery: zweibeins, cross terms, the scalars I, J, K, and
coefficient-level residuals of the three structure equations on the sphere bundle.

Orientation is pinned to eps_12 = +1 with m_i = sqrt(det g) eps_ij l^j; the
scalars I and the cross terms are pseudoscalars, so the fixed orientation makes
them reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .connection import (
    ConnectionState,
    FD_STEP,
    _connection_from_state,
    connection_state,
    x_derivatives,
)
from .finsler import FinslerState, MultiMetricSpace, TangentSample, finsler_state
from .riemann import gauss_curvature


def _require_2d(space: MultiMetricSpace):
    if space.dim != 2:
        raise ValueError("this operation is defined for 2D spaces only")


def _perp_down(vec_up: np.ndarray, scale: float) -> np.ndarray:
    """m_i = scale * eps_ij v^j with eps_12 = +1."""
    return scale * np.array([vec_up[1], -vec_up[0]])


def _perp_up(vec_down: np.ndarray, inv_scale: float) -> np.ndarray:
    """m^i = inv_scale * eps^ij v_j with eps^12 = +1."""
    return inv_scale * np.array([vec_down[1], -vec_down[0]])


@dataclass(frozen=True)
class Frame2D:
    """Berwald zweibein data at a 2D sample."""

    state: FinslerState
    l: np.ndarray
    l_up: np.ndarray
    m: np.ndarray
    m_up: np.ndarray
    l_mu: np.ndarray      # (N, 2)
    m_mu: np.ndarray      # (N, 2) per-sector covectors
    m_mu_up: np.ndarray   # (N, 2)
    cross: np.ndarray     # (N, N) antisymmetric cross terms A[mu, nu]
    sqrt_g: float
    det_identity_residual: float  # relative residual of det g / F^3 = sum det a_mu / F_mu^3


def frame2d(space: MultiMetricSpace, sample: TangentSample) -> Frame2D:
    _require_2d(space)
    state = finsler_state(space, sample)
    return _frame_from_state(state)


def _frame_from_state(state: FinslerState) -> Frame2D:
    sqrt_g = float(np.sqrt(state.det_g))
    m = _perp_down(state.l_up, sqrt_g)
    m_up = _perp_up(state.l, 1.0 / sqrt_g)

    sqrt_det = np.sqrt(state.a_det)
    m_mu = np.stack([
        _perp_down(state.y / state.F_mu[k], sqrt_det[k]) for k in range(len(state.F_mu))
    ])
    m_mu_up = np.stack([
        _perp_up(state.l_mu[k], 1.0 / sqrt_det[k]) for k in range(len(state.F_mu))
    ])

    lm = state.l_mu
    cross = (np.outer(lm[:, 0], lm[:, 1]) - np.outer(lm[:, 1], lm[:, 0])) / sqrt_g

    lhs = state.det_g / state.F**3
    rhs = float(np.sum(state.a_det / state.F_mu**3))
    resid = abs(lhs - rhs) / abs(lhs)

    return Frame2D(
        state=state, l=state.l, l_up=state.l_up, m=m, m_up=m_up,
        l_mu=state.l_mu, m_mu=m_mu, m_mu_up=m_mu_up, cross=cross,
        sqrt_g=sqrt_g, det_identity_residual=resid,
    )


def _compact_I(state: FinslerState, cross: np.ndarray) -> float:
    w = state.a_det / state.F_mu**4
    return float(1.5 * state.F**4 / state.det_g * np.einsum("n,mn->", w, cross))


def invariant_I(space: MultiMetricSpace, sample: TangentSample, mode: str = "compact") -> float:
    """Main scalar of the 2D geometry; zero exactly for Riemannian spaces.

    'compact' evaluates the closed cross-term formula; 'oracle' evaluates
    (F / 2 det g) m^i d(det g)/dy_i with the fiber derivative by central
    differences of the assembled determinant.
    """
    _require_2d(space)
    fr = frame2d(space, sample)
    if mode == "compact":
        return _compact_I(fr.state, fr.cross)
    if mode == "oracle":
        x, y = sample.x, sample.y
        h = FD_STEP * (1.0 + float(np.linalg.norm(y)))
        grad = np.empty(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            dp = finsler_state(space, TangentSample(x, y + e)).det_g
            dm = finsler_state(space, TangentSample(x, y - e)).det_g
            grad[i] = (dp - dm) / (2.0 * h)
        return float(fr.state.F / (2.0 * fr.state.det_g) * fr.m_up @ grad)
    raise ValueError(f"unknown mode '{mode}'")


def _delta_scalar(space, x, y, N, field: Callable, hx: float, hy: float) -> np.ndarray:
    """delta_i phi = d_i phi - N^j_i d phi/dy_j by central differences."""
    n = len(x)
    dx = np.empty(n)
    dy = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = hx
        dx[i] = (field(x + e, y) - field(x - e, y)) / (2.0 * hx)
        e = np.zeros(n)
        e[i] = hy
        dy[i] = (field(x, y + e) - field(x, y - e)) / (2.0 * hy)
    return dx - np.einsum("ji,j->i", N, dy)


def frame_apply(space: MultiMetricSpace, sample: TangentSample, field: Callable, which: str) -> float:
    """Apply a frame vector (e1 = m^i delta_i, e2 = l^i delta_i, e3 = F m^i d/dy_i)
    to a scalar field phi(x, y), derivatives by central differences."""
    _require_2d(space)
    cs = connection_state(space, sample)
    fr = _frame_from_state(cs.state)
    x, y = sample.x, sample.y
    hx = FD_STEP * (1.0 + float(np.linalg.norm(x)))
    hy = FD_STEP * (1.0 + float(np.linalg.norm(y)))
    if which == "e3":
        dy = np.empty(2)
        for i in range(2):
            e = np.zeros(2)
            e[i] = hy
            dy[i] = (field(x, y + e) - field(x, y - e)) / (2.0 * hy)
        return float(fr.state.F * fr.m_up @ dy)
    delta = _delta_scalar(space, x, y, cs.N, field, hx, hy)
    if which == "e1":
        return float(fr.m_up @ delta)
    if which == "e2":
        return float(fr.l_up @ delta)
    raise ValueError(f"unknown frame vector '{which}'")


def _fiber_derivative_of_N(space, x, y, step: float) -> np.ndarray:
    out = np.empty((2, 2, 2))  # [r, i, j] = dN^i_j / dy_r
    for r in range(2):
        e = np.zeros(2)
        e[r] = step
        np_ = connection_state(space, TangentSample(x, y + e)).N
        nm_ = connection_state(space, TangentSample(x, y - e)).N
        out[r] = (np_ - nm_) / (2.0 * step)
    return out


def invariants_JK(space: MultiMetricSpace, sample: TangentSample) -> tuple[float, float]:
    """Landsberg scalar J and the curvature scalar K of the third structure equation.

    J comes from the omega^1 wedge omega^3 coefficient; K combines the sector
    Gauss curvatures with frame-derivative corrections.  For a single metric,
    K reduces to the Gauss curvature.
    """
    _require_2d(space)
    cs = connection_state(space, sample)
    fr = _frame_from_state(cs.state)
    st = cs.state
    x, y = sample.x, sample.y
    F, F_mu, det_g = st.F, st.F_mu, st.det_g
    w3 = (F / F_mu) ** 3 * st.a_det / det_g

    hy = FD_STEP * (1.0 + float(np.linalg.norm(y)))
    dN = _fiber_derivative_of_N(space, x, y, hy)

    a_coeff = 0.0
    for k in range(space.n_metrics):
        u = cs.dN_mu[k] @ fr.m_up
        vec = 1.5 * st.l_mu[k] / F_mu[k] - st.l / F
        gamma_t = cs.gamma_mu[k].transpose(2, 0, 1)  # [r, i, j] = Gamma^i_{jr}
        ddN = dN - gamma_t
        contr = np.einsum("i,j,r,rij->", fr.m, fr.m_up, fr.m_up, ddN)
        a_coeff += w3[k] * (float(vec @ u) - contr)
    J = -a_coeff

    K = 0.0
    sq = np.sqrt(st.a_det / det_g)
    for k in range(space.n_metrics):
        K_k = gauss_curvature(space.metrics[k], x)
        K += K_k * (F / F_mu[k]) * (st.a_det[k] / det_g)

        def s_field(xx, yy, k=k):
            c = connection_state(space, TangentSample(xx, yy))
            f = _frame_from_state(c.state)
            s = c.state
            return (
                s.F / s.F_mu[k] ** 2
                * np.sqrt(s.a_det[k] / s.det_g)
                * float(f.m @ c.dN_mu[k] @ f.m_up)
            )

        def t_field(xx, yy, k=k):
            s = finsler_state(space, TangentSample(xx, yy))
            return s.F / s.F_mu[k] * np.sqrt(s.a_det[k] / s.det_g)

        e2_s = frame_apply(space, sample, s_field, "e2")
        m_dn_l = float(fr.m @ cs.dN_mu[k] @ fr.l_up)
        e1_t = frame_apply(space, sample, t_field, "e1")
        K -= (F / F_mu[k]) * sq[k] * e2_s
        K -= (F / F_mu[k] ** 2) * sq[k] * m_dn_l * e1_t
    return float(J), float(K)


@dataclass(frozen=True)
class StructureReport:
    """Coefficient-level residuals of the three structure equations at one sample."""

    I_compact: float
    I_oracle: float
    J: float
    K: float
    eq1_A_plus_I: float     # omega^1: A vs -I (oracle route)
    eq1_B_minus_1: float
    eq1_C: float
    eq2_A_plus_1: float     # omega^2
    eq2_B: float
    eq2_C: float
    eq3_B: float            # omega^3
    oneform_roundtrip: float
    # supporting matrix-element identity residuals
    sector_l_dN: float      # sum_mu l^mu . dN^mu = 0
    sector_m_dN_l: float    # weighted m . dN^mu . l = 0
    sector_m_dN_m: float
    cross_dN_identity: float
    cross_log_gradient: float


def _oneform_roundtrip(space, cs: ConnectionState, fr: Frame2D) -> float:
    """Sector coframes expressed in the full coframe and back; residual from identity.

    Covers both the per-sector relations (their composition must be the 3x3
    identity) and the sector-summed expressions for each full coframe element.
    """
    st = cs.state
    F, F_mu, det_g = st.F, st.F_mu, st.det_g
    worst = 0.0
    summed = np.zeros((3, 3))
    for k in range(space.n_metrics):
        ratio = np.sqrt(st.a_det[k] / det_g)
        c1 = (F / F_mu[k]) * ratio
        c2 = (F / F_mu[k]) ** 2 * ratio
        m_dn_m = float(fr.m @ cs.dN_mu[k] @ fr.m_up)
        m_dn_l = float(fr.m @ cs.dN_mu[k] @ fr.l_up)
        a_col = float(fr.cross[:, k].sum())  # sum_nu A[nu, k]

        # rows: sector coframe (w_k^1, w_k^2, w_k^3) in the (w1, w2, w3) basis
        to_sector = np.array([
            [c1, 0.0, 0.0],
            [-a_col, F_mu[k] / F, 0.0],
            [-c2 * m_dn_m / F, -c2 * m_dn_l / F, c2],
        ])
        # rows: full coframe in the sector basis
        mm_k = float(fr.m_mu[k] @ cs.dN_mu[k] @ fr.m_mu_up[k])
        ml_k = float(fr.m_mu[k] @ cs.dN_mu[k] @ (st.y / F_mu[k]))
        from_sector = np.array([
            [1.0 / c1, 0.0, 0.0],
            [a_col / ratio, F / F_mu[k], 0.0],
            [
                (F_mu[k] / F**2) / ratio * mm_k,
                (F_mu[k] / F**2) / ratio * ml_k,
                1.0 / c2,
            ],
        ])
        worst = max(worst, float(np.max(np.abs(from_sector @ to_sector - np.eye(3)))))

        summed[0] += (F / F_mu[k]) ** 2 * ratio * to_sector[0]
        summed[1] += to_sector[1]
        summed[2] += c1 * (
            to_sector[2]
            + np.array([
                float(fr.m_mu[k] @ cs.dN_mu[k] @ fr.m_up) / F_mu[k],
                float(fr.m_mu[k] @ cs.dN_mu[k] @ fr.l_up) / F_mu[k],
                0.0,
            ])
        )
    worst = max(worst, float(np.max(np.abs(summed - np.eye(3)))))
    return worst


def cartan_structure_residuals(
    space: MultiMetricSpace, sample: TangentSample, with_invariants: bool = True
) -> StructureReport:
    """Residuals of the structure-equation coefficients at one sample.

    ``with_invariants=False`` skips the frame-derivative scalars J and K
    (reported as nan), which keeps the per-sample cost to the analytic parts.
    """
    _require_2d(space)
    cs = connection_state(space, sample)
    fr = _frame_from_state(cs.state)
    st = cs.state
    F, F_mu, det_g = st.F, st.F_mu, st.det_g

    I_c = _compact_I(st, fr.cross)
    I_o = invariant_I(space, sample, mode="oracle")
    J, K = invariants_JK(space, sample) if with_invariants else (float("nan"), float("nan"))

    w3 = (F / F_mu) ** 3 * st.a_det / det_g           # (F/F_mu)^3 det a / det g
    w2 = F**2 / F_mu**3 * st.a_det / det_g
    w4 = F**3 / F_mu**4 * st.a_det / det_g

    l_dn_l = np.array([float(st.l @ cs.dN_mu[k] @ fr.l_up) for k in range(space.n_metrics)])
    m_dn_l = np.array([float(fr.m @ cs.dN_mu[k] @ fr.l_up) for k in range(space.n_metrics)])
    m_dn_m = np.array([float(fr.m @ cs.dN_mu[k] @ fr.m_up) for k in range(space.n_metrics)])
    cross_col = fr.cross.sum(axis=0)  # sum_nu A[nu, mu]

    eq1_A = -1.5 * F**4 / det_g * float(np.einsum("m,nm->", st.a_det / F_mu**4, fr.cross))
    eq1_B = float(w3.sum())
    eq1_C = float(
        -0.5 * np.sum(w2 * l_dn_l)
        + 1.5 * np.sum(w4 * cross_col * m_dn_l)
        + np.sum(w2 * m_dn_m)
    )
    eq2_A = -float(w3.sum())
    eq2_C = float(np.sum(w2 * m_dn_l))
    eq3_B = float(
        np.sum(w4 * (-0.5 * (F_mu / F) * l_dn_l + 1.5 * cross_col * m_dn_l))
        + np.sum(w2 * m_dn_m)
    )

    # matrix-element identities
    sector_l_dN = float(np.max(np.abs(np.einsum("ki,kij->j", st.l_mu, cs.dN_mu))))
    sector_m_dN_l = abs(float(np.sum(w3 * m_dn_l)))

    bracket = np.zeros(space.n_metrics)
    for k in range(space.n_metrics):
        vec = (
            st.l_mu[k] / (2.0 * F)
            + w3[k] * (1.5 * cross_col[k] / F_mu[k] * fr.m - I_c / F * fr.m - st.l / (2.0 * F))
        )
        bracket[k] = float(vec @ cs.G_mu[k])
    sector_m_dN_m = abs(float(np.sum(w3 * m_dn_m) - bracket.sum()))

    an_lhs = float(np.einsum("m,nm,m->", F**3 / F_mu**4 * st.a_det / det_g, fr.cross, m_dn_l))
    an_rhs = 0.0
    for k in range(space.n_metrics):
        vec = st.l / F - st.l_mu[k] / F_mu[k]
        an_rhs += w3[k] * float(vec @ cs.dN_mu[k] @ fr.l_up)
    cross_dN = abs(an_lhs - an_rhs)

    # cross-term/log-gradient relation, FD on the right side
    hy = FD_STEP * (1.0 + float(np.linalg.norm(st.y)))
    a_rel = 0.0
    for nu in range(space.n_metrics):
        lhs_vec = (fr.cross[:, nu].sum() / F_mu[nu]) * fr.m

        def logratio(yy, nu=nu):
            a = st.a_mu[nu]
            fnu = np.sqrt(float(yy @ a @ yy))
            f = sum(np.sqrt(float(yy @ st.a_mu[m] @ yy)) for m in range(space.n_metrics))
            return np.log(f / fnu)

        rhs_vec = np.empty(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = hy
            rhs_vec[j] = (logratio(st.y + e) - logratio(st.y - e)) / (2.0 * hy)
        a_rel = max(a_rel, float(np.max(np.abs(lhs_vec - rhs_vec))))

    return StructureReport(
        I_compact=I_c, I_oracle=I_o, J=J, K=K,
        eq1_A_plus_I=abs(eq1_A + I_o), eq1_B_minus_1=abs(eq1_B - 1.0), eq1_C=abs(eq1_C),
        eq2_A_plus_1=abs(eq2_A + 1.0), eq2_B=0.0, eq2_C=abs(eq2_C),
        eq3_B=abs(eq3_B),
        oneform_roundtrip=_oneform_roundtrip(space, cs, fr),
        sector_l_dN=sector_l_dN, sector_m_dN_l=sector_m_dN_l, sector_m_dN_m=sector_m_dN_m,
        cross_dN_identity=cross_dN, cross_log_gradient=a_rel,
    )

"""Closed-form Holmes-Thompson and Busemann-Hausdorff measures in 2D.

The closed forms reduce everything to the characteristic pair of a 2x2 SPD
pencil det(A - lambda B) = 0 and complete elliptic integrals, computed by
arithmetic-geometric-mean iteration.  Independent quadrature oracles are kept
for every closed form: infinite-range integrals are compactified with
t = tan(theta) and integrated adaptively; circle integrals use either adaptive
quadrature or the trapezoid rule on the periodic integrand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .finsler import MultiMetricSpace, TangentSample, fd_fundamental_tensor, finsler_state

AGM_TOL = 1e-15
AGM_MAX_ITER = 40
QUAD_ABS = 1e-11
# closed Busemann-Hausdorff form divides by powers of alpha - beta; route to
# quadrature when the pencil is too close to lambda = 1 or to proportionality
DEGENERACY_TOL = 1e-6


class DegeneratePairError(Exception):
    """Closed Busemann-Hausdorff form inapplicable; use the quadrature mode."""


@dataclass(frozen=True)
class EllipticPair:
    """Characteristic roots of det(A - lambda B) = 0 for an SPD 2x2 pencil."""

    lam_plus: float
    lam_minus: float

    def __post_init__(self):
        if not (self.lam_plus >= self.lam_minus > 0.0):
            raise ValueError(f"invalid characteristic pair ({self.lam_plus}, {self.lam_minus})")

    @property
    def modulus(self) -> float:
        """k = sqrt(1 - lam_minus/lam_plus) in [0, 1)."""
        return math.sqrt(max(0.0, 1.0 - self.lam_minus / self.lam_plus))


def lambda_pair(A, B) -> EllipticPair:
    """Characteristic pair of det(A - lambda B) = 0 via symmetric polynomials."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != (2, 2) or B.shape != (2, 2):
        raise ValueError("lambda_pair expects 2x2 matrices")
    X = np.linalg.solve(A, B)
    e1 = float(np.trace(X))
    e2 = float(0.5 * (e1 * e1 - np.trace(X @ X)))
    disc = math.sqrt(max(0.0, e1 * e1 - 4.0 * e2))
    return EllipticPair((e1 + disc) / (2.0 * e2), (e1 - disc) / (2.0 * e2))


def complete_elliptic_k(k: float) -> float:
    """K(k) by AGM iteration, k in [0, 1)."""
    if not 0.0 <= k < 1.0:
        raise ValueError(f"modulus k={k} outside [0, 1)")
    a, b = 1.0, math.sqrt(1.0 - k * k)
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= AGM_TOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return math.pi / (2.0 * a)


def complete_elliptic_e(k: float) -> float:
    """E(k) by AGM iteration, k in [0, 1]; E(1) = 1 is the closed endpoint."""
    if not 0.0 <= k <= 1.0:
        raise ValueError(f"modulus k={k} outside [0, 1]")
    if k == 1.0:
        return 1.0
    a, b, c = 1.0, math.sqrt(1.0 - k * k), k
    csum = 0.5 * c * c
    power = 1.0
    for _ in range(AGM_MAX_ITER):
        if abs(a - b) <= AGM_TOL * a and c <= AGM_TOL:
            break
        a, b, c = 0.5 * (a + b), math.sqrt(a * b), 0.5 * (a - b)
        power *= 2.0
        csum += 0.5 * power * c * c
    return math.pi / (2.0 * a) * (1.0 - csum)


def complete_elliptic(k: float) -> tuple[float, float]:
    """(K(k), E(k)) for k in [0, 1)."""
    return complete_elliptic_k(k), complete_elliptic_e(k)


def elliptic_k_quadrature(k: float) -> float:
    """Defining integral of K(k), adaptive quadrature; test oracle."""
    val, _ = integrate.quad(
        lambda t: 1.0 / math.sqrt(1.0 - (k * math.sin(t)) ** 2), 0.0, math.pi / 2.0,
        epsabs=1e-13, epsrel=1e-13, limit=200,
    )
    return val


def elliptic_e_quadrature(k: float) -> float:
    """Defining integral of E(k), adaptive quadrature; test oracle."""
    val, _ = integrate.quad(
        lambda t: math.sqrt(max(0.0, 1.0 - (k * math.sin(t)) ** 2)), 0.0, math.pi / 2.0,
        epsabs=1e-13, epsrel=1e-13, limit=200,
    )
    return val


def _poly(M: np.ndarray, t: float) -> float:
    """M_11 t^2 + 2 M_12 t + M_22."""
    return M[0, 0] * t * t + 2.0 * M[0, 1] * t + M[1, 1]


def _form(M: np.ndarray, theta: float) -> float:
    """Quadratic form at the unit vector (sin theta, cos theta)."""
    s, c = math.sin(theta), math.cos(theta)
    return M[0, 0] * s * s + 2.0 * M[0, 1] * s * c + M[1, 1] * c * c


def pencil_integrals(A, B, mode: str = "closed") -> tuple[float, float]:
    """The two canonical pencil integrals over the real line:

        first  = integral dt / sqrt(a(t) b(t))
        second = integral sqrt(a(t)) / b(t)^(3/2) dt

    with a(t) = A11 t^2 + 2 A12 t + A22 and likewise b(t).  The closed forms
    are 2 sqrt(lam_-/det A) K(k) and 2 lam_+ sqrt(lam_-/det A) E(k)
    (equivalently 2 sqrt(lam_+/det B) E(k)) with the characteristic pair of
    det(A - lambda B) = 0 and k the pencil modulus.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if mode == "closed":
        pair = lambda_pair(A, B)
        k = pair.modulus
        det_a = float(np.linalg.det(A))
        first = 2.0 * math.sqrt(pair.lam_minus / det_a) * complete_elliptic_k(k)
        second = 2.0 * pair.lam_plus * math.sqrt(pair.lam_minus / det_a) * complete_elliptic_e(k)
        return first, second
    if mode == "quadrature":
        # t = tan(theta) removes the improper endpoints analytically
        first, _ = integrate.quad(
            lambda th: 1.0 / math.sqrt(_form(A, th) * _form(B, th)),
            -math.pi / 2.0, math.pi / 2.0, epsabs=QUAD_ABS, epsrel=QUAD_ABS, limit=400,
        )
        second, _ = integrate.quad(
            lambda th: math.sqrt(_form(A, th)) / _form(B, th) ** 1.5,
            -math.pi / 2.0, math.pi / 2.0, epsabs=QUAD_ABS, epsrel=QUAD_ABS, limit=400,
        )
        return first, second
    raise ValueError(f"unknown mode '{mode}'")


@dataclass(frozen=True)
class MeasureReport:
    """A measure value with its per-term breakdown."""

    value: float
    method: str
    diagonal_terms: tuple[float, ...] = ()
    cross_terms: tuple[dict, ...] = ()
    parts: dict = field(default_factory=dict)
    fallback: bool = False


def _require_2d(space: MultiMetricSpace):
    if space.dim != 2:
        raise ValueError("measures are implemented for 2D spaces only")


def _norm_on_circle(space: MultiMetricSpace, a_mu: np.ndarray, theta: float) -> float:
    y = np.array([math.cos(theta), math.sin(theta)])
    return float(sum(math.sqrt(float(y @ a_mu[k] @ y)) for k in range(space.n_metrics)))


def holmes_thompson(space: MultiMetricSpace, x, mode: str = "closed") -> MeasureReport:
    """Holmes-Thompson measure density at x.

    'closed' sums the sector volume factors plus elliptic cross terms;
    'disc_oracle' integrates det g over the unit sublevel set of the norm by
    polar reduction with the radial integral done analytically per ray;
    'circle_oracle' integrates det g / F^2 over the unit circle with det g
    from the finite-difference Hessian oracle.
    """
    _require_2d(space)
    x = np.asarray(x, dtype=float)
    a_mu, _, a_det = space.metric_values(x)
    nm = space.n_metrics

    if mode == "closed":
        diag = tuple(float(np.sqrt(d)) for d in a_det)
        cross = []
        total = float(sum(diag))
        for mu in range(nm):
            for nu in range(nm):
                if mu == nu:
                    continue
                pair = lambda_pair(a_mu[nu], a_mu[mu])
                e_val = complete_elliptic_e(pair.modulus)
                term = (2.0 / math.pi) * math.sqrt(a_det[mu] * pair.lam_plus) * e_val
                cross.append({
                    "mu": mu, "nu": nu, "lam_plus": pair.lam_plus,
                    "lam_minus": pair.lam_minus, "modulus": pair.modulus,
                    "E": e_val, "term": term,
                })
                total += term
        return MeasureReport(value=total, method="closed",
                             diagonal_terms=diag, cross_terms=tuple(cross))

    if mode == "disc_oracle":
        # 0-homogeneity of det g makes the radial integral exact per ray:
        # integral_{F<=1} det g = (1/2) integral det g(theta) / F(theta)^2 dtheta
        def integrand(theta):
            y = np.array([math.cos(theta), math.sin(theta)])
            st = finsler_state(space, TangentSample(x, y))
            return st.det_g / st.F**2

        val, _ = integrate.quad(integrand, 0.0, 2.0 * math.pi,
                                epsabs=QUAD_ABS, epsrel=QUAD_ABS, limit=400)
        val *= 0.5 / math.pi
        return MeasureReport(value=float(val), method="disc_oracle",
                             parts={"disc_integral_over_pi": float(val)})

    if mode == "circle_oracle":
        # periodic trapezoid on det(g_fd)/F^2; g from the FD Hessian oracle
        m = 512
        thetas = np.arange(m) * (2.0 * math.pi / m)
        vals = np.empty(m)
        for i, th in enumerate(thetas):
            y = np.array([math.cos(th), math.sin(th)])
            g = fd_fundamental_tensor(space, x, y)
            f = _norm_on_circle(space, a_mu, th)
            vals[i] = float(np.linalg.det(g)) / f**2
        val = float(vals.mean())  # (1/pi) * (1/2) * integral = mean over the circle
        return MeasureReport(value=val, method="circle_oracle",
                             parts={"circle_integral_over_pi": val})
    raise ValueError(f"unknown mode '{mode}'")


def _bh_quadrature_value(space: MultiMetricSpace, x) -> float:
    a_mu, _, _ = space.metric_values(x)

    def inv_f2(theta):
        return 1.0 / _norm_on_circle(space, a_mu, theta) ** 2

    val, _ = integrate.quad(inv_f2, 0.0, 2.0 * math.pi,
                            epsabs=1e-13, epsrel=1e-13, limit=400)
    return 2.0 * math.pi / val


def busemann_hausdorff(space: MultiMetricSpace, x, mode: str = "auto") -> MeasureReport:
    """Busemann-Hausdorff measure density at x.

    'closed_bimetric' (two metrics only) uses the trace/elliptic split in the
    difference metric alpha - beta and raises DegeneratePairError when that
    difference is close to singular or the pair close to proportional;
    'quadrature' integrates 2 pi / integral F^-2 dtheta; 'auto' tries the
    closed form and falls back to quadrature.
    """
    _require_2d(space)
    x = np.asarray(x, dtype=float)

    if mode == "auto":
        if space.n_metrics == 2:
            try:
                return busemann_hausdorff(space, x, mode="closed_bimetric")
            except DegeneratePairError:
                rep = busemann_hausdorff(space, x, mode="quadrature")
                return MeasureReport(value=rep.value, method=rep.method,
                                     parts=rep.parts, fallback=True)
        return busemann_hausdorff(space, x, mode="quadrature")

    if mode == "quadrature":
        val = _bh_quadrature_value(space, x)
        return MeasureReport(value=float(val), method="quadrature",
                             parts={"indicatrix_area_over_pi": float(math.pi / val)})

    if mode == "closed_bimetric":
        if space.n_metrics != 2:
            raise ValueError("closed_bimetric mode requires exactly two metrics")
        alpha, _, _ = space.metrics[0].spd_value(x)
        beta, _, _ = space.metrics[1].spd_value(x)

        pair = lambda_pair(alpha, beta)
        near_unit = min(abs(pair.lam_plus - 1.0), abs(pair.lam_minus - 1.0))
        scale = max(pair.lam_plus, 1.0)
        if pair.lam_plus / pair.lam_minus - 1.0 < DEGENERACY_TOL or near_unit < DEGENERACY_TOL * scale:
            raise DegeneratePairError(
                "alpha - beta is singular or the pair is near proportional; "
                "use the quadrature mode"
            )
        h_minus = alpha - beta
        ev = np.linalg.eigvalsh(h_minus)
        if ev[0] * ev[-1] <= 0.0:
            raise DegeneratePairError(
                "alpha - beta is indefinite; the closed split diverges, use the quadrature mode"
            )
        if ev[-1] < 0.0:  # negative definite: swap roles, the measure is symmetric
            alpha, beta = beta, alpha
            h_minus = -h_minus
        h_plus = alpha + beta

        det_hm = float(np.linalg.det(h_minus))
        a_part = 0.5 * float(np.trace(h_plus @ np.linalg.inv(h_minus))) / math.sqrt(det_hm)

        def integrand(theta):
            return math.sqrt(_form(alpha, theta) * _form(beta, theta)) / _form(h_minus, theta) ** 2

        # circle average: 1/F^2 = F_+^2/F_-^4 - 2 F_a F_b / F_-^4, and the
        # second term integrates to exactly one copy of the line integral
        # (cross-checked against quadrature; proportional pairs give the
        # Riemannian value only with this normalization)
        b_int, _ = integrate.quad(integrand, -math.pi / 2.0, math.pi / 2.0,
                                  epsabs=QUAD_ABS, epsrel=QUAD_ABS, limit=400)
        b_part = -(2.0 / math.pi) * b_int
        value = 1.0 / (a_part + b_part)
        return MeasureReport(
            value=float(value), method="closed_bimetric",
            parts={"trace_part": float(a_part), "elliptic_part": float(b_part),
                   "indicatrix_area_over_pi": float(a_part + b_part)},
        )
    raise ValueError(f"unknown mode '{mode}'")


def indicatrix_reduction_check(space: MultiMetricSpace, x, weight: str = "one") -> dict:
    """Residual of the sublevel-set vs unit-circle reduction for f in {1, det g}.

    The left side is a genuine 2D adaptive quadrature over the unit sublevel
    set of the norm in polar coordinates; the right side is the circle
    integral of f(det g)/F^2.
    """
    _require_2d(space)
    if weight not in ("one", "det"):
        raise ValueError("weight must be 'one' or 'det'")
    x = np.asarray(x, dtype=float)
    a_mu, _, _ = space.metric_values(x)

    def f_of(theta, r):
        y = np.array([r * math.cos(theta), r * math.sin(theta)])
        if weight == "one":
            return 1.0
        return finsler_state(space, TangentSample(x, y)).det_g

    def r_max(theta):
        return 1.0 / _norm_on_circle(space, a_mu, theta)

    disc, _ = integrate.dblquad(
        lambda r, theta: f_of(theta, r) * r, 0.0, 2.0 * math.pi, 0.0, r_max,
        epsabs=1e-10, epsrel=1e-10,
    )

    def circle_integrand(theta):
        y = np.array([math.cos(theta), math.sin(theta)])
        st = finsler_state(space, TangentSample(x, y))
        val = 1.0 if weight == "one" else st.det_g
        return val / st.F**2

    circ, _ = integrate.quad(circle_integrand, 0.0, 2.0 * math.pi,
                             epsabs=QUAD_ABS, epsrel=QUAD_ABS, limit=400)
    circ *= 0.5
    return {
        "disc": float(disc),
        "circle": float(circ),
        "residual": float(abs(disc - circ)),
        "weight": weight,
    }

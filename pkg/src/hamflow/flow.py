"""Ambient flow of the holomorphic Hamilton field, with variational data.

The transported dynamics on the complexification is integrated as the
real-time flow of the complex ODE

    dz/dt = A(z, u),   du/dt = B(z, u)

where (A, B) is the Hamilton field of H with respect to Omega, read off by
inverting the Omega coefficient matrix:  flat model A = -2i dH/du,
B = 2i dH/dz;  sphere model the same with the scalar factor (1+zu)^2 / 4.
This coincides with the Hamilton flow of Re H for the real part of Omega,
and keeps the field exactly complex-linearizable, so the variational
equations can be integrated over C as well.

The Jacobian (derivative with respect to the initial ambient point) is
integrated simultaneously as an augmented state, never by differencing
trajectories.  On the sphere, trajectories switch to the antipodal chart
once both |z| and |u| leave the hysteresis band, re-expressing the state
and the accumulated Jacobian through z -> 1/z, u -> 1/u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import ambient_realify, opnorm
from .errors import DomainError, FlowDivergenceError
from .geometry import (FLAT, SPHERE, SPHERE_DOMAIN_GUARD, CHART_SWITCH_RADIUS,
                       AmbientPoint, ModelDescriptor, ambient_i_matrix,
                       ambient_omega_coeff, coord, omega1_matrix)
from .hamiltonians import HolomorphicHamiltonian

COORD_BLOWUP = 1e8


@dataclass(frozen=True)
class IntegratorConfig:
    """How to integrate: adaptive embedded pair or fixed-step classic RK4."""

    method: str = "rk45_adaptive"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    step: float = 1e-3
    max_steps: int = 200_000
    horizon: float = 2.0

    def __post_init__(self):
        if self.method not in ("rk45_adaptive", "rk4_fixed"):
            raise ValueError(f"unknown integrator method {self.method!r}")
        if min(self.abs_tol, self.rel_tol, self.step) <= 0:
            raise ValueError("tolerances and step must be positive")


@dataclass(eq=False)
class FlowState:
    """Result of a flow: final ambient point, optional Jacobian, step count.

    ``jacobian`` is the real 4n x 4n derivative with respect to the initial
    ambient point, in the (Re z, Im z, Re u, Im u) basis; it is the
    realification of the complex 2n x 2n block matrix ``jacobian_complex``.
    """

    point: AmbientPoint
    time: float
    steps: int = 0
    jacobian: np.ndarray | None = None
    jacobian_complex: np.ndarray | None = None


class _ChartHolder:
    __slots__ = ("chart", "switches")

    def __init__(self, chart: int):
        self.chart = chart
        self.switches = 0


def _field(model: ModelDescriptor, H: HolomorphicHamiltonian, chart: int,
           z: np.ndarray, u: np.ndarray, with_jac: bool):
    """Hamilton field (A, B) of H w.r.t. Omega and, optionally, its Jacobian."""
    data = H.chart_data(chart)
    if with_jac:
        hz, hu, hzz, hzu, huu = data.full(z, u)
    else:
        hz, hu = data.first(z, u)
    n = model.n
    if model.kind == FLAT:
        a = -2j * hu
        b = 2j * hz
        if not with_jac:
            return a, b, None
        dv = np.empty((2 * n, 2 * n), dtype=complex)
        dv[:n, :n] = -2j * hzu.T
        dv[:n, n:] = -2j * huu
        dv[n:, :n] = 2j * hzz
        dv[n:, n:] = 2j * hzu
        return a, b, dv
    s = 1.0 + z[0] * u[0]
    if abs(s) <= SPHERE_DOMAIN_GUARD:
        raise DomainError("Omega singular on the antidiagonal 1 + z*u = 0")
    s2 = s * s
    a = -0.5j * s2 * hu
    b = 0.5j * s2 * hz
    if not with_jac:
        return a, b, None
    dv = np.empty((2, 2), dtype=complex)
    dv[0, 0] = -0.5j * (2.0 * u[0] * s * hu[0] + s2 * hzu[0, 0])
    dv[0, 1] = -0.5j * (2.0 * z[0] * s * hu[0] + s2 * huu[0, 0])
    dv[1, 0] = 0.5j * (2.0 * u[0] * s * hz[0] + s2 * hzz[0, 0])
    dv[1, 1] = 0.5j * (2.0 * z[0] * s * hz[0] + s2 * hzu[0, 0])
    return a, b, dv


def xi_field(H: HolomorphicHamiltonian, p: AmbientPoint
             ) -> tuple[np.ndarray, np.ndarray]:
    """Ambient tangent (dz/dt, du/dt) of the transported flow at p."""
    a, b, _ = _field(H.model, H, p.chart, coord(p.z), coord(p.u), False)
    return a, b


def _make_rhs(model, H, holder, n, with_jac):
    def rhs(y):
        z = y[:n]
        u = y[n:2 * n]
        a, b, dv = _field(model, H, holder.chart, z, u, with_jac)
        out = np.empty_like(y)
        out[:n] = a
        out[n:2 * n] = b
        if with_jac:
            k = y[2 * n:].reshape(2 * n, 2 * n)
            out[2 * n:] = (dv @ k).ravel()
        return out
    return rhs


def _maybe_switch_chart(model, holder, y, n, with_jac):
    """Apply z -> 1/z, u -> 1/u once both coordinates leave the band."""
    if model.kind != SPHERE:
        return y
    z = y[:n]
    u = y[n:2 * n]
    if min(np.min(np.abs(z)), np.min(np.abs(u))) <= CHART_SWITCH_RADIUS:
        return y
    out = y.copy()
    out[:n] = 1.0 / z
    out[n:2 * n] = 1.0 / u
    if with_jac:
        k = y[2 * n:].reshape(2 * n, 2 * n)
        trans = np.diag(np.concatenate([-1.0 / z ** 2, -1.0 / u ** 2]))
        out[2 * n:] = (trans @ k).ravel()
    holder.chart = 1 - holder.chart
    holder.switches += 1
    return out


# Dormand-Prince 5(4) coefficients (FSAL).
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DP_E = np.array([35 / 384 - 5179 / 57600, 0.0, 500 / 1113 - 7571 / 16695,
                  125 / 192 - 393 / 640, -2187 / 6784 + 92097 / 339200,
                  11 / 84 - 187 / 2100, -1 / 40])


class _BadStep(Exception):
    pass


def _rk45(rhs, y0, t_end, cfg, post_step):
    t = 0.0
    y = y0
    attempts = 0
    accepted = 0
    h = t_end / 64.0
    try:
        k1 = rhs(y)
    except DomainError:
        raise
    min_h = max(abs(t_end), 1.0) * 1e-15
    while True:
        if (t_end - t) * np.sign(t_end) <= 0:
            break
        clamped = False
        if abs(h) >= abs(t_end - t):
            h = t_end - t
            clamped = True
        attempts += 1
        if attempts > cfg.max_steps:
            raise FlowDivergenceError("step budget exhausted", t)
        try:
            ks = [k1]
            for i in range(1, 6):
                yi = y + h * sum(c * kj for c, kj in zip(_DP_A[i], ks))
                ks.append(rhs(yi))
            y_new = y + h * sum(c * kj for c, kj in zip(_DP_B, ks))
            k_new = rhs(y_new)
            err_vec = h * (sum(c * kj for c, kj in zip(_DP_E[:6], ks))
                           + _DP_E[6] * k_new)
            if not (np.all(np.isfinite(y_new.view(float)))
                    and np.all(np.isfinite(err_vec.view(float)))):
                raise _BadStep
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean(np.abs(err_vec / scale) ** 2)))
        except (DomainError, _BadStep):
            err = np.inf
        if err <= 1.0:
            t = t_end if clamped else t + h
            y = y_new
            k1 = k_new
            accepted += 1
            if np.max(np.abs(y)) > COORD_BLOWUP:
                raise FlowDivergenceError("trajectory left the ambient domain", t)
            y2 = post_step(y)
            if y2 is not y:
                y = y2
                k1 = rhs(y)
        if err == 0.0:
            factor = 5.0
        elif np.isinf(err):
            factor = 0.2
        else:
            factor = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
        if abs(h) < min_h:
            raise FlowDivergenceError("step size underflow (stiff blow-up)", t)
    return y, accepted


def _rk4(rhs, y0, t_end, cfg, post_step):
    nsteps = max(1, int(np.ceil(abs(t_end) / cfg.step)))
    if nsteps > cfg.max_steps:
        raise FlowDivergenceError("step budget exhausted", 0.0)
    h = t_end / nsteps
    y = y0
    t = 0.0
    for i in range(nsteps):
        try:
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * h * k1)
            k3 = rhs(y + 0.5 * h * k2)
            k4 = rhs(y + h * k3)
        except DomainError as exc:
            raise FlowDivergenceError(str(exc), t) from exc
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t_end if i == nsteps - 1 else t + h
        if not np.all(np.isfinite(y.view(float))) or np.max(np.abs(y)) > COORD_BLOWUP:
            raise FlowDivergenceError("trajectory left the ambient domain", t - h)
        y = post_step(y)
    return y, nsteps


def flow(H: HolomorphicHamiltonian, p0: AmbientPoint, t: float,
         cfg: IntegratorConfig | None = None,
         with_jacobian: bool = False) -> FlowState:
    """Integrate the ambient flow from p0 for time t.

    With ``with_jacobian`` the variational equations ride along and the
    returned state carries the derivative with respect to the initial point.
    """
    cfg = cfg or IntegratorConfig()
    model = H.model
    n = model.n
    if abs(t) > cfg.horizon:
        raise ValueError(f"|t| = {abs(t):.3g} exceeds the horizon {cfg.horizon:.3g}")
    z0, u0 = coord(p0.z), coord(p0.u)
    if model.kind == SPHERE:
        ambient_omega_coeff(model, p0)  # raises DomainError off-domain
    holder = _ChartHolder(p0.chart)
    if with_jacobian:
        y0 = np.concatenate([z0, u0, np.eye(2 * n, dtype=complex).ravel()])
    else:
        y0 = np.concatenate([z0, u0])
    if t == 0.0:
        k = np.eye(2 * n, dtype=complex)
        return FlowState(point=AmbientPoint(holder.chart, z0.copy(), u0.copy()),
                         time=0.0, steps=0,
                         jacobian=ambient_realify(k) if with_jacobian else None,
                         jacobian_complex=k if with_jacobian else None)
    rhs = _make_rhs(model, H, holder, n, with_jacobian)
    post = lambda y: _maybe_switch_chart(model, holder, y, n, with_jacobian)
    if cfg.method == "rk4_fixed":
        y, steps = _rk4(rhs, y0, t, cfg, post)
    else:
        y, steps = _rk45(rhs, y0, t, cfg, post)
    point = AmbientPoint(holder.chart, y[:n].copy(), y[n:2 * n].copy())
    jac_c = None
    jac_r = None
    if with_jacobian:
        jac_c = y[2 * n:].reshape(2 * n, 2 * n).copy()
        jac_r = ambient_realify(jac_c)
    return FlowState(point=point, time=t, steps=steps,
                     jacobian=jac_r, jacobian_complex=jac_c)


def holomorphy_defect(state: FlowState) -> float:
    """Commutator norm of the flow Jacobian with multiplication by i."""
    if state.jacobian is None:
        raise ValueError("flow state carries no Jacobian")
    n = state.point.z.size
    i_mat = ambient_i_matrix(n)
    return opnorm(state.jacobian @ i_mat - i_mat @ state.jacobian)


def symplecticity_defect(model: ModelDescriptor, p0: AmbientPoint,
                         state: FlowState) -> float:
    """How far the Jacobian is from preserving the real part of Omega."""
    if state.jacobian is None:
        raise ValueError("flow state carries no Jacobian")
    w_start = omega1_matrix(model, p0)
    w_end = omega1_matrix(model, state.point)
    return opnorm(state.jacobian.T @ w_end @ state.jacobian - w_start)

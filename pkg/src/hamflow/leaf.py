"""Leaf transport, real-locus intersection, and the derived frame data.

The image of a base point x under the time-t map is found by flowing the
vertical leaf { z = z_x } and intersecting the transported leaf with the
real locus:  Newton solves

    G(u) = U(t; z_x, u) - conj(Z(t; z_x, u)) = 0

over the initial fiber coordinate u in C^n (2n real unknowns; G is real-
differentiable but not complex-differentiable because of the conjugation,
so Newton runs on the real form, with the Jacobian assembled from the
variational flow data).  Sweeps along a time grid warm-start u from the
previous solution; failures trigger bisection of the time step, and a
persistent failure is reported as leaving the valid time interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import c2r, r2c, realify_antilin, realify_lin
from .errors import FlowDivergenceError, FoliationDegeneracyError
from .geometry import (AmbientPoint, KahlerPoint, ModelDescriptor,
                       chart_transition_dreal, coord, embed, kahler_to_chart,
                       ambient_i_matrix, omega_matrix, project_pi0)
from .flow import FlowState, IntegratorConfig, flow
from .hamiltonians import HolomorphicHamiltonian

_BISECT_DEPTH = 14
_JUMP_GUARD = 0.75


@dataclass(frozen=True)
class NewtonConfig:
    """Damped-Newton policy for the leaf intersection."""

    tol: float = 1e-10
    max_iters: int = 25
    max_halvings: int = 8
    cond_limit: float = 1e10


@dataclass(eq=False)
class LeafSolution:
    """Converged leaf intersection at one (x, t)."""

    x: KahlerPoint
    t: float
    u_star: np.ndarray
    y: KahlerPoint
    newton_iters: int
    residual: float
    flow_state: FlowState


@dataclass(eq=False)
class FrameData:
    """Frame matrices at y = phi_t(x), all real 2n x 2n in chart bases."""

    Jt: np.ndarray
    dphi: np.ndarray
    omega_t: np.ndarray


def _leaf_system(H: HolomorphicHamiltonian, x: KahlerPoint, u: np.ndarray,
                 t: float, cfg: IntegratorConfig):
    """Residual, real Jacobian w.r.t. u, and flow state for one Newton trial."""
    n = H.model.n
    state = flow(H, AmbientPoint(x.chart, x.z, u), t, cfg, with_jacobian=True)
    g = c2r(state.point.u - np.conj(state.point.z))
    k = state.jacobian_complex
    kzu, kuu = k[:n, n:], k[n:, n:]
    jg = realify_lin(kuu) - realify_antilin(np.conj(kzu))
    return g, jg, state


def _newton_leaf(H, x, t, cfg, newton, u0) -> LeafSolution:
    u = coord(u0).copy()
    g, jg, state = _leaf_system(H, x, u, t, cfg)
    iters = 0
    while True:
        res = float(np.linalg.norm(g))
        if res <= newton.tol:
            break
        if iters >= newton.max_iters:
            raise FoliationDegeneracyError(
                "leaf intersection did not converge", time=t, residual=res)
        cond = np.linalg.cond(jg)
        if not np.isfinite(cond) or cond > newton.cond_limit:
            raise FoliationDegeneracyError(
                "leaf intersection system is near-singular", time=t, residual=res)
        delta = r2c(np.linalg.solve(jg, -g))
        lam = 1.0
        improved = False
        for _ in range(newton.max_halvings + 1):
            try:
                g2, jg2, state2 = _leaf_system(H, x, u + lam * delta, t, cfg)
            except FlowDivergenceError:
                lam *= 0.5
                continue
            if float(np.linalg.norm(g2)) < res or float(np.linalg.norm(g2)) <= newton.tol:
                u = u + lam * delta
                g, jg, state = g2, jg2, state2
                improved = True
                break
            lam *= 0.5
        if not improved:
            raise FoliationDegeneracyError(
                "damped Newton stalled on the leaf intersection",
                time=t, residual=res)
        iters += 1
    y = KahlerPoint(state.point.chart, state.point.z.copy())
    return LeafSolution(x=x, t=t, u_star=u, y=y, newton_iters=iters,
                        residual=float(np.linalg.norm(g)), flow_state=state)


def _identity_solution(H, x, cfg) -> LeafSolution:
    state = flow(H, embed(H.model, x), 0.0, cfg, with_jacobian=True)
    return LeafSolution(x=x, t=0.0, u_star=np.conj(x.z), y=x,
                        newton_iters=0, residual=0.0, flow_state=state)


def _advance(H, x, t_prev, u_prev, t_target, cfg, newton, depth):
    """Continuation step from a converged u at t_prev to t_target."""
    sol = None
    failure: Exception | None = None
    try:
        sol = _newton_leaf(H, x, t_target, cfg, newton, u_prev)
    except (FoliationDegeneracyError, FlowDivergenceError) as exc:
        failure = exc
    if sol is not None:
        jump = float(np.linalg.norm(sol.u_star - u_prev)) \
            / (1.0 + float(np.linalg.norm(u_prev)))
        if jump <= _JUMP_GUARD or depth >= _BISECT_DEPTH:
            return sol
        # a large move of the fiber parameter may be a branch jump across a
        # caustic; confirm by passing through the midpoint
    if depth >= _BISECT_DEPTH:
        reason = "branch jump" if failure is None else "no convergence"
        raise FoliationDegeneracyError(
            f"left the valid time interval (continuation breakdown: {reason})",
            time=t_target, last_good_time=t_prev,
            residual=getattr(failure, "residual", None))
    t_mid = 0.5 * (t_prev + t_target)
    mid = _advance(H, x, t_prev, u_prev, t_mid, cfg, newton, depth + 1)
    return _advance(H, x, t_mid, mid.u_star, t_target, cfg, newton, depth + 1)


def phi(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
        cfg: IntegratorConfig | None = None,
        newton: NewtonConfig | None = None,
        u0=None) -> LeafSolution:
    """Image of x under the time-t map, with convergence diagnostics.

    Without an explicit warm start the fiber parameter is seeded at
    conj(z_x) and continuation-by-bisection kicks in when the direct solve
    fails.
    """
    cfg = cfg or IntegratorConfig()
    newton = newton or NewtonConfig()
    if t == 0.0:
        return _identity_solution(H, x, cfg)
    if u0 is not None:
        return _newton_leaf(H, x, t, cfg, newton, u0)
    return _advance(H, x, 0.0, np.conj(x.z), t, cfg, newton, 0)


def phi_sweep(H: HolomorphicHamiltonian, x: KahlerPoint, times,
              cfg: IntegratorConfig | None = None,
              newton: NewtonConfig | None = None):
    """Continuation sweep along a monotone time grid starting near 0.

    Returns (solutions, failure): on degeneracy the partial list of
    solutions is returned together with the raised error.
    """
    cfg = cfg or IntegratorConfig()
    newton = newton or NewtonConfig()
    sols: list[LeafSolution] = []
    t_prev = 0.0
    u_prev = np.conj(x.z)
    failure = None
    for t in times:
        if t == 0.0:
            sols.append(_identity_solution(H, x, cfg))
            continue
        try:
            sol = _advance(H, x, t_prev, u_prev, float(t), cfg, newton, 0)
        except (FoliationDegeneracyError, FlowDivergenceError) as exc:
            if isinstance(exc, FoliationDegeneracyError) and exc.last_good_time is None:
                exc.last_good_time = t_prev
            failure = exc
            break
        sols.append(sol)
        t_prev = float(t)
        u_prev = sol.u_star
    return sols, failure


def pi_t(H: HolomorphicHamiltonian, p: AmbientPoint, t: float,
         cfg: IntegratorConfig | None = None,
         newton: NewtonConfig | None = None) -> KahlerPoint:
    """Projection along the transported foliation: real anchor of p's leaf."""
    cfg = cfg or IntegratorConfig()
    if t == 0.0:
        return project_pi0(H.model, p)
    back = flow(H, p, -t, cfg)
    anchor = KahlerPoint(back.point.chart, back.point.z.copy())
    return phi(H, anchor, t, cfg, newton).y


def jt_from_solution(model: ModelDescriptor, sol: LeafSolution) -> np.ndarray:
    """Complex structure at y from the ambient splitting T X = TM + leaf.

    The leaf tangent space is spanned by the u-columns of the variational
    Jacobian; for each base tangent v the defining equation
    I (v, conj v) = (w, conj w) + leaf-vector is solved for w, and J_t v = w.
    """
    n = model.n
    k = sol.flow_state.jacobian_complex
    dz_leaf, du_leaf = k[:n, n:], k[n:, n:]
    d_real = np.vstack([realify_lin(dz_leaf), realify_lin(du_leaf)])
    eye = np.eye(n)
    zero = np.zeros((n, n))
    lift = np.vstack([
        np.hstack([eye, zero]),
        np.hstack([zero, eye]),
        np.hstack([eye, zero]),
        np.hstack([zero, -eye]),
    ])
    a = np.hstack([lift, d_real])
    if np.linalg.cond(a) > 1e10:
        raise FoliationDegeneracyError(
            "leaf tangent to the real locus: splitting is singular", time=sol.t)
    rhs = ambient_i_matrix(n) @ lift
    sol_w = np.linalg.solve(a, rhs)
    return sol_w[:2 * n, :]


def j_t(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
        cfg: IntegratorConfig | None = None,
        newton: NewtonConfig | None = None) -> np.ndarray:
    """Time-t complex structure at y = phi_t(x), real 2n x 2n."""
    sol = phi(H, x, t, cfg, newton)
    return jt_from_solution(H.model, sol)


def dphi_from_solution(model: ModelDescriptor, sol: LeafSolution) -> np.ndarray:
    """Chart derivative of the time-t map at x, from variational data.

    Differentiates y = Z(t; z0, u*(z0)) through the implicit dependence of
    the converged fiber parameter on the base point.
    """
    n = model.n
    k = sol.flow_state.jacobian_complex
    kzz, kzu = k[:n, :n], k[:n, n:]
    kuz, kuu = k[n:, :n], k[n:, n:]
    jg = realify_lin(kuu) - realify_antilin(np.conj(kzu))
    rz = realify_lin(kuz) - realify_antilin(np.conj(kzz))
    du_dz = -np.linalg.solve(jg, rz)
    return realify_lin(kzz) + realify_lin(kzu) @ du_dz


def f(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
      cfg: IntegratorConfig | None = None) -> KahlerPoint:
    """The companion map: flow the embedded point, drop the fiber coordinate."""
    cfg = cfg or IntegratorConfig()
    state = flow(H, embed(H.model, x), t, cfg)
    return KahlerPoint(state.point.chart, state.point.z.copy())


def f_with_jacobian(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                    cfg: IntegratorConfig | None = None):
    """f_t(x) together with its real chart derivative at x."""
    cfg = cfg or IntegratorConfig()
    n = H.model.n
    state = flow(H, embed(H.model, x), t, cfg, with_jacobian=True)
    k = state.jacobian_complex
    df = realify_lin(k[:n, :n]) + realify_antilin(k[:n, n:])
    y = KahlerPoint(state.point.chart, state.point.z.copy())
    return y, df, state


def _df_in_chart(model, y_point: KahlerPoint, target_chart: int,
                 df: np.ndarray) -> np.ndarray:
    """Compose df with the chart transition derivative at its image point."""
    if y_point.chart == target_chart:
        return df
    return chart_transition_dreal(complex(y_point.z[0])) @ df


def omega_t(H: HolomorphicHamiltonian, y: KahlerPoint, t: float,
            cfg: IntegratorConfig | None = None,
            newton: NewtonConfig | None = None) -> np.ndarray:
    """Pushed-forward symplectic form at y, defined by pulling back along f_t.

    Inverts f_t by Newton shooting (seeded with the time-(-t) map, which is
    the exact inverse), then transports omega at the preimage through the
    inverse Jacobian.
    """
    mat, _, _ = omega_t_with_data(H, y, t, cfg, newton)
    return mat


def omega_t_with_data(H: HolomorphicHamiltonian, y: KahlerPoint, t: float,
                      cfg: IntegratorConfig | None = None,
                      newton: NewtonConfig | None = None):
    cfg = cfg or IntegratorConfig()
    newton = newton or NewtonConfig()
    model = H.model
    if t == 0.0:
        eye = np.eye(2 * model.n)
        return omega_matrix(model, y), y, eye
    x = phi(H, y, -t, cfg, newton).y
    target = c2r(y.z)
    df = None
    for it in range(newton.max_iters):
        fy, df_raw, state = f_with_jacobian(H, x, t, cfg)
        fy_in = kahler_to_chart(model, fy, y.chart)
        df = _df_in_chart(model, fy, y.chart, df_raw)
        r = c2r(fy_in.z) - target
        if float(np.linalg.norm(r)) <= max(newton.tol, 1e-12):
            break
        if np.linalg.cond(df) > newton.cond_limit:
            raise FoliationDegeneracyError(
                "f_t is not invertible near the requested point", time=t)
        step = r2c(np.linalg.solve(df, -r))
        x = KahlerPoint(x.chart, x.z + step)
    else:
        raise FoliationDegeneracyError(
            "Newton inversion of f_t did not converge", time=t,
            residual=float(np.linalg.norm(r)))
    df_inv = np.linalg.solve(df, np.eye(2 * model.n))
    mat = df_inv.T @ omega_matrix(model, x) @ df_inv
    return mat, x, df


def frame_data(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
               cfg: IntegratorConfig | None = None,
               newton: NewtonConfig | None = None) -> FrameData:
    """J_t, dphi_t and omega_t at y = phi_t(x)."""
    sol = phi(H, x, t, cfg, newton)
    return FrameData(
        Jt=jt_from_solution(H.model, sol),
        dphi=dphi_from_solution(H.model, sol),
        omega_t=omega_t(H, sol.y, t, cfg, newton),
    )

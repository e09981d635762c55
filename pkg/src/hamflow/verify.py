"""Residual certification of the structural identities of the construction.

Every identity is turned into a numeric residual at a point (x, t):

* ``generator_residual``: time derivative of the family against the
  Hamilton-plus-rotated-gradient field at the image point.
* ``holomorphy_residual``: commutation of the finite-difference chart
  derivative with the complex structures (J_t after, J_0 before).
* ``corollary_residual``: the companion family f_t against the Hamilton
  field taken with respect to the transported form omega_t.
* ``pullback_residual``: omega = (df_t)^T omega_t df_t self-consistency.
* ``group_defect``: failure of the family to be a one-parameter group
  (diagnostic only; it vanishes just for group actions and linear flows).

Difference-based residuals use fixed steps (1e-5 in t and in the chart),
so their tolerances sit at 1e-5 while algebraic ones sit at 1e-8..1e-10.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._linalg import c2r, opnorm
from .geometry import (KahlerPoint, chart_distance, j0_matrix, kahler_to_chart,
                       omega_matrix)
from .flow import IntegratorConfig
from .hamiltonians import HolomorphicHamiltonian
from .leaf import (NewtonConfig, dphi_from_solution, f, f_with_jacobian,
                   jt_from_solution, omega_t, omega_t_with_data, phi)

DELTA_T = 1e-5
DELTA_X = 1e-5


def _defaults(cfg, newton):
    return cfg or IntegratorConfig(), newton or NewtonConfig()


def _tight(newton: NewtonConfig) -> NewtonConfig:
    # stencil solves feed O(delta) divided differences; polish them further
    return NewtonConfig(tol=min(newton.tol, 1e-12), max_iters=newton.max_iters,
                        max_halvings=newton.max_halvings,
                        cond_limit=newton.cond_limit)


def _dh_covectors(hz: np.ndarray, hu: np.ndarray):
    """Real differentials of Re h and Im h in the chart basis.

    At a base point dh(v) = hz . v + hu . conj(v) for a chart tangent v.
    """
    vals_q = hz + hu
    vals_p = 1j * (hz - hu)
    vals = np.concatenate([vals_q, vals_p])
    return vals.real.copy(), vals.imag.copy()


def _hamilton_field(omega: np.ndarray, dcov: np.ndarray) -> np.ndarray:
    """Solve omega(Xi, .) = dcov for Xi, in matrix form."""
    return np.linalg.solve(omega.T, dcov)


def generator_residual(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                       cfg: IntegratorConfig | None = None,
                       newton: NewtonConfig | None = None,
                       delta: float = DELTA_T) -> float:
    """Central-difference time derivative vs the predicted generator at y."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    sol = phi(H, x, t, cfg, newton)
    y = sol.y
    tight = _tight(newton)
    sol_p = phi(H, x, t + delta, cfg, tight, u0=sol.u_star)
    sol_m = phi(H, x, t - delta, cfg, tight, u0=sol.u_star)
    yp = kahler_to_chart(model, sol_p.y, y.chart)
    ym = kahler_to_chart(model, sol_m.y, y.chart)
    lhs = c2r((yp.z - ym.z) / (2.0 * delta))
    omega = omega_matrix(model, y)
    hz, hu = H.h_partials(y)
    dre, dim = _dh_covectors(hz, hu)
    xi_re = _hamilton_field(omega, dre)
    xi_im = _hamilton_field(omega, dim)
    jt = jt_from_solution(model, sol)
    rhs = xi_re + jt @ xi_im
    return float(np.linalg.norm(lhs - rhs))


def holomorphy_residual(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                        cfg: IntegratorConfig | None = None,
                        newton: NewtonConfig | None = None,
                        dx: float = DELTA_X) -> float:
    """Norm of J_t dphi - dphi J_0 with dphi from central differences."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    n = model.n
    sol = phi(H, x, t, cfg, newton)
    jt = jt_from_solution(model, sol)
    tight = _tight(newton)
    dirs = [np.eye(n)[j] + 0j for j in range(n)] + [1j * np.eye(n)[j] for j in range(n)]
    cols = []
    for d in dirs:
        xp = KahlerPoint(x.chart, x.z + dx * d)
        xm = KahlerPoint(x.chart, x.z - dx * d)
        sp = phi(H, xp, t, cfg, tight, u0=sol.u_star)
        sm = phi(H, xm, t, cfg, tight, u0=sol.u_star)
        zp = kahler_to_chart(model, sp.y, sol.y.chart).z
        zm = kahler_to_chart(model, sm.y, sol.y.chart).z
        cols.append(c2r((zp - zm) / (2.0 * dx)))
    dphi = np.column_stack(cols)
    return opnorm(jt @ dphi - dphi @ j0_matrix(n))


def corollary_residual(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                       cfg: IntegratorConfig | None = None,
                       newton: NewtonConfig | None = None,
                       delta: float = DELTA_T) -> float:
    """Time derivative of f_t against the omega_t-Hamilton field of h o f^-1."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    n = model.n
    y = f(H, x, t, cfg)
    yp = kahler_to_chart(model, f(H, x, t + delta, cfg), y.chart)
    ym = kahler_to_chart(model, f(H, x, t - delta, cfg), y.chart)
    lhs = c2r((yp.z - ym.z) / (2.0 * delta))
    wt, x_star, df = omega_t_with_data(H, y, t, cfg, newton)
    hz, hu = H.h_partials(x_star)
    dre_x, dim_x = _dh_covectors(hz, hu)
    # transform the covectors to y through the inverse chart derivative
    dre_y = np.linalg.solve(df.T, dre_x)
    dim_y = np.linalg.solve(df.T, dim_x)
    rhs = _hamilton_field(wt, dre_y) + j0_matrix(n) @ _hamilton_field(wt, dim_y)
    return float(np.linalg.norm(lhs - rhs))


def pullback_residual(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                      cfg: IntegratorConfig | None = None,
                      newton: NewtonConfig | None = None) -> float:
    """Self-consistency of the Jacobian plumbing behind omega_t."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    y, df, _ = f_with_jacobian(H, x, t, cfg)
    wt = omega_t(H, y, t, cfg, newton)
    return opnorm(omega_matrix(model, x) - df.T @ wt @ df)


def group_defect(H: HolomorphicHamiltonian, x: KahlerPoint, t: float, s: float,
                 cfg: IntegratorConfig | None = None,
                 newton: NewtonConfig | None = None) -> float:
    """|phi_{t+s}(x) - phi_t(phi_s(x))|; zero only for group-like families."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    direct = phi(H, x, t + s, cfg, newton).y
    stage = phi(H, x, s, cfg, newton).y
    composed = phi(H, stage, t, cfg, newton).y
    return chart_distance(model, direct, composed)


def jt_square_defect(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                     cfg: IntegratorConfig | None = None,
                     newton: NewtonConfig | None = None) -> float:
    """Norm of J_t^2 + identity."""
    cfg, newton = _defaults(cfg, newton)
    sol = phi(H, x, t, cfg, newton)
    jt = jt_from_solution(H.model, sol)
    return opnorm(jt @ jt + np.eye(2 * H.model.n))


def inverse_relation_defect(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                            cfg: IntegratorConfig | None = None,
                            newton: NewtonConfig | None = None) -> float:
    """|f_t(phi_{-t}(x)) - x|: the two families are inverse to each other."""
    cfg, newton = _defaults(cfg, newton)
    model = H.model
    back = phi(H, x, -t, cfg, newton).y
    roundtrip = f(H, back, t, cfg)
    return chart_distance(model, x, roundtrip)


def compatibility_min_eig(H: HolomorphicHamiltonian, x: KahlerPoint, t: float,
                          cfg: IntegratorConfig | None = None,
                          newton: NewtonConfig | None = None) -> float:
    """Smallest eigenvalue of sym(omega J_t) at y; positivity is monitored."""
    cfg, newton = _defaults(cfg, newton)
    sol = phi(H, x, t, cfg, newton)
    jt = jt_from_solution(H.model, sol)
    g = omega_matrix(H.model, sol.y) @ jt
    sym = 0.5 * (g + g.T)
    return float(np.min(np.linalg.eigvalsh(sym)))


# --- reporting -----------------------------------------------------------


@dataclass
class ResidualReport:
    """Pass/fail record for one identity over a sweep of points."""

    name: str
    tolerance: float
    points: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def add(self, label: dict, residual: float):
        self.points.append(dict(label))
        self.residuals.append(float(residual))

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "points": [dict(lbl, residual=res)
                       for lbl, res in zip(self.points, self.residuals)],
        }


def report_csv_rows(reports: list[ResidualReport]) -> list[tuple]:
    """Flat rows (name, seed_id, t, residual), deterministically ordered."""
    rows = []
    for rep in sorted(reports, key=lambda r: r.name):
        for lbl, res in zip(rep.points, rep.residuals):
            rows.append((rep.name, lbl.get("seed_id", -1), lbl.get("t", 0.0), res))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return rows

"""Independent closed-form ground truth for three special classes.

These deliberately share no solver code with the flow engine or the leaf
solver: the quadratic case works in ambient linear algebra through matrix
exponentials, the sphere group case through 2x2 matrix exponentials acting
by fractional-linear maps, and the real case through a high-order real
integrator on the base manifold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import ConfigError, DomainError, FoliationDegeneracyError
from .geometry import CHART_SWITCH_RADIUS, FLAT, SPHERE, KahlerPoint, coord
from .hamiltonians import PolynomialHamiltonian, Term, _canonical

_COND_LIMIT = 1e10


# --- local real/complex plumbing (kept self-contained on purpose) ---------

def _lin(c: np.ndarray) -> np.ndarray:
    c = np.atleast_2d(c)
    return np.block([[c.real, -c.imag], [c.imag, c.real]])


def _antilin(a: np.ndarray) -> np.ndarray:
    a = np.atleast_2d(a)
    return np.block([[a.real, a.imag], [a.imag, -a.real]])


def _c2r(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag])


def _r2c(w: np.ndarray) -> np.ndarray:
    half = w.size // 2
    return w[:half] + 1j * w[half:]


def _jt_from_leaf_directions(dz_leaf: np.ndarray, du_leaf: np.ndarray,
                             t: float) -> np.ndarray:
    """Complex structure induced by splitting off a transported leaf."""
    n = dz_leaf.shape[0]
    eye, zero = np.eye(n), np.zeros((n, n))
    lift = np.vstack([np.hstack([eye, zero]), np.hstack([zero, eye]),
                      np.hstack([eye, zero]), np.hstack([zero, -eye])])
    d_real = np.vstack([_lin(dz_leaf), _lin(du_leaf)])
    sys = np.hstack([lift, d_real])
    if np.linalg.cond(sys) > _COND_LIMIT:
        raise FoliationDegeneracyError("transported leaf tangent to the real locus",
                                       time=t)
    i_block = _lin(1j * np.eye(n))
    i_mat = np.zeros((4 * n, 4 * n))
    i_mat[:2 * n, :2 * n] = i_block
    i_mat[2 * n:, 2 * n:] = i_block
    sol = np.linalg.solve(sys, i_mat @ lift)
    return sol[:2 * n, :]


# --- quadratic hamiltonians on flat C^n -----------------------------------


@dataclass(frozen=True, eq=False)
class QuadraticSpec:
    """H = 1/2 w^T A w + b . w + c in ambient coordinates w = (z, u)."""

    A: np.ndarray
    b: np.ndarray
    c: complex = 0.0

    def __post_init__(self):
        a = np.asarray(self.A, dtype=complex)
        if not np.allclose(a, a.T, atol=1e-13):
            raise ValueError("quadratic coefficient matrix must be symmetric")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "b", np.asarray(self.b, dtype=complex))

    @property
    def n(self) -> int:
        return self.A.shape[0] // 2

    @staticmethod
    def from_hamiltonian(h: PolynomialHamiltonian) -> "QuadraticSpec":
        if h.model.kind != FLAT:
            raise ConfigError("quadratic oracle requires the flat model")
        n = h.model.n
        a = np.zeros((2 * n, 2 * n), dtype=complex)
        b = np.zeros(2 * n, dtype=complex)
        c0 = 0.0 + 0.0j
        for t in h.terms:
            exps = list(t.alpha) + list(t.beta)
            total = sum(exps)
            if t.denom_pow != 0 or total > 2:
                raise ConfigError("hamiltonian is not quadratic")
            if total == 0:
                c0 += t.c
            elif total == 1:
                b[exps.index(1)] += t.c
            else:
                nz = [i for i, e in enumerate(exps) if e > 0]
                if len(nz) == 1:
                    a[nz[0], nz[0]] += 2.0 * t.c
                else:
                    a[nz[0], nz[1]] += t.c
                    a[nz[1], nz[0]] += t.c
        return QuadraticSpec(a, b, c0)


def _ambient_generator(n: int) -> np.ndarray:
    """Block matrix N with field (dz, du) = N (dH/dz, dH/du)."""
    top = np.hstack([np.zeros((n, n)), -2j * np.eye(n)])
    bot = np.hstack([2j * np.eye(n), np.zeros((n, n))])
    return np.vstack([top, bot])


def oracle_quadratic(spec: QuadraticSpec, x: KahlerPoint, t: float
                     ) -> tuple[KahlerPoint, np.ndarray]:
    """Exact leaf transport for quadratic H: affine flow plus a linear solve.

    Returns the image point and the induced complex structure there.
    """
    n = spec.n
    gen = _ambient_generator(n)
    s_mat = gen @ spec.A
    drift = gen @ spec.b
    aug = np.zeros((2 * n + 1, 2 * n + 1), dtype=complex)
    aug[:2 * n, :2 * n] = s_mat
    aug[:2 * n, 2 * n] = drift
    e_full = expm(t * aug)
    e = e_full[:2 * n, :2 * n]
    m = e_full[:2 * n, 2 * n]
    ezz, ezu = e[:n, :n], e[:n, n:]
    euz, euu = e[n:, :n], e[n:, n:]
    mz, mu = m[:n], m[n:]
    z_x = coord(x.z)
    # intersection with the real locus: E_uu u0 - conj(E_zu) conj(u0) = rhs
    rhs_c = np.conj(ezz @ z_x + mz) - euz @ z_x - mu
    sys = _lin(euu) - _antilin(np.conj(ezu))
    if np.linalg.cond(sys) > _COND_LIMIT:
        raise FoliationDegeneracyError("caustic: intersection system singular",
                                       time=t)
    u0 = _r2c(np.linalg.solve(sys, _c2r(rhs_c)))
    y = KahlerPoint(0, ezz @ z_x + ezu @ u0 + mz)
    jt = _jt_from_leaf_directions(ezu, euu, t)
    return y, jt


# --- sphere group actions --------------------------------------------------

# Generators of the fractional-linear fields matching the Hamilton fields of
# the moment components x1, x2, x3 (unit sphere, area 4*pi).
_ZETA = (
    np.array([[0.0, -0.5j], [-0.5j, 0.0]]),
    np.array([[0.0, 0.5], [-0.5, 0.0]], dtype=complex),
    np.array([[0.5j, 0.0], [0.0, -0.5j]]),
)


@dataclass(frozen=True, eq=False)
class Sl2Generator:
    """Traceless 2x2 generator of a fractional-linear one-parameter family."""

    zeta: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=complex)
        if abs(np.trace(z)) > 1e-12:
            raise ValueError("generator must be traceless")
        object.__setattr__(self, "zeta", z)

    @staticmethod
    def from_moment(a, b=None) -> "Sl2Generator":
        """Generator of h = a . x + i b . x for real 3-vectors a, b."""
        a = np.asarray(a, dtype=float)
        b = np.zeros(3) if b is None else np.asarray(b, dtype=float)
        zeta = sum((a[j] + 1j * b[j]) * _ZETA[j] for j in range(3))
        return Sl2Generator(zeta)


def sl2_from_hamiltonian(h: PolynomialHamiltonian) -> Sl2Generator:
    """Recognize h as a complex combination of moment components."""
    if h.model.kind != SPHERE:
        raise ConfigError("fractional-linear oracle requires the sphere model")
    w = np.zeros(3, dtype=complex)
    t11 = 0.0 + 0.0j
    t00 = 0.0 + 0.0j
    for (alpha, beta, k), c in _canonical(h.terms).items():
        key = (alpha[0], beta[0], k)
        if key == (0, 0, 0):
            continue  # constants do not move anything
        if k != 1 or alpha[0] > 1 or beta[0] > 1:
            raise ConfigError("hamiltonian is not a moment-component combination")
        if key == (1, 0, 1):
            w[0] += 0.5 * c
            w[1] += 0.5j * c
        elif key == (0, 1, 1):
            w[0] += 0.5 * c
            w[1] += -0.5j * c
        elif key == (0, 0, 1):
            t00 = c
        elif key == (1, 1, 1):
            t11 = c
    if abs(t11 + t00) > 1e-12 * max(1.0, abs(t00)):
        raise ConfigError("hamiltonian is not a moment-component combination")
    w[2] = t00
    zeta = sum(w[j] * _ZETA[j] for j in range(3))
    return Sl2Generator(zeta)


def oracle_mobius(gen: Sl2Generator, x: KahlerPoint, t: float) -> KahlerPoint:
    """Fractional-linear image of a sphere point under exp(t * zeta)."""
    g = expm(t * gen.zeta)
    z = complex(coord(x.z)[0])
    if x.chart == 0:
        h0, h1 = z, 1.0 + 0.0j  # homogeneous coordinates (z : 1)
    else:
        h0, h1 = 1.0 + 0.0j, z  # chart 1 stores w with (1 : w)
    w0 = g[0, 0] * h0 + g[0, 1] * h1
    w1 = g[1, 0] * h0 + g[1, 1] * h1
    if abs(w0) <= CHART_SWITCH_RADIUS * abs(w1):
        return KahlerPoint(0, np.array([w0 / w1]))
    if abs(w1) == 0.0 and abs(w0) == 0.0:
        raise DomainError("degenerate fractional-linear image")
    return KahlerPoint(1, np.array([w1 / w0]))


# --- real hamiltonians: ordinary Hamilton flow on the base ----------------


def _diff_zbar(terms: list[Term], j: int) -> list[Term]:
    out = []
    for t in terms:
        if t.beta[j] > 0:
            beta = list(t.beta)
            beta[j] -= 1
            out.append(Term(t.c * t.beta[j], t.alpha, tuple(beta), t.denom_pow))
        if t.denom_pow > 0:
            alpha = list(t.alpha)
            alpha[j] += 1
            out.append(Term(-t.c * t.denom_pow, tuple(alpha), t.beta,
                            t.denom_pow + 1))
    return out


def _eval_terms(terms: list[Term], z: np.ndarray, zbar: np.ndarray) -> complex:
    total = 0.0 + 0.0j
    for t in terms:
        val = t.c
        for j in range(z.size):
            if t.alpha[j]:
                val *= z[j] ** t.alpha[j]
            if t.beta[j]:
                val *= zbar[j] ** t.beta[j]
        if t.denom_pow:
            val /= (1.0 + (z * zbar).real.sum()) ** t.denom_pow
        total += val
    return total


def _flip_chart_terms(terms: list[Term]) -> list[Term]:
    out = []
    for t in terms:
        a, b, k = t.alpha[0], t.beta[0], t.denom_pow
        if a > k or b > k:
            raise DomainError("hamiltonian not expressible in the antipodal chart")
        out.append(Term(t.c, (k - a,), (k - b,), k))
    return out


def real_reference(h: PolynomialHamiltonian, x: KahlerPoint, t: float,
                   tol: float = 1e-12) -> KahlerPoint:
    """Ordinary Hamilton flow of a real-valued h on the base manifold.

    Integrates dz/dt from omega(Xi_h, .) = dh with a high-order adaptive
    method; on the sphere the chart is switched once |z| passes 1.5.
    """
    if not h.is_real_valued():
        raise ValueError("real reference flow requires a real-valued hamiltonian")
    model = h.model
    n = model.n
    terms = list(h.terms)
    chart = x.chart
    z = coord(x.z).astype(complex)

    def make_rhs(term_list):
        dzb = [_diff_zbar(term_list, j) for j in range(n)]

        def rhs(_t, yreal):
            zz = yreal[:n] + 1j * yreal[n:]
            zb = np.conj(zz)
            hzb = np.array([_eval_terms(dzb[j], zz, zb) for j in range(n)])
            if model.kind == FLAT:
                a = -2j * hzb
            else:
                r2 = float((zz * zb).real.sum())
                a = -0.5j * (1.0 + r2) ** 2 * hzb
            return np.concatenate([a.real, a.imag])
        return rhs

    if t == 0.0:
        return KahlerPoint(chart, z)

    t_done = 0.0
    for _segment in range(64):
        rhs = make_rhs(terms)
        kwargs = dict(method="DOP853", rtol=tol, atol=tol)
        if model.kind == SPHERE:
            def leave_band(_t, yreal):
                zz = yreal[:n] + 1j * yreal[n:]
                return 1.5 - float(np.max(np.abs(zz)))
            leave_band.terminal = True
            leave_band.direction = -1
            kwargs["events"] = leave_band
        sol = solve_ivp(rhs, (t_done, t), np.concatenate([z.real, z.imag]),
                        **kwargs)
        if not sol.success:
            raise DomainError(f"reference integration failed: {sol.message}")
        yfin = sol.y[:, -1]
        z = yfin[:n] + 1j * yfin[n:]
        t_done = float(sol.t[-1])
        if sol.status == 1:  # chart-switch event
            z = 1.0 / z
            terms = _flip_chart_terms(terms)
            chart = 1 - chart
            continue
        return KahlerPoint(chart, z)
    raise DomainError("reference integration exceeded the chart-switch budget")

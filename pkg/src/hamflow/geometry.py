"""Concrete models of the base manifold and its complexification.

Two models are supported:

* ``flat``: C^n with the standard form, normalized so that omega equals
  sum_j dq_j ^ dp_j exactly (chart convention omega = (i/2) sum dz_j ^ dzbar_j).
* ``sphere``: the unit sphere of total area 4*pi, seen as CP^1 in two
  stereographic charts (chart 0 centered at the x3 = +1 pole, chart 1 at the
  antipode, transition z -> 1/z), with omega = 2i dz ^ dzbar / (1+|z|^2)^2.

The complexification is the product model: ambient points carry holomorphic
coordinates (z, u) where u plays the role of the conjugated coordinate; the
real locus is { u = conj(z) } and the holomorphic form is Omega, obtained
from omega by the substitution zbar -> u.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import c2r, realify_lin
from .errors import DomainError

FLAT = "flat"
SPHERE = "sphere"

# Chart-switch hysteresis: sphere points prefer the chart where |z| <= 1.1.
CHART_SWITCH_RADIUS = 1.1
# Omega degenerates on the antidiagonal 1 + z*u = 0; stay away from it.
SPHERE_DOMAIN_GUARD = 1e-8


def coord(z) -> np.ndarray:
    """Coerce a scalar or sequence into a complex coordinate vector."""
    return np.atleast_1d(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class ModelDescriptor:
    """Which manifold we are on: flat C^n or the unit sphere (n = 1)."""

    kind: str
    n: int = 1

    def __post_init__(self):
        if self.kind not in (FLAT, SPHERE):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.n < 1:
            raise ValueError("dimension must be a positive integer")
        if self.kind == SPHERE and self.n != 1:
            raise ValueError("sphere model is one dimensional")

    @property
    def num_charts(self) -> int:
        return 2 if self.kind == SPHERE else 1

    @staticmethod
    def flat(n: int = 1) -> "ModelDescriptor":
        return ModelDescriptor(FLAT, n)

    @staticmethod
    def sphere() -> "ModelDescriptor":
        return ModelDescriptor(SPHERE, 1)


@dataclass(frozen=True, eq=False)
class KahlerPoint:
    """A point of the base manifold: chart index + complex chart coordinate."""

    chart: int
    z: np.ndarray

    def __repr__(self):
        return f"KahlerPoint(chart={self.chart}, z={self.z})"


@dataclass(frozen=True, eq=False)
class AmbientPoint:
    """A point of the complexification in product coordinates (z, u)."""

    chart: int
    z: np.ndarray
    u: np.ndarray

    def __repr__(self):
        return f"AmbientPoint(chart={self.chart}, z={self.z}, u={self.u})"


@dataclass(frozen=True, eq=False)
class SymplecticData:
    """Structure matrices at a base point.

    omega and J0 are real 2n x 2n matrices in the chart basis
    (Re z, Im z); Omega is the complex n x n coefficient matrix of the
    holomorphic form sum_jk Omega_jk dz_j ^ du_k at the embedded point.
    """

    omega: np.ndarray
    J0: np.ndarray
    Omega: np.ndarray


def kahler_point(model: ModelDescriptor, z, chart: int = 0) -> KahlerPoint:
    """Build a base point, applying the sphere chart hysteresis rule."""
    pt = KahlerPoint(chart, coord(z))
    return normalize_chart(model, pt)


def normalize_chart(model: ModelDescriptor, x: KahlerPoint) -> KahlerPoint:
    """Flip sphere points to the antipodal chart once |z| leaves the band."""
    if model.kind != SPHERE:
        return x
    r = float(np.max(np.abs(x.z)))
    if r > CHART_SWITCH_RADIUS:
        return KahlerPoint(1 - x.chart, 1.0 / x.z)
    return x


def kahler_to_chart(model: ModelDescriptor, x: KahlerPoint, chart: int) -> KahlerPoint:
    """Express a point in the requested chart (sphere transition z -> 1/z)."""
    if x.chart == chart:
        return x
    if model.kind != SPHERE:
        raise DomainError("flat model has a single chart")
    if np.any(np.abs(x.z) == 0.0):
        raise DomainError("chart transition undefined at the chart center")
    return KahlerPoint(chart, 1.0 / x.z)


def chart_distance(model: ModelDescriptor, a: KahlerPoint, b: KahlerPoint) -> float:
    """Euclidean coordinate distance, with b coerced into a's chart."""
    b = kahler_to_chart(model, b, a.chart)
    return float(np.linalg.norm(a.z - b.z))


def embed(model: ModelDescriptor, x: KahlerPoint) -> AmbientPoint:
    """Inclusion of the base manifold into the complexification."""
    return AmbientPoint(x.chart, x.z.copy(), np.conj(x.z))


def involution(model: ModelDescriptor, p: AmbientPoint) -> AmbientPoint:
    """Anti-holomorphic involution (z, u) -> (conj u, conj z).

    Its fixed-point set is exactly the real locus { u = conj(z) }.
    """
    return AmbientPoint(p.chart, np.conj(p.u), np.conj(p.z))


def project_pi0(model: ModelDescriptor, p: AmbientPoint) -> KahlerPoint:
    """Holomorphic projection dropping the fiber coordinate u."""
    return KahlerPoint(p.chart, p.z.copy())


def on_real_locus(p: AmbientPoint, tol: float = 1e-9) -> bool:
    return bool(np.max(np.abs(p.u - np.conj(p.z))) <= tol)


# --- structure matrices -------------------------------------------------


def _kahler_coeff(model: ModelDescriptor, z: np.ndarray) -> np.ndarray:
    """Hermitian coefficient h_jk of omega = i sum h_jk dz_j ^ dzbar_k."""
    if model.kind == FLAT:
        return 0.5 * np.eye(model.n)
    r2 = float(np.real(z[0] * np.conj(z[0])))
    return np.array([[2.0 / (1.0 + r2) ** 2]])


def ambient_omega_coeff(model: ModelDescriptor, p: AmbientPoint) -> np.ndarray:
    """Coefficient matrix of Omega = sum Omega_jk dz_j ^ du_k at p."""
    if model.kind == FLAT:
        return 0.5j * np.eye(model.n)
    w = 1.0 + p.z[0] * p.u[0]
    if abs(w) <= SPHERE_DOMAIN_GUARD:
        raise DomainError("ambient point on the antidiagonal: Omega degenerates")
    return np.array([[2.0j / w ** 2]])


def eval_omega_ambient(model: ModelDescriptor, p: AmbientPoint,
                       v1: tuple[np.ndarray, np.ndarray],
                       v2: tuple[np.ndarray, np.ndarray]) -> complex:
    """Omega evaluated on two real ambient tangent vectors (dz, du)."""
    oc = ambient_omega_coeff(model, p)
    dz1, du1 = v1
    dz2, du2 = v2
    return complex(dz1 @ oc @ du2 - dz2 @ oc @ du1)


def eval_omega_base(model: ModelDescriptor, x: KahlerPoint,
                    w1: np.ndarray, w2: np.ndarray) -> float:
    """omega evaluated on two chart tangent vectors (complex dz's)."""
    h = _kahler_coeff(model, x.z)
    val = 1j * (w1 @ h @ np.conj(w2) - w2 @ h @ np.conj(w1))
    return float(np.real(val))


def omega_matrix(model: ModelDescriptor, x: KahlerPoint) -> np.ndarray:
    """Real antisymmetric 2n x 2n matrix of omega in the (Re z, Im z) basis."""
    n = model.n
    h = _kahler_coeff(model, x.z)
    # omega(v, w) = -2 Im(v^T h conj(w)) for Hermitian h
    basis = np.eye(n)
    m = np.zeros((2 * n, 2 * n))
    vecs = [basis[j] + 0j for j in range(n)] + [1j * basis[j] for j in range(n)]
    for a, va in enumerate(vecs):
        for b, vb in enumerate(vecs):
            m[a, b] = float(np.real(1j * (va @ h @ np.conj(vb) - vb @ h @ np.conj(va))))
    return m


def j0_matrix(n: int) -> np.ndarray:
    """Multiplication by i in the chart basis (Re z, Im z)."""
    return realify_lin(1j * np.eye(n))


def metric_matrix(model: ModelDescriptor, x: KahlerPoint) -> np.ndarray:
    """g(v, w) = omega(v, J0 w) as a real 2n x 2n matrix."""
    return omega_matrix(model, x) @ j0_matrix(model.n)


def kahler_forms(model: ModelDescriptor, x: KahlerPoint) -> SymplecticData:
    """Evaluate the model's fixed structures at a base point."""
    return SymplecticData(
        omega=omega_matrix(model, x),
        J0=j0_matrix(model.n),
        Omega=ambient_omega_coeff(model, embed(model, x)),
    )


def ambient_basis(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Real basis of the ambient tangent space as (dz, du) complex pairs."""
    eye = np.eye(n)
    out = []
    zero = np.zeros(n, dtype=complex)
    for j in range(n):
        out.append((eye[j] + 0j, zero))
    for j in range(n):
        out.append((1j * eye[j], zero))
    for j in range(n):
        out.append((zero, eye[j] + 0j))
    for j in range(n):
        out.append((zero, 1j * eye[j]))
    return out


def ambient_omega_complex_matrix(model: ModelDescriptor, p: AmbientPoint) -> np.ndarray:
    """Complex antisymmetric 4n x 4n matrix of Omega on the real basis."""
    n = model.n
    basis = ambient_basis(n)
    m = np.zeros((4 * n, 4 * n), dtype=complex)
    oc = ambient_omega_coeff(model, p)
    for a, (dza, dua) in enumerate(basis):
        for b, (dzb, dub) in enumerate(basis):
            m[a, b] = dza @ oc @ dub - dzb @ oc @ dua
    return m


def omega1_matrix(model: ModelDescriptor, p: AmbientPoint) -> np.ndarray:
    """Real part of Omega as a real 4n x 4n matrix."""
    return ambient_omega_complex_matrix(model, p).real.copy()


def omega2_matrix(model: ModelDescriptor, p: AmbientPoint) -> np.ndarray:
    """Imaginary part of Omega as a real 4n x 4n matrix."""
    return ambient_omega_complex_matrix(model, p).imag.copy()


def ambient_i_matrix(n: int) -> np.ndarray:
    """Multiplication by i on both ambient blocks, as a real 4n x 4n matrix."""
    block = realify_lin(1j * np.eye(n))
    out = np.zeros((4 * n, 4 * n))
    out[:2 * n, :2 * n] = block
    out[2 * n:, 2 * n:] = block
    return out


def chart_transition_dreal(z_scalar: complex) -> np.ndarray:
    """Real 2x2 derivative of the sphere chart transition z -> 1/z."""
    return realify_lin(np.array([[-1.0 / z_scalar ** 2]]))


def sphere_moment(x: KahlerPoint) -> np.ndarray:
    """Euclidean coordinates (x1, x2, x3) of a sphere point."""
    z = complex(x.z[0])
    d = 1.0 + abs(z) ** 2
    m = np.array([2 * z.real / d, 2 * z.imag / d, (1 - abs(z) ** 2) / d])
    if x.chart == 1:
        # chart 1 is centered at the x3 = -1 pole; x1 is shared, x2 and x3 flip
        m[1] = -m[1]
        m[2] = -m[2]
    return m


def lift_base_tangent(w: np.ndarray) -> np.ndarray:
    """Ambient real 4n-vector of the lift (w, conj w) of a base tangent w."""
    return np.concatenate([c2r(w), c2r(np.conj(w))])

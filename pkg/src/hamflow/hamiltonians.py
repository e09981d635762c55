"""Polynomial hamiltonians and their holomorphic extensions.

A hamiltonian on a chart is a finite sum of terms

    c * z^alpha * zbar^beta / (1 + z*zbar)^k

with complex coefficient c and multi-indices alpha, beta (the denominator
power k is only used on the sphere, where it makes the three moment
components x1, x2, x3 and their products expressible; k = 0 always on flat
models).  The holomorphic extension substitutes zbar -> u termwise, turning
the denominator into (1 + z*u)^k.  Everything downstream only ever needs
values and exact termwise derivatives of the extension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError
from .geometry import (SPHERE, SPHERE_DOMAIN_GUARD, AmbientPoint, KahlerPoint,
                       ModelDescriptor, coord, embed)


@dataclass(frozen=True)
class Term:
    """One monomial c * z^alpha * conj(z)^beta / (1 + z conj(z))^denom_pow."""

    c: complex
    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    denom_pow: int = 0


def _to_tuple(idx) -> tuple[int, ...]:
    return tuple(int(i) for i in np.atleast_1d(idx))


def term(c, alpha, beta, denom_pow: int = 0) -> Term:
    return Term(complex(c), _to_tuple(alpha), _to_tuple(beta), int(denom_pow))


def _validate_terms(model: ModelDescriptor, terms) -> tuple[Term, ...]:
    out = []
    for t in terms:
        if len(t.alpha) != model.n or len(t.beta) != model.n:
            raise ConfigError(
                f"term multi-index length must equal the dimension {model.n}")
        if any(a < 0 for a in t.alpha) or any(b < 0 for b in t.beta):
            raise ConfigError("term exponents must be nonnegative")
        if t.denom_pow < 0:
            raise ConfigError("denom_pow must be nonnegative")
        if t.denom_pow > 0 and model.kind != SPHERE:
            raise ConfigError("denominator powers are only defined on the sphere")
        out.append(t)
    return tuple(out)


def _canonical(terms) -> dict[tuple, complex]:
    acc: dict[tuple, complex] = {}
    for t in terms:
        key = (t.alpha, t.beta, t.denom_pow)
        acc[key] = acc.get(key, 0.0) + complex(t.c)
    return {k: v for k, v in acc.items() if abs(v) > 0.0}


def _diff_terms_z(terms, j: int) -> list[Term]:
    out = []
    for t in terms:
        if t.alpha[j] > 0:
            alpha = list(t.alpha)
            alpha[j] -= 1
            out.append(Term(t.c * t.alpha[j], tuple(alpha), t.beta, t.denom_pow))
        if t.denom_pow > 0:
            beta = list(t.beta)
            beta[j] += 1
            out.append(Term(-t.c * t.denom_pow, t.alpha, tuple(beta), t.denom_pow + 1))
    return out


def _diff_terms_u(terms, j: int) -> list[Term]:
    out = []
    for t in terms:
        if t.beta[j] > 0:
            beta = list(t.beta)
            beta[j] -= 1
            out.append(Term(t.c * t.beta[j], t.alpha, tuple(beta), t.denom_pow))
        if t.denom_pow > 0:
            alpha = list(t.alpha)
            alpha[j] += 1
            out.append(Term(-t.c * t.denom_pow, tuple(alpha), t.beta, t.denom_pow + 1))
    return out


def transform_terms_to_other_chart(terms) -> list[Term]:
    """Re-express sphere terms through the transition z -> 1/z.

    A term c z^a zbar^b / (1+z zbar)^k maps to c w^(k-a) wbar^(k-b) /
    (1+w wbar)^k, which stays in the representation iff k >= max(a, b)
    for every term.
    """
    out = []
    for t in terms:
        a, b, k = t.alpha[0], t.beta[0], t.denom_pow
        if a > k or b > k:
            raise DomainError(
                "hamiltonian term is not expressible in the antipodal chart "
                f"(alpha={a}, beta={b}, denom_pow={k})")
        out.append(Term(t.c, (k - a,), (k - b,), k))
    return out


class _TermArray:
    """Vectorized evaluator for one list of terms."""

    def __init__(self, terms, n: int):
        if not terms:
            terms = [Term(0.0, (0,) * n, (0,) * n, 0)]
        self.n = n
        self.coeff = np.array([t.c for t in terms], dtype=complex)
        self.alpha = np.array([t.alpha for t in terms], dtype=np.int64)
        self.beta = np.array([t.beta for t in terms], dtype=np.int64)
        self.k = np.array([t.denom_pow for t in terms], dtype=np.int64)
        self.has_denom = bool(np.any(self.k > 0))

    def value(self, z: np.ndarray, u: np.ndarray) -> complex:
        if self.n == 1:
            z0, u0 = complex(z[0]), complex(u[0])
            vals = self.coeff * z0 ** self.alpha[:, 0] * u0 ** self.beta[:, 0]
            if self.has_denom:
                w = 1.0 + z0 * u0
                if abs(w) <= SPHERE_DOMAIN_GUARD:
                    raise DomainError("evaluation on the antidiagonal 1 + z*u = 0")
                vals = vals * w ** (-self.k)
        else:
            vals = self.coeff * np.prod(z[None, :] ** self.alpha, axis=1) \
                * np.prod(u[None, :] ** self.beta, axis=1)
        return complex(vals.sum())


class _StackedEval:
    """Evaluate several term lists in one vectorized pass."""

    def __init__(self, term_lists, n: int):
        self.n = n
        padded = [lst if lst else [Term(0.0, (0,) * n, (0,) * n, 0)]
                  for lst in term_lists]
        sizes = [len(lst) for lst in padded]
        flat = [t for lst in padded for t in lst]
        self.coeff = np.array([t.c for t in flat], dtype=complex)
        self.alpha = np.array([t.alpha for t in flat], dtype=np.int64)
        self.beta = np.array([t.beta for t in flat], dtype=np.int64)
        self.k = np.array([t.denom_pow for t in flat], dtype=np.int64)
        self.has_denom = bool(np.any(self.k > 0))
        self.starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.intp)

    def eval(self, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        if self.n == 1:
            z0, u0 = complex(z[0]), complex(u[0])
            vals = self.coeff * z0 ** self.alpha[:, 0] * u0 ** self.beta[:, 0]
            if self.has_denom:
                w = 1.0 + z0 * u0
                if abs(w) <= SPHERE_DOMAIN_GUARD:
                    raise DomainError("evaluation on the antidiagonal 1 + z*u = 0")
                vals = vals * w ** (-self.k)
        else:
            vals = self.coeff * np.prod(z[None, :] ** self.alpha, axis=1) \
                * np.prod(u[None, :] ** self.beta, axis=1)
        return np.add.reduceat(vals, self.starts)


@dataclass(frozen=True, eq=False)
class PolynomialHamiltonian:
    """A complex-valued hamiltonian on the base manifold, one chart."""

    model: ModelDescriptor
    chart: int
    terms: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", _validate_terms(self.model, self.terms))

    def eval(self, z) -> complex:
        """Value h(z, zbar) at a chart coordinate."""
        z = coord(z)
        return _TermArray(list(self.terms), self.model.n).value(z, np.conj(z))

    def is_real_valued(self, tol: float = 1e-12) -> bool:
        """True iff the coefficient map satisfies c(a, b) = conj(c(b, a))."""
        canon = _canonical(self.terms)
        scale = max((abs(v) for v in canon.values()), default=1.0)
        for (a, b, k), c in canon.items():
            mirror = canon.get((b, a, k), 0.0)
            if abs(c - np.conj(mirror)) > tol * max(scale, 1.0):
                return False
        return True

    def scaled(self, factor: complex) -> "PolynomialHamiltonian":
        return PolynomialHamiltonian(
            self.model, self.chart,
            tuple(Term(t.c * factor, t.alpha, t.beta, t.denom_pow)
                  for t in self.terms))

    def __add__(self, other: "PolynomialHamiltonian") -> "PolynomialHamiltonian":
        if other.model != self.model or other.chart != self.chart:
            raise ConfigError("can only add hamiltonians on the same chart")
        return PolynomialHamiltonian(self.model, self.chart,
                                     self.terms + other.terms)

    def product(self, other: "PolynomialHamiltonian") -> "PolynomialHamiltonian":
        out = []
        for s in self.terms:
            for t in other.terms:
                out.append(Term(
                    s.c * t.c,
                    tuple(a + b for a, b in zip(s.alpha, t.alpha)),
                    tuple(a + b for a, b in zip(s.beta, t.beta)),
                    s.denom_pow + t.denom_pow))
        return PolynomialHamiltonian(self.model, self.chart, tuple(out))

    def extend(self) -> "HolomorphicHamiltonian":
        return HolomorphicHamiltonian(self.model, self.chart, list(self.terms))

    @staticmethod
    def from_records(model: ModelDescriptor, records, chart: int = 0
                     ) -> "PolynomialHamiltonian":
        """Parse the record format {re, im, alpha, beta, denom_pow}."""
        terms = []
        for i, rec in enumerate(records):
            try:
                c = float(rec.get("re", 0.0)) + 1j * float(rec.get("im", 0.0))
                terms.append(Term(c, _to_tuple(rec["alpha"]),
                                  _to_tuple(rec["beta"]),
                                  int(rec.get("denom_pow", 0))))
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"hamiltonian term {i}: {exc}") from exc
        if not terms:
            raise ConfigError("hamiltonian: at least one term required")
        return PolynomialHamiltonian(model, chart, tuple(terms))

    def to_records(self) -> list[dict]:
        return [{"re": t.c.real, "im": t.c.imag, "alpha": list(t.alpha),
                 "beta": list(t.beta), "denom_pow": t.denom_pow}
                for t in self.terms]


class _ChartData:
    """Cached term lists and stacked evaluators for one ambient chart."""

    def __init__(self, terms: list[Term], n: int):
        self.terms = terms
        self.n = n
        self.value = _TermArray(terms, n)
        self.dz = [_diff_terms_z(terms, j) for j in range(n)]
        self.du = [_diff_terms_u(terms, j) for j in range(n)]
        self.dzz = [[_diff_terms_z(self.dz[j], i) for i in range(n)] for j in range(n)]
        self.dzu = [[_diff_terms_u(self.dz[j], i) for i in range(n)] for j in range(n)]
        self.duu = [[_diff_terms_u(self.du[j], i) for i in range(n)] for j in range(n)]
        first = self.dz + self.du
        second = [self.dzz[j][i] for j in range(n) for i in range(n)] \
            + [self.dzu[j][i] for j in range(n) for i in range(n)] \
            + [self.duu[j][i] for j in range(n) for i in range(n)]
        self.first_stack = _StackedEval(first, n)
        self.full_stack = _StackedEval(first + second, n)

    def first(self, z, u):
        vals = self.first_stack.eval(z, u)
        n = self.n
        return vals[:n], vals[n:2 * n]

    def full(self, z, u):
        vals = self.full_stack.eval(z, u)
        n = self.n
        hz, hu = vals[:n], vals[n:2 * n]
        base = 2 * n
        hzz = vals[base:base + n * n].reshape(n, n)
        hzu = vals[base + n * n:base + 2 * n * n].reshape(n, n)
        huu = vals[base + 2 * n * n:base + 3 * n * n].reshape(n, n)
        return hz, hu, hzz, hzu, huu


class HolomorphicHamiltonian:
    """Holomorphic extension H(z, u) with exact termwise derivatives.

    On the sphere the representation in the antipodal chart is derived on
    demand; flat models have a single chart.
    """

    def __init__(self, model: ModelDescriptor, chart: int, terms: list[Term]):
        self.model = model
        self.base_chart = chart
        self._charts: dict[int, _ChartData] = {chart: _ChartData(list(terms), model.n)}

    def chart_data(self, chart: int) -> _ChartData:
        if chart not in self._charts:
            if self.model.kind != SPHERE:
                raise DomainError("flat model has a single chart")
            known = self._charts[self.base_chart]
            self._charts[chart] = _ChartData(
                transform_terms_to_other_chart(known.terms), self.model.n)
        return self._charts[chart]

    def value(self, p: AmbientPoint) -> complex:
        return self.chart_data(p.chart).value.value(p.z, p.u)

    def eval_with_partials(self, p: AmbientPoint
                           ) -> tuple[complex, np.ndarray, np.ndarray]:
        """Value and exact first partials (dH/dz, dH/du) at an ambient point."""
        data = self.chart_data(p.chart)
        hz, hu = data.first(p.z, p.u)
        return data.value.value(p.z, p.u), hz, hu

    def second_partials(self, p: AmbientPoint
                        ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        data = self.chart_data(p.chart)
        _, _, hzz, hzu, huu = data.full(p.z, p.u)
        return hzz, hzu, huu

    def restrict(self, x: KahlerPoint) -> complex:
        """h(x) recovered as H evaluated on the real locus."""
        return self.value(embed(self.model, x))

    def h_partials(self, x: KahlerPoint) -> tuple[np.ndarray, np.ndarray]:
        """(dh/dz, dh/dzbar) of the restriction at a base point."""
        data = self.chart_data(x.chart)
        return data.first(x.z, np.conj(x.z))


def extend(h: PolynomialHamiltonian) -> HolomorphicHamiltonian:
    """Holomorphic extension by the substitution zbar -> u."""
    return h.extend()


def lincomb(a: float, h1: PolynomialHamiltonian, b: float,
            h2: PolynomialHamiltonian) -> PolynomialHamiltonian:
    """Real linear combination a*h1 + b*h2."""
    return h1.scaled(a) + h2.scaled(b)


# --- sphere moment components -------------------------------------------

def moment_terms(axis: int) -> list[Term]:
    """Terms of the sphere moment component x1, x2 or x3 (chart 0)."""
    if axis == 0:
        return [term(1.0, 1, 0, 1), term(1.0, 0, 1, 1)]
    if axis == 1:
        return [term(-1.0j, 1, 0, 1), term(1.0j, 0, 1, 1)]
    if axis == 2:
        return [term(1.0, 0, 0, 1), term(-1.0, 1, 1, 1)]
    raise ValueError("axis must be 0, 1 or 2")


def moment_hamiltonian(a, b=None) -> PolynomialHamiltonian:
    """h = a . x + i b . x on the sphere, for real 3-vectors a and b."""
    a = np.asarray(a, dtype=float)
    b = np.zeros(3) if b is None else np.asarray(b, dtype=float)
    terms: list[Term] = []
    for j in range(3):
        c = a[j] + 1j * b[j]
        if c != 0:
            terms.extend(Term(c * t.c, t.alpha, t.beta, t.denom_pow)
                         for t in moment_terms(j))
    if not terms:
        terms = [term(0.0, 0, 0, 0)]
    return PolynomialHamiltonian(ModelDescriptor.sphere(), 0, tuple(terms))

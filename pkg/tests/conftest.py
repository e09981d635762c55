"""Shared corpora and random hamiltonian builders."""

from itertools import product

import numpy as np
import pytest

import hamflow as hf


def multiindices(n: int, max_total: int):
    return [idx for idx in product(range(max_total + 1), repeat=n)
            if sum(idx) <= max_total]


def random_real_flat_poly(model, rng, degree=4, scale=0.3, nterms=5):
    """Random real-valued polynomial: coefficients satisfy c(a,b) = conj(c(b,a))."""
    n = model.n
    idxs = multiindices(n, degree)
    pairs = [(a, b) for a in idxs for b in idxs
             if 1 <= sum(a) + sum(b) <= degree]
    chosen = rng.choice(len(pairs), size=min(nterms, len(pairs)), replace=False)
    terms = []
    for k in chosen:
        a, b = pairs[int(k)]
        w = scale / (1.0 + sum(a) + sum(b))
        if a == b:
            terms.append(hf.Term(complex(w * rng.normal()), a, b, 0))
        else:
            c = w * (rng.normal() + 1j * rng.normal())
            terms.append(hf.Term(c, a, b, 0))
            terms.append(hf.Term(np.conj(c), b, a, 0))
    return hf.PolynomialHamiltonian(model, 0, tuple(terms))


def random_complex_flat_poly(model, rng, degree=4, scale=0.3, nterms=5):
    h1 = random_real_flat_poly(model, rng, degree, scale, nterms)
    h2 = random_real_flat_poly(model, rng, degree, scale, nterms)
    return h1 + h2.scaled(1j)


_SPHERE_BASIS = None


def _sphere_basis():
    global _SPHERE_BASIS
    if _SPHERE_BASIS is None:
        singles = [hf.moment_hamiltonian(np.eye(3)[j]) for j in range(3)]
        prods = [singles[i].product(singles[j])
                 for i in range(3) for j in range(i, 3)]
        _SPHERE_BASIS = singles + prods
    return _SPHERE_BASIS


def random_real_sphere_poly(rng, scale=0.5):
    """Random real combination of moment components and their products."""
    basis = _sphere_basis()
    coeffs = scale * rng.normal(size=len(basis)) / np.array(
        [1, 1, 1, 2, 2, 2, 2, 2, 2])
    out = None
    for c, b in zip(coeffs, basis):
        piece = b.scaled(float(c))
        out = piece if out is None else out + piece
    return out


def random_seed_points(model, rng, count, radius=0.7):
    pts = []
    for _ in range(count):
        z = radius * (rng.uniform(-1, 1, model.n) + 1j * rng.uniform(-1, 1, model.n))
        pts.append(hf.KahlerPoint(0, z))
    return pts


def build_corpus():
    """Eight fixed hamiltonians: real, imaginary, mixed, cubic; both models."""
    flat1 = hf.ModelDescriptor.flat(1)
    flat2 = hf.ModelDescriptor.flat(2)
    corpus = []
    corpus.append(("flat1_real_quad", hf.PolynomialHamiltonian(flat1, 0, (
        hf.term(1.0, 1, 1), hf.term(0.15, 1, 0), hf.term(0.15, 0, 1)))))
    corpus.append(("flat1_imag_quad", hf.PolynomialHamiltonian(flat1, 0, (
        hf.term(1j, 1, 1),))))
    corpus.append(("flat1_mixed_quad", hf.PolynomialHamiltonian(flat1, 0, (
        hf.term(1.0, 1, 1), hf.term(0.5j, 1, 0), hf.term(0.5j, 0, 1)))))
    corpus.append(("flat1_cubic_mixed", hf.PolynomialHamiltonian(flat1, 0, (
        hf.term(0.0375, 3, 0), hf.term(0.1125, 2, 1), hf.term(0.1125, 1, 2),
        hf.term(0.0375, 0, 3), hf.term(0.2j, 1, 1)))))
    corpus.append(("flat2_mixed_quad", hf.PolynomialHamiltonian(flat2, 0, (
        hf.term(1.0, (1, 0), (1, 0)), hf.term(2.0, (0, 1), (0, 1)),
        hf.term(0.5j, (1, 0), (0, 1)), hf.term(0.5j, (0, 1), (1, 0)),
        hf.term(0.2j, (0, 0), (2, 0))))))
    corpus.append(("sphere_real_moment", hf.moment_hamiltonian([0.5, 0.0, 1.0])))
    corpus.append(("sphere_mixed_moment", hf.moment_hamiltonian([1.0, 0.0, 0.0],
                                                                [0.0, 0.0, 0.8])))
    x1 = hf.moment_hamiltonian([1, 0, 0])
    x2 = hf.moment_hamiltonian([0, 1, 0])
    x3 = hf.moment_hamiltonian([0, 0, 1])
    corpus.append(("sphere_quad_moment",
                   x3.product(x1) + x2.product(x2).scaled(0.5j)))
    return corpus


@pytest.fixture(scope="session")
def corpus8():
    return build_corpus()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260810)

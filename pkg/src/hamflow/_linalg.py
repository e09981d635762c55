"""Real <-> complex representation helpers.

A complex vector v in C^n is represented by the real vector (Re v, Im v) in
R^{2n}.  An ambient tangent vector (dz, du) in C^n x C^n stacks as
(Re dz, Im dz, Re du, Im du) in R^{4n}.  Complex-linear and antilinear maps
realify into the corresponding 2x2 block forms.
"""

from __future__ import annotations

import numpy as np


def c2r(v) -> np.ndarray:
    """Complex vector -> stacked real vector (Re v, Im v)."""
    v = np.atleast_1d(np.asarray(v, dtype=complex))
    return np.concatenate([v.real, v.imag])


def r2c(w) -> np.ndarray:
    """Inverse of :func:`c2r`."""
    w = np.asarray(w, dtype=float)
    n = w.size // 2
    return w[:n] + 1j * w[n:]


def realify_lin(c) -> np.ndarray:
    """Real matrix of v -> C v acting on (Re v, Im v) stacks."""
    c = np.atleast_2d(np.asarray(c, dtype=complex))
    return np.block([[c.real, -c.imag], [c.imag, c.real]])


def realify_antilin(a) -> np.ndarray:
    """Real matrix of v -> A conj(v) acting on (Re v, Im v) stacks."""
    a = np.atleast_2d(np.asarray(a, dtype=complex))
    return np.block([[a.real, a.imag], [a.imag, -a.real]])


def ambient_c2r(dz, du) -> np.ndarray:
    return np.concatenate([c2r(dz), c2r(du)])


def ambient_r2c(w) -> tuple[np.ndarray, np.ndarray]:
    w = np.asarray(w, dtype=float)
    half = w.size // 2
    return r2c(w[:half]), r2c(w[half:])


def ambient_realify(k) -> np.ndarray:
    """Realify a complex 2n x 2n ambient Jacobian into 4n x 4n blocks."""
    k = np.asarray(k, dtype=complex)
    n = k.shape[0] // 2
    kzz, kzu = k[:n, :n], k[:n, n:]
    kuz, kuu = k[n:, :n], k[n:, n:]
    return np.block([
        [realify_lin(kzz), realify_lin(kzu)],
        [realify_lin(kuz), realify_lin(kuu)],
    ])


def opnorm(m) -> float:
    """Operator 2-norm."""
    return float(np.linalg.norm(np.asarray(m), 2))

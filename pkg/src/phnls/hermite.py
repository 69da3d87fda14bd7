"""Hermite basis construction, Gauss-Hermite quadrature, and 1D transforms.

The basis functions are the L^2-normalized Hermite functions

    h_k(y) = (2^k k! pi^(1/2))^(-1/2) H_k(y) exp(-y^2/2),

eigenfunctions of -d^2/dy^2 + y^2 with eigenvalue 2k+1.  Everything is
evaluated through the normalized three-term recurrence

    h_{k+1}(y) = y sqrt(2/(k+1)) h_k(y) - sqrt(k/(k+1)) h_{k-1}(y),

never through raw H_k (which overflows double precision near k ~ 150).
Because h_0(y) = pi^(-1/4) e^(-y^2/2) itself underflows for |y| beyond
~38, the recurrence carries a per-point power-of-two exponent so that
values deep in the classically forbidden region recover correctly once
the index passes the turning point.  This keeps every table entry finite
up to K = 2048 and lets the quadrature weights be formed without the
overflowing product w_i * exp(y_i^2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import InvalidArgument, ResolutionError, ShapeError

__all__ = [
    "QuadratureRule",
    "HermiteBasis",
    "gauss_hermite_nodes",
    "hermite_eval",
    "hermite_basis",
    "hermite_analyze",
    "hermite_synthesize",
    "quadruple_product",
]

_SQRT_PI = math.sqrt(math.pi)
_LOG2 = math.log(2.0)


def _hermite_values(y, kmax):
    """Evaluate h_0..h_kmax at the points ``y``.

    Parameters
    ----------
    y : array_like
        Evaluation points, any shape; flattened internally.
    kmax : int
        Largest mode index.

    Returns
    -------
    ndarray, shape (kmax+1, y.size)
        ``out[k, i] = h_k(y_i)``.  Entries whose true magnitude is below
        the double-precision range underflow to 0; none overflow.
    """
    y = np.atleast_1d(np.asarray(y, dtype=float)).ravel()
    out = np.empty((kmax + 1, y.size))
    # scaled value m and shared exponent e: h_k(y) = m * 2^e
    e_exact = -y * y / (2.0 * _LOG2)
    expo = np.floor(e_exact).astype(np.int64)
    m_cur = math.pi ** -0.25 * np.exp2(e_exact - expo)
    m_prev = np.zeros_like(y)
    out[0] = np.ldexp(m_cur, expo)
    for k in range(kmax):
        a = math.sqrt(2.0 / (k + 1))
        b = math.sqrt(k / (k + 1.0))
        m_next = a * y * m_cur - b * m_prev
        m_prev = m_cur
        m_cur = m_next
        big = np.abs(m_cur) > 2.0**500
        if big.any():
            m_cur = np.where(big, np.ldexp(m_cur, -500), m_cur)
            m_prev = np.where(big, np.ldexp(m_prev, -500), m_prev)
            expo = np.where(big, expo + 500, expo)
        out[k + 1] = np.ldexp(m_cur, expo)
    return out


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Hermite rule for the weight e^{-y^2}.

    Attributes
    ----------
    n : int
        Node count.
    nodes : ndarray
        Strictly increasing nodes, symmetric about 0.
    weights : ndarray
        Weights w_i for integrands against e^{-y^2}; sum to sqrt(pi).
    comp_weights : ndarray
        Compensated weights w_i e^{y_i^2}, formed stably as
        1/(n h_{n-1}(y_i)^2); used for integrals of plain functions
        sampled at the nodes.  Stored separately because w_i and
        e^{y_i^2} individually leave the double range for n >~ 700.
    """

    n: int
    nodes: np.ndarray
    weights: np.ndarray
    comp_weights: np.ndarray

    def __post_init__(self):
        self.nodes.setflags(write=False)
        self.weights.setflags(write=False)
        self.comp_weights.setflags(write=False)


def gauss_hermite_nodes(n: int) -> QuadratureRule:
    """Build the n-point Gauss-Hermite rule.

    Nodes are the eigenvalues of the symmetric tridiagonal Jacobi matrix
    (Golub-Welsch), symmetrized and polished with two Newton steps on the
    recurrence; weights come from the classical identity
    w_i e^{y_i^2} = 1/(n h_{n-1}(y_i)^2).

    Raises
    ------
    InvalidArgument
        If ``n < 1``.
    """
    if n < 1:
        raise InvalidArgument(f"node count must be >= 1, got {n}")
    if n == 1:
        nodes = np.zeros(1)
        w = np.array([_SQRT_PI])
        return QuadratureRule(1, nodes, w, w.copy())
    nodes = eigh_tridiagonal(np.zeros(n), np.sqrt(np.arange(1, n) / 2.0))[0]
    nodes = (nodes - nodes[::-1]) / 2.0
    for _ in range(2):
        vals = _hermite_values(nodes, n)
        hn, hnm1 = vals[n], vals[n - 1]
        nodes = nodes - hn / (math.sqrt(2.0 * n) * hnm1 - nodes * hn)
        nodes = (nodes - nodes[::-1]) / 2.0
    hnm1 = _hermite_values(nodes, n - 1)[n - 1]
    comp = 1.0 / (n * hnm1**2)
    comp = (comp + comp[::-1]) / 2.0
    weights = comp * np.exp(-(nodes**2))
    return QuadratureRule(n, nodes, weights, comp)


def hermite_eval(k: int, y):
    """Value of the normalized Hermite function h_k at ``y``.

    ``y`` may be a scalar or an array; the result matches its shape.
    """
    if k < 0:
        raise InvalidArgument(f"mode index must be >= 0, got {k}")
    arr = np.asarray(y, dtype=float)
    vals = _hermite_values(arr, k)[k]
    if arr.ndim == 0:
        return float(vals[0])
    return vals.reshape(arr.shape)


@dataclass(frozen=True)
class HermiteBasis:
    """K retained Hermite modes tabulated on a quadrature rule.

    ``table[k, i] = h_k(y_i)``; ``analysis`` is the adjoint map
    (comp_weights * table)^T so that analyze = samples @ analysis.
    """

    K: int
    rule: QuadratureRule
    table: np.ndarray
    analysis: np.ndarray

    def __post_init__(self):
        self.table.setflags(write=False)
        self.analysis.setflags(write=False)


def hermite_basis(K: int, n: int | None = None) -> HermiteBasis:
    """Build a HermiteBasis with ``K`` modes on an ``n``-node rule.

    ``n`` defaults to 2K: cubic nonlinearities produce integrands with
    weight e^{-2y^2}, so oversampling keeps their quadrature spectral.

    Raises
    ------
    InvalidArgument
        If ``K < 1`` or ``n < 2K``.
    """
    if K < 1:
        raise InvalidArgument(f"mode count must be >= 1, got {K}")
    if n is None:
        n = 2 * K
    if n < 2 * K:
        raise InvalidArgument(f"rule must have n >= 2K nodes, got n={n}, K={K}")
    rule = gauss_hermite_nodes(n)
    table = _hermite_values(rule.nodes, K - 1)
    analysis = (table * rule.comp_weights).T.copy()
    return HermiteBasis(K, rule, table, analysis)


def hermite_analyze(samples, basis: HermiteBasis):
    """Project node samples onto the first K Hermite modes.

    ``samples`` has shape (..., n); the trailing axis must match the
    rule's node count.  Returns coefficients of shape (..., K) with
    c_k = sum_i w_i e^{y_i^2} f(y_i) h_k(y_i).
    """
    samples = np.asarray(samples)
    if samples.shape[-1] != basis.rule.n:
        raise ShapeError(
            f"samples last axis {samples.shape[-1]} != node count {basis.rule.n}"
        )
    return samples @ basis.analysis


def hermite_synthesize(coeffs, basis: HermiteBasis):
    """Evaluate a coefficient vector on the quadrature nodes.

    ``coeffs`` has shape (..., K') with K' <= K; returns (..., n) samples
    f(y_i) = sum_k c_k h_k(y_i).
    """
    coeffs = np.asarray(coeffs)
    kc = coeffs.shape[-1]
    if kc > basis.K:
        raise ShapeError(f"{kc} coefficients exceed basis size K={basis.K}")
    return coeffs @ basis.table[:kc]


def quadruple_product(k0: int, k1: int, k2: int, k3: int, basis: HermiteBasis) -> float:
    """Quadrature value of the overlap integral of four Hermite functions.

    Computes ``int h_{k0} h_{k1} h_{k2} h_{k3} dy`` on the basis rule.
    The integrand is a polynomial of degree k0+k1+k2+k3 times e^{-2y^2};
    the rule must carry n >= 2*(k0+k1+k2+k3) + 8 nodes to resolve it.
    Indices are evaluated in sorted order so all 24 permutations of the
    same quadruple produce bit-identical results.

    Raises
    ------
    InvalidArgument
        If any index is negative or >= K.
    ResolutionError
        If the rule is too small for the requested degree.
    """
    ks = sorted((k0, k1, k2, k3))
    if ks[0] < 0:
        raise InvalidArgument("mode indices must be >= 0")
    if ks[-1] >= basis.K:
        raise InvalidArgument(
            f"mode index {ks[-1]} not tabulated (basis has K={basis.K})"
        )
    need = 2 * sum(ks) + 8
    if basis.rule.n < need:
        raise ResolutionError(
            f"quadruple of total degree {sum(ks)} needs n >= {need} nodes, "
            f"rule has {basis.rule.n}"
        )
    t = basis.table
    integrand = t[ks[0]] * t[ks[1]] * t[ks[2]] * t[ks[3]]
    return float(np.dot(basis.rule.comp_weights, integrand))

"""Cumulative-cost objective and its incremental maintenance.

For a permutation ``pi`` the alpha value of the vertex at position ``i`` is::

    alpha[i] = d[pi[i]] + sum_{j > i} C[pi[i], pi[j]] * alpha[j]

computed from the last position backwards, and ``f = sum(alpha)``.

Two incremental devices live here:

* :func:`swap_adjacent` exchanges two neighbouring vertices and pushes the
  resulting alpha deltas up the prefix (exact cascade).
* :func:`insertion_profile` gives, for one vertex, the objective after every
  step of walking it through the permutation by adjacent swaps, in O(n)
  once the alpha values of the permutation without that vertex (``gamma``)
  and the forward sensitivities of its prefix (``beta``) are known. With
  ``pi'`` the permutation minus vertex ``v``::

      f(v inserted at k) = f(pi') + W(k) * A(k)
      W(k) = 1 + sum_{i < k} beta[i] * C[pi'[i], v]
      A(k) = d[v] + sum_{m >= k} C[v, pi'[m]] * gamma[m]

  where ``beta[k] = 1 + sum_{i < k} beta[i] * C[pi'[i], pi'[k]]`` is the
  derivative of ``f(pi')`` with respect to ``alpha`` at position ``k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .instance import Instance, check_permutation

EPS_EVAL = 1e-9
DEFAULT_REFRESH_EVERY = 10_000


@njit(cache=True, nogil=True)
def alpha_values(C, d, perm):
    n = perm.shape[0]
    alpha = np.empty(n)
    for i in range(n - 1, -1, -1):
        u = perm[i]
        s = d[u]
        for j in range(i + 1, n):
            s += C[u, perm[j]] * alpha[j]
        alpha[i] = s
    return alpha


@njit(cache=True, nogil=True)
def objective(C, d, perm):
    return alpha_values(C, d, perm).sum()


@njit(cache=True, nogil=True)
def objective_many(C, d, perms):
    m = perms.shape[0]
    out = np.empty(m)
    for r in range(m):
        out[r] = alpha_values(C, d, perms[r]).sum()
    return out


@njit(cache=True, nogil=True)
def _swap_cascade(C, d, perm, alpha, j):
    # positions j, j+1 hold u, v; afterwards v, u
    n = perm.shape[0]
    u = perm[j]
    v = perm[j + 1]
    au = alpha[j]
    av = alpha[j + 1]
    # u's new alpha is summed over its suffix: subtracting C[u, v] * av
    # from au cancels badly when that term dominates
    nu = 0.0
    for k in range(j + 2, n):
        nu += C[u, perm[k]] * alpha[k]
    nu += d[u]
    nv = av + C[v, u] * nu
    perm[j] = v
    perm[j + 1] = u
    alpha[j] = nv
    alpha[j + 1] = nu
    delta = np.zeros(j + 2)
    delta[j] = nv - av
    delta[j + 1] = nu - au
    for i in range(j - 1, -1, -1):
        x = perm[i]
        s = 0.0
        for k in range(i + 1, j + 2):
            s += C[x, perm[k]] * delta[k]
        delta[i] = s
        alpha[i] += s


@njit(cache=True, nogil=True)
def _removed_vertex_terms(C, d, perm, p):
    """gamma, beta and f for ``perm`` with the vertex at position ``p`` removed."""
    n = perm.shape[0]
    rest = np.empty(n - 1, dtype=perm.dtype)
    for i in range(p):
        rest[i] = perm[i]
    for i in range(p + 1, n):
        rest[i - 1] = perm[i]
    m = n - 1
    gamma = np.empty(m)
    f_rest = 0.0
    for i in range(m - 1, -1, -1):
        u = rest[i]
        s = d[u]
        for j in range(i + 1, m):
            s += C[u, rest[j]] * gamma[j]
        gamma[i] = s
        f_rest += s
    beta = np.empty(m)
    for k in range(m):
        w = rest[k]
        s = 1.0
        for i in range(k):
            s += beta[i] * C[rest[i], w]
        beta[k] = s
    return rest, gamma, beta, f_rest


@njit(cache=True, nogil=True)
def profile_kernel(C, d, perm, p):
    n = perm.shape[0]
    v = perm[p]
    rest, gamma, beta, f_rest = _removed_vertex_terms(C, d, perm, p)
    m = n - 1
    # A[k] for k = 0..m (suffix sums), W[k] (prefix sums)
    A = np.empty(n)
    A[m] = d[v]
    for k in range(m - 1, -1, -1):
        A[k] = A[k + 1] + C[v, rest[k]] * gamma[k]
    out = np.empty(n)
    W = 1.0
    for k in range(n):
        out[k] = f_rest + W * A[k]
        if k < m:
            W += beta[k] * C[rest[k], v]
    return out


@dataclass
class AlphaState:
    """A permutation with its cached alpha vector (by position) and objective.

    Mutated in place by :func:`swap_adjacent` and :func:`insert`. After
    ``refresh_every`` incremental updates the cache is rebuilt from scratch.
    """

    perm: np.ndarray
    alpha: np.ndarray
    f: float
    updates: int = 0
    refresh_every: int = DEFAULT_REFRESH_EVERY

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    def copy(self) -> "AlphaState":
        return AlphaState(self.perm.copy(), self.alpha.copy(), self.f, self.updates, self.refresh_every)

    def refresh(self, inst: Instance) -> "AlphaState":
        self.alpha = alpha_values(inst.C, inst.d, self.perm)
        self.f = float(self.alpha.sum())
        self.updates = 0
        return self

    def audit(self, inst: Instance, rtol: float = EPS_EVAL) -> bool:
        """Recompute from scratch and report whether the cache is consistent."""
        alpha = alpha_values(inst.C, inst.d, self.perm)
        f = float(alpha.sum())
        scale = np.maximum(1.0, np.abs(alpha))
        return bool(
            np.all(np.abs(alpha - self.alpha) <= rtol * scale)
            and abs(f - self.f) <= rtol * max(1.0, abs(f))
        )


def evaluate(inst: Instance, perm) -> AlphaState:
    """Full O(n^2) evaluation of ``perm`` (0-based vertex ids)."""
    perm = check_permutation(perm, inst.n).copy()
    alpha = alpha_values(inst.C, inst.d, perm)
    return AlphaState(perm=perm, alpha=alpha, f=float(alpha.sum()))


def evaluate_many(inst: Instance, perms) -> np.ndarray:
    """Objective values for a 2-D array of permutations, one per row."""
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    if perms.ndim != 2 or perms.shape[1] != inst.n:
        raise ValueError("expected an (m, n) array of permutations")
    return objective_many(inst.C, inst.d, perms)


def swap_adjacent(state: AlphaState, inst: Instance, j: int) -> AlphaState:
    """Exchange the vertices at positions ``j`` and ``j + 1`` (0-based), in place."""
    n = state.n
    if not 0 <= j < n - 1:
        raise IndexError(f"swap position {j} out of range for n={n}")
    _swap_cascade(inst.C, inst.d, state.perm, state.alpha, j)
    state.f = float(state.alpha.sum())
    state.updates += 1
    if state.updates >= state.refresh_every:
        state.refresh(inst)
    return state


def insert(state: AlphaState, inst: Instance, i: int, j: int) -> AlphaState:
    """Move the vertex at position ``i`` to position ``j`` as |i - j| adjacent swaps."""
    n = state.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"insert positions ({i}, {j}) out of range for n={n}")
    if j < i:
        for k in range(i - 1, j - 1, -1):
            swap_adjacent(state, inst, k)
    else:
        for k in range(i, j):
            swap_adjacent(state, inst, k)
    return state


def insertion_profile(inst: Instance, perm, p: int) -> np.ndarray:
    """Objective of ``perm`` with the vertex at ``p`` relocated to each position.

    Entry ``k`` is the objective when that vertex ends at position ``k``;
    entry ``p`` is the objective of ``perm`` itself.
    """
    perm = check_permutation(perm, inst.n)
    if not 0 <= p < inst.n:
        raise IndexError(f"position {p} out of range for n={inst.n}")
    return profile_kernel(inst.C, inst.d, perm, p)

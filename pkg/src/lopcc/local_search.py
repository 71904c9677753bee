"""Forward-backward insert local search.

A forward sweep visits vertices in decreasing order of their alpha value
(snapshotted when the sweep starts, ties to the smaller position) and tries
to move each one to an earlier position; a backward sweep visits vertices
by increasing alpha and tries later positions. A vertex is relocated to the
position with the lowest objective, and only when that beats the current
objective by more than ``eps_improve * max(1, |f|)``. Among equal objectives
the position closest to the vertex's origin wins.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from .evaluation import AlphaState, alpha_values, objective, profile_kernel
from .instance import Instance


class LsMode(str, enum.Enum):
    FORWARD_ONLY = "forward_only"
    FORWARD_BACKWARD = "forward_backward"


@dataclass(frozen=True)
class LsConfig:
    """Local search knobs.

    eps_improve
        Relative strict-improvement threshold; a relocation is accepted
        only if it lowers ``f`` by more than ``eps_improve * max(1, |f|)``.
    alternate_passes
        Repeat the (forward fixpoint, backward fixpoint) pair until neither
        half moves a vertex.
    incremental
        Score target positions with the O(n) insertion profile. ``False``
        walks the vertex with real swaps and re-evaluates from scratch after
        each one (reference implementation, used for timing comparisons).
    """

    eps_improve: float = 1e-10
    alternate_passes: bool = False
    incremental: bool = True

    def __post_init__(self):
        if not self.eps_improve >= 0:
            raise ValueError("eps_improve must be nonnegative")


@njit(cache=True, nogil=True)
def _naive_profile(C, d, perm, p, forward):
    n = perm.shape[0]
    work = perm.copy()
    out = np.full(n, np.inf)
    if forward:
        for k in range(p - 1, -1, -1):
            t = work[k]
            work[k] = work[k + 1]
            work[k + 1] = t
            out[k] = objective(C, d, work)
    else:
        for k in range(p + 1, n):
            t = work[k]
            work[k] = work[k - 1]
            work[k - 1] = t
            out[k] = objective(C, d, work)
    return out


@njit(cache=True, nogil=True)
def _sweep(C, d, perm, forward, eps_rel, incremental, fhist):
    n = perm.shape[0]
    alpha = alpha_values(C, d, perm)
    f = alpha.sum()
    if forward:
        order = np.argsort(-alpha, kind="mergesort")
    else:
        order = np.argsort(alpha, kind="mergesort")
    verts = perm[order]
    pos = np.empty(n, dtype=np.int64)
    for i in range(n):
        pos[perm[i]] = i
    improved = False
    nmoves = 0
    for t in range(n):
        v = verts[t]
        p = pos[v]
        if (forward and p == 0) or (not forward and p == n - 1):
            continue
        if incremental:
            prof = profile_kernel(C, d, perm, p)
        else:
            prof = _naive_profile(C, d, perm, p, forward)
        best = f
        best_k = p
        if forward:
            for k in range(p - 1, -1, -1):
                if prof[k] < best:
                    best = prof[k]
                    best_k = k
        else:
            for k in range(p + 1, n):
                if prof[k] < best:
                    best = prof[k]
                    best_k = k
        if best_k == p or not best < f - eps_rel * max(1.0, abs(f)):
            continue
        if best_k < p:
            for k in range(p, best_k, -1):
                perm[k] = perm[k - 1]
                pos[perm[k]] = k
        else:
            for k in range(p, best_k):
                perm[k] = perm[k + 1]
                pos[perm[k]] = k
        perm[best_k] = v
        pos[v] = best_k
        f = objective(C, d, perm)
        fhist[nmoves] = f
        nmoves += 1
        improved = True
    return improved, nmoves


def _pass(state: AlphaState, inst: Instance, cfg: LsConfig, forward: bool, history) -> bool:
    fhist = np.empty(state.n)
    improved, nmoves = _sweep(
        inst.C, inst.d, state.perm, forward, cfg.eps_improve, cfg.incremental, fhist
    )
    if improved:
        state.refresh(inst)
        if history is not None:
            history.extend(fhist[:nmoves].tolist())
    return improved


def forward_pass(state: AlphaState, inst: Instance, cfg: LsConfig = LsConfig(), history=None):
    """One forward sweep; returns ``(state, improved)``. ``state`` is updated in place."""
    return state, _pass(state, inst, cfg, True, history)


def backward_pass(state: AlphaState, inst: Instance, cfg: LsConfig = LsConfig(), history=None):
    """One backward sweep; returns ``(state, improved)``."""
    return state, _pass(state, inst, cfg, False, history)


def _fixpoint(state, inst, cfg, forward, history) -> bool:
    moved = False
    while _pass(state, inst, cfg, forward, history):
        moved = True
    return moved


def local_search(
    state: AlphaState,
    inst: Instance,
    mode: LsMode = LsMode.FORWARD_BACKWARD,
    cfg: LsConfig = LsConfig(),
    history: list | None = None,
) -> AlphaState:
    """Run forward sweeps to a fixpoint, then (forward_backward) backward sweeps.

    ``state`` is modified in place and returned. If ``history`` is a list,
    the objective after every accepted relocation is appended to it.
    """
    mode = LsMode(mode)
    while True:
        moved = _fixpoint(state, inst, cfg, True, history)
        if mode is LsMode.FORWARD_BACKWARD:
            moved |= _fixpoint(state, inst, cfg, False, history)
        if not (cfg.alternate_passes and mode is LsMode.FORWARD_BACKWARD and moved):
            return state

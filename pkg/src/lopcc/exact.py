"""Exhaustive enumeration for small instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .evaluation import evaluate_many
from .instance import Instance

DEFAULT_LIMIT_N = 10
HARD_CAP_N = 12
# objectives within this relative distance of the minimum count as ties
TIE_RTOL = 1e-12
_CHUNK = 40_320


@dataclass(frozen=True)
class ExactResult:
    optimum_f: float
    optimum_perm: np.ndarray
    permutations_examined: int


def brute_force(inst: Instance, limit_n: int = DEFAULT_LIMIT_N) -> ExactResult:
    """Minimum over all n! permutations.

    Permutations are enumerated in lexicographic order; among optima the
    lexicographically smallest one is returned.
    """
    n = inst.n
    cap = min(limit_n, HARD_CAP_N)
    if n > cap:
        raise ValueError(f"n={n} exceeds the enumeration cap of {cap}")
    best_f = math.inf
    best_perm = None
    examined = 0
    it = itertools.permutations(range(n))
    while True:
        block = list(itertools.islice(it, _CHUNK))
        if not block:
            break
        perms = np.array(block, dtype=np.int64)
        fs = evaluate_many(inst, perms)
        examined += len(block)
        i = int(np.argmin(fs))
        if fs[i] < best_f:
            # first entry within tolerance of the chunk minimum
            tied = np.flatnonzero(fs <= fs[i] + TIE_RTOL * max(1.0, abs(fs[i])))
            j = int(tied[0])
            if best_perm is None or fs[i] < best_f - TIE_RTOL * max(1.0, abs(best_f)):
                best_f, best_perm = float(fs[i]), perms[j].copy()
            else:
                best_f = float(fs[i])
    return ExactResult(best_f, best_perm, examined)

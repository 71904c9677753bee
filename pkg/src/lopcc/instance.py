"""LOPCC instances: the weighted complete digraph, its text format and generators.

An instance holds ``n`` vertices with nonnegative weights ``d`` and a
nonnegative arc cost matrix ``C`` (row ``u``, column ``v`` is the cost of
arc ``u -> v``). Vertices are 0-based inside the library and 1-based in every
external format.

Canonical text format::

    # comments run from '#' to end of line
    optional-name-line          <- only if its first token is non-numeric
    n
    d_1 ... d_n
    C_11 ... C_1n
    ...
    C_n1 ... C_nn

Tokens are whitespace separated and may wrap freely across lines.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

GENERATOR_NAME = "numpy.PCG64"


class InstanceFormatError(ValueError):
    """Raised when instance text cannot be parsed into a valid instance."""


class DiagonalWarning(UserWarning):
    """Issued when a file carries nonzero self-loop costs (they are zeroed)."""


@dataclass(frozen=True, eq=False)
class Instance:
    """Immutable LOPCC instance.

    ``d`` and ``C`` are stored as read-only float64 arrays; the diagonal of
    ``C`` is forced to zero on construction.
    """

    d: np.ndarray
    C: np.ndarray
    name: str = ""
    comments: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64).reshape(-1)
        C = np.array(self.C, dtype=np.float64)
        n = d.shape[0]
        if n < 1:
            raise ValueError("an instance needs at least one vertex")
        if C.shape != (n, n):
            raise ValueError(f"cost matrix shape {C.shape} does not match n={n}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(C))):
            raise ValueError("weights and costs must be finite")
        if np.any(d < 0):
            raise ValueError("vertex weights must be nonnegative")
        if np.any(C < 0):
            raise ValueError("arc costs must be nonnegative")
        np.fill_diagonal(C, 0.0)
        d.flags.writeable = False
        C.flags.writeable = False
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "C", C)

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            self.name == other.name
            and np.array_equal(self.d, other.d)
            and np.array_equal(self.C, other.C)
        )

    __hash__ = None

    def __repr__(self):
        return f"Instance(name={self.name!r}, n={self.n})"


# --------------------------------------------------------------------------
# permutations


def check_permutation(perm, n: int) -> np.ndarray:
    """Return ``perm`` as an int64 array after checking it is a bijection on 0..n-1."""
    arr = np.asarray(perm)
    if arr.ndim != 1 or arr.shape[0] != n:
        raise ValueError(f"permutation length {arr.shape} does not match n={n}")
    arr = arr.astype(np.int64, copy=False)
    seen = np.zeros(n, dtype=bool)
    if n and (arr.min() < 0 or arr.max() >= n):
        raise ValueError("permutation entries out of range")
    seen[arr] = True
    if not seen.all():
        raise ValueError("permutation repeats a vertex")
    return arr


def random_permutation(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random ordering of ``n`` vertices (Fisher-Yates via numpy)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return rng.permutation(n).astype(np.int64)


def to_external(perm) -> list[int]:
    """0-based internal permutation -> 1-based vertex labels."""
    return [int(v) + 1 for v in perm]


def from_external(labels) -> np.ndarray:
    """1-based vertex labels -> 0-based internal permutation."""
    return np.asarray([int(v) - 1 for v in labels], dtype=np.int64)


def make_rng(seed: int) -> np.random.Generator:
    """The project-wide random stream: PCG64 seeded through SeedSequence."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))


# --------------------------------------------------------------------------
# text format

_TOKEN = re.compile(r"\S+")


def _is_number(tok: str) -> bool:
    try:
        float(tok)
    except ValueError:
        return False
    return True


def parse_instance(text: str, name: str | None = None, source: str = "<text>") -> Instance:
    """Parse canonical instance text.

    A leading non-numeric line becomes the instance name (overriding
    ``name``). Errors carry ``source:line:column`` context.
    """
    tokens: list[tuple[str, int, int]] = []
    comments: list[str] = []
    header: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line, hash_, comment = raw.partition("#")
        if hash_:
            comments.append(comment.strip())
        stripped = line.strip()
        if not stripped:
            continue
        if not tokens and header is None and not _is_number(stripped.split()[0]):
            header = stripped
            continue
        for m in _TOKEN.finditer(line):
            tokens.append((m.group(), lineno, m.start() + 1))

    def where(i: int) -> str:
        if i < len(tokens):
            return f"{source}:{tokens[i][1]}:{tokens[i][2]}"
        last = tokens[-1] if tokens else ("", 0, 0)
        return f"{source}:{last[1]}:{last[2] + len(last[0])}"

    def number(i: int) -> float:
        tok = tokens[i][0]
        try:
            value = float(tok)
        except ValueError:
            raise InstanceFormatError(f"{where(i)}: non-numeric token {tok!r}") from None
        if not math.isfinite(value):
            raise InstanceFormatError(f"{where(i)}: non-finite value {tok!r}")
        return value

    if not tokens:
        raise InstanceFormatError(f"{source}: no vertex count found")
    n_val = number(0)
    if n_val != int(n_val):
        raise InstanceFormatError(f"{where(0)}: vertex count must be an integer, got {tokens[0][0]!r}")
    n = int(n_val)
    if n < 1:
        raise InstanceFormatError(f"{where(0)}: vertex count must be >= 1, got {n}")
    expected = 1 + n + n * n
    if len(tokens) != expected:
        raise InstanceFormatError(
            f"{where(min(len(tokens), expected))}: expected {expected} numeric tokens "
            f"for n={n}, found {len(tokens)}"
        )
    values = np.empty(expected - 1, dtype=np.float64)
    for i in range(1, expected):
        v = number(i)
        if v < 0:
            kind = "weight" if i <= n else "cost"
            raise InstanceFormatError(f"{where(i)}: negative {kind} {tokens[i][0]!r}")
        values[i - 1] = v
    d = values[:n]
    C = values[n:].reshape(n, n).copy()
    diag = np.diag(C)
    if np.any(diag != 0):
        bad = int(np.flatnonzero(diag)[0])
        warnings.warn(
            f"{source}: nonzero diagonal cost(s) (first at vertex {bad + 1}) set to 0",
            DiagonalWarning,
            stacklevel=2,
        )
    final_name = header if header is not None else (name or "")
    return Instance(d=d, C=C, name=final_name, comments=tuple(comments))


def _fmt(x: float) -> str:
    # shortest round-trip repr; integral values without the trailing '.0'
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


def write_instance(inst: Instance) -> str:
    """Render ``inst`` in canonical format; re-parsing reproduces it exactly."""
    lines = [f"# {c}" for c in inst.comments]
    if inst.name and not _is_number(inst.name.split()[0]):
        lines.append(inst.name)
    lines.append(str(inst.n))
    lines.append(" ".join(_fmt(x) for x in inst.d))
    for row in inst.C:
        lines.append(" ".join(_fmt(x) for x in row))
    return "\n".join(lines) + "\n"


def read_instance(path) -> Instance:
    path = Path(path)
    return parse_instance(path.read_text(), name=path.stem, source=str(path))


def generate_random_instance(n: int, seed: int, name: str | None = None) -> Instance:
    """Random instance with weights and off-diagonal costs i.i.d. U[0, 1).

    Fully determined by ``(n, seed)``: weights are drawn first, then the
    n x n cost matrix row-major, from :func:`make_rng`.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    d = rng.random(n)
    C = rng.random((n, n))
    np.fill_diagonal(C, 0.0)
    comments = (
        f"generator={GENERATOR_NAME} seed={seed}",
        "law: d_i ~ U[0,1), C_uv ~ U[0,1) for u != v, C_uu = 0",
    )
    return Instance(d=d, C=C, name=name or f"rand-n{n}-s{seed}", comments=comments)

"""Exact Gaussian moments and perturbative coefficients of the quartic model.

Trace words are strings over ``P`` (Phi), ``D`` (Phi^dag) and ``S`` (a
hermitian field); ``|`` separates traces in a product, e.g. ``"PDPD|PDPD"``
is ``Tr(Phi Phi^dag Phi Phi^dag)^2``. Letter ``p`` of a trace carries matrix
indices ``(i_p, i_{p+1})`` cyclically, and every Wick pairing identifies
index variables through the covariance deltas. The pairing's weight is
``N`` raised to the number of resulting index classes.

The series coefficients of ``Z`` and ``log Z`` come from the batched ribbon
counters instead: one histogram of (faces, connected) per order.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np

from .errors import ContractViolation, ResourceLimitError, StructureError
from .ribbon import batch_component_counts, batch_face_counts
from .series import PolynomialInN, SeriesInN

DEFAULT_ORDER_CAP = 5
VERTEX_WORD = "PDPD"


@dataclass(frozen=True)
class GaussianSpec:
    """``kind`` is ``"complex"`` or ``"hermitian"``; ``N`` is informational."""

    kind: str = "complex"
    N: int | None = None

    def __post_init__(self):
        if self.kind not in ("complex", "hermitian"):
            raise ContractViolation(f"unknown Gaussian kind {self.kind!r}")
        if self.N is not None and (not isinstance(self.N, int) or self.N < 1):
            raise ContractViolation("N must be a positive integer")


def _parse(word: str, kind: str) -> list[tuple[str, int, int]]:
    """Letters with their (row, column) index variables."""
    allowed = {"complex": "PD", "hermitian": "S"}[kind]
    letters = []
    base = 0
    for trace in word.replace(" ", "").split("|"):
        if not trace:
            continue
        L = len(trace)
        for p, ch in enumerate(trace):
            if ch not in allowed:
                raise ContractViolation(f"letter {ch!r} not allowed for the {kind} measure")
            letters.append((ch, base + p, base + (p + 1) % L))
        base += L
    return letters


class _Classes:
    def __init__(self, n):
        self.parent = list(range(n))
        self.count = n

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb
            self.count -= 1


def _index_classes(letters, n_indices, matches) -> int:
    uf = _Classes(n_indices)
    for x, y in matches:
        _, i, j = letters[x]
        _, k, l = letters[y]
        # both kinds reduce to row(x) ~ col(y), col(x) ~ row(y)
        uf.union(i, l)
        uf.union(j, k)
    return uf.count


def _pairings(items: list[int]) -> Iterable[list[tuple[int, int]]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for k, other in enumerate(rest):
        for tail in _pairings(rest[:k] + rest[k + 1:]):
            yield [(first, other)] + tail


def _bipartite(phis: list[int], dags: list[int]) -> Iterable[list[tuple[int, int]]]:
    import itertools

    for perm in itertools.permutations(dags):
        yield list(zip(phis, perm))


def wick_pairings(word: str, spec: GaussianSpec = GaussianSpec()):
    """Yield ``(matches, n_classes)`` for every Wick pairing of ``word``."""
    letters = _parse(word, spec.kind)
    n_idx = len(letters)
    if spec.kind == "complex":
        phis = [x for x, (ch, _, _) in enumerate(letters) if ch == "P"]
        dags = [x for x, (ch, _, _) in enumerate(letters) if ch == "D"]
        if len(phis) != len(dags):
            raise ContractViolation("word must contain as many Phi as Phi^dag")
        source = _bipartite(phis, dags)
    else:
        if len(letters) % 2:
            return
        source = _pairings(list(range(len(letters))))
    for matches in source:
        yield matches, _index_classes(letters, n_idx, matches)


def wick_moment(word: str, spec: GaussianSpec = GaussianSpec()) -> PolynomialInN:
    """Exact Gaussian expectation of a product of traces, as a polynomial in N.

    For the complex measure ``<conj(Phi_ij) Phi_kl> = d_ik d_jl``; for the
    hermitian one ``<S_ij S_kl> = d_il d_jk``. Pairing a conjugated letter
    ``Phi^dag_{ab} = conj(Phi_ba)`` against ``Phi_cd`` gives ``b = c, a = d``,
    the same identification as the hermitian delta, which is why one index
    rule serves both kinds.
    """
    counts: Counter = Counter()
    letters = _parse(word, spec.kind)
    if spec.kind == "complex":
        if sum(ch == "P" for ch, _, _ in letters) != sum(ch == "D" for ch, _, _ in letters):
            raise ContractViolation("word must contain as many Phi as Phi^dag")
    for _, classes in wick_pairings(word, spec):
        counts[classes] += 1
    if not letters:
        return PolynomialInN.constant(1)
    return PolynomialInN(dict(counts))


def vertex_word(n_vertices: int) -> str:
    """Word of ``n`` interaction traces in ribbon slot order."""
    return "|".join([VERTEX_WORD] * n_vertices)


def delta_classes(n_vertices: int, perm: Iterable[int]) -> int:
    """Index classes of one vacuum pairing by delta summation.

    ``perm[a] = b`` matches the ``a``-th Phi letter to the ``b``-th Phi^dag
    letter of ``vertex_word(n)``, the same encoding as the ribbon module.
    """
    letters = _parse(vertex_word(n_vertices), "complex")
    phis = [x for x, (ch, _, _) in enumerate(letters) if ch == "P"]
    dags = [x for x, (ch, _, _) in enumerate(letters) if ch == "D"]
    perm = list(perm)
    if sorted(perm) != list(range(2 * n_vertices)):
        raise ContractViolation("perm must be a permutation of the Phi^dag letters")
    return _index_classes(letters, len(letters), [(phis[a], dags[b]) for a, b in enumerate(perm)])


# series --------------------------------------------------------------------

@lru_cache(maxsize=8)
def _all_perms(m: int) -> np.ndarray:
    """All permutations of range(m) in lexicographic order, shape (m!, m)."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int8)
    sub = _all_perms(m - 1)
    blocks = []
    for first in range(m):
        others = np.array([x for x in range(m) if x != first], dtype=np.int8)
        block = np.empty((sub.shape[0], m), dtype=np.int8)
        block[:, 0] = first
        block[:, 1:] = others[sub]
        blocks.append(block)
    out = np.concatenate(blocks)
    out.flags.writeable = False
    return out


def _chunk_histogram(args: tuple[int, int]) -> dict[tuple[int, bool], int]:
    """Histogram of (faces, connected) over pairings with ``perm[0] = first``."""
    order, first = args
    m = 2 * order
    others = np.array([x for x in range(m) if x != first], dtype=np.int32)
    perm = np.empty((math.factorial(m - 1), m), dtype=np.int32)
    perm[:, 0] = first
    perm[:, 1:] = others[_all_perms(m - 1)]
    F = batch_face_counts(perm, order)
    C = batch_component_counts(perm, order)
    counts = np.bincount(2 * F + (C == 1), minlength=2)
    return {(int(k // 2), bool(k % 2)): int(c) for k, c in enumerate(counts.tolist()) if c}


def pairing_histogram(order: int, map_fn: Callable = map) -> dict[tuple[int, bool], int]:
    """Counts of vacuum pairings of ``order`` vertices by (faces, connected)."""
    if order == 0:
        return {(0, True): 1}
    total: Counter = Counter()
    for part in map_fn(_chunk_histogram, [(order, first) for first in range(2 * order)]):
        total.update(part)
    return dict(sorted(total.items()))


def _check_order(max_order: int, cap: int):
    if not isinstance(max_order, int) or max_order < 0:
        raise ContractViolation("max_order must be a non-negative integer")
    if max_order > cap:
        raise ResourceLimitError(f"order {max_order} exceeds the cap {cap} ((2n)! pairings)", cap)


def _series(max_order, spec, cap, map_fn, connected_only) -> SeriesInN:
    if spec.kind != "complex":
        raise ContractViolation("the quartic series is defined for the complex measure")
    _check_order(max_order, cap)
    coeffs = {}
    for k in range(max_order + 1):
        if k == 0:
            coeffs[0] = PolynomialInN() if connected_only else PolynomialInN.constant(1)
            continue
        hist = pairing_histogram(k, map_fn)
        terms: Counter = Counter()
        for (f, conn), c in hist.items():
            if conn or not connected_only:
                terms[f - k] += c
        # (-lambda/N)^k / k! times sum over pairings of N^F
        coeffs[k] = PolynomialInN(dict(terms)).scale(Fraction((-1) ** k, math.factorial(k)))
    return SeriesInN(coeffs, max_order)


def log_z_series(
    max_order: int,
    spec: GaussianSpec = GaussianSpec(),
    cap: int = DEFAULT_ORDER_CAP,
    map_fn: Callable = map,
) -> SeriesInN:
    """Coefficients of ``log Z`` in powers of lambda, exact in N.

    Only connected ribbon graphs contribute, the standard linked-cluster
    statement; ``map_fn`` distributes the chunks of the enumeration.
    """
    return _series(max_order, spec, cap, map_fn, True)


def z_series(
    max_order: int,
    spec: GaussianSpec = GaussianSpec(),
    cap: int = DEFAULT_ORDER_CAP,
    map_fn: Callable = map,
) -> SeriesInN:
    return _series(max_order, spec, cap, map_fn, False)


def genus_split(s: SeriesInN) -> dict[int, dict[int, Fraction]]:
    """Rewrite ``c_k = N^2 sum_g a_{k,g} N^{-2g}`` as ``{g: {k: a_{k,g}}}``."""
    out: dict[int, dict[int, Fraction]] = {}
    for k in s.orders():
        for p, v in s[k].coeffs.items():
            if p > 2 or p % 2:
                raise StructureError(f"order {k} carries N^{p}, outside the N^(2-2g) pattern")
            out.setdefault((2 - p) // 2, {})[k] = v
    return {g: out[g] for g in sorted(out)}

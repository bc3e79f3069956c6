"""Forests on labelled vertices and the forest interpolation formula.

Vertices are labelled 1..n. The line variables of the complete graph are
ordered lexicographically, (1,2), (1,3), ..., (n-1,n); :func:`lines`
gives that order and every array of line values uses it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterator, Mapping, Sequence

import numpy as np

from .config import QuadratureConfig
from .errors import AccuracyError, ContractViolation, ResourceLimitError
from .quadrature import gauss_jacobi01
from .smooth import SmoothFunction

DEFAULT_CAP = 9

Edge = tuple[int, int]


@lru_cache(maxsize=None)
def lines(n: int) -> tuple[Edge, ...]:
    """All pairs (i, j), 1 <= i < j <= n, in lexicographic order."""
    return tuple(itertools.combinations(range(1, n + 1), 2))


@lru_cache(maxsize=None)
def line_index(n: int) -> dict[Edge, int]:
    return {ln: k for k, ln in enumerate(lines(n))}


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


@dataclass(frozen=True)
class Forest:
    """An acyclic set of edges of the complete graph on vertices 1..n."""

    n: int
    edges: tuple[Edge, ...] = ()
    _paths: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1:
            raise ContractViolation("a forest needs at least one vertex")
        norm = []
        for e in self.edges:
            i, j = sorted(int(v) for v in e)
            if not (1 <= i < j <= self.n):
                raise ContractViolation(f"edge {e} is not a pair of distinct vertices in 1..{self.n}")
            norm.append((i, j))
        norm = tuple(sorted(norm))
        if len(set(norm)) != len(norm):
            raise ContractViolation("repeated edge")
        uf = _UnionFind(self.n + 1)
        for i, j in norm:
            if not uf.union(i, j):
                raise ContractViolation(f"edges {norm} contain a cycle")
        object.__setattr__(self, "edges", norm)

    @classmethod
    def _trusted(cls, n: int, edges: tuple[Edge, ...]) -> "Forest":
        obj = object.__new__(cls)
        object.__setattr__(obj, "n", n)
        object.__setattr__(obj, "edges", edges)
        object.__setattr__(obj, "_paths", None)
        return obj

    @property
    def is_tree(self) -> bool:
        return len(self.edges) == self.n - 1

    def degrees(self) -> list[int]:
        deg = [0] * (self.n + 1)
        for i, j in self.edges:
            deg[i] += 1
            deg[j] += 1
        return deg[1:]

    def components(self) -> list[tuple[int, ...]]:
        uf = _UnionFind(self.n + 1)
        for i, j in self.edges:
            uf.union(i, j)
        groups: dict[int, list[int]] = {}
        for v in range(1, self.n + 1):
            groups.setdefault(uf.find(v), []).append(v)
        return sorted(tuple(g) for g in groups.values())

    def paths(self) -> dict[Edge, tuple[int, ...] | None]:
        """Edge indices on the unique path between each pair of vertices.

        ``None`` marks pairs in different components.
        """
        if self._paths is not None:
            return self._paths
        adj: dict[int, list[tuple[int, int]]] = {v: [] for v in range(1, self.n + 1)}
        for k, (i, j) in enumerate(self.edges):
            adj[i].append((j, k))
            adj[j].append((i, k))
        out: dict[Edge, tuple[int, ...] | None] = {ln: None for ln in lines(self.n)}
        for s in range(1, self.n + 1):
            stack = [(s, 0, ())]
            while stack:
                v, parent, path = stack.pop()
                if v > s:
                    out[(s, v)] = path
                for u, k in adj[v]:
                    if u != parent:
                        stack.append((u, v, path + (k,)))
        object.__setattr__(self, "_paths", out)
        return out

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping) -> "Forest":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))


def _check_n(n: int, cap: int) -> None:
    if n < 1:
        raise ContractViolation("n must be a positive integer")
    if n > cap:
        raise ResourceLimitError(f"n={n} exceeds the forest enumeration cap of {cap}", cap)


def _iter_forests(n: int) -> Iterator[tuple[Edge, ...]]:
    all_lines = lines(n)
    m = len(all_lines)
    chosen: list[Edge] = []

    def rec(start: int, comp: list[int]) -> Iterator[tuple[Edge, ...]]:
        yield tuple(chosen)
        for k in range(start, m):
            i, j = all_lines[k]
            ci, cj = comp[i], comp[j]
            if ci == cj:
                continue
            new = [ci if c == cj else c for c in comp]
            chosen.append((i, j))
            yield from rec(k + 1, new)
            chosen.pop()

    yield from rec(0, list(range(n + 1)))


def _prufer_trees(n: int) -> list[tuple[Edge, ...]]:
    if n == 1:
        return [()]
    if n == 2:
        return [((1, 2),)]
    out = []
    for seq in itertools.product(range(1, n + 1), repeat=n - 2):
        degree = [1] * (n + 1)
        for s in seq:
            degree[s] += 1
        edges = []
        for s in seq:
            leaf = next(v for v in range(1, n + 1) if degree[v] == 1)
            edges.append((min(leaf, s), max(leaf, s)))
            degree[leaf] -= 1
            degree[s] -= 1
        u, v = (x for x in range(1, n + 1) if degree[x] == 1)
        edges.append((u, v))
        out.append(tuple(sorted(edges)))
    out.sort()
    return out


def enumerate_forests(n: int, trees_only: bool = False, cap: int = DEFAULT_CAP) -> list[Forest]:
    """Every forest (or spanning tree) of K_n, sorted by edge list.

    Forests are generated depth-first, which visits edge lists in
    lexicographic order directly; spanning trees are decoded from Pruefer
    sequences and sorted.
    """
    _check_n(n, cap)
    if trees_only:
        return [Forest._trusted(n, e) for e in _prufer_trees(n)]
    return [Forest._trusted(n, e) for e in _iter_forests(n)]


def count_forests(n: int, trees_only: bool = False, cap: int = DEFAULT_CAP) -> int:
    _check_n(n, cap)
    if trees_only:
        return n ** (n - 2) if n > 1 else 1
    return sum(1 for _ in _iter_forests(n))


@dataclass(frozen=True)
class InterpolatedMatrix:
    """Symmetric matrix x^F(w) with unit diagonal."""

    entries: np.ndarray

    def to_json(self) -> str:
        return json.dumps(self.entries.tolist())


def _weights_vector(f: Forest, w) -> np.ndarray:
    if isinstance(w, Mapping):
        keys = {tuple(sorted(k)) for k in w}
        if keys != set(f.edges) or len(w) != len(f.edges):
            raise ContractViolation(f"weakening parameters given on {sorted(keys)}, forest edges are {list(f.edges)}")
        vals = np.array([float(w[e]) if e in w else float(w[e[::-1]]) for e in f.edges])
    else:
        vals = np.asarray(w, dtype=float).reshape(-1)
        if vals.size != len(f.edges):
            raise ContractViolation(f"expected {len(f.edges)} weakening parameters, got {vals.size}")
    if np.any(vals < 0) or np.any(vals > 1):
        raise ContractViolation("weakening parameters must lie in [0, 1]")
    return vals


def line_values(f: Forest, w: np.ndarray) -> np.ndarray:
    """Interpolated line variables for a batch of parameter points.

    ``w`` has shape ``(P, len(f.edges))``; the result has shape
    ``(P, n(n-1)/2)`` in :func:`lines` order. Values are 0 across
    components and the path minimum otherwise.
    """
    w = np.atleast_2d(np.asarray(w, dtype=float))
    out = np.zeros((w.shape[0], len(lines(f.n))))
    for k, ln in enumerate(lines(f.n)):
        path = f.paths()[ln]
        if path is not None:
            out[:, k] = np.min(w[:, list(path)], axis=1)
    return out


def interpolation_matrices(f: Forest, w: np.ndarray) -> np.ndarray:
    """Batch of interpolated matrices, shape ``(P, n, n)``."""
    x = line_values(f, w)
    P = x.shape[0]
    mats = np.zeros((P, f.n, f.n))
    iu = np.triu_indices(f.n, 1)
    mats[:, iu[0], iu[1]] = x
    mats += mats.transpose(0, 2, 1)
    mats[:, np.arange(f.n), np.arange(f.n)] = 1.0
    return mats


def interpolate_weakening(f: Forest, w: Mapping[Edge, float] | Sequence[float]) -> InterpolatedMatrix:
    """The matrix x^F(w). ``w`` is keyed by edge or aligned with ``f.edges``."""
    vals = _weights_vector(f, w)
    return InterpolatedMatrix(interpolation_matrices(f, vals[None, :])[0])


def check_positivity(m: InterpolatedMatrix | np.ndarray, sym_tol: float = 1e-12) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    a = np.asarray(m.entries if isinstance(m, InterpolatedMatrix) else m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolation("expected a square matrix")
    if not np.allclose(a, a.T, atol=sym_tol, rtol=0):
        raise ContractViolation("matrix is not symmetric")
    return float(np.linalg.eigvalsh(a)[0])


@lru_cache(maxsize=32)
def _block_grid(sizes: tuple[int, ...], order: int) -> tuple[np.ndarray, np.ndarray]:
    """Sorted-coordinate grid for components with ``sizes`` edges each.

    Within a block of size d the collapsed coordinates u give sorted values
    y_1 = u_1 >= y_2 = u_1 u_2 >= ... with Jacobian prod_s u_s^(d-s), which
    is absorbed into Gauss-Jacobi weights. A trailing zero column serves
    lines joining different components.
    """
    cols, wts = [], []
    for d in sizes:
        nodes, weights = [], []
        for s in range(1, d + 1):
            x, w = gauss_jacobi01(order, d - s)
            nodes.append(x)
            weights.append(w)
        u = np.stack(np.meshgrid(*nodes, indexing="ij"), -1).reshape(-1, d)
        wu = np.prod(np.stack(np.meshgrid(*weights, indexing="ij"), -1).reshape(-1, d), axis=1)
        cols.append(np.cumprod(u, axis=1))
        wts.append(wu)
    y, w = np.zeros((1, 0)), np.ones(1)
    for yc, wc in zip(cols, wts):
        y = np.hstack([np.repeat(y, yc.shape[0], axis=0), np.tile(yc, (y.shape[0], 1))])
        w = np.repeat(w, wc.shape[0]) * np.tile(wc, w.shape[0])
    y = np.hstack([y, np.zeros((y.shape[0], 1))])
    return y, w


@lru_cache(maxsize=4096)
def _rank_maps(n: int, edges: tuple[Edge, ...]) -> tuple[tuple[int, ...], np.ndarray]:
    """Component sizes and, per ordering of the parameters, the grid column of each line.

    On the region where a component's parameters are sorted by a
    permutation, the minimum over a path is the parameter of largest rank
    on it, i.e. one of the sorted coordinates.
    """
    f = Forest._trusted(n, edges)
    comp_of = {}
    for c, comp in enumerate(f.components()):
        for v in comp:
            comp_of[v] = c
    groups: dict[int, list[int]] = {}
    for k, (i, _) in enumerate(edges):
        groups.setdefault(comp_of[i], []).append(k)
    blocks = list(groups.values())
    sizes = tuple(len(b) for b in blocks)
    offset, where = 0, {}
    for b in blocks:
        for pos, e in enumerate(b):
            where[e] = (offset, pos)
        offset += len(b)
    zero_col = offset
    maps = []
    for perms in itertools.product(*(itertools.permutations(range(len(b))) for b in blocks)):
        rank = {}
        for b, perm in zip(blocks, perms):
            for r, pos in enumerate(perm):
                rank[b[pos]] = r
        row = []
        for ln in lines(n):
            path = f.paths()[ln]
            if not path:
                row.append(zero_col)
            else:
                row.append(where[path[0]][0] + max(rank[e] for e in path))
        maps.append(row)
    return sizes, np.array(maps, dtype=np.intp)


def forest_rule(f: Forest, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature over the weakening cube of ``f`` expressed in line variables.

    Returns ``(x, weights)`` where ``x`` has shape ``(P, n(n-1)/2)`` and
    holds the interpolated line values at every node. The cube is split into
    the regions where the parameters of each component are sorted; the
    integrand is smooth on each region.
    """
    sizes, maps = _rank_maps(f.n, f.edges)
    y, w = _block_grid(sizes, order)
    x = y[:, maps].reshape(-1, maps.shape[1])
    return x, np.repeat(w, maps.shape[0])


def forest_formula_terms(
    oracle: SmoothFunction,
    n: int,
    quadrature: QuadratureConfig = QuadratureConfig(),
    cap: int = DEFAULT_CAP,
) -> list[tuple[Forest, float, float]]:
    """Per-forest integrals of the forest formula: ``(forest, value, error)``.

    Each integral is refined in Gauss-Legendre order until two successive
    orders agree within the configured tolerance.
    """
    if oracle.n_lines != len(lines(n)):
        raise ContractViolation(f"function has {oracle.n_lines} line variables, K_{n} has {len(lines(n))}")
    index = line_index(n)
    out = []
    for f in enumerate_forests(n, cap=cap):
        subset = tuple(index[e] for e in f.edges)
        if not subset:
            out.append((f, float(oracle.derivative((), np.zeros((1, len(index))))[0]), 0.0))
            continue
        prev = None
        err = np.inf
        for order in range(3, quadrature.max_order + 1, 2):
            x, wts = forest_rule(f, order)
            est = float(np.dot(wts, oracle.derivative(subset, x)))
            if prev is not None:
                err = abs(est - prev)
                if err <= max(quadrature.abs_tol, quadrature.rel_tol * abs(est)):
                    break
            prev = est
        else:
            raise AccuracyError(f"forest {list(f.edges)} did not converge by order {quadrature.max_order}", est, err)
        out.append((f, est, err))
    return out


def apply_forest_formula(
    oracle: SmoothFunction,
    n: int,
    quadrature: QuadratureConfig = QuadratureConfig(),
    cap: int = DEFAULT_CAP,
) -> float:
    """Right-hand side of the forest formula; equals ``oracle`` at all-ones."""
    return math.fsum(val for _, val, _ in forest_formula_terms(oracle, n, quadrature, cap))

"""Intermediate-field representation and loop vertex expansion of ``log Z``.

Integrating out the complex matrix against a GUE field ``sigma`` with
``<sigma_ij sigma_kl> = d_il d_jk`` gives

    Z = < det(1 + i a sigma)^(-N) >,    a = sqrt(2 lam / N),

so each loop vertex is ``V = -N tr log(1 + i a sigma)``. Applying the tree
formula to ``exp(sum_v V_v)`` on replicated fields yields

    log Z = sum_n (1/n!) sum_{trees T on n vertices} A(T)

with ``A`` for a single vertex equal to ``<V>`` and otherwise

    A(T) = N^n (-a^2)^(n-1) sum_{rotations} int dw < tr prod_{corners} R_v >,

where ``R = (1 + i a sigma)^(-1)``, the replicas have covariance
``x^T(w) (x) (d_il d_jk)``, a rotation is a cyclic order of the edges at
every vertex, and the corners are visited by walking once around the tree.

Three evaluation routes are offered. At ``N = 1`` the deterministic route
writes ``R^d = int_0^inf s^(d-1) e^(-s (1 + i a sigma)) ds / (d-1)!`` so
the replica Gaussian integral is done in closed form, leaving a smooth
positive integrand for Gauss-Laguerre rules in ``s`` and sorted-simplex
Gauss-Jacobi rules in ``w``. Monte Carlo samples ``w`` and the replicas
for any ``N`` and builds the resolvents explicitly. The symbolic route
expands every resolvent in powers of ``a`` and integrates exactly.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy import integrate, linalg, special

from .config import McConfig, QuadratureConfig
from .errors import AccuracyError, ContractViolation, DegenerateFitError, ResourceLimitError
from .estimate import Estimate, combine_shards, philox, shard_sizes, shard_stats
from .forest import Forest, enumerate_forests, forest_rule, interpolation_matrices, lines
from .series import PolynomialInN, SeriesInN
from .wick import DEFAULT_ORDER_CAP, GaussianSpec, wick_moment

DEFAULT_TREE_CAP = 6
QUAD_MAX_N = 4
RESOLVENT_SLACK = 1e-12
SIGMA_TAG, TREE_TAG, SWEEP_TAG = 2, 3, 4


@dataclass(frozen=True)
class LoopVertexModel:
    N: int
    lam: float

    def __post_init__(self):
        if not isinstance(self.N, int) or self.N < 1:
            raise ContractViolation("N must be a positive integer")
        lam = self.lam
        if isinstance(lam, complex):
            if abs(lam) == 0 or math.isnan(abs(lam)):
                raise ContractViolation("complex coupling must be non-zero and finite")
        elif not (lam >= 0 and math.isfinite(lam)):
            raise ContractViolation("lambda must be finite and non-negative")

    @property
    def a(self):
        """Intermediate-field coefficient ``sqrt(2 lam / N)``."""
        return (2 * self.lam / self.N) ** 0.5

    @property
    def a2(self):
        return 2 * self.lam / self.N

    def require_real(self) -> float:
        if isinstance(self.lam, complex):
            raise ContractViolation("numerical routes need a real coupling")
        return float(self.lam)

    def to_dict(self) -> dict:
        return {"N": self.N, "lambda": self.lam}


# sigma field ---------------------------------------------------------------

def gue_samples(rng: np.random.Generator, shape: tuple[int, ...], N: int) -> np.ndarray:
    """GUE matrices with ``<s_ij s_kl> = d_il d_jk``, shape ``shape + (N, N)``."""
    re = rng.standard_normal(shape + (N, N))
    im = rng.standard_normal(shape + (N, N))
    g = (re + 1j * im) / math.sqrt(2.0)
    return (g + np.conj(np.swapaxes(g, -1, -2))) / math.sqrt(2.0)


def _check_hermitian(sigma) -> np.ndarray:
    sigma = np.asarray(sigma, dtype=complex)
    if sigma.ndim < 2 or sigma.shape[-1] != sigma.shape[-2]:
        raise ContractViolation("sigma must be a square matrix")
    scale = max(1.0, float(np.max(np.abs(sigma), initial=0.0)))
    if not np.allclose(sigma, np.conj(np.swapaxes(sigma, -1, -2)), rtol=0, atol=1e-12 * scale):
        raise ContractViolation("sigma must be hermitian")
    return sigma


def loop_vertex_value(sigma, model: LoopVertexModel, method: str = "eig") -> complex:
    """``V = -N tr log(1 + i a sigma)`` for one hermitian ``sigma``.

    ``method="eig"`` sums logs of eigenvalues; ``method="logm"`` takes the
    dense matrix logarithm.
    """
    sigma = _check_hermitian(sigma)
    if sigma.ndim != 2:
        raise ContractViolation("one matrix at a time")
    if sigma.shape[0] != model.N:
        raise ContractViolation(f"sigma must be {model.N}x{model.N}")
    a = model.a
    if method == "eig":
        mu = np.linalg.eigvalsh(sigma)
        return complex(-model.N * np.sum(np.log(1 + 1j * a * mu)))
    if method == "logm":
        eye = np.eye(model.N)
        return complex(-model.N * np.trace(linalg.logm(eye + 1j * a * sigma)))
    raise ContractViolation(f"unknown method {method!r}")


def resolvent(sigma, model: LoopVertexModel) -> np.ndarray:
    """``(1 + i a sigma)^(-1)``, batched over leading axes."""
    sigma = _check_hermitian(sigma)
    eye = np.eye(sigma.shape[-1])
    return np.linalg.inv(eye + 1j * model.a * sigma)


def operator_norms(R: np.ndarray) -> np.ndarray:
    if R.shape[-1] == 1:
        return np.abs(R[..., 0, 0])
    return np.linalg.norm(R, ord=2, axis=(-2, -1))


def _gue_density(N: int) -> Callable[[float], float]:
    """One-point eigenvalue density of N x N GUE, normalised to N."""
    norms = [1.0 / math.factorial(k) for k in range(N)]

    def rho(x: float) -> float:
        he = special.eval_hermitenorm(np.arange(N), x)
        return float(np.dot(norms, he * he)) * math.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)

    return rho


def _quad_line(f, cfg: QuadratureConfig) -> tuple[float, float]:
    """Integral of an even or general function on the real line with a Gaussian tail cut."""
    T = math.sqrt(2.0 * cfg.semi_infinite_cutoff) + 4.0
    val, err = integrate.quad(f, -T, T, epsabs=cfg.abs_tol / 10, epsrel=cfg.rel_tol, limit=cfg.max_subdivisions)
    return val, err


def _sigma_z_quadrature(model: LoopVertexModel, cfg: QuadratureConfig) -> Estimate:
    lam = model.require_real()
    N = model.N
    if N > QUAD_MAX_N:
        raise ContractViolation(f"quadrature for sigma_z needs N <= {QUAD_MAX_N}")
    a2 = 2 * lam / N
    if N == 1:
        T = math.sqrt(2.0 * cfg.semi_infinite_cutoff)
        # Re (1 + i a s)^(-1) = 1/(1 + a^2 s^2); the imaginary part is odd
        val, err = integrate.quad(
            lambda s: math.exp(-0.5 * s * s) / (1.0 + a2 * s * s),
            0.0,
            T,
            epsabs=cfg.abs_tol / 10,
            epsrel=cfg.rel_tol,
            limit=cfg.max_subdivisions,
        )
        val *= 2.0 / math.sqrt(2 * math.pi)
        err = 2.0 * err / math.sqrt(2 * math.pi) + float(special.erfc(T / math.sqrt(2)))
        est = Estimate(val, err, "sigma-quadrature")
    else:
        # Andreief: <prod_i f(mu_i)> = det[ int psi_j psi_k f ] over orthonormal Hermite functions
        a = math.sqrt(a2)
        M = np.zeros((N, N), dtype=complex)
        E = np.zeros((N, N))
        for j in range(N):
            for k in range(j, N):
                c = 1.0 / math.sqrt(math.factorial(j) * math.factorial(k) * 2 * math.pi)

                def base(x, j=j, k=k, c=c):
                    return c * special.eval_hermitenorm(j, x) * special.eval_hermitenorm(k, x) * math.exp(-0.5 * x * x)

                if (j + k) % 2 == 0:
                    v, e = _quad_line(lambda x: base(x) * ((1 + 1j * a * x) ** (-N)).real, cfg)
                    M[j, k] = v
                else:
                    v, e = _quad_line(lambda x: base(x) * ((1 + 1j * a * x) ** (-N)).imag, cfg)
                    M[j, k] = 1j * v
                M[k, j] = M[j, k]
                E[j, k] = E[k, j] = e
        det = np.linalg.det(M)
        cof = det * np.linalg.inv(M).T
        err = float(np.sum(np.abs(cof) * E))
        est = Estimate(float(det.real), err, "andreief-quadrature", extra={"imag": float(det.imag)})
    if est.error > max(cfg.abs_tol, cfg.rel_tol * abs(est.value)):
        raise AccuracyError("sigma quadrature missed its tolerance", est.value, est.error)
    return est


def _sigma_z_shard(args) -> tuple[int, float, float]:
    N, a, seed, shard, size = args
    rng = philox(seed, SIGMA_TAG, shard)
    mu = np.linalg.eigvalsh(gue_samples(rng, (size,), N))
    vals = np.exp(-N * np.sum(np.log(1 + 1j * a * mu), axis=1)).real
    return shard_stats(vals)


def sigma_z(
    model: LoopVertexModel,
    integrator: QuadratureConfig | McConfig = QuadratureConfig(),
    map_fn: Callable = map,
) -> Estimate:
    """``Z`` from the intermediate field, ``< det(1 + i a sigma)^(-N) >``."""
    lam = model.require_real()
    if lam == 0:
        return Estimate(1.0, 0.0, "exact")
    if isinstance(integrator, QuadratureConfig):
        return _sigma_z_quadrature(model, integrator)
    if isinstance(integrator, McConfig):
        tasks = [
            (model.N, model.a, integrator.seed, k, size)
            for k, size in enumerate(shard_sizes(integrator.samples, integrator.batch))
        ]
        mean, se, n = combine_shards(list(map_fn(_sigma_z_shard, tasks)))
        return Estimate(mean, se, "sigma-monte-carlo", samples=n, extra={"seed": integrator.seed})
    raise ContractViolation(f"unsupported integrator {type(integrator).__name__}")


# trees ---------------------------------------------------------------------

def _tree_code(adj: dict[int, list[int]], root: int) -> str:
    def enc(v, parent):
        return "(" + "".join(sorted(enc(u, v) for u in adj[v] if u != parent)) + ")"

    return enc(root, None)


def tree_canonical_form(t: Forest) -> str:
    """Isomorphism invariant of an unlabelled tree (rooted at its centre)."""
    adj = {v: [] for v in range(1, t.n + 1)}
    for i, j in t.edges:
        adj[i].append(j)
        adj[j].append(i)
    remaining = set(adj)
    degree = {v: len(adj[v]) for v in adj}
    layer = [v for v in adj if degree[v] <= 1]
    while len(remaining) > 2:
        nxt = []
        for v in layer:
            remaining.discard(v)
            for u in adj[v]:
                if u in remaining:
                    degree[u] -= 1
                    if degree[u] == 1:
                        nxt.append(u)
        layer = nxt
    return min(_tree_code(adj, c) for c in remaining)


@dataclass(frozen=True)
class TreeShape:
    representative: Forest
    count: int
    index: int  # position of the representative in the canonical tree list


@lru_cache(maxsize=16)
def tree_shapes(n: int) -> tuple[TreeShape, ...]:
    """Isomorphism classes of labelled trees on ``n`` vertices with multiplicities."""
    seen: dict[str, list] = {}
    for idx, t in enumerate(enumerate_forests(n, trees_only=True)):
        key = tree_canonical_form(t)
        if key in seen:
            seen[key][1] += 1
        else:
            seen[key] = [t, 1, idx]
    return tuple(TreeShape(t, c, i) for t, c, i in seen.values())


def _incident(t: Forest) -> dict[int, list[int]]:
    inc = {v: [] for v in range(1, t.n + 1)}
    for k, (i, j) in enumerate(t.edges):
        inc[i].append(k)
        inc[j].append(k)
    return inc


def rotations(t: Forest) -> Iterator[dict[int, tuple[int, ...]]]:
    """Every choice of cyclic edge order at every vertex; ``prod (d_v - 1)!`` of them."""
    inc = _incident(t)
    options = []
    for v in range(1, t.n + 1):
        es = inc[v]
        if not es:
            options.append([()])
        else:
            options.append([(es[0],) + p for p in itertools.permutations(es[1:])])
    for choice in itertools.product(*options):
        yield {v: choice[v - 1] for v in range(1, t.n + 1)}


def contour(t: Forest, rot: dict[int, tuple[int, ...]]) -> tuple[int, ...]:
    """Vertices met at the corners while walking once around the tree."""
    if not t.edges:
        return ()
    e = rot[1][0]
    out = []
    cur = 1
    for _ in range(2 * len(t.edges)):
        i, j = t.edges[e]
        other = j if cur == i else i
        out.append(other)
        order = rot[other]
        e = order[(order.index(e) + 1) % len(order)]
        cur = other
    return tuple(out)


@lru_cache(maxsize=4096)
def tree_contours(n: int, edges: tuple) -> tuple[tuple[int, ...], ...]:
    t = Forest._trusted(n, edges)
    return tuple(contour(t, r) for r in rotations(t))


def _check_tree(t: Forest, cap: int) -> None:
    if not isinstance(t, Forest) or not t.is_tree:
        raise ContractViolation("tree_amplitude needs a spanning tree")
    if t.n > cap:
        raise ResourceLimitError(f"tree on {t.n} vertices exceeds the cap {cap}", cap)


# N = 1 deterministic route -------------------------------------------------

def _laplace_points(t: Forest, level: int) -> tuple[int, int, int]:
    wo, go = level + 1, 2 * level + 2
    E = len(t.edges)
    return wo, go, math.factorial(E) * wo**E * go**t.n


def _laplace_amplitude(t: Forest, lam: float, wo: int, go: int) -> float:
    """``(-2 lam)^(n-1) int dw int ds prod s^(d-1) e^(-s) exp(-lam s.X.s)`` at N = 1."""
    n = t.n
    deg = t.degrees()
    x, ww = forest_rule(t, wo)
    nodes, wts = [], []
    for d in deg:
        r, w = special.roots_genlaguerre(go, d - 1)
        nodes.append(r)
        wts.append(w)
    S = np.stack(np.meshgrid(*nodes, indexing="ij"), -1).reshape(-1, n)
    SW = np.prod(np.stack(np.meshgrid(*wts, indexing="ij"), -1).reshape(-1, n), axis=1)
    diag = np.sum(S * S, axis=1)
    cross = np.stack([S[:, i - 1] * S[:, j - 1] for i, j in lines(n)], axis=1)
    block = max(1, 4_000_000 // len(SW))
    total = 0.0
    for b in range(0, len(ww), block):
        q = diag[None, :] + 2.0 * (x[b:b + block] @ cross.T)
        total += float(ww[b:b + block] @ (np.exp(-lam * q) @ SW))
    return (-2.0 * lam) ** (n - 1) * total


def _vertex_quadrature(model: LoopVertexModel, cfg: QuadratureConfig) -> Estimate:
    """``<V> = -(N/2) int rho_N(mu) log(1 + a^2 mu^2) dmu``."""
    lam = model.require_real()
    rho = _gue_density(model.N)
    a2 = 2 * lam / model.N
    val, err = _quad_line(lambda x: rho(x) * math.log1p(a2 * x * x), cfg)
    val *= -0.5 * model.N
    err *= 0.5 * model.N
    if err > max(cfg.abs_tol, cfg.rel_tol * abs(val)):
        raise AccuracyError("loop vertex quadrature missed its tolerance", val, err)
    return Estimate(val, err, "density-quadrature")


def _refine(values: Callable[[int], float], budget: Callable[[int], bool], tol: Callable[[float], float], what: str):
    prev = None
    level = 0
    while True:
        if not budget(level):
            if prev is None:
                raise AccuracyError(f"{what}: no affordable quadrature level", float("nan"), float("inf"))
            raise AccuracyError(f"{what}: quadrature budget exhausted at level {level}", prev[0], prev[1])
        v = values(level)
        if prev is not None:
            err = abs(v - prev[0])
            if err <= tol(v):
                return v, err, level
            prev = (v, err)
        else:
            prev = (v, float("inf"))
        level += 1


# Monte Carlo route ---------------------------------------------------------

def _tree_mc_shard(args):
    n, edges, N, a, seed, stream, shard, size = args
    rng = philox(seed, TREE_TAG, stream, shard)
    t = Forest._trusted(n, edges)
    if n == 1:
        mu = np.linalg.eigvalsh(gue_samples(rng, (size,), N))
        vals = -0.5 * N * np.sum(np.log1p((a * mu) ** 2), axis=1)
        R = 1.0 / (1.0 + 1j * a * mu)
        norms = np.abs(R)
        return shard_stats(vals), float(norms.max()), int(np.count_nonzero(norms > 1 + RESOLVENT_SLACK))
    w = rng.random((size, n - 1))
    X = interpolation_matrices(t, w)
    ev, Q = np.linalg.eigh(X)
    L = Q * np.sqrt(np.clip(ev, 0.0, None))[:, None, :]
    G = gue_samples(rng, (size, n), N)
    sigma = np.einsum("bvu,buij->bvij", L, G)
    R = np.linalg.inv(np.eye(N) + 1j * a * sigma)
    norms = operator_norms(R)
    acc = np.zeros(size, dtype=complex)
    for path in tree_contours(n, edges):
        prod = R[:, path[0] - 1]
        for v in path[1:]:
            prod = prod @ R[:, v - 1]
        acc += np.trace(prod, axis1=-2, axis2=-1)
    pref = N**n * (-(a * a)) ** (n - 1)
    return shard_stats(pref * acc.real), float(norms.max()), int(np.count_nonzero(norms > 1 + RESOLVENT_SLACK))


def _tree_mc(t: Forest, model: LoopVertexModel, cfg: McConfig, stream: int, map_fn: Callable) -> Estimate:
    model.require_real()
    tasks = [
        (t.n, t.edges, model.N, model.a, cfg.seed, stream, k, size)
        for k, size in enumerate(shard_sizes(cfg.samples, cfg.batch))
    ]
    results = list(map_fn(_tree_mc_shard, tasks))
    mean, se, n = combine_shards([r[0] for r in results])
    return Estimate(
        mean,
        se,
        "monte-carlo",
        samples=n,
        extra={
            "max_resolvent_norm": max(r[1] for r in results),
            "resolvent_violations": sum(r[2] for r in results),
        },
    )


def tree_amplitude(
    t: Forest,
    model: LoopVertexModel,
    integrator: QuadratureConfig | McConfig = QuadratureConfig(),
    stream: int = 0,
    cap: int = DEFAULT_TREE_CAP,
    map_fn: Callable = map,
) -> Estimate:
    """Amplitude ``A(T)`` of one labelled tree (without the ``1/n!``).

    Quadrature handles a single vertex for ``N <= 4`` and larger trees at
    ``N = 1``; Monte Carlo handles any ``N``. ``stream`` selects the random
    stream, normally the tree's position in the canonical enumeration.
    """
    _check_tree(t, cap)
    lam = model.require_real()
    if lam == 0:
        return Estimate(0.0, 0.0, "exact")
    if isinstance(integrator, McConfig):
        return _tree_mc(t, model, integrator, stream, map_fn)
    if not isinstance(integrator, QuadratureConfig):
        raise ContractViolation(f"unsupported integrator {type(integrator).__name__}")
    if t.n == 1:
        if model.N > QUAD_MAX_N:
            raise ContractViolation(f"vertex quadrature needs N <= {QUAD_MAX_N}")
        return _vertex_quadrature(model, integrator)
    if model.N != 1:
        raise ContractViolation("quadrature tree amplitudes need N = 1; use Monte Carlo")
    cfg = integrator

    def budget(level):
        wo, go, pts = _laplace_points(t, level)
        return pts <= cfg.max_points and wo <= cfg.max_order and go <= 2 * cfg.max_order

    def values(level):
        wo, go, _ = _laplace_points(t, level)
        return _laplace_amplitude(t, lam, wo, go)

    v, err, level = _refine(values, budget, lambda v: max(cfg.abs_tol, cfg.rel_tol * abs(v)), f"tree {list(t.edges)}")
    return Estimate(v, err, "laplace-quadrature", extra={"level": level})


# tree sum ------------------------------------------------------------------

@dataclass(frozen=True)
class OrderTerm:
    n: int
    t_n: float
    error: float
    trees: int
    shapes: int

    def to_dict(self) -> dict:
        return {"n": self.n, "t_n": self.t_n, "error": self.error, "trees": self.trees, "shapes": self.shapes}


@dataclass(frozen=True)
class LveEstimate:
    lam: float
    N: int
    orders: tuple[OrderTerm, ...]
    oracle: Estimate | None
    seed: int | None
    integrator: dict
    diagnostics: dict = field(default_factory=dict)

    @property
    def partial_sums(self) -> list[float]:
        out, acc = [], []
        for o in self.orders:
            acc.append(o.t_n)
            out.append(math.fsum(acc))
        return out

    @property
    def magnitudes(self) -> list[float]:
        return [abs(o.t_n) for o in self.orders]

    @property
    def total(self) -> float:
        return self.partial_sums[-1] if self.orders else 0.0

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "N": self.N,
            "orders": [o.to_dict() for o in self.orders],
            "partial_sums": self.partial_sums,
            "oracle": None
            if self.oracle is None
            else {"log_z": self.oracle.value, "error": self.oracle.error, "method": self.oracle.method},
            "seed": self.seed,
            "integrator": self.integrator,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _oracle_for(model: LoopVertexModel, integrator) -> Estimate | None:
    from .oracle import MC_MAX_N, log_z_reference

    lam = model.require_real()
    if isinstance(integrator, QuadratureConfig):
        if model.N != 1:
            return None
        return log_z_reference(lam, 1, QuadratureConfig(abs_tol=1e-12, rel_tol=1e-12))
    if model.N <= MC_MAX_N:
        return log_z_reference(lam, model.N, integrator)
    return None


def lve_sum(
    model: LoopVertexModel,
    n_max: int,
    integrator: QuadratureConfig | McConfig = QuadratureConfig(),
    cap: int = DEFAULT_TREE_CAP,
    map_fn: Callable = map,
    with_oracle: bool = True,
) -> LveEstimate:
    """Orders ``t_n = (1/n!) sum_T A(T)`` for ``n <= n_max`` and their partial sums.

    Trees are grouped by isomorphism class since the amplitude does not
    depend on vertex labels. With quadrature each order is refined until
    two successive levels agree to ``max(abs_tol, rel_tol |t_n|)``.
    """
    if not isinstance(n_max, int) or n_max < 1:
        raise ContractViolation("n_max must be a positive integer")
    if n_max > cap:
        raise ResourceLimitError(f"n_max={n_max} exceeds the cap {cap}", cap)
    lam = model.require_real()
    terms = []
    diag = {"max_resolvent_norm": 0.0, "resolvent_violations": 0, "levels": {}}
    for n in range(1, n_max + 1):
        shapes = tree_shapes(n)
        ntrees = sum(s.count for s in shapes)
        fact = math.factorial(n)
        if lam == 0:
            terms.append(OrderTerm(n, 0.0, 0.0, ntrees, len(shapes)))
            continue
        if isinstance(integrator, QuadratureConfig) and n >= 2:
            if model.N != 1:
                raise ContractViolation("quadrature tree sums need N = 1; use Monte Carlo")
            cfg = integrator

            def budget(level, shapes=shapes):
                return all(
                    _laplace_points(s.representative, level)[2] <= cfg.max_points
                    and level + 1 <= cfg.max_order
                    for s in shapes
                )

            def values(level, shapes=shapes, fact=fact):
                parts = list(
                    map_fn(
                        _laplace_task,
                        [(s.representative.n, s.representative.edges, lam, level) for s in shapes],
                    )
                )
                return math.fsum(s.count * p for s, p in zip(shapes, parts)) / fact

            v, err, level = _refine(values, budget, lambda v: max(cfg.abs_tol, cfg.rel_tol * abs(v)), f"order {n}")
            diag["levels"][str(n)] = level
            terms.append(OrderTerm(n, v, err, ntrees, len(shapes)))
            continue
        ests = [
            tree_amplitude(s.representative, model, integrator, stream=s.index, cap=cap, map_fn=map_fn)
            for s in shapes
        ]
        v = math.fsum(s.count * e.value for s, e in zip(shapes, ests)) / fact
        if isinstance(integrator, McConfig):
            # shapes use independent streams, so variances add
            err = math.sqrt(math.fsum((s.count * e.error) ** 2 for s, e in zip(shapes, ests))) / fact
            for e in ests:
                diag["max_resolvent_norm"] = max(diag["max_resolvent_norm"], e.extra.get("max_resolvent_norm", 0.0))
                diag["resolvent_violations"] += e.extra.get("resolvent_violations", 0)
        else:
            err = math.fsum(s.count * e.error for s, e in zip(shapes, ests)) / fact
        terms.append(OrderTerm(n, v, err, ntrees, len(shapes)))
    oracle = _oracle_for(model, integrator) if with_oracle and lam > 0 else None
    if with_oracle and lam == 0:
        oracle = Estimate(0.0, 0.0, "exact")
    seed = integrator.seed if isinstance(integrator, McConfig) else None
    return LveEstimate(lam, model.N, tuple(terms), oracle, seed, integrator.to_dict(), diag)


def _laplace_task(args) -> float:
    n, edges, lam, level = args
    t = Forest._trusted(n, edges)
    wo, go, _ = _laplace_points(t, level)
    return _laplace_amplitude(t, lam, wo, go)


# symbolic expansion --------------------------------------------------------

def _min_product_integral(edges_of_pairs: tuple[frozenset, ...]) -> Fraction:
    """``int_[0,1]^E prod_p min_{e in path_p} w_e dw`` exactly.

    On the region where the involved parameters are sorted decreasingly as
    ``y_1 > ... > y_E``, each minimum is the ``y`` of largest rank on its
    path, and ``int prod_r y_r^(m_r)`` over that simplex equals
    ``prod_r 1/(sum_{s>=r} m_s + E - r + 1)``.
    """
    involved = sorted(set().union(*edges_of_pairs)) if edges_of_pairs else []
    E = len(involved)
    if E == 0:
        return Fraction(1)
    total = Fraction(0)
    for order in itertools.permutations(involved):
        rank = {e: r for r, e in enumerate(order)}
        m = [0] * E
        for path in edges_of_pairs:
            m[max(rank[e] for e in path)] += 1
        term = Fraction(1)
        tail = 0
        for r in range(E - 1, -1, -1):
            tail += m[r]
            term /= tail + E - r
        total += term
    return total


def _path_edges(t: Forest) -> dict[tuple[int, int], frozenset]:
    out = {}
    paths = t.paths()
    for (i, j), p in paths.items():
        out[(i, j)] = out[(j, i)] = frozenset(p)
    return out


def _single_trace_classes(L: int, pairs: Sequence[tuple[int, int]]) -> int:
    """Index classes of ``tr(s_1 ... s_L)`` under hermitian pairings."""
    if L == 0:
        return 1
    parent = list(range(L))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    count = L
    for x, y in pairs:
        for u, v in ((x, (y + 1) % L), ((x + 1) % L, y)):
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[ru] = rv
                count -= 1
    return count


def _all_pairings(items: tuple[int, ...]) -> Iterator[tuple[tuple[int, int], ...]]:
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for k, other in enumerate(rest):
        for tail in _all_pairings(rest[:k] + rest[k + 1:]):
            yield ((first, other),) + tail


@lru_cache(maxsize=None)
def _pairings_of(L: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    return tuple(_all_pairings(tuple(range(L))))


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    for cuts in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 2 - prev)
        yield tuple(out)


def lve_log_z_series(max_order: int, cap: int = DEFAULT_ORDER_CAP) -> SeriesInN:
    """``log Z`` coefficients obtained from the tree expansion, exact in N.

    Every resolvent is expanded as ``sum_k (-i a sigma)^k``, the replica
    Gaussian is integrated by Wick's theorem on the single contour trace and
    the weakening integrals are done exactly. A tree on ``n`` vertices with
    ``2p`` field insertions contributes at order ``n - 1 + p``.
    """
    if not isinstance(max_order, int) or max_order < 0:
        raise ContractViolation("max_order must be a non-negative integer")
    if max_order > cap:
        raise ResourceLimitError(f"order {max_order} exceeds the cap {cap}", cap)
    coeffs = {k: PolynomialInN() for k in range(max_order + 1)}
    herm = GaussianSpec("hermitian")
    # one vertex: N sum_p (-2/N)^p <tr s^(2p)> / (2p) at order p
    for p in range(1, max_order + 1):
        mom = wick_moment("S" * (2 * p), herm)
        coeffs[p] = coeffs[p] + (mom * PolynomialInN.monomial(1 - p, Fraction((-2) ** p, 2 * p)))
    for n in range(2, max_order + 2):
        fact = math.factorial(n)
        for t in enumerate_forests(n, trees_only=True):
            paths = _path_edges(t)
            cache: dict[tuple[int, ...], dict[int, Fraction]] = {}
            for corners in tree_contours(n, t.edges):
                K = len(corners)
                for p in range(0, max_order - n + 2):
                    order = n - 1 + p
                    acc: dict[int, Fraction] = {}
                    for comp in _compositions(2 * p, K):
                        word = tuple(v for v, k in zip(corners, comp) for _ in range(k))
                        if word not in cache:
                            cache[word] = _word_weight(word, paths)
                        for cls, val in cache[word].items():
                            acc[cls] = acc.get(cls, Fraction(0)) + val
                    if not acc:
                        continue
                    # N^n (-2/N)^(n-1+p) / n! times sum N^classes W
                    pref = Fraction((-2) ** order, fact)
                    poly = PolynomialInN({n - order + c: v * pref for c, v in acc.items()})
                    coeffs[order] = coeffs[order] + poly
    return SeriesInN(coeffs, max_order)


def _word_weight(word: tuple[int, ...], paths) -> dict[int, Fraction]:
    """``sum over pairings of N^classes * int dw prod x_{v v'}`` keyed by classes."""
    L = len(word)
    out: dict[int, Fraction] = {}
    for pairs in _pairings_of(L):
        cls = _single_trace_classes(L, pairs)
        edge_sets = tuple(paths[(word[x], word[y])] for x, y in pairs if word[x] != word[y])
        w = _min_product_integral(edge_sets)
        out[cls] = out.get(cls, Fraction(0)) + w
    return out


# diagnostics ---------------------------------------------------------------

@dataclass(frozen=True)
class BorelConfig:
    """Thresholds for the factorial-growth fit.

    ``curvature_tol`` caps the quadratic coefficient of
    ``log(|c_n|/n!)`` in ``n``: growth like ``C K^n n! n^b`` has curvature
    ``O(1/n^2)`` while ``(n!)^(1+e)`` adds ``e/n``. ``residual_tol`` caps
    the largest deviation from the straight-line fit, in log units.
    """

    curvature_tol: float = 0.1
    residual_tol: float = 1.0

    def to_dict(self) -> dict:
        return {"curvature_tol": self.curvature_tol, "residual_tol": self.residual_tol}


@dataclass(frozen=True)
class BorelFit:
    C: float
    K: float
    residuals: tuple[float, ...]
    curvature: float
    passed: bool
    orders: tuple[int, ...]
    config: dict

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "K": self.K,
            "residuals": list(self.residuals),
            "curvature": self.curvature,
            "passed": self.passed,
            "orders": list(self.orders),
            "config": self.config,
        }


def borel_growth_check(coeffs: Sequence, cfg: BorelConfig = BorelConfig(), start: int = 1) -> BorelFit:
    """Fit ``log(|c_n| / n!) = log C0 + n log K`` over the non-zero terms.

    ``coeffs[i]`` is the coefficient of order ``start + i``. The reported
    ``C`` is raised by the largest residual so that ``|c_n| <= C K^n n!``
    holds on every fitted order. Passing is a heuristic verdict, not a proof.
    """
    if len(coeffs) < 4:
        raise ContractViolation("at least four coefficients are needed")
    pts = [(start + i, c) for i, c in enumerate(coeffs) if c != 0]
    if len(pts) < 3:
        raise DegenerateFitError("fewer than three non-zero coefficients")
    n = np.array([p[0] for p in pts], dtype=float)
    y = np.array([math.log(abs(c)) - math.lgamma(k + 1) for k, c in pts])
    slope, intercept = np.polyfit(n, y, 1)
    resid = y - (intercept + slope * n)
    curvature = float(np.polyfit(n, y, 2)[0])
    C = math.exp(intercept + float(resid.max()))
    K = math.exp(slope)
    passed = curvature <= cfg.curvature_tol and float(np.max(np.abs(resid))) <= cfg.residual_tol
    return BorelFit(C, K, tuple(float(r) for r in resid), curvature, bool(passed), tuple(int(k) for k in n), cfg.to_dict())


@dataclass(frozen=True)
class ResolventSweep:
    samples: int
    resolvents: int
    max_norm: float
    violations: int

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "resolvents": self.resolvents,
            "max_norm": self.max_norm,
            "violations": self.violations,
            "slack": RESOLVENT_SLACK,
        }


def resolvent_norm_sweep(
    model: LoopVertexModel,
    samples: int,
    seed: int = 0,
    n_max: int = 4,
    batch: int = 10_000,
) -> ResolventSweep:
    """Operator norms of replica resolvents on sampled trees and weakening parameters.

    Every sample draws ``w`` and the replicas exactly as the Monte Carlo
    tree amplitude does, cycling over the tree classes with ``2 <= n <= n_max``.
    A violation is a norm above ``1 + 1e-12``.
    """
    model.require_real()
    shapes = [s for n in range(2, n_max + 1) for s in tree_shapes(n)]
    a = model.a
    N = model.N
    worst, bad, count = 0.0, 0, 0
    for k, size in enumerate(shard_sizes(samples, batch)):
        rng = philox(seed, SWEEP_TAG, k)
        s = shapes[k % len(shapes)].representative
        w = rng.random((size, s.n - 1))
        X = interpolation_matrices(s, w)
        ev, Q = np.linalg.eigh(X)
        L = Q * np.sqrt(np.clip(ev, 0.0, None))[:, None, :]
        sigma = np.einsum("bvu,buij->bvij", L, gue_samples(rng, (size, s.n), N))
        R = np.linalg.inv(np.eye(N) + 1j * a * sigma)
        norms = operator_norms(R)
        worst = max(worst, float(norms.max()))
        bad += int(np.count_nonzero(norms > 1 + RESOLVENT_SLACK))
        count += norms.size
    return ResolventSweep(samples, count, worst, bad)

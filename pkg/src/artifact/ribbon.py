"""Ribbon graphs of the complex quartic vertex ``Tr Phi^dag Phi Phi^dag Phi``.

Slots are 1-based. Vertex ``v`` (1-based) owns slots ``4v-3 .. 4v`` carrying
the labels Phi, Phi^dag, Phi, Phi^dag in rotation order. A pairing matches
every non-external slot to a slot of the opposite label. Faces are the
cycles of ``rotation o pairing`` where external slots are fixed by the
pairing, so a face is broken when it passes through an external slot.

Besides the object API there is a batched form used by the exhaustive
Wick enumeration: an integer array ``perm`` of shape ``(M, 2n)`` where
``perm[m, a] = b`` matches the ``a``-th Phi slot to the ``b``-th Phi^dag
slot (both counted 0-based in slot order).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import ContractViolation, InvalidPairingError, StructureError
from .propagator import PropagatorClass

PHI = "Phi"
DAG = "Phi^dag"


def slot_label(slot: int) -> str:
    return PHI if (slot - 1) % 2 == 0 else DAG


def slot_vertex(slot: int) -> int:
    return (slot - 1) // 4 + 1


def rotate(slot: int) -> int:
    """Next slot around the same vertex."""
    base = 4 * ((slot - 1) // 4)
    return base + (slot - base) % 4 + 1


@dataclass(frozen=True)
class RibbonGraph:
    n_vertices: int
    pairing: tuple[tuple[int, int], ...]
    external: tuple[int, ...] = ()

    @property
    def n_slots(self) -> int:
        return 4 * self.n_vertices

    def partner(self) -> dict[int, int]:
        """The pairing as a map, with external slots fixed."""
        alpha = {s: s for s in self.external}
        for a, b in self.pairing:
            alpha[a] = b
            alpha[b] = a
        return alpha

    def to_dict(self) -> dict:
        return {
            "n_vertices": self.n_vertices,
            "pairing": [list(p) for p in self.pairing],
            "external": list(self.external),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: Mapping) -> "RibbonGraph":
        return from_pairing(d["n_vertices"], [tuple(p) for p in d["pairing"]], d.get("external", ()))


def from_pairing(
    n_vertices: int,
    pairing: Mapping[int, int] | Iterable[tuple[int, int]],
    external: Iterable[int] = (),
) -> RibbonGraph:
    """Validate a Phi/Phi^dag matching and build the graph.

    ``pairing`` may be a mapping or an iterable of slot pairs; either
    direction is accepted. Slots neither paired nor declared external are a
    contract violation.
    """
    if not isinstance(n_vertices, int) or n_vertices < 1:
        raise ContractViolation("n_vertices must be a positive integer")
    top = 4 * n_vertices
    items = pairing.items() if isinstance(pairing, Mapping) else pairing
    seen: set[int] = set()
    pairs = []
    for a, b in items:
        for s in (a, b):
            if not isinstance(s, (int, np.integer)) or not 1 <= s <= top:
                raise ContractViolation(f"slot {s} out of range 1..{top}")
        a, b = int(a), int(b)
        if (min(a, b), max(a, b)) in pairs and isinstance(pairing, Mapping):
            continue  # a symmetric mapping lists each pair twice
        if a in seen or b in seen or a == b:
            raise InvalidPairingError(f"slot used twice in pair ({a}, {b})")
        if slot_label(a) == slot_label(b):
            raise InvalidPairingError(f"pair ({a}, {b}) matches {slot_label(a)} to {slot_label(b)}")
        seen.update((a, b))
        pairs.append((min(a, b), max(a, b)))
    ext = tuple(sorted(int(s) for s in external))
    if len(set(ext)) != len(ext):
        raise ContractViolation("external slot listed twice")
    for s in ext:
        if not 1 <= s <= top:
            raise ContractViolation(f"external slot {s} out of range 1..{top}")
        if s in seen:
            raise ContractViolation(f"slot {s} is both paired and external")
    missing = set(range(1, top + 1)) - seen - set(ext)
    if missing:
        raise ContractViolation(f"slots {sorted(missing)} are neither paired nor external")
    return RibbonGraph(n_vertices, tuple(sorted(pairs)), ext)


def faces(g: RibbonGraph, convention: str = "rotation_after_pairing") -> list[tuple[int, ...]]:
    """Face cycles as tuples of slots.

    ``rotation_after_pairing`` walks ``s -> rotate(pairing(s))``; the other
    convention ``pairing_after_rotation`` walks ``s -> pairing(rotate(s))``.
    The two permutations are conjugate, so their cycle counts agree.
    """
    alpha = g.partner()
    if convention == "rotation_after_pairing":
        step = lambda s: rotate(alpha[s])  # noqa: E731
    elif convention == "pairing_after_rotation":
        step = lambda s: alpha[rotate(s)]  # noqa: E731
    else:
        raise ContractViolation(f"unknown convention {convention!r}")
    out = []
    visited: set[int] = set()
    for s in range(1, g.n_slots + 1):
        if s in visited:
            continue
        cyc = []
        while s not in visited:
            visited.add(s)
            cyc.append(s)
            s = step(s)
        out.append(tuple(cyc))
    return out


def vertex_components(g: RibbonGraph) -> list[list[int]]:
    parent = list(range(g.n_vertices + 1))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in g.pairing:
        ra, rb = find(slot_vertex(a)), find(slot_vertex(b))
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for v in range(1, g.n_vertices + 1):
        groups.setdefault(find(v), []).append(v)
    return [groups[r] for r in sorted(groups)]


@dataclass(frozen=True)
class GraphInvariants:
    V: int
    E: int
    F: int
    g: int
    B: int
    connected: bool
    ext: int
    components: int = 1
    component_genera: tuple[int, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "E": self.E,
            "F": self.F,
            "g": self.g,
            "B": self.B,
            "connected": self.connected,
            "ext": self.ext,
            "components": self.components,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def invariants(g: RibbonGraph) -> GraphInvariants:
    """Vertices, edges, faces, genus and broken faces of a ribbon graph.

    The genus is computed from Euler's relation per connected component and
    summed; a half-integer or negative value raises StructureError.
    """
    fs = faces(g)
    comps = vertex_components(g)
    where = {}
    for ci, comp in enumerate(comps):
        for v in comp:
            where[v] = ci
    Vc = [len(c) for c in comps]
    Ec = [0] * len(comps)
    Fc = [0] * len(comps)
    for a, _ in g.pairing:
        Ec[where[slot_vertex(a)]] += 1
    ext_set = set(g.external)
    broken = 0
    for f in fs:
        Fc[where[slot_vertex(f[0])]] += 1
        if ext_set.intersection(f):
            broken += 1
    genera = []
    for v, e, f in zip(Vc, Ec, Fc):
        twice = 2 - v + e - f
        if twice < 0 or twice % 2:
            raise StructureError(f"Euler relation fails on a component: V={v}, E={e}, F={f}")
        genera.append(twice // 2)
    return GraphInvariants(
        V=g.n_vertices,
        E=len(g.pairing),
        F=len(fs),
        g=sum(genera),
        B=broken,
        connected=len(comps) == 1,
        ext=len(g.external),
        components=len(comps),
        component_genera=tuple(genera),
    )


@dataclass(frozen=True)
class DivergenceDegree:
    omega: int
    two_broken_four_point: bool
    beyond_classified: bool

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "two_broken_four_point": self.two_broken_four_point,
            "beyond_classified": self.beyond_classified,
        }


def divergence_degree(inv: GraphInvariants, model: PropagatorClass = PropagatorClass.ORDINARY) -> DivergenceDegree:
    """Power counting ``omega = 4 - ext - 8g - 4(B - 1)`` for the ordinary class.

    Four-point graphs with two broken faces are flagged; graphs with more
    than two broken faces get ``beyond_classified`` since no weighting for
    them is settled.
    """
    model = PropagatorClass(model)
    if model is not PropagatorClass.ORDINARY:
        raise NotImplementedError(f"no divergence degree available for the {model.value} class")
    if not inv.connected:
        raise ContractViolation("divergence degree needs a connected graph")
    b = max(inv.B, 1)
    omega = 4 - inv.ext - 8 * inv.g - 4 * (b - 1)
    return DivergenceDegree(omega, inv.ext == 4 and inv.B == 2, inv.B > 2)


# enumeration ---------------------------------------------------------------

def phi_slots(n_vertices: int) -> np.ndarray:
    """1-based Phi slots in order."""
    return np.array([4 * v + o + 1 for v in range(n_vertices) for o in (0, 2)])


def dag_slots(n_vertices: int) -> np.ndarray:
    return phi_slots(n_vertices) + 1


def graph_from_perm(n_vertices: int, perm: Iterable[int]) -> RibbonGraph:
    p, d = phi_slots(n_vertices), dag_slots(n_vertices)
    return from_pairing(n_vertices, [(int(p[a]), int(d[b])) for a, b in enumerate(perm)])


def perm_from_graph(g: RibbonGraph) -> tuple[int, ...]:
    if g.external:
        raise ContractViolation("only vacuum graphs have a permutation form")
    p = {int(s): i for i, s in enumerate(phi_slots(g.n_vertices))}
    d = {int(s): i for i, s in enumerate(dag_slots(g.n_vertices))}
    out = [0] * (2 * g.n_vertices)
    for a, b in g.pairing:
        if a in p:
            out[p[a]] = d[b]
        else:
            out[p[b]] = d[a]
    return tuple(out)


def enumerate_vacuum_graphs(n_vertices: int) -> Iterator[RibbonGraph]:
    """All (2n)! vacuum pairings in lexicographic permutation order."""
    import itertools

    for perm in itertools.permutations(range(2 * n_vertices)):
        yield graph_from_perm(n_vertices, perm)


def _alpha_batch(perm: np.ndarray, n_vertices: int) -> np.ndarray:
    """0-based pairing involution for a batch of permutations, shape (M, 4n)."""
    m = perm.shape[0]
    p = phi_slots(n_vertices) - 1
    d = dag_slots(n_vertices) - 1
    alpha = np.empty((m, 4 * n_vertices), dtype=np.int32)
    alpha[:, p] = d[perm]
    rows = np.arange(m)[:, None]
    alpha[rows, d[perm]] = p[None, :]
    return alpha


def _cycle_count(step: np.ndarray) -> np.ndarray:
    """Number of cycles of each row permutation by pointer doubling."""
    m, s = step.shape
    offset = (np.arange(m, dtype=np.int64) * s)[:, None]
    jump = (step + offset).ravel()
    label = np.tile(np.arange(s, dtype=np.int32), m)
    span = 1
    while span < s:
        label = np.minimum(label, label[jump])
        jump = jump[jump]
        span *= 2
    return np.count_nonzero(label.reshape(m, s) == np.arange(s), axis=1)


def batch_face_counts(perm: np.ndarray, n_vertices: int) -> np.ndarray:
    perm = np.asarray(perm)
    alpha = _alpha_batch(perm, n_vertices)
    rot = np.array([rotate(s + 1) - 1 for s in range(4 * n_vertices)], dtype=np.int32)
    return _cycle_count(rot[alpha])


def batch_component_counts(perm: np.ndarray, n_vertices: int) -> np.ndarray:
    """Connected components of the vertex graph for each row (bitmask closure)."""
    perm = np.asarray(perm)
    if n_vertices > 62:
        raise ContractViolation("bitmask closure supports at most 62 vertices")
    m = perm.shape[0]
    bit = np.left_shift(np.int64(1), np.arange(n_vertices, dtype=np.int64))
    reach = np.tile(bit, (m, 1))
    dst = perm // 2
    for a in range(2 * n_vertices):
        u = a // 2
        reach[:, u] |= bit[dst[:, a]]
    # make it symmetric, then square until closed
    for u in range(n_vertices):
        has_u = (reach & bit[u]) != 0
        reach[:, u] |= np.bitwise_or.reduce(np.where(has_u, bit, 0), axis=1)
    for _ in range(max(1, int(np.ceil(np.log2(n_vertices))) + 1)):
        new = reach.copy()
        for w in range(n_vertices):
            hit = (reach & bit[w]) != 0
            new |= np.where(hit, reach[:, w:w + 1], 0)
        reach = new
    lower = bit - 1
    return np.count_nonzero((reach & lower) == 0, axis=1)

"""Lattice geometry, exact operator algebra, and ground-state counting.

Edges carry one group-valued register each.  Every Hamiltonian term is a
sum of monomials with Fraction coefficients, where a monomial assigns an
injective partial map of the register to each touched edge.  Products,
adjoints, and commutators are therefore exact; the audit reports exact
zeros, not small numbers.

Ground-state counts come from up to three independent routes (gauge-orbit
counting, fixed-point trace, dense matrix trace) which must agree on any
lattice where more than one fits its budget.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from qdw.groups import FiniteGroup, InvariantError, Subgroup

__all__ = [
    "Operator",
    "BoundaryRegion",
    "Lattice",
    "torus",
    "patch",
    "ring",
    "carve_hole",
    "HamiltonianTerm",
    "build_terms",
    "gauge_vertex_term",
    "flux_term",
    "flux_sector_term",
    "boundary_edge_term",
    "half_translation_term",
    "literal_gauge_edge_term",
    "AuditReport",
    "audit_commutation",
    "GsdReport",
    "ground_space_dimension",
    "GroundSpace",
    "ground_space",
]

DENSE_DIM_BUDGET = 20_000
TRACE_PARTIAL_BUDGET = 20_000_000
COUNTING_GAMMA_BUDGET = 2_000_000
MATERIALIZE_DIM_BUDGET = 20_000


# ---------------------------------------------------------------------------
# injective partial maps on one register, encoded as tuples with -1 for
# "outside the domain"


def _map_left(group: FiniteGroup, g: int) -> tuple[int, ...]:
    return tuple(int(group.table[g, x]) for x in range(group.order))


def _map_right_inv(group: FiniteGroup, g: int) -> tuple[int, ...]:
    gi = group.inv[g]
    return tuple(int(group.table[x, gi]) for x in range(group.order))


def _map_indicator(n: int, allowed: Iterable[int]) -> tuple[int, ...]:
    s = set(allowed)
    return tuple(x if x in s else -1 for x in range(n))


def _map_point(n: int, value: int) -> tuple[int, ...]:
    return tuple(value if x == value else -1 for x in range(n))


def _map_is_identity(m: tuple[int, ...]) -> bool:
    return all(v == i for i, v in enumerate(m))


def _map_is_partial_identity(m: tuple[int, ...]) -> bool:
    return all(v == i or v == -1 for i, v in enumerate(m))


def _map_compose(m1: tuple[int, ...], m2: tuple[int, ...]) -> tuple[int, ...]:
    """m1 applied after m2."""
    return tuple(-1 if m2[x] < 0 else m1[m2[x]] for x in range(len(m2)))


def _map_adjoint(m: tuple[int, ...]) -> tuple[int, ...]:
    out = [-1] * len(m)
    for x, y in enumerate(m):
        if y >= 0:
            if out[y] != -1:
                raise InvariantError("adjoint of a non-injective register map")
            out[y] = x
    return tuple(out)


class Operator:
    """Exact linear operator: monomials over edge registers, Fraction coefficients."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Optional[dict] = None):
        self.n = n
        self.terms: dict[tuple, Fraction] = terms if terms is not None else {}

    @staticmethod
    def zero(n: int) -> "Operator":
        return Operator(n)

    @staticmethod
    def identity(n: int) -> "Operator":
        return Operator(n, {(): Fraction(1)})

    @staticmethod
    def monomial(n: int, coeff: Fraction, maps: Mapping[int, tuple[int, ...]]) -> "Operator":
        clean = []
        for e, m in maps.items():
            if max(m) < 0:
                return Operator(n)
            if not _map_is_identity(m):
                clean.append((e, m))
        if coeff == 0:
            return Operator(n)
        return Operator(n, {tuple(sorted(clean)): Fraction(coeff)})

    def _accumulate(self, key: tuple, coeff: Fraction) -> None:
        cur = self.terms.get(key)
        total = coeff if cur is None else cur + coeff
        if total == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = total

    def __add__(self, other: "Operator") -> "Operator":
        out = Operator(self.n, dict(self.terms))
        for key, c in other.terms.items():
            out._accumulate(key, c)
        return out

    def __sub__(self, other: "Operator") -> "Operator":
        return self + other.scale(Fraction(-1))

    def scale(self, c) -> "Operator":
        c = Fraction(c)
        if c == 0:
            return Operator(self.n)
        return Operator(self.n, {k: v * c for k, v in self.terms.items()})

    def __mul__(self, other: "Operator") -> "Operator":
        """Operator product; self acts after other."""
        out = Operator(self.n)
        for k1, c1 in self.terms.items():
            m1 = dict(k1)
            for k2, c2 in other.terms.items():
                m2 = dict(k2)
                dead = False
                combined = []
                for e in set(m1) | set(m2):
                    a = m1.get(e)
                    b = m2.get(e)
                    if a is None:
                        m = b
                    elif b is None:
                        m = a
                    else:
                        m = _map_compose(a, b)
                        if max(m) < 0:
                            dead = True
                            break
                    if not _map_is_identity(m):
                        combined.append((e, m))
                if dead:
                    continue
                out._accumulate(tuple(sorted(combined)), c1 * c2)
        return out

    def adjoint(self) -> "Operator":
        out = Operator(self.n)
        for key, c in self.terms.items():
            new_key = tuple(sorted((e, _map_adjoint(m)) for e, m in key))
            out._accumulate(new_key, c)
        return out

    def commutator(self, other: "Operator") -> "Operator":
        return (self * other) - (other * self)

    def _atoms(self) -> dict[tuple, Fraction]:
        """Expansion over per-edge matrix units; a genuine canonical form.

        Monomial keys are not unique as matrices (a sum of point maps can
        equal an identity), so cancellation tests expand to single-entry
        maps, which are linearly independent.
        """
        support = self.support
        budget = 0
        for key, _ in self.terms.items():
            maps = dict(key)
            size = 1
            for e in support:
                m = maps.get(e)
                size *= self.n if m is None else sum(1 for y in m if y >= 0)
            budget += size
        if budget > 5_000_000:
            raise ValueError(f"atom expansion of {budget} entries over budget")
        out: dict[tuple, Fraction] = {}
        for key, c in self.terms.items():
            maps = dict(key)
            choices = []
            for e in support:
                m = maps.get(e)
                if m is None:
                    choices.append([(x, x) for x in range(self.n)])
                else:
                    choices.append([(x, m[x]) for x in range(self.n) if m[x] >= 0])
            for combo in itertools.product(*choices):
                cur = out.get(combo)
                total = c if cur is None else cur + c
                if total == 0:
                    out.pop(combo, None)
                else:
                    out[combo] = total
        return out

    def is_zero(self) -> bool:
        """Exact zero test: syntactic cancellation, then atom expansion."""
        if not self.terms:
            return True
        return not self._atoms()

    def equals(self, other: "Operator") -> bool:
        return (self - other).is_zero()

    @property
    def support(self) -> tuple[int, ...]:
        edges = set()
        for key in self.terms:
            edges.update(e for e, _ in key)
        return tuple(sorted(edges))

    def is_diagonal(self) -> bool:
        return all(_map_is_partial_identity(m) for key in self.terms for _, m in key)

    def is_hermitian(self) -> bool:
        return (self - self.adjoint()).is_zero()

    def diagonal_values(self, edges: Sequence[int]) -> dict[tuple[int, ...], Fraction]:
        """Exact diagonal entries over configurations of `edges` (diagonal ops only)."""
        if not self.is_diagonal():
            raise ValueError("operator is not diagonal")
        out: dict[tuple[int, ...], Fraction] = {}
        pos = {e: i for i, e in enumerate(edges)}
        for cfg in itertools.product(range(self.n), repeat=len(edges)):
            total = Fraction(0)
            for key, c in self.terms.items():
                hit = all(m[cfg[pos[e]]] >= 0 for e, m in key)
                if hit:
                    total += c
            if total:
                out[cfg] = total
        return out

    def is_projector(self) -> bool:
        """Exact idempotence and self-adjointness."""
        if not self.is_hermitian():
            return False
        if self.is_diagonal():
            edges = self.support
            if self.n ** len(edges) > MATERIALIZE_DIM_BUDGET:
                return ((self * self) - self).is_zero()
            vals = self.diagonal_values(edges)
            return all(v in (Fraction(0), Fraction(1)) for v in vals.values())
        return ((self * self) - self).is_zero()

    def to_matrix(self, edges: Sequence[int]) -> np.ndarray:
        """Dense matrix over configurations of `edges` (row-major, edge 0 slowest)."""
        k = len(edges)
        dim = self.n ** k
        if dim > MATERIALIZE_DIM_BUDGET:
            raise ValueError(f"materialization dimension {dim} over budget")
        sup = set(self.support)
        if not sup <= set(edges):
            raise ValueError("edge list does not cover the operator support")
        mat = np.zeros((dim, dim))
        pos = {e: i for i, e in enumerate(edges)}
        for key, c in self.terms.items():
            cf = float(c)
            for cfg in itertools.product(range(self.n), repeat=k):
                tgt = list(cfg)
                ok = True
                for e, m in key:
                    y = m[cfg[pos[e]]]
                    if y < 0:
                        ok = False
                        break
                    tgt[pos[e]] = y
                if ok:
                    col = 0
                    row = 0
                    for i in range(k):
                        col = col * self.n + cfg[i]
                        row = row * self.n + tgt[i]
                    mat[row, col] += cf
        return mat


# ---------------------------------------------------------------------------
# lattice geometry


@dataclass(frozen=True)
class BoundaryRegion:
    """One boundary component: the retained cells that border removed faces."""
    name: str
    rim_vertices: tuple[int, ...]
    rim_edges: tuple[int, ...]
    dangling_edges: tuple[int, ...] = ()


class Lattice:
    """Directed-edge cell complex with oriented faces and boundary records."""

    def __init__(self, n_vertices: int, edges: Sequence[tuple[int, int]],
                 plaquettes: Sequence[Sequence[tuple[int, bool]]],
                 regions: Sequence[BoundaryRegion] = (),
                 vertex_names: Optional[Sequence[str]] = None,
                 edge_names: Optional[Sequence[str]] = None,
                 plaquette_names: Optional[Sequence[str]] = None,
                 kind: str = "custom"):
        self.n_vertices = n_vertices
        self.edges = [(int(t), int(h)) for t, h in edges]
        self.plaquettes = [tuple((int(e), bool(a)) for e, a in p) for p in plaquettes]
        self.regions = list(regions)
        self.kind = kind
        self.vertex_names = list(vertex_names) if vertex_names else [
            f"v{i}" for i in range(n_vertices)]
        self.edge_names = list(edge_names) if edge_names else [
            f"e{i}" for i in range(len(self.edges))]
        self.plaquette_names = list(plaquette_names) if plaquette_names else [
            f"p{i}" for i in range(len(self.plaquettes))]
        self._validate()
        self.star: list[list[tuple[int, bool]]] = [[] for _ in range(n_vertices)]
        for ei, (t, h) in enumerate(self.edges):
            self.star[t].append((ei, False))
            self.star[h].append((ei, True))
        for st in self.star:
            st.sort()
        self.edge_faces: list[list[int]] = [[] for _ in self.edges]
        for pi, cyc in enumerate(self.plaquettes):
            for e, _ in cyc:
                self.edge_faces[e].append(pi)

    def _validate(self) -> None:
        ne = len(self.edges)
        if len(self.vertex_names) != self.n_vertices or len(self.edge_names) != ne \
                or len(self.plaquette_names) != len(self.plaquettes):
            raise ValueError("name lists must match cell counts")
        for ei, (t, h) in enumerate(self.edges):
            if not (0 <= t < self.n_vertices and 0 <= h < self.n_vertices):
                raise ValueError(f"edge {ei} endpoints out of range")
            if t == h:
                raise ValueError(f"edge {ei} is a self-loop, which is not supported")
        face_count = [0] * ne
        for pi, cyc in enumerate(self.plaquettes):
            if len(cyc) < 2:
                raise ValueError(f"face {pi} has fewer than two sides")
            seen_edges = [e for e, _ in cyc]
            if len(set(seen_edges)) != len(seen_edges):
                raise ValueError(f"face {pi} repeats an edge")
            for e, _ in cyc:
                if not 0 <= e < ne:
                    raise ValueError(f"face {pi} references a missing edge")
                face_count[e] += 1
            for i, (e, along) in enumerate(cyc):
                nxt_e, nxt_along = cyc[(i + 1) % len(cyc)]
                end = self.edges[e][1] if along else self.edges[e][0]
                start = self.edges[nxt_e][0] if nxt_along else self.edges[nxt_e][1]
                if end != start:
                    raise ValueError(f"face {pi} boundary walk is not closed")
        for e, c in enumerate(face_count):
            if c > 2:
                raise ValueError(f"edge {e} borders more than two faces")
        taken_v: set[int] = set()
        taken_e: set[int] = set()
        for reg in self.regions:
            if set(reg.rim_vertices) & taken_v or \
                    (set(reg.rim_edges) | set(reg.dangling_edges)) & taken_e:
                raise ValueError(f"region {reg.name!r} shares cells with another region")
            taken_v.update(reg.rim_vertices)
            taken_e.update(reg.rim_edges)
            taken_e.update(reg.dangling_edges)
            for e in reg.dangling_edges:
                if face_count[e] != 0:
                    raise ValueError(f"dangling edge {e} still borders a face")

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    @property
    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_plaquettes

    def plaquette_base_vertices(self, pi: int) -> list[int]:
        """Corner vertices of face `pi` in traversal order."""
        out = []
        for e, along in self.plaquettes[pi]:
            t, h = self.edges[e]
            out.append(t if along else h)
        return out

    def edge_index(self, name: str) -> int:
        try:
            return self.edge_names.index(name)
        except ValueError:
            raise ValueError(f"unknown edge {name!r}") from None

    def plaquette_index(self, name: str) -> int:
        try:
            return self.plaquette_names.index(name)
        except ValueError:
            raise ValueError(f"unknown face {name!r}") from None

    def vertex_index(self, name: str) -> int:
        try:
            return self.vertex_names.index(name)
        except ValueError:
            raise ValueError(f"unknown vertex {name!r}") from None

    def region_by_name(self, name: str) -> BoundaryRegion:
        for reg in self.regions:
            if reg.name == name:
                return reg
        raise ValueError(f"unknown boundary region {name!r}")

    def __repr__(self) -> str:
        return (f"Lattice({self.kind}, V={self.n_vertices}, E={self.n_edges}, "
                f"P={self.n_plaquettes}, regions={[r.name for r in self.regions]})")


def torus(rows: int, cols: int) -> Lattice:
    """Square lattice on a torus; faces wind counterclockwise."""
    if rows < 2 or cols < 2:
        raise ValueError("torus needs at least 2 rows and 2 columns")
    def vid(r: int, c: int) -> int:
        return (r % rows) * cols + (c % cols)
    edges = []
    edge_names = []
    h_index = {}
    v_index = {}
    for r in range(rows):
        for c in range(cols):
            h_index[(r, c)] = len(edges)
            edges.append((vid(r, c), vid(r, c + 1)))
            edge_names.append(f"h({r},{c})")
    for r in range(rows):
        for c in range(cols):
            v_index[(r, c)] = len(edges)
            edges.append((vid(r, c), vid(r + 1, c)))
            edge_names.append(f"v({r},{c})")
    plaqs = []
    pnames = []
    for r in range(rows):
        for c in range(cols):
            plaqs.append((
                (h_index[(r, c)], True),
                (v_index[(r, (c + 1) % cols)], True),
                (h_index[((r + 1) % rows, c)], False),
                (v_index[(r, c)], False),
            ))
            pnames.append(f"p({r},{c})")
    vnames = [f"({r},{c})" for r in range(rows) for c in range(cols)]
    return Lattice(rows * cols, edges, plaqs, regions=(), vertex_names=vnames,
                   edge_names=edge_names, plaquette_names=pnames, kind="torus")


def patch(rows: int, cols: int) -> Lattice:
    """Rectangular disk of faces with one outer boundary region."""
    if rows < 1 or cols < 1:
        raise ValueError("patch needs at least one face")
    def vid(r: int, c: int) -> int:
        return r * (cols + 1) + c
    edges = []
    edge_names = []
    h_index = {}
    v_index = {}
    for r in range(rows + 1):
        for c in range(cols):
            h_index[(r, c)] = len(edges)
            edges.append((vid(r, c), vid(r, c + 1)))
            edge_names.append(f"h({r},{c})")
    for r in range(rows):
        for c in range(cols + 1):
            v_index[(r, c)] = len(edges)
            edges.append((vid(r, c), vid(r + 1, c)))
            edge_names.append(f"v({r},{c})")
    plaqs = []
    pnames = []
    for r in range(rows):
        for c in range(cols):
            plaqs.append((
                (h_index[(r, c)], True),
                (v_index[(r, c + 1)], True),
                (h_index[(r + 1, c)], False),
                (v_index[(r, c)], False),
            ))
            pnames.append(f"p({r},{c})")
    rim_v = sorted({vid(r, c) for r in range(rows + 1) for c in range(cols + 1)
                    if r in (0, rows) or c in (0, cols)})
    rim_e = sorted([h_index[(r, c)] for r in (0, rows) for c in range(cols)] +
                   [v_index[(r, c)] for r in range(rows) for c in (0, cols)])
    outer = BoundaryRegion(name="outer", rim_vertices=tuple(rim_v),
                           rim_edges=tuple(rim_e))
    vnames = [f"({r},{c})" for r in range(rows + 1) for c in range(cols + 1)]
    return Lattice((rows + 1) * (cols + 1), edges, plaqs, regions=(outer,),
                   vertex_names=vnames, edge_names=edge_names,
                   plaquette_names=pnames, kind="patch")


def ring(cols: int) -> Lattice:
    """Annulus: two concentric vertex rings joined by rungs, one face per sector."""
    if cols < 3:
        raise ValueError("ring needs at least 3 sectors")
    # vertices: inner 0..cols-1, outer cols..2cols-1
    edges = []
    edge_names = []
    for c in range(cols):
        edges.append((c, (c + 1) % cols))
        edge_names.append(f"in{c}")
    for c in range(cols):
        edges.append((cols + c, cols + (c + 1) % cols))
        edge_names.append(f"out{c}")
    for c in range(cols):
        edges.append((c, cols + c))
        edge_names.append(f"rung{c}")
    plaqs = []
    pnames = []
    for c in range(cols):
        nxt = (c + 1) % cols
        plaqs.append((
            (c, True),                # inner arc c -> c+1
            (2 * cols + nxt, True),   # rung up at c+1
            (cols + c, False),        # outer arc back
            (2 * cols + c, False),    # rung down at c
        ))
        pnames.append(f"f{c}")
    inner = BoundaryRegion(name="inner", rim_vertices=tuple(range(cols)),
                           rim_edges=tuple(range(cols)))
    outer = BoundaryRegion(name="outer", rim_vertices=tuple(range(cols, 2 * cols)),
                           rim_edges=tuple(range(cols, 2 * cols)))
    vnames = [f"i{c}" for c in range(cols)] + [f"o{c}" for c in range(cols)]
    return Lattice(2 * cols, edges, plaqs, regions=(inner, outer),
                   vertex_names=vnames, edge_names=edge_names,
                   plaquette_names=pnames, kind="ring")


def carve_hole(lat: Lattice, plaquettes: Sequence, region_name: str) -> Lattice:
    """Remove a disk of faces from a patch, adding a new boundary region.

    Cells interior to the removed disk disappear; retained cells that
    border it form the new region's rim.  The hole must not touch any
    existing boundary.
    """
    if lat.kind not in ("patch", "carved"):
        raise ValueError("holes can only be carved out of a patch")
    q: set[int] = set()
    for p in plaquettes:
        pi = lat.plaquette_index(p) if isinstance(p, str) else int(p)
        if not 0 <= pi < lat.n_plaquettes:
            raise ValueError(f"face index {pi} out of range")
        q.add(pi)
    if not q:
        raise ValueError("a hole needs at least one face")
    if any(reg.name == region_name for reg in lat.regions):
        raise ValueError(f"region name {region_name!r} already in use")
    removed_edges = {e for e in range(lat.n_edges)
                     if len(lat.edge_faces[e]) == 2 and set(lat.edge_faces[e]) <= q}
    vertex_faces: list[set[int]] = [set() for _ in range(lat.n_vertices)]
    for pi, cyc in enumerate(lat.plaquettes):
        for v in lat.plaquette_base_vertices(pi):
            vertex_faces[v].add(pi)
    removed_vertices = {v for v in range(lat.n_vertices)
                        if vertex_faces[v] and vertex_faces[v] <= q}
    if len(q) - len(removed_edges) + len(removed_vertices) != 1:
        raise ValueError("removed faces must form a disk")
    rim_v = sorted({v for pi in q for v in lat.plaquette_base_vertices(pi)}
                   - removed_vertices)
    rim_e = sorted({e for pi in q for e, _ in lat.plaquettes[pi]} - removed_edges)
    taken_v = {v for reg in lat.regions for v in reg.rim_vertices}
    taken_e = {e for reg in lat.regions
               for e in tuple(reg.rim_edges) + tuple(reg.dangling_edges)}
    if set(rim_v) & taken_v or set(rim_e) & taken_e:
        raise ValueError("the hole touches an existing boundary")
    vkeep = [v for v in range(lat.n_vertices) if v not in removed_vertices]
    ekeep = [e for e in range(lat.n_edges) if e not in removed_edges]
    pkeep = [p for p in range(lat.n_plaquettes) if p not in q]
    vmap = {v: i for i, v in enumerate(vkeep)}
    emap = {e: i for i, e in enumerate(ekeep)}
    new_edges = [(vmap[lat.edges[e][0]], vmap[lat.edges[e][1]]) for e in ekeep]
    new_plaqs = [tuple((emap[e], a) for e, a in lat.plaquettes[p]) for p in pkeep]
    new_regions = [BoundaryRegion(
        name=reg.name,
        rim_vertices=tuple(vmap[v] for v in reg.rim_vertices),
        rim_edges=tuple(emap[e] for e in reg.rim_edges),
        dangling_edges=tuple(emap[e] for e in reg.dangling_edges),
    ) for reg in lat.regions]
    new_regions.append(BoundaryRegion(
        name=region_name,
        rim_vertices=tuple(vmap[v] for v in rim_v),
        rim_edges=tuple(emap[e] for e in rim_e),
    ))
    return Lattice(len(vkeep), new_edges, new_plaqs, regions=new_regions,
                   vertex_names=[lat.vertex_names[v] for v in vkeep],
                   edge_names=[lat.edge_names[e] for e in ekeep],
                   plaquette_names=[lat.plaquette_names[p] for p in pkeep],
                   kind="carved")


# ---------------------------------------------------------------------------
# Hamiltonian terms


@dataclass
class HamiltonianTerm:
    name: str
    kind: str                 # gauge | flux | edge-pin | half-shift | literal
    op: Operator
    edges: tuple[int, ...]
    diagonal: bool
    region: Optional[str] = None


def gauge_vertex_term(lat: Lattice, group: FiniteGroup, vertex: int,
                      sub: Optional[Subgroup] = None) -> Operator:
    """Average over star rotations at a vertex; restricted to `sub` if given."""
    elems = sub.elements if sub is not None else tuple(range(group.order))
    star = lat.star[vertex]
    if len({e for e, _ in star}) != len(star):
        raise ValueError("vertex star contains a repeated edge")
    out = Operator(group.order)
    for g in elems:
        maps = {}
        for e, at_head in star:
            maps[e] = _map_left(group, g) if at_head else _map_right_inv(group, g)
        out = out + Operator.monomial(group.order, Fraction(1, len(elems)), maps)
    return out


def _cycle_value_from_letters(group: FiniteGroup, letters: Sequence[int]) -> int:
    acc = 0
    for h in letters:
        acc = group.mul(acc, h)
    return acc


def flux_sector_term(lat: Lattice, group: FiniteGroup, pi: int, h: int,
                     base_vertex: Optional[int] = None) -> Operator:
    """Projector onto face holonomy h, read from the base corner.

    With the face on the left of a traversed-along edge, the letter for
    that edge is the inverse register value; traversed-against edges
    contribute the register value itself.
    """
    cyc = list(lat.plaquettes[pi])
    corners = lat.plaquette_base_vertices(pi)
    if base_vertex is None:
        base_vertex = corners[0]
    if base_vertex not in corners:
        raise ValueError("base vertex is not a corner of the face")
    shift = corners.index(base_vertex)
    cyc = cyc[shift:] + cyc[:shift]
    k = len(cyc)
    n = group.order
    out = Operator(n)
    for prefix in itertools.product(range(n), repeat=k - 1):
        letters = []
        for (e, along), x in zip(cyc[:-1], prefix):
            letters.append(group.inv[x] if along else x)
        partial = _cycle_value_from_letters(group, letters)
        last = group.mul(group.inv[partial], h)
        e_last, along_last = cyc[-1]
        x_last = group.inv[last] if along_last else last
        maps = {e: _map_point(n, x) for (e, _), x in zip(cyc[:-1], prefix)}
        maps[e_last] = _map_point(n, x_last)
        out = out + Operator.monomial(n, Fraction(1), maps)
    return out


def flux_term(lat: Lattice, group: FiniteGroup, pi: int) -> Operator:
    """Projector onto trivial face holonomy (base-independent)."""
    return flux_sector_term(lat, group, pi, 0)


def boundary_edge_term(lat: Lattice, group: FiniteGroup, edge: int,
                       sub: Subgroup) -> Operator:
    """Projector pinning an edge register into the boundary subgroup."""
    return Operator.monomial(group.order, Fraction(1),
                             {edge: _map_indicator(group.order, sub.elements)})


def half_translation_term(group: FiniteGroup, edge: int, sub: Subgroup,
                          side: str) -> Operator:
    """Average of one-sided subgroup translations on a dangling edge."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    out = Operator(group.order)
    for k in sub.elements:
        m = _map_left(group, k) if side == "left" else _map_right_inv(group, k)
        out = out + Operator.monomial(group.order, Fraction(1, sub.order), {edge: m})
    return out


def literal_gauge_edge_term(group: FiniteGroup, edge: int, sub: Subgroup) -> Operator:
    """Naive single-term edge average: both translation sides summed.

    Kept deliberately: it is hermitian but not idempotent, and fails to
    commute with face terms when the edge borders a retained face.  The
    audit must flag it.
    """
    out = Operator(group.order)
    for k in sub.elements:
        out = out + Operator.monomial(group.order, Fraction(1, 2 * sub.order),
                                      {edge: _map_left(group, k)})
        out = out + Operator.monomial(group.order, Fraction(1, 2 * sub.order),
                                      {edge: _map_right_inv(group, k)})
    return out


def _region_assignment(lat: Lattice, group: FiniteGroup,
                       subgroups: Mapping[str, Subgroup]):
    """Per-vertex and per-edge boundary assignment, validated."""
    names = {reg.name for reg in lat.regions}
    if set(subgroups) != names:
        raise ValueError(f"boundary subgroups must be given for exactly {sorted(names)}")
    for name, sub in subgroups.items():
        if sub.group is not group:
            raise ValueError(f"subgroup for region {name!r} lives in the wrong group")
    vertex_region: dict[int, str] = {}
    edge_region: dict[int, tuple[str, str]] = {}  # edge -> (region, role)
    for reg in lat.regions:
        for v in reg.rim_vertices:
            vertex_region[v] = reg.name
        for e in reg.rim_edges:
            edge_region[e] = (reg.name, "rim")
        for e in reg.dangling_edges:
            edge_region[e] = (reg.name, "dangling")
    return vertex_region, edge_region


def build_terms(lat: Lattice, group: FiniteGroup,
                subgroups: Mapping[str, Subgroup]) -> list[HamiltonianTerm]:
    """All commuting projector terms for a lattice with boundary assignments."""
    vertex_region, edge_region = _region_assignment(lat, group, subgroups)
    terms: list[HamiltonianTerm] = []
    for v in range(lat.n_vertices):
        reg = vertex_region.get(v)
        if reg is None:
            op = gauge_vertex_term(lat, group, v)
            terms.append(HamiltonianTerm(
                name=f"A({lat.vertex_names[v]})", kind="gauge", op=op,
                edges=op.support, diagonal=False))
        else:
            sub = subgroups[reg]
            op = gauge_vertex_term(lat, group, v, sub)
            terms.append(HamiltonianTerm(
                name=f"A_K({lat.vertex_names[v]})", kind="gauge", op=op,
                edges=op.support, diagonal=False, region=reg))
    for pi in range(lat.n_plaquettes):
        op = flux_term(lat, group, pi)
        terms.append(HamiltonianTerm(
            name=f"B({lat.plaquette_names[pi]})", kind="flux", op=op,
            edges=op.support, diagonal=True))
    for e in sorted(edge_region):
        reg, role = edge_region[e]
        sub = subgroups[reg]
        if role == "rim":
            op = boundary_edge_term(lat, group, e, sub)
            terms.append(HamiltonianTerm(
                name=f"T_K({lat.edge_names[e]})", kind="edge-pin", op=op,
                edges=(e,), diagonal=True, region=reg))
        else:
            for side, tag in (("left", "P+"), ("right", "P-")):
                op = half_translation_term(group, e, sub, side)
                terms.append(HamiltonianTerm(
                    name=f"{tag}({lat.edge_names[e]})", kind="half-shift", op=op,
                    edges=(e,), diagonal=False, region=reg))
    return terms


# ---------------------------------------------------------------------------
# exact commutation audit


@dataclass
class TermCheck:
    name: str
    is_projector: bool
    is_hermitian: bool


@dataclass
class PairCheck:
    left: str
    right: str
    commutes: bool
    residual_norm: Optional[float] = None  # only materialized on failure


@dataclass
class AuditReport:
    term_checks: list[TermCheck]
    pair_checks: list[PairCheck]
    skipped_pairs: int

    @property
    def ok(self) -> bool:
        return (all(t.is_projector and t.is_hermitian for t in self.term_checks)
                and all(p.commutes for p in self.pair_checks))

    def failures(self) -> list[str]:
        out = [f"term {t.name}: projector={t.is_projector} hermitian={t.is_hermitian}"
               for t in self.term_checks if not (t.is_projector and t.is_hermitian)]
        out += [f"pair [{p.left}, {p.right}] != 0"
                + (f" (|.|_F = {p.residual_norm:.6g})" if p.residual_norm else "")
                for p in self.pair_checks if not p.commutes]
        return out


def audit_commutation(terms: Sequence[HamiltonianTerm], n: int) -> AuditReport:
    """Exact projector, hermiticity, and pairwise commutation checks.

    Pairs of diagonal terms commute identically and are skipped (counted).
    Residual norms are materialized only for failing pairs on small supports.
    """
    term_checks = [TermCheck(t.name, t.op.is_projector(), t.op.is_hermitian())
                   for t in terms]
    pair_checks = []
    skipped = 0
    for i in range(len(terms)):
        for j in range(i + 1, len(terms)):
            ti, tj = terms[i], terms[j]
            if not set(ti.edges) & set(tj.edges):
                skipped += 1
                continue
            if ti.diagonal and tj.diagonal:
                skipped += 1
                continue
            comm = ti.op.commutator(tj.op)
            ok = comm.is_zero()
            norm = None
            if not ok:
                union = tuple(sorted(set(ti.edges) | set(tj.edges)))
                if n ** len(union) <= MATERIALIZE_DIM_BUDGET:
                    norm = float(np.linalg.norm(comm.to_matrix(union)))
            pair_checks.append(PairCheck(ti.name, tj.name, ok, norm))
    return AuditReport(term_checks, pair_checks, skipped)


# ---------------------------------------------------------------------------
# elimination order shared by the counting and trace routes


@dataclass
class EliminationStep:
    action: str                      # "branch" or "solve"
    edge: int
    plaquette: Optional[int] = None  # solver face for "solve"
    checkers: tuple[int, ...] = ()   # faces fully assigned after this step


def elimination_order(lat: Lattice) -> list[EliminationStep]:
    """Assign edges so faces fix registers as early as possible.

    Greedy: a face with one free edge solves it; otherwise branch on an
    edge inside the face closest to completion (lowest indices break ties).
    """
    remaining = [set(e for e, _ in cyc) for cyc in lat.plaquettes]
    solved_by: set[int] = set()
    unassigned = set(range(lat.n_edges))
    steps: list[EliminationStep] = []

    def assign(e: int, action: str, solver: Optional[int]) -> None:
        unassigned.discard(e)
        checkers = []
        for pi, rem in enumerate(remaining):
            if e in rem:
                rem.discard(e)
                if not rem and pi != solver and pi not in solved_by:
                    checkers.append(pi)
        steps.append(EliminationStep(action=action, edge=e, plaquette=solver,
                                     checkers=tuple(checkers)))

    while unassigned:
        ready = [(len(rem), pi) for pi, rem in enumerate(remaining)
                 if len(rem) == 1 and pi not in solved_by]
        if ready:
            _, pi = min(ready)
            e = next(iter(remaining[pi]))
            solved_by.add(pi)
            assign(e, "solve", pi)
            continue
        candidates = [(len(rem), pi) for pi, rem in enumerate(remaining) if rem]
        if candidates:
            _, pi = min(candidates)
            e = min(remaining[pi] & unassigned)
        else:
            e = min(unassigned)
        assign(e, "branch", None)
    return steps


def _solve_edge(group: FiniteGroup, lat: Lattice, pi: int, target: int,
                values: Sequence[int]) -> Optional[int]:
    """Register value forced on `target` by trivial holonomy of face `pi`.

    `values` holds current register assignments (indexed by edge).
    """
    cyc = lat.plaquettes[pi]
    idx = next(i for i, (e, _) in enumerate(cyc) if e == target)
    low = 0
    for e, along in cyc[:idx]:
        x = values[e]
        low = group.mul(x if along else group.inv[x], low)
    high = 0
    for e, along in cyc[idx + 1:]:
        x = values[e]
        high = group.mul(x if along else group.inv[x], high)
    t = group.mul(group.inv[high], group.inv[low])
    e, along = cyc[idx]
    return t if along else group.inv[t]


def _holonomy_ok(group: FiniteGroup, lat: Lattice, pi: int,
                 values: Sequence[int]) -> bool:
    acc = 0
    for e, along in lat.plaquettes[pi]:
        x = values[e]
        acc = group.mul(x if along else group.inv[x], acc)
    return acc == 0


def _edge_allowances(lat: Lattice, group: FiniteGroup,
                     subgroups: Mapping[str, Subgroup]):
    """Per-edge admissible register values and dangling-weight tables."""
    _, edge_region = _region_assignment(lat, group, subgroups)
    allowed = []
    dangling: dict[int, Subgroup] = {}
    for e in range(lat.n_edges):
        reg = edge_region.get(e)
        if reg is None:
            allowed.append(tuple(range(group.order)))
        elif reg[1] == "rim":
            allowed.append(subgroups[reg[0]].elements)
        else:
            allowed.append(tuple(range(group.order)))
            dangling[e] = subgroups[reg[0]]
    return allowed, dangling


def _vertex_domains(lat: Lattice, group: FiniteGroup,
                    subgroups: Mapping[str, Subgroup]) -> list[tuple[int, ...]]:
    vertex_region, _ = _region_assignment(lat, group, subgroups)
    out = []
    for v in range(lat.n_vertices):
        reg = vertex_region.get(v)
        out.append(tuple(range(group.order)) if reg is None
                   else subgroups[reg].elements)
    return out


def _dangling_weight_table(group: FiniteGroup, sub: Subgroup) -> np.ndarray:
    """w[x, gh, gt] = number of subgroup pairs (l, r) with l gh x gt^-1 r^-1 = x."""
    n = group.order
    w = np.zeros((n, n, n), dtype=np.int64)
    ks = set(sub.elements)
    for x in range(n):
        for gh in range(n):
            for gt in range(n):
                y = group.mul(group.mul(gh, x), group.inv[gt])
                cnt = 0
                for r in sub.elements:
                    lam = group.mul(group.mul(x, r), group.inv[y])
                    if lam in ks:
                        cnt += 1
                w[x, gh, gt] = cnt
    return w


# ---------------------------------------------------------------------------
# route 1: gauge-orbit counting (pure integer arithmetic)


def _gsd_counting(lat: Lattice, group: FiniteGroup,
                  subgroups: Mapping[str, Subgroup]) -> Optional[int]:
    domains = _vertex_domains(lat, group, subgroups)
    allowed, dangling = _edge_allowances(lat, group, subgroups)
    gamma_size = 1
    for d in domains:
        gamma_size *= len(d)
    for sub in dangling.values():
        gamma_size *= sub.order ** 2
    if gamma_size > COUNTING_GAMMA_BUDGET:
        return None
    steps = elimination_order(lat)
    n = group.order
    weight_tables = {e: _dangling_weight_table(group, sub)
                     for e, sub in dangling.items()}
    # vertex assignment order: breadth-first so edges complete early
    order: list[int] = []
    seen = [False] * lat.n_vertices
    adj: list[list[tuple[int, int]]] = [[] for _ in range(lat.n_vertices)]
    for ei, (t, h) in enumerate(lat.edges):
        adj[t].append((h, ei))
        adj[h].append((t, ei))
    for root in range(lat.n_vertices):
        if seen[root]:
            continue
        seen[root] = True
        queue = [root]
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w, _ in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    queue.append(w)
    pos_in_order = {v: i for i, v in enumerate(order)}
    # edges become checkable once both endpoints are assigned
    edges_ready: list[list[int]] = [[] for _ in range(lat.n_vertices)]
    for ei, (t, h) in enumerate(lat.edges):
        later = t if pos_in_order[t] > pos_in_order[h] else h
        edges_ready[later].append(ei)

    gvals = [0] * lat.n_vertices
    sets: list[Optional[dict[int, int]]] = [None] * lat.n_edges  # value -> weight
    total = 0

    def edge_candidates(e: int) -> dict[int, int]:
        t, h = lat.edges[e]
        gt, gh = gvals[t], gvals[h]
        if e in weight_tables:
            col = weight_tables[e][:, gh, gt]
            return {x: int(col[x]) for x in range(n) if col[x]}
        out = {}
        for x in allowed[e]:
            if group.mul(group.mul(gh, x), group.inv[gt]) == x:
                out[x] = 1
        return out

    values = [0] * lat.n_edges

    def config_dfs(step_idx: int, weight_acc: int) -> int:
        if step_idx == len(steps):
            return weight_acc
        st = steps[step_idx]
        e = st.edge
        cand = sets[e]
        subtotal = 0
        if st.action == "solve":
            forced = _solve_edge(group, lat, st.plaquette, e, values)
            w = cand.get(forced)
            if w:
                values[e] = forced
                if all(_holonomy_ok(group, lat, pc, values) for pc in st.checkers):
                    subtotal += config_dfs(step_idx + 1, weight_acc * w)
            return subtotal
        for x, w in cand.items():
            values[e] = x
            if st.checkers and not all(_holonomy_ok(group, lat, pc, values)
                                       for pc in st.checkers):
                continue
            subtotal += config_dfs(step_idx + 1, weight_acc * w)
        return subtotal

    def vertex_dfs(i: int) -> int:
        nonlocal total
        if i == len(order):
            return config_dfs(0, 1)
        v = order[i]
        acc = 0
        for g in domains[v]:
            gvals[v] = g
            ok = True
            for e in edges_ready[v]:
                cand = edge_candidates(e)
                if not cand:
                    ok = False
                    break
                sets[e] = cand
            if ok:
                acc += vertex_dfs(i + 1)
        return acc

    total = vertex_dfs(0)
    if total % gamma_size != 0:
        raise InvariantError("orbit count is not divisible by the gauge volume")
    return total // gamma_size


# ---------------------------------------------------------------------------
# route 2: fixed-point trace (vectorized over admissible configurations)


def _enumerate_flat_configs(lat: Lattice, group: FiniteGroup,
                            allowed: Sequence[Sequence[int]]) -> Optional[np.ndarray]:
    """All register assignments with trivial holonomy on every face.

    Returns an (N, n_edges) int array, or None when over budget.
    """
    steps = elimination_order(lat)
    budget = 1
    for st in steps:
        if st.action == "branch":
            budget *= len(allowed[st.edge])
            if budget > TRACE_PARTIAL_BUDGET:
                return None
    n = group.order
    tbl = group.table
    inv = group.inv
    cols: dict[int, np.ndarray] = {}
    count = 1

    def holonomy_col(pi: int) -> np.ndarray:
        acc = np.zeros(count, dtype=np.int64)
        for e, along in lat.plaquettes[pi]:
            x = cols[e]
            term = x if along else inv[x]
            acc = tbl[term, acc]
        return acc

    allowed_masks = []
    for e in range(lat.n_edges):
        mask = np.zeros(n, dtype=bool)
        mask[list(allowed[e])] = True
        allowed_masks.append(mask)

    for st in steps:
        e = st.edge
        if st.action == "branch":
            vals = np.array(sorted(allowed[e]), dtype=np.int64)
            k = len(vals)
            for e2 in list(cols):
                cols[e2] = np.repeat(cols[e2], k)
            cols[e] = np.tile(vals, count)
            count *= k
        else:
            cyc = lat.plaquettes[st.plaquette]
            idx = next(i for i, (e2, _) in enumerate(cyc) if e2 == e)
            low = np.zeros(count, dtype=np.int64)
            for e2, along in cyc[:idx]:
                x = cols[e2]
                low = tbl[x if along else inv[x], low]
            high = np.zeros(count, dtype=np.int64)
            for e2, along in cyc[idx + 1:]:
                x = cols[e2]
                high = tbl[x if along else inv[x], high]
            t = tbl[inv[high], inv[low]]
            _, along = cyc[idx]
            col = t if along else inv[t]
            keep = allowed_masks[e][col]
            if not keep.all():
                for e2 in list(cols):
                    cols[e2] = cols[e2][keep]
                col = col[keep]
                count = int(keep.sum())
            cols[e] = col
        for pc in st.checkers:
            keep = holonomy_col(pc) == 0
            if not keep.all():
                for e2 in list(cols):
                    cols[e2] = cols[e2][keep]
                count = int(keep.sum())
        if count == 0:
            break
    if count == 0:
        return np.zeros((0, lat.n_edges), dtype=np.int64)
    out = np.zeros((count, lat.n_edges), dtype=np.int64)
    for e, col in cols.items():
        out[:, e] = col
    return out


def _gsd_trace(lat: Lattice, group: FiniteGroup,
               subgroups: Mapping[str, Subgroup]) -> Optional[int]:
    allowed, dangling = _edge_allowances(lat, group, subgroups)
    configs = _enumerate_flat_configs(lat, group, allowed)
    if configs is None:
        return None
    domains = _vertex_domains(lat, group, subgroups)
    gamma_size = 1
    for d in domains:
        gamma_size *= len(d)
    for sub in dangling.values():
        gamma_size *= sub.order ** 2
    nc = configs.shape[0]
    if nc == 0:
        return 0
    n = group.order
    tbl = group.table
    inv = group.inv
    conj = np.zeros((n, n), dtype=np.int64)  # conj[x, g] = x g x^-1
    for x in range(n):
        conj[x] = tbl[tbl[x, np.arange(n)], inv[x]]
    member = {v: np.zeros(n, dtype=bool) for v in range(lat.n_vertices)}
    for v in range(lat.n_vertices):
        member[v][list(domains[v])] = True
    # spanning forest over non-dangling edges
    comp = [-1] * lat.n_vertices
    tree: list[list[tuple[int, int, bool]]] = []  # per comp: (edge, child, child_is_head)
    roots: list[int] = []
    adj: list[list[tuple[int, int, bool]]] = [[] for _ in range(lat.n_vertices)]
    for ei, (t, h) in enumerate(lat.edges):
        if ei in dangling:
            continue
        adj[t].append((h, ei, True))
        adj[h].append((t, ei, False))
    nontree: list[int] = []
    seen_edges: set[int] = set()
    for root in range(lat.n_vertices):
        if comp[root] != -1:
            continue
        ci = len(roots)
        roots.append(root)
        tree.append([])
        comp[root] = ci
        queue = [root]
        while queue:
            v = queue.pop(0)
            for w, ei, child_is_head in adj[v]:
                if ei in seen_edges:
                    continue
                if comp[w] == -1:
                    comp[w] = ci
                    seen_edges.add(ei)
                    tree[ci].append((ei, w, child_is_head))
                    queue.append(w)
        # remaining edges inside this component are consistency checks
    for ei, (t, h) in enumerate(lat.edges):
        if ei not in dangling and ei not in seen_edges:
            nontree.append(ei)
    # cluster components linked by dangling edges
    parent = list(range(len(roots)))

    def find(a: int) -> int:
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for ei in dangling:
        t, h = lat.edges[ei]
        ra, rb = find(comp[t]), find(comp[h])
        if ra != rb:
            parent[ra] = rb
    clusters: dict[int, list[int]] = {}
    for ci in range(len(roots)):
        clusters.setdefault(find(ci), []).append(ci)
    weight_tables = {e: _dangling_weight_table(group, sub)
                     for e, sub in dangling.items()}
    nontree_by_comp: dict[int, list[int]] = {}
    for ei in nontree:
        nontree_by_comp.setdefault(comp[lat.edges[ei][0]], []).append(ei)
    dangling_by_cluster: dict[int, list[int]] = {}
    for ei in dangling:
        dangling_by_cluster.setdefault(find(comp[lat.edges[ei][0]]), []).append(ei)

    total_col = np.ones(nc, dtype=np.int64)
    for root_ci, members in clusters.items():
        cluster_count = np.zeros(nc, dtype=np.int64)
        domains_list = [domains[roots[ci]] for ci in members]
        for root_labels in itertools.product(*domains_list):
            glabels: dict[int, np.ndarray] = {}
            ok = np.ones(nc, dtype=bool)
            for ci, lab in zip(members, root_labels):
                glabels[roots[ci]] = np.full(nc, lab, dtype=np.int64)
                for ei, child, child_is_head in tree[ci]:
                    x = configs[:, ei]
                    g_parent = glabels[lat.edges[ei][0] if child_is_head
                                       else lat.edges[ei][1]]
                    if child_is_head:
                        glabels[child] = conj[x, g_parent]
                    else:
                        glabels[child] = conj[inv[x], g_parent]
                for ei, child, child_is_head in tree[ci]:
                    ok &= member[child][glabels[child]]
                ok &= member[roots[ci]][glabels[roots[ci]]]
                for ei in nontree_by_comp.get(ci, ()):
                    t, h = lat.edges[ei]
                    x = configs[:, ei]
                    ok &= glabels[h] == conj[x, glabels[t]]
            weight = ok.astype(np.int64)
            for ei in dangling_by_cluster.get(root_ci, ()):
                t, h = lat.edges[ei]
                x = configs[:, ei]
                weight *= weight_tables[ei][x, glabels[h], glabels[t]]
            cluster_count += weight
        total_col *= cluster_count
    total = int(total_col.sum())
    if total % gamma_size != 0:
        raise InvariantError("fixed-point total is not divisible by the gauge volume")
    return total // gamma_size


# ---------------------------------------------------------------------------
# route 3: dense matrix trace


def _term_matrix(term: HamiltonianTerm, group: FiniteGroup, n_edges: int) -> sp.csr_matrix:
    n = group.order
    dim = n ** n_edges
    weights = n ** np.arange(n_edges - 1, -1, -1, dtype=np.int64)
    cols_all = np.arange(dim, dtype=np.int64)
    digits = (cols_all[:, None] // weights[None, :]) % n
    rows_acc = []
    cols_acc = []
    data_acc = []
    for key, coeff in term.op.terms.items():
        rows = cols_all.copy()
        valid = np.ones(dim, dtype=bool)
        for e, m in key:
            mp = np.array(m, dtype=np.int64)
            d = digits[:, e]
            tgt = mp[d]
            valid &= tgt >= 0
            rows = rows + (np.where(tgt >= 0, tgt, 0) - d) * weights[e]
        rows_acc.append(rows[valid])
        cols_acc.append(cols_all[valid])
        data_acc.append(np.full(int(valid.sum()), float(coeff)))
    if not rows_acc:
        return sp.csr_matrix((dim, dim))
    mat = sp.coo_matrix((np.concatenate(data_acc),
                         (np.concatenate(rows_acc), np.concatenate(cols_acc))),
                        shape=(dim, dim))
    return mat.tocsr()


def _dense_projector(lat: Lattice, group: FiniteGroup,
                     subgroups: Mapping[str, Subgroup],
                     terms: Optional[Sequence[HamiltonianTerm]] = None):
    n = group.order
    dim = n ** lat.n_edges
    if dim > DENSE_DIM_BUDGET:
        return None
    if terms is None:
        terms = build_terms(lat, group, subgroups)
    diag = np.ones(dim)
    offdiag = []
    for t in terms:
        mat = _term_matrix(t, group, lat.n_edges)
        if t.diagonal:
            diag *= mat.diagonal()
        else:
            offdiag.append(mat)
    proj = sp.diags(diag).tocsr()
    for mat in offdiag:
        proj = mat @ proj
        if proj.nnz > 40_000_000:
            raise InvariantError("dense projector exceeded the sparsity guard")
    return proj


def _gsd_dense(lat: Lattice, group: FiniteGroup,
               subgroups: Mapping[str, Subgroup]) -> Optional[int]:
    proj = _dense_projector(lat, group, subgroups)
    if proj is None:
        return None
    tr = float(proj.diagonal().sum())
    val = int(round(tr))
    if abs(tr - val) > 1e-6 * max(1.0, abs(tr)):
        raise InvariantError(f"projector trace {tr} is not close to an integer")
    return val


# ---------------------------------------------------------------------------
# combined entry point


@dataclass
class GsdReport:
    value: int
    by_method: dict[str, int]
    skipped: tuple[str, ...]


_METHODS = {
    "counting": _gsd_counting,
    "trace": _gsd_trace,
    "dense": _gsd_dense,
}


def ground_space_dimension(lat: Lattice, group: FiniteGroup,
                           subgroups: Mapping[str, Subgroup],
                           methods: Sequence[str] = ("counting", "trace", "dense"),
                           ) -> GsdReport:
    """Ground-state count, cross-checked across every route within budget."""
    results: dict[str, int] = {}
    skipped: list[str] = []
    for m in methods:
        if m not in _METHODS:
            raise ValueError(f"unknown method {m!r}")
        val = _METHODS[m](lat, group, subgroups)
        if val is None:
            skipped.append(m)
        else:
            results[m] = val
    if not results:
        raise ValueError("no ground-state counting route fits its budget here")
    vals = set(results.values())
    if len(vals) != 1:
        raise InvariantError(f"counting routes disagree: {results}")
    return GsdReport(value=vals.pop(), by_method=results, skipped=tuple(skipped))


# ---------------------------------------------------------------------------
# explicit ground space (small systems)


class GroundSpace:
    """Orthonormal ground basis of the dense projector, with certificates."""

    def __init__(self, lat: Lattice, group: FiniteGroup,
                 subgroups: Mapping[str, Subgroup]):
        self.lattice = lat
        self.group = group
        self.terms = build_terms(lat, group, subgroups)
        proj = _dense_projector(lat, group, subgroups, self.terms)
        if proj is None:
            raise ValueError("lattice is too large for an explicit ground basis")
        dim = proj.shape[0]
        expected = ground_space_dimension(lat, group, subgroups).value
        rng = np.random.default_rng(7)
        probe = rng.normal(size=(dim, min(dim, expected + 6)))
        img = proj @ probe
        q, r = np.linalg.qr(img)
        keep = np.abs(np.diag(r)) > 1e-8 * max(1.0, float(np.abs(r).max()))
        self.basis = q[:, keep]
        if self.basis.shape[1] != expected:
            raise InvariantError(
                f"ground basis rank {self.basis.shape[1]} != expected {expected}")
        for t in self.terms:
            mat = _term_matrix(t, group, lat.n_edges)
            if float(np.abs(mat @ self.basis - self.basis).max()) > 1e-9:
                raise InvariantError(f"ground basis is not fixed by {t.name}")

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


def ground_space(lat: Lattice, group: FiniteGroup,
                 subgroups: Mapping[str, Subgroup]) -> GroundSpace:
    return GroundSpace(lat, group, subgroups)

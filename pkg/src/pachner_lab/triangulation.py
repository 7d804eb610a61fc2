"""Combinatorial 4-dimensional triangulations and the move engine.

A triangulation is a list of pentachoron *instances* (uid, five vertex labels,
orientation sign relative to the listed order) together with a pairing of
their facets.  Facet ``k`` of a pentachoron is the tetrahedron opposite its
``k``-th listed vertex; glued facets always carry the same label set.

Lower-dimensional simplices are *derived*: two corners of pentachora are the
same simplex iff they are identified through facet gluings.  This supports
triangulations "in the broad sense" where several simplices share a vertex
set (pillows produced by 0-2 moves), which vertex-set bookkeeping cannot.

Moves implemented (each returns a new triangulation and a :class:`MoveRecord`):

* Pachner 3-3 and its inverse,
* the *first 0-2 move* (inflate two tetrahedra sharing a triangle into a
  pillow of two oppositely oriented pentachora) and the *second 0-2 move*
  (inflate one tetrahedron, adding a vertex), with inverses,
* Pachner 2-4 = first 0-2 followed by an inverse 3-3,
* Pachner 1-5 = second 0-2 followed by 2-4,

plus the direct inverses 4-2 and 5-1.
"""

from __future__ import annotations

import hashlib
import itertools
import json
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

__all__ = [
    "PentaInstance",
    "Triangulation",
    "SimplicialData",
    "ValidationReport",
    "MoveRecord",
    "MoveError",
    "SchemaError",
    "perm_sign",
    "validate",
    "boundary_of_5_simplex",
    "apply_pachner_33",
    "apply_pachner_33_inverse",
    "apply_move02_first",
    "apply_move02_second",
    "apply_pachner_24",
    "apply_pachner_42",
    "apply_pachner_15",
    "apply_pachner_51",
    "invert_move",
    "find_33_clusters",
    "spanning_tree_B",
    "relabel",
    "to_json",
    "from_json",
    "structure_signature",
]


class MoveError(ValueError):
    """The requested move does not match the required local pattern."""


class SchemaError(ValueError):
    """Malformed triangulation data; ``location`` names the offending field."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


def perm_sign(seq: Sequence) -> int:
    """Sign of the permutation that sorts ``seq`` (entries distinct)."""
    seq = list(seq)
    inv = sum(1 for a in range(len(seq)) for b in range(a + 1, len(seq)) if seq[a] > seq[b])
    return -1 if inv % 2 else 1


@dataclass(frozen=True)
class PentaInstance:
    uid: int
    vertices: tuple[int, ...]
    orientation: int

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(int(v) for v in self.vertices))
        if len(self.vertices) != 5 or len(set(self.vertices)) != 5:
            raise SchemaError("a pentachoron needs 5 distinct vertex labels", f"pentachoron {self.uid}")
        if self.orientation not in (1, -1):
            raise SchemaError("orientation must be +1 or -1", f"pentachoron {self.uid}")

    @property
    def sorted_vertices(self) -> tuple[int, ...]:
        return tuple(sorted(self.vertices))

    @property
    def sorted_orientation(self) -> int:
        """Orientation relative to increasing label order."""
        return self.orientation * perm_sign(self.vertices)

    def facet_labels(self, k: int) -> tuple[int, ...]:
        return tuple(sorted(self.vertices[:k] + self.vertices[k + 1:]))

    def facet_index(self, labels: Iterable[int]) -> int:
        missing = set(self.vertices) - set(labels)
        if len(missing) != 1:
            raise MoveError(f"{sorted(labels)} is not a facet of pentachoron {self.uid}")
        return self.vertices.index(missing.pop())

    def induced_orientation(self, k: int) -> int:
        """Orientation induced on facet ``k`` relative to its increasing label order."""
        rest = self.vertices[:k] + self.vertices[k + 1:]
        return self.orientation * (-1) ** k * perm_sign(rest)


Slot = tuple[int, int]  # (pentachoron uid, facet index)


@dataclass(frozen=True)
class SimplexClass:
    """A derived simplex: an equivalence class of pentachoron corners."""

    id: int
    labels: tuple[int, ...]
    corners: tuple[tuple[int, tuple[int, ...]], ...]

    @property
    def dim(self) -> int:
        return len(self.labels) - 1


class SimplicialData:
    """Derived simplices of a triangulation, indexed by dimension 0..3."""

    def __init__(self, tri: "Triangulation"):
        parent: dict = {}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(a, b):
            ra, rb = find(a), find(b)
            if ra != rb:
                if ra > rb:
                    ra, rb = rb, ra
                parent[rb] = ra

        for p in tri.pentachora:
            for size in range(1, 5):
                for sub in itertools.combinations(p.sorted_vertices, size):
                    parent[(p.uid, sub)] = (p.uid, sub)
        for (u, k), (w, j) in tri.gluings.items():
            labels = tri.penta(u).facet_labels(k)
            for size in range(1, 5):
                for sub in itertools.combinations(labels, size):
                    union((u, sub), (w, sub))
        groups: dict = {}
        for key in parent:
            groups.setdefault(find(key), []).append(key)
        self.simplices: list[list[SimplexClass]] = [[] for _ in range(4)]
        self._lookup: dict = {}
        by_dim: list[list] = [[] for _ in range(4)]
        for members in groups.values():
            members = sorted(members)
            labels = members[0][1]
            by_dim[len(labels) - 1].append((labels, tuple(members)))
        for dim in range(4):
            for idx, (labels, members) in enumerate(sorted(by_dim[dim])):
                cls = SimplexClass(idx, labels, members)
                self.simplices[dim].append(cls)
                for corner in members:
                    self._lookup[corner] = idx
        self.tri = tri

    @property
    def vertices(self) -> list[SimplexClass]:
        return self.simplices[0]

    @property
    def edges(self) -> list[SimplexClass]:
        return self.simplices[1]

    @property
    def faces(self) -> list[SimplexClass]:
        return self.simplices[2]

    @property
    def tetrahedra(self) -> list[SimplexClass]:
        return self.simplices[3]

    def simplex_id(self, uid: int, labels: Iterable[int]) -> int:
        """Class id of the corner of pentachoron ``uid`` spanned by ``labels``."""
        return self._lookup[(uid, tuple(sorted(labels)))]

    def tetra_of_slot(self, uid: int, k: int) -> int:
        return self.simplex_id(uid, self.tri.penta(uid).facet_labels(k))

    def slots_of_tetra(self, t: int) -> list[Slot]:
        cls = self.tetrahedra[t]
        return [(u, self.tri.penta(u).facet_index(labels)) for u, labels in cls.corners]

    def counts(self) -> tuple[int, int, int, int, int]:
        return tuple(len(s) for s in self.simplices) + (len(self.tri.pentachora),)

    def euler_characteristic(self) -> int:
        c = self.counts()
        return c[0] - c[1] + c[2] - c[3] + c[4]

    def names(self, dim: int) -> dict[int, str]:
        """Readable names (labels concatenated, primes on repeated label sets)."""
        seen: Counter = Counter()
        out = {}
        for cls in self.simplices[dim]:
            base = "".join(str(v) if v < 10 else f"({v})" for v in cls.labels)
            out[cls.id] = base + "'" * seen[cls.labels]
            seen[cls.labels] += 1
        return out

    def pentachora_containing(self, dim: int, sid: int) -> list[int]:
        """Uids of pentachora having at least one corner in the given class."""
        return sorted({u for u, _ in self.simplices[dim][sid].corners})

    def faces_of_edge(self, e: int) -> list[int]:
        out = set()
        for u, labels in self.edges[e].corners:
            p = self.tri.penta(u)
            for v in p.vertices:
                if v not in labels:
                    out.add(self.simplex_id(u, labels + (v,)))
        return sorted(out)

    def tetra_of_edge(self, e: int) -> list[int]:
        out = set()
        for u, labels in self.edges[e].corners:
            p = self.tri.penta(u)
            rest = [v for v in p.vertices if v not in labels]
            for pair in itertools.combinations(rest, 2):
                out.add(self.simplex_id(u, labels + pair))
        return sorted(out)

    def edge_endpoints(self, e: int) -> tuple[int, int]:
        u, labels = self.edges[e].corners[0]
        return self.simplex_id(u, (labels[0],)), self.simplex_id(u, (labels[1],))

    def boundary_edges_of_face(self, f: int) -> tuple[int, int, int]:
        """Edge ids (ij, ik, jk) of face ``ijk`` (labels increasing)."""
        u, (i, j, k) = self.faces[f].corners[0]
        return (self.simplex_id(u, (i, j)), self.simplex_id(u, (i, k)), self.simplex_id(u, (j, k)))

    def faces_of_tetra(self, t: int) -> tuple[int, int, int, int]:
        """Face ids (ijk, ijl, ikl, jkl) of tetrahedron ``ijkl``."""
        u, (i, j, k, l) = self.tetrahedra[t].corners[0]
        return tuple(self.simplex_id(u, s) for s in ((i, j, k), (i, j, l), (i, k, l), (j, k, l)))


class Triangulation:
    """Immutable triangulation: pentachoron instances plus a facet pairing."""

    def __init__(self, pentachora: Iterable[PentaInstance], gluings: Mapping[Slot, Slot] | Iterable[tuple[Slot, Slot]]):
        pents = sorted(pentachora, key=lambda p: p.uid)
        self._pents = {p.uid: p for p in pents}
        if len(self._pents) != len(pents):
            raise SchemaError("duplicate pentachoron uid", "pentachora")
        pairs = gluings.items() if isinstance(gluings, Mapping) else gluings
        glue: dict[Slot, Slot] = {}
        for a, b in pairs:
            a, b = (int(a[0]), int(a[1])), (int(b[0]), int(b[1]))
            for s in (a, b):
                if s[0] not in self._pents or not 0 <= s[1] < 5:
                    raise SchemaError(f"gluing refers to unknown facet {s}", "gluings")
            if a == b:
                raise SchemaError(f"facet {a} glued to itself", "gluings")
            for s, t in ((a, b), (b, a)):
                if glue.get(s, t) != t:
                    raise SchemaError(f"facet {s} glued twice", "gluings")
                glue[s] = t
        self._glue = glue

    @property
    def pentachora(self) -> list[PentaInstance]:
        return list(self._pents.values())

    @property
    def gluings(self) -> dict[Slot, Slot]:
        return dict(self._glue)

    def penta(self, uid: int) -> PentaInstance:
        return self._pents[uid]

    def partner(self, slot: Slot) -> Slot | None:
        return self._glue.get(slot)

    @property
    def vertex_labels(self) -> list[int]:
        return sorted({v for p in self._pents.values() for v in p.vertices})

    @cached_property
    def simplicial(self) -> SimplicialData:
        return SimplicialData(self)

    def next_uid(self) -> int:
        return max(self._pents, default=-1) + 1

    def __eq__(self, other):
        return isinstance(other, Triangulation) and self._pents == other._pents and self._glue == other._glue

    def __hash__(self):
        return hash(content_hash(self))

    def __repr__(self):
        return f"Triangulation({len(self._pents)} pentachora, counts={self.simplicial.counts()})"


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]
    counts: tuple[int, int, int, int, int]
    euler_characteristic: int
    edge_links: dict[int, tuple[int, int]] = field(default_factory=dict)  # edge id -> (n2, n4)

    def __bool__(self):
        return self.ok


def validate(tri: Triangulation) -> ValidationReport:
    """Check the closed-manifold conditions assumed by the invariant."""
    violations: list[str] = []
    for p in tri.pentachora:
        for k in range(5):
            other = tri.partner((p.uid, k))
            if other is None:
                violations.append(f"unpaired facet {k} of pentachoron {p.uid}")
                continue
            q = tri.penta(other[0])
            if p.facet_labels(k) != q.facet_labels(other[1]):
                violations.append(f"label mismatch gluing ({p.uid},{k})-{other}")
            elif (p.uid, k) < other and p.induced_orientation(k) != -q.induced_orientation(other[1]):
                violations.append(f"orientation mismatch on facet ({p.uid},{k})-{other}")
    if violations:
        return ValidationReport(False, violations, (0, 0, 0, 0, len(tri.pentachora)), 0)
    cx = tri.simplicial
    labels = [v.labels[0] for v in cx.vertices]
    if len(set(labels)) != len(labels):
        violations.append("a vertex label names more than one vertex")
    links = {}
    for e in range(len(cx.edges)):
        n2 = len(cx.faces_of_edge(e))
        n3 = len(cx.tetra_of_edge(e))
        n4 = sum(1 for _ in cx.edges[e].corners)
        links[e] = (n2, n4)
        if 3 * n4 != 2 * n3 or n2 - n3 + n4 != 2:
            violations.append(f"link of edge {cx.edges[e].labels} is not a 2-sphere")
        if n4 != 2 * n2 - 4:
            violations.append(f"edge {cx.edges[e].labels}: n4={n4} != 2*n2-4={2 * n2 - 4}")
    return ValidationReport(not violations, violations, cx.counts(), cx.euler_characteristic(), links)


def boundary_of_5_simplex() -> Triangulation:
    """The boundary of the 5-simplex on labels 1..6 (a 4-sphere).

    Pentachoron ``uid = x-1`` omits vertex ``x`` and carries orientation
    ``(-1)**(x-1)``, so that induced orientations cancel on every facet.
    """
    verts = range(1, 7)
    pents = [PentaInstance(x - 1, tuple(v for v in verts if v != x), (-1) ** (x - 1)) for x in verts]
    glue = []
    for x, y in itertools.combinations(verts, 2):
        px, py = pents[x - 1], pents[y - 1]
        glue.append(((px.uid, px.vertices.index(y)), (py.uid, py.vertices.index(x))))
    return Triangulation(pents, glue)


# ---------------------------------------------------------------------------
# moves


@dataclass(frozen=True)
class MoveRecord:
    """What a move did; enough information to undo it with :func:`invert_move`."""

    kind: str
    removed: tuple[PentaInstance, ...] = ()
    created: tuple[int, ...] = ()
    label_map: tuple[tuple[int, int], ...] = ()  # pattern label -> actual label
    created_simplices: dict = field(default_factory=dict)  # dim -> Counter of label tuples
    destroyed_simplices: dict = field(default_factory=dict)
    parts: tuple["MoveRecord", ...] = ()
    new_vertex: int | None = None


def _simplex_diff(before: Triangulation, after: Triangulation) -> tuple[dict, dict]:
    created, destroyed = {}, {}
    for dim in range(4):
        a = Counter(c.labels for c in before.simplicial.simplices[dim])
        b = Counter(c.labels for c in after.simplicial.simplices[dim])
        created[dim] = b - a
        destroyed[dim] = a - b
    return created, destroyed


def _orientation_for(vertices: tuple[int, ...], k: int, target: int) -> int:
    """Orientation making facet ``k`` of ``vertices`` carry induced orientation ``target``."""
    probe = PentaInstance(-1, vertices, 1)
    return target * probe.induced_orientation(k)


def _replace_cluster(tri: Triangulation, cluster: Sequence[int], new_sets: Sequence[Sequence[int]], kind: str,
                     label_map: Mapping[int, int] | None = None,
                     uids: Sequence[int] | None = None) -> tuple[Triangulation, MoveRecord]:
    """Replace pentachora ``cluster`` by new ones with vertex sets ``new_sets``.

    Label sets occurring twice among the new facets are glued together; label
    sets occurring once must match a boundary facet of the old cluster and are
    glued to its outside partner.  Orientations are propagated from outside.
    """
    cluster = list(cluster)
    cset = set(cluster)
    boundary: dict[tuple[int, ...], Slot] = {}
    for u in cluster:
        p = tri.penta(u)
        for k in range(5):
            partner = tri.partner((u, k))
            if partner is None:
                raise MoveError("cluster touches an unpaired facet")
            if partner[0] in cset:
                continue
            key = p.facet_labels(k)
            if key in boundary:
                raise MoveError(f"cluster boundary has two facets labelled {key}")
            boundary[key] = partner
    new_vertices = [tuple(sorted(s)) for s in new_sets]
    if uids is None:
        uids = [tri.next_uid() + i for i in range(len(new_vertices))]
    uids = list(uids)
    if set(uids) & (set(tri._pents) - cset) or len(set(uids)) != len(uids):
        raise MoveError("requested uids are already in use")
    index = {u: i for i, u in enumerate(uids)}
    facet_use: dict[tuple[int, ...], list[Slot]] = {}
    for u, verts in zip(uids, new_vertices):
        probe = PentaInstance(u, verts, 1)
        for k in range(5):
            facet_use.setdefault(probe.facet_labels(k), []).append((u, k))
    if any(len(v) > 2 for v in facet_use.values()):
        raise MoveError("new cluster has a facet shared by more than two pentachora")
    outer = {key: slots[0] for key, slots in facet_use.items() if len(slots) == 1}
    if set(outer) != set(boundary):
        raise MoveError("new cluster boundary does not match the old cluster boundary")
    orient: dict[int, int] = {}
    for key, (u, k) in sorted(outer.items()):
        ext = boundary[key]
        target = -tri.penta(ext[0]).induced_orientation(ext[1])
        o = _orientation_for(new_vertices[index[u]], k, target)
        if orient.setdefault(u, o) != o:
            raise MoveError("inconsistent orientation while replacing cluster")
    if len(orient) != len(new_vertices):
        raise MoveError("a new pentachoron has no boundary facet")
    new_pents = [PentaInstance(u, v, orient[u]) for u, v in zip(uids, new_vertices)]
    glue = {s: t for s, t in tri.gluings.items() if s[0] not in cset and t[0] not in cset}
    pairs = [(a, b) for a, b in glue.items() if a < b]
    for key, slots in facet_use.items():
        if len(slots) == 2:
            pairs.append((slots[0], slots[1]))
        else:
            pairs.append((slots[0], boundary[key]))
    out = Triangulation([p for p in tri.pentachora if p.uid not in cset] + new_pents, pairs)
    report = validate(out)
    if not report.ok:
        raise MoveError(f"{kind} produced an invalid triangulation: {report.violations[:3]}")
    created, destroyed = _simplex_diff(tri, out)
    return out, MoveRecord(kind, tuple(tri.penta(u) for u in cluster), tuple(p.uid for p in new_pents),
                           tuple(sorted((label_map or {}).items())), created, destroyed)


def _shared_labels(tri: Triangulation, uids: Sequence[int]) -> set[int]:
    sets = [set(tri.penta(u).vertices) for u in uids]
    return set.intersection(*sets)


def _glued(tri: Triangulation, u: int, w: int) -> list[Slot]:
    return [(u, k) for k in range(5) if (tri.partner((u, k)) or (None,))[0] == w]


def find_33_clusters(tri: Triangulation) -> list[tuple[int, int, int]]:
    """All triples of pentachora around a triangle of degree three."""
    cx = tri.simplicial
    out = []
    for f, cls in enumerate(cx.faces):
        uids = cx.pentachora_containing(2, f)
        if len(uids) == 3 and len(cls.corners) == 3:
            try:
                _check_33(tri, uids)
            except MoveError:
                continue
            out.append(tuple(uids))
    return out


def _check_33(tri: Triangulation, cluster: Sequence[int]) -> tuple[list[int], list[int]]:
    if len(set(cluster)) != 3:
        raise MoveError("a 3-3 move needs three distinct pentachora")
    tri_labels = sorted(_shared_labels(tri, cluster))
    if len(tri_labels) != 3:
        raise MoveError("the three pentachora do not share exactly one triangle")
    outer = sorted(set().union(*(set(tri.penta(u).vertices) for u in cluster)) - set(tri_labels))
    if len(outer) != 3:
        raise MoveError("cluster does not span six labels")
    for a, b in itertools.combinations(cluster, 2):
        if len(_glued(tri, a, b)) != 1:
            raise MoveError("pentachora of a 3-3 cluster must be glued pairwise along one tetrahedron")
    return tri_labels, outer


def apply_pachner_33(tri: Triangulation, cluster: Sequence[int]) -> tuple[Triangulation, MoveRecord]:
    """3-3 move: three pentachora around triangle ``abc`` -> three around ``def``."""
    tri_labels, outer = _check_33(tri, cluster)
    new_sets = [sorted((set(tri_labels) - {v}) | set(outer)) for v in tri_labels]
    label_map = dict(zip(range(1, 7), tri_labels + outer))
    return _replace_cluster(tri, cluster, new_sets, "3-3", label_map)


apply_pachner_33_inverse = apply_pachner_33  # the inverse 3-3 move is again a 3-3 move


def _face_walk_partner(tri: Triangulation, start: Slot, face: tuple[int, ...], target_tetra: int) -> Slot:
    """Walk around ``face`` from slot ``start`` and return the slot reached at ``target_tetra``."""
    cx = tri.simplicial
    slot = start
    for _ in range(4 * len(tri.pentachora) + 4):
        u, k = slot
        p = tri.penta(u)
        others = [v for v in p.vertices if v not in face]
        current_missing = p.vertices[k]
        nxt_missing = [v for v in others if v != current_missing][0]
        k2 = p.vertices.index(nxt_missing)
        if cx.tetra_of_slot(u, k2) == target_tetra:
            return (u, k2)
        slot = tri.partner((u, k2))
    raise MoveError("walk around the triangle did not reach the second tetrahedron")


def apply_move02_first(tri: Triangulation, t1: int, t2: int) -> tuple[Triangulation, MoveRecord]:
    """First 0-2 move: inflate tetrahedra ``t1``, ``t2`` sharing a triangle into a pillow.

    The pillow consists of two oppositely oriented pentachora on the label set
    ``t1 | t2``, glued to each other along the three facets containing the new
    inner edge and carrying two copies of each of ``t1`` and ``t2`` on its
    boundary.
    """
    cx = tri.simplicial
    if t1 == t2:
        raise MoveError("the first 0-2 move needs two different tetrahedra")
    la, lb = cx.tetrahedra[t1].labels, cx.tetrahedra[t2].labels
    face = tuple(sorted(set(la) & set(lb)))
    if len(face) != 3:
        raise MoveError("tetrahedra do not share a triangle")
    (pa, ka), (qa, kqa) = cx.slots_of_tetra(t1)
    (ra, _), = cx.slots_of_tetra(t2)[:1]
    if cx.simplex_id(pa, face) != cx.simplex_id(ra, face):
        raise MoveError("tetrahedra do not share a triangle")
    # Around the triangle, t1 and t2 split the cycle of pentachora into two
    # arcs; one pillow half closes each arc.
    side_a_t2 = _face_walk_partner(tri, (pa, ka), face, t2)
    side_b_t2 = tri.partner(side_a_t2)
    x = (set(la) - set(face)).pop()
    y = (set(lb) - set(face)).pop()
    verts = tuple(sorted(set(face) | {x, y}))
    start = tri.next_uid()
    probe = PentaInstance(start, verts, 1)
    k1, k2 = probe.facet_index(la), probe.facet_index(lb)
    o_up = _orientation_for(verts, k1, -tri.penta(pa).induced_orientation(ka))
    up = PentaInstance(start, verts, o_up)
    down = PentaInstance(start + 1, verts, -o_up)
    side1_t2, side2_t2 = side_a_t2, side_b_t2
    glue = {s: t for s, t in tri.gluings.items()
            if s not in ((pa, ka), (qa, kqa), side1_t2, side2_t2) and t not in ((pa, ka), (qa, kqa), side1_t2, side2_t2)}
    pairs = [(a, b) for a, b in glue.items() if a < b]
    pairs += [((start, k1), (pa, ka)), ((start + 1, k1), (qa, kqa)),
              ((start, k2), side_a_t2), ((start + 1, k2), side_b_t2)]
    for k in range(5):
        if k not in (k1, k2):
            pairs.append(((start, k), (start + 1, k)))
    out = Triangulation(tri.pentachora + [up, down], pairs)
    report = validate(out)
    if not report.ok:
        raise MoveError(f"first 0-2 move produced an invalid triangulation: {report.violations[:3]}")
    created, destroyed = _simplex_diff(tri, out)
    label_map = {1: x, 2: y, 4: face[0], 5: face[1], 6: face[2]}
    return out, MoveRecord("02-first", (), (start, start + 1), tuple(sorted(label_map.items())), created, destroyed)


def apply_move02_second(tri: Triangulation, t: int, new_label: int | None = None) -> tuple[Triangulation, MoveRecord]:
    """Second 0-2 move: inflate tetrahedron ``t`` into a pillow with a new vertex.

    ``new_label`` defaults to one more than the largest existing label.
    """
    cx = tri.simplicial
    labels = cx.tetrahedra[t].labels
    n = max(tri.vertex_labels) + 1 if new_label is None else int(new_label)
    if n in tri.vertex_labels:
        raise MoveError(f"label {n} is already used")
    (pa, ka), (qa, kqa) = cx.slots_of_tetra(t)
    verts = tuple(sorted(labels + (n,)))
    start = tri.next_uid()
    k0 = verts.index(n)
    o_up = _orientation_for(verts, k0, -tri.penta(pa).induced_orientation(ka))
    up = PentaInstance(start, verts, o_up)
    down = PentaInstance(start + 1, verts, -o_up)
    pairs = [(a, b) for a, b in tri.gluings.items() if a < b and a not in ((pa, ka), (qa, kqa))]
    pairs += [((start, k0), (pa, ka)), ((start + 1, k0), (qa, kqa))]
    for k in range(5):
        if k != k0:
            pairs.append(((start, k), (start + 1, k)))
    out = Triangulation(tri.pentachora + [up, down], pairs)
    report = validate(out)
    if not report.ok:
        raise MoveError(f"second 0-2 move produced an invalid triangulation: {report.violations[:3]}")
    created, destroyed = _simplex_diff(tri, out)
    label_map = {1: n, 3: labels[0], 4: labels[1], 5: labels[2], 6: labels[3]}
    return out, MoveRecord("02-second", (), (start, start + 1), tuple(sorted(label_map.items())), created,
                           destroyed, new_vertex=n)


def _remove_pillow(tri: Triangulation, up: int, down: int) -> Triangulation:
    inner = _glued(tri, up, down)
    outer = [k for k in range(5) if (up, k) not in inner]
    if not outer:
        raise MoveError("not a pillow")
    pairs = [(a, b) for a, b in tri.gluings.items() if a < b and a[0] not in (up, down) and b[0] not in (up, down)]
    for k in outer:
        pairs.append((tri.partner((up, k)), tri.partner((down, k))))
    out = Triangulation([p for p in tri.pentachora if p.uid not in (up, down)], pairs)
    if not validate(out).ok:
        raise MoveError("removing the pillow produced an invalid triangulation")
    return out


def apply_pachner_24(tri: Triangulation, cluster: Sequence[int], pivot: int | None = None) -> tuple[Triangulation, MoveRecord]:
    """2-4 move on two pentachora glued along a tetrahedron.

    Realised as a first 0-2 move on the facets opposite ``pivot`` (a vertex of
    the shared tetrahedron, default the smallest) followed by an inverse 3-3
    move.
    """
    u, w = cluster
    shared = sorted(_shared_labels(tri, cluster))
    if len(shared) != 4 or len(_glued(tri, u, w)) != 1:
        raise MoveError("a 2-4 move needs two pentachora glued along one tetrahedron")
    pivot = shared[0] if pivot is None else pivot
    cx = tri.simplicial
    pu, pw = tri.penta(u), tri.penta(w)
    t1 = cx.tetra_of_slot(u, pu.vertices.index(pivot))
    t2 = cx.tetra_of_slot(w, pw.vertices.index(pivot))
    mid, rec1 = apply_move02_first(tri, t1, t2)
    up = [p for p in rec1.created if _glued(mid, p, u) and _glued(mid, p, w)]
    if len(up) != 1:
        raise MoveError("could not locate the pillow half adjacent to the cluster")
    out, rec2 = apply_pachner_33(mid, [up[0], u, w])
    created, destroyed = _simplex_diff(tri, out)
    x = (set(pu.vertices) - set(shared)).pop()
    y = (set(pw.vertices) - set(shared)).pop()
    rest = [v for v in shared if v != pivot]
    label_map = {1: x, 2: y, 3: pivot, 4: rest[0], 5: rest[1], 6: rest[2]}
    return out, MoveRecord("2-4", rec2.removed, rec2.created + tuple(p for p in rec1.created if p != up[0]),
                           tuple(sorted(label_map.items())), created, destroyed, (rec1, rec2))


def apply_pachner_42(tri: Triangulation, cluster: Sequence[int]) -> tuple[Triangulation, MoveRecord]:
    """4-2 move: four pentachora around an edge of degree four -> two pentachora."""
    if len(set(cluster)) != 4:
        raise MoveError("a 4-2 move needs four pentachora")
    edge = sorted(_shared_labels(tri, cluster))
    if len(edge) != 2:
        raise MoveError("the four pentachora must share exactly one edge")
    allv = sorted(set().union(*(set(tri.penta(u).vertices) for u in cluster)))
    rest = [v for v in allv if v not in edge]
    if len(rest) != 4:
        raise MoveError("cluster does not span six labels")
    new_sets = [sorted(set(rest) | {v}) for v in edge]
    return _replace_cluster(tri, cluster, new_sets, "4-2")


def apply_pachner_15(tri: Triangulation, uid: int, pivot: int | None = None, new_label: int | None = None,
                     pivot24: int | None = None) -> tuple[Triangulation, MoveRecord]:
    """1-5 move on pentachoron ``uid`` (adds one vertex).

    Realised as a second 0-2 move on the facet opposite ``pivot`` (default the
    smallest vertex) followed by a 2-4 move on that pentachoron and the
    adjacent pillow half.
    """
    p = tri.penta(uid)
    pivot = min(p.vertices) if pivot is None else pivot
    t = tri.simplicial.tetra_of_slot(uid, p.vertices.index(pivot))
    mid, rec1 = apply_move02_second(tri, t, new_label)
    half = [q for q in rec1.created if _glued(mid, q, uid)]
    out, rec2 = apply_pachner_24(mid, [half[0], uid], pivot24)
    created, destroyed = _simplex_diff(tri, out)
    created_uids = rec2.created + tuple(q for q in rec1.created if q != half[0])
    return out, MoveRecord("1-5", (p,), created_uids, rec2.label_map, created, destroyed, (rec1, rec2),
                           new_vertex=rec1.new_vertex)


def apply_pachner_51(tri: Triangulation, cluster: Sequence[int]) -> tuple[Triangulation, MoveRecord]:
    """5-1 move: five pentachora around a vertex of degree five -> one pentachoron."""
    if len(set(cluster)) != 5:
        raise MoveError("a 5-1 move needs five pentachora")
    centre = _shared_labels(tri, cluster)
    if len(centre) != 1:
        raise MoveError("the five pentachora must share exactly one vertex")
    allv = set().union(*(set(tri.penta(u).vertices) for u in cluster))
    return _replace_cluster(tri, cluster, [sorted(allv - centre)], "5-1")


def invert_move(tri: Triangulation, record: MoveRecord) -> Triangulation:
    """Undo ``record`` on the triangulation it produced (equal up to uids)."""
    if record.kind in ("02-first", "02-second"):
        return _remove_pillow(tri, *record.created)
    if record.parts:
        for part in reversed(record.parts):
            tri = invert_move(tri, part)
        return tri
    out, _ = _replace_cluster(tri, record.created, [p.vertices for p in record.removed], "inverse " + record.kind,
                              uids=[p.uid for p in record.removed])
    return out


# ---------------------------------------------------------------------------
# spanning tree, relabelling, serialisation


def spanning_tree_B(tri: Triangulation) -> tuple[list[int], list[int]]:
    """Deterministic breadth-first maximal tree of the 1-skeleton.

    Returns ``(tree_edges, B)`` as edge ids; ``B`` holds the ``N1 - N0 + 1``
    edges outside the tree.  Neighbours are explored in increasing edge order.
    """
    cx = tri.simplicial
    adj: dict[int, list[tuple[int, int]]] = {v.id: [] for v in cx.vertices}
    for e in range(len(cx.edges)):
        a, b = cx.edge_endpoints(e)
        adj[a].append((e, b))
        adj[b].append((e, a))
    if not adj:
        return [], []
    seen = {0}
    queue = [0]
    tree = []
    while queue:
        v = queue.pop(0)
        for e, w in sorted(adj[v]):
            if w not in seen:
                seen.add(w)
                tree.append(e)
                queue.append(w)
    if len(seen) != len(adj):
        raise ValueError("1-skeleton is disconnected")
    tree_set = set(tree)
    return sorted(tree), [e for e in range(len(cx.edges)) if e not in tree_set]


def relabel(tri: Triangulation, mapping: Mapping[int, int]) -> Triangulation:
    """Rename vertex labels (bijectively); orientations follow the listed order."""
    m = {v: mapping.get(v, v) for v in tri.vertex_labels}
    if len(set(m.values())) != len(m):
        raise ValueError("relabelling is not injective")
    pents = [PentaInstance(p.uid, tuple(m[v] for v in p.vertices), p.orientation) for p in tri.pentachora]
    return Triangulation(pents, tri.gluings)


def to_json(tri: Triangulation) -> dict:
    pairs = sorted((a, b) for a, b in tri.gluings.items() if a < b)
    return {
        "vertices": tri.vertex_labels,
        "pentachora": [{"uid": p.uid, "vertices": list(p.vertices), "orientation": p.orientation}
                       for p in tri.pentachora],
        "gluings": [[{"penta": a[0], "facet": a[1]}, {"penta": b[0], "facet": b[1]}] for a, b in pairs],
    }


def from_json(data) -> Triangulation:
    if not isinstance(data, dict):
        raise SchemaError("expected a JSON object", "$")
    for key in ("pentachora", "gluings"):
        if key not in data:
            raise SchemaError("missing field", f"$.{key}")
    pents = []
    for i, item in enumerate(data["pentachora"]):
        loc = f"$.pentachora[{i}]"
        try:
            pents.append(PentaInstance(int(item["uid"]), tuple(item["vertices"]), int(item["orientation"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(str(exc), loc) from None
    pairs = []
    for i, item in enumerate(data["gluings"]):
        loc = f"$.gluings[{i}]"
        try:
            a, b = item
            pairs.append(((int(a["penta"]), int(a["facet"])), (int(b["penta"]), int(b["facet"]))))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"expected a pair of {{penta, facet}} objects ({exc})", loc) from None
    tri = Triangulation(pents, pairs)
    if "vertices" in data and sorted(data["vertices"]) != tri.vertex_labels:
        raise SchemaError("vertex list does not match pentachoron labels", "$.vertices")
    return tri


def content_hash(tri: Triangulation) -> str:
    blob = json.dumps(to_json(tri), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def structure_signature(tri: Triangulation) -> tuple:
    """uid-independent description used to compare triangulations up to renaming."""
    pents = Counter((p.sorted_vertices, p.sorted_orientation) for p in tri.pentachora)
    glue = Counter()
    for a, b in tri.gluings.items():
        pa, pb = tri.penta(a[0]), tri.penta(b[0])
        glue[((pa.sorted_vertices, pa.sorted_orientation), (pb.sorted_vertices, pb.sorted_orientation),
              pa.facet_labels(a[1]))] += 1
    counts = tri.simplicial.counts()
    return (tuple(sorted(pents.items())), tuple(sorted(glue.items())), counts)

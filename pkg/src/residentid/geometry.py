"""Accessibility-graph construction from a floor layout.

A layout is a set of named points of interest (sensor positions) plus
obstacle line segments, all in one planar coordinate system. The graph
builder starts from the complete graph over the POIs and removes every
edge whose straight segment collides with an obstacle; surviving edges
are weighted by Euclidean distance. Collision ties (an edge grazing an
obstacle endpoint) count as collisions, so grazing edges are pruned.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import yaml

from .errors import DataError, DisconnectedGraphWarning


@dataclass(frozen=True)
class Point:
    """A location with at least two coordinates (extra axes allowed)."""

    coords: tuple[float, ...]

    def __post_init__(self) -> None:
        coords = tuple(float(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if len(coords) < 2:
            raise DataError(f"point needs >= 2 coordinates, got {coords!r}")
        if not all(math.isfinite(c) for c in coords):
            raise DataError(f"point has non-finite coordinates: {coords!r}")

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def x(self) -> float:
        return self.coords[0]

    @property
    def y(self) -> float:
        return self.coords[1]


@dataclass(frozen=True)
class Segment:
    """A line segment between two distinct points of equal dimension."""

    a: Point
    b: Point

    def __post_init__(self) -> None:
        if self.a.dim != self.b.dim:
            raise DataError(
                f"segment endpoints differ in dimension: {self.a.dim} vs {self.b.dim}"
            )
        if self.a.coords == self.b.coords:
            raise DataError(f"zero-length segment at {self.a.coords!r}")


def euclidean(p: Point, q: Point) -> float:
    """Euclidean distance over all shared coordinates."""
    if p.dim != q.dim:
        raise DataError(f"dimension mismatch: {p.dim} vs {q.dim}")
    return math.sqrt(sum((a - b) ** 2 for a, b in zip(p.coords, q.coords)))


def _cross2(u: Point, v: Point, origin: Point) -> float:
    # z component of (u - origin) x (v - origin), first two axes only
    ux, uy = u.x - origin.x, u.y - origin.y
    vx, vy = v.x - origin.x, v.y - origin.y
    return ux * vy - uy * vx


def on_segment(l: Segment, p: Point) -> bool:
    """Bounding-box check: is p within l's axis-aligned box on every axis?

    Intended for points already known to be collinear with l; endpoints
    count as on-segment.
    """
    for pi, ai, bi in zip(p.coords, l.a.coords, l.b.coords):
        if not (min(ai, bi) <= pi <= max(ai, bi)):
            return False
    return True


def segments_intersect(l1: Segment, l2: Segment) -> bool:
    """True iff the two segments share at least one point.

    Sign tests on 2-D cross products decide the generic crossing case;
    any zero cross product (collinear or touching configuration) falls
    back to the bounding-box check, so endpoint contact and collinear
    overlap both count as intersections. Coordinates beyond the first
    two are ignored by the sign tests but participate in the box check.
    """
    if l1.a.dim != l2.a.dim:
        raise DataError(
            f"dimension mismatch between segments: {l1.a.dim} vs {l2.a.dim}"
        )
    c1, c2, c3, c4 = l1.a, l1.b, l2.a, l2.b
    v1 = _cross2(c1, c4, c3)
    v2 = _cross2(c2, c4, c3)
    v3 = _cross2(c3, c2, c1)
    v4 = _cross2(c4, c2, c1)
    if v1 * v2 < 0 and v3 * v4 < 0:
        return True
    if v1 == 0 and on_segment(l2, c1):
        return True
    if v2 == 0 and on_segment(l2, c2):
        return True
    if v3 == 0 and on_segment(l1, c3):
        return True
    if v4 == 0 and on_segment(l1, c4):
        return True
    return False


@dataclass
class LayoutMap:
    """POIs and obstacles of one home, in a shared coordinate system."""

    pois: list[tuple[str, Point]]
    obstacles: list[Segment] = field(default_factory=list)
    manual_edges: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.pois:
            raise DataError("layout has no POIs")
        ids = [pid for pid, _ in self.pois]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate POI ids: {dupes}")
        dims = {p.dim for _, p in self.pois}
        if len(dims) > 1:
            raise DataError(f"POIs have mixed dimensions: {sorted(dims)}")
        seen: dict[tuple[float, ...], str] = {}
        for pid, p in self.pois:
            if p.coords in seen:
                raise DataError(
                    f"POIs {seen[p.coords]!r} and {pid!r} share coordinates "
                    f"{p.coords}; co-located POIs are not supported"
                )
            seen[p.coords] = pid

    def poi_ids(self) -> list[str]:
        return [pid for pid, _ in self.pois]

    def point(self, poi_id: str) -> Point:
        for pid, p in self.pois:
            if pid == poi_id:
                return p
        raise DataError(f"unknown POI id: {poi_id!r}")


@dataclass
class AccessibilityGraph:
    """Undirected graph over POIs with Euclidean edge weights.

    dist is a symmetric n x n matrix; 0 means "no edge" (and the
    diagonal). Entry (i, j) > 0 equals the Euclidean distance between
    POIs i and j. points keeps the POI coordinates when the graph was
    built from a layout, so edges can be added later.
    """

    node_ids: list[str]
    dist: np.ndarray
    points: list[Point] | None = None

    def __post_init__(self) -> None:
        self.dist = np.asarray(self.dist, dtype=np.float64)
        n = len(self.node_ids)
        if self.dist.shape != (n, n):
            raise DataError(f"dist shape {self.dist.shape} != ({n}, {n})")
        if not np.allclose(self.dist, self.dist.T):
            raise DataError("dist matrix is not symmetric")
        if self.points is not None and len(self.points) != n:
            raise DataError(f"{len(self.points)} points for {n} nodes")
        self._index = {nid: i for i, nid in enumerate(self.node_ids)}

    @property
    def n(self) -> int:
        return len(self.node_ids)

    def index(self, node_id: str) -> int:
        try:
            return self._index[node_id]
        except KeyError:
            raise DataError(f"unknown node id: {node_id!r}") from None

    def has_edge(self, id_a: str, id_b: str) -> bool:
        return self.dist[self.index(id_a), self.index(id_b)] > 0

    def edges(self) -> list[tuple[str, str, float]]:
        out = []
        for i in range(self.n):
            for j in range(i + 1, self.n):
                if self.dist[i, j] > 0:
                    out.append((self.node_ids[i], self.node_ids[j], float(self.dist[i, j])))
        return out

    def neighbors(self, node_id: str) -> list[str]:
        i = self.index(node_id)
        return [self.node_ids[j] for j in np.nonzero(self.dist[i] > 0)[0]]

    def components(self) -> list[list[str]]:
        """Connected components, each as a list of node ids in input order."""
        n = self.n
        seen = [False] * n
        comps = []
        for start in range(n):
            if seen[start]:
                continue
            stack = [start]
            seen[start] = True
            comp = []
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in np.nonzero(self.dist[i] > 0)[0]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(int(j))
            comps.append([self.node_ids[i] for i in sorted(comp)])
        return comps

    def to_dict(self) -> dict:
        d = {
            "node_ids": list(self.node_ids),
            "dist": self.dist.tolist(),
            "edges": [[a, b, w] for a, b, w in self.edges()],
        }
        if self.points is not None:
            d["points"] = [list(p.coords) for p in self.points]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AccessibilityGraph":
        points = None
        if d.get("points") is not None:
            points = [Point(tuple(c)) for c in d["points"]]
        return cls(node_ids=list(d["node_ids"]), dist=np.asarray(d["dist"]), points=points)


def complete_graph_prune(layout: LayoutMap) -> AccessibilityGraph:
    """Build the accessibility graph by pruning the complete POI graph.

    Every pair of POIs starts connected; an edge is removed as soon as
    its segment intersects any obstacle (touching counts). Runs in
    O(m * n^2) for n POIs and m obstacles. Emits a
    DisconnectedGraphWarning listing components if the result is not
    connected.
    """
    if len(layout.pois) < 2:
        raise DataError(f"need >= 2 POIs to build a graph, got {len(layout.pois)}")
    ids = layout.poi_ids()
    points = [p for _, p in layout.pois]
    n = len(ids)
    dist = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            edge = Segment(points[i], points[j])
            if any(segments_intersect(edge, w) for w in layout.obstacles):
                continue
            d = euclidean(points[i], points[j])
            dist[i, j] = d
            dist[j, i] = d
    graph = AccessibilityGraph(node_ids=ids, dist=dist, points=points)
    comps = graph.components()
    if len(comps) > 1:
        warnings.warn(
            f"accessibility graph is disconnected ({len(comps)} components): {comps}",
            DisconnectedGraphWarning,
            stacklevel=2,
        )
    return graph


def manual_edge(graph: AccessibilityGraph, id_a: str, id_b: str) -> AccessibilityGraph:
    """Return a new graph with an edge forced between two POIs.

    The edge gets the Euclidean-distance weight regardless of obstacles;
    adding an existing edge is a no-op. Used to join subgraphs that the
    prune left disconnected.
    """
    if id_a == id_b:
        raise DataError(f"cannot add self-edge on {id_a!r}")
    if graph.points is None:
        raise DataError("graph has no POI coordinates; cannot compute edge weight")
    i, j = graph.index(id_a), graph.index(id_b)
    d = euclidean(graph.points[i], graph.points[j])
    dist = graph.dist.copy()
    dist[i, j] = d
    dist[j, i] = d
    return AccessibilityGraph(node_ids=list(graph.node_ids), dist=dist, points=list(graph.points))


def build_graph(layout: LayoutMap) -> AccessibilityGraph:
    """complete_graph_prune plus the layout's manual edges."""
    graph = complete_graph_prune(layout)
    for id_a, id_b in layout.manual_edges:
        graph = manual_edge(graph, id_a, id_b)
    return graph


def _parse_poi_entry(entry) -> tuple[str, Point]:
    if isinstance(entry, dict):
        if "id" not in entry:
            raise DataError(f"POI entry missing 'id': {entry!r}")
        pid = str(entry["id"])
        if "coords" in entry:
            return pid, Point(tuple(entry["coords"]))
        axes = [k for k in ("x", "y", "z") if k in entry]
        if len(axes) < 2:
            raise DataError(f"POI entry needs coords or x/y keys: {entry!r}")
        return pid, Point(tuple(entry[k] for k in axes))
    if isinstance(entry, (list, tuple)) and len(entry) >= 3:
        return str(entry[0]), Point(tuple(entry[1:]))
    raise DataError(f"unparseable POI entry: {entry!r}")


def _parse_obstacle_entry(entry) -> Segment:
    if isinstance(entry, dict) and "a" in entry and "b" in entry:
        return Segment(Point(tuple(entry["a"])), Point(tuple(entry["b"])))
    if isinstance(entry, (list, tuple)):
        flat = list(entry)
        if len(flat) == 2 and all(isinstance(e, (list, tuple)) for e in flat):
            return Segment(Point(tuple(flat[0])), Point(tuple(flat[1])))
        if len(flat) % 2 == 0 and len(flat) >= 4:
            half = len(flat) // 2
            return Segment(Point(tuple(flat[:half])), Point(tuple(flat[half:])))
    raise DataError(f"unparseable obstacle entry: {entry!r}")


def load_layout(source: str | Path | TextIO) -> LayoutMap:
    """Load a LayoutMap from a YAML document.

    Expected keys: 'pois' (entries with id + x/y or coords), optional
    'obstacles' (x1 y1 x2 y2 quadruples or endpoint pairs) and optional
    'manual_edges' (id pairs).
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            doc = yaml.safe_load(fh)
    else:
        doc = yaml.safe_load(source)
    if not isinstance(doc, dict) or "pois" not in doc:
        raise DataError("layout document must be a mapping with a 'pois' table")
    pois = [_parse_poi_entry(e) for e in doc["pois"]]
    obstacles = [_parse_obstacle_entry(e) for e in doc.get("obstacles") or []]
    manual = []
    for pair in doc.get("manual_edges") or []:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise DataError(f"manual edge must be an id pair: {pair!r}")
        manual.append((str(pair[0]), str(pair[1])))
    layout = LayoutMap(pois=pois, obstacles=obstacles, manual_edges=manual)
    known = set(layout.poi_ids())
    for id_a, id_b in manual:
        for pid in (id_a, id_b):
            if pid not in known:
                raise DataError(f"manual edge references unknown POI {pid!r}")
    return layout


def save_layout(layout: LayoutMap, path: str | Path) -> None:
    doc = {
        "pois": [{"id": pid, "coords": list(p.coords)} for pid, p in layout.pois],
        "obstacles": [list(s.a.coords) + list(s.b.coords) for s in layout.obstacles],
        "manual_edges": [list(e) for e in layout.manual_edges],
    }
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False)


def save_graph_json(graph: AccessibilityGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(graph.to_dict(), fh, indent=1)


def load_graph_json(path: str | Path) -> AccessibilityGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return AccessibilityGraph.from_dict(json.load(fh))

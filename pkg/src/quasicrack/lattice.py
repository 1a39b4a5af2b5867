"""Bond lattices standing in for the reference configuration.

Nodes carry one scalar displacement each.  Interior bonds join lattice
neighbours; every Dirichlet node also owns one *anchor* bond tying it to
the prescribed boundary value.  A crack is a set of broken bond ids:
interior ids come first (``0 .. n_interior-1``), anchors after.

Geometric weights are trapezoid-consistent: a bond running along a
boundary row carries half a cross-section, and node volumes are dual
cells (halved at each boundary they touch).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

INTERIOR, DIRICHLET, NEUMANN = 0, 1, 2
EDGES = ("left", "right", "bottom", "top")
_EDGE_NORMALS = {
    "left": (-1.0, 0.0),
    "right": (1.0, 0.0),
    "bottom": (0.0, -1.0),
    "top": (0.0, 1.0),
}


class LatticeError(ValueError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Lattice:
    dim: int
    extents: tuple
    cells: tuple
    spacing: tuple
    dirichlet_edges: tuple
    coords: np.ndarray  # (n_nodes, dim)
    labels: np.ndarray  # INTERIOR / DIRICHLET / NEUMANN per node
    node_volume: np.ndarray
    bond_nodes: np.ndarray  # (n_interior, 2)
    bond_length: np.ndarray
    bond_section: np.ndarray
    anchor_node: np.ndarray  # (n_anchor,)
    seg_midpoint: np.ndarray  # per bond id, interior then anchors
    seg_normal: np.ndarray
    seg_area: np.ndarray
    key: str = field(default="")

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    @property
    def n_interior(self) -> int:
        return self.bond_nodes.shape[0]

    @property
    def n_anchor(self) -> int:
        return self.anchor_node.shape[0]

    @property
    def n_bonds(self) -> int:
        return self.n_interior + self.n_anchor

    @property
    def bond_volume(self) -> np.ndarray:
        return self.bond_section * self.bond_length

    @property
    def bond_midpoint(self) -> np.ndarray:
        return self.seg_midpoint[: self.n_interior]

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    def is_anchor(self, bond_id: int) -> bool:
        return bond_id >= self.n_interior

    def anchor_bond_of(self, node: int) -> Optional[int]:
        hit = np.flatnonzero(self.anchor_node == node)
        return int(self.n_interior + hit[0]) if hit.size else None

    def empty_crack(self) -> "CrackSet":
        return CrackSet(frozenset(), self.key)

    def crack(self, ids: Iterable[int] = ()) -> "CrackSet":
        return crack_set(self, ids)

    def intact_interior(self, crack: "CrackSet") -> np.ndarray:
        mask = np.ones(self.n_interior, dtype=bool)
        broken = [b for b in crack.bonds if b < self.n_interior]
        mask[broken] = False
        return mask

    def intact_anchor(self, crack: "CrackSet") -> np.ndarray:
        mask = np.ones(self.n_anchor, dtype=bool)
        broken = [b - self.n_interior for b in crack.bonds if b >= self.n_interior]
        mask[broken] = False
        return mask


def _node_grid(dim, extents, cells):
    if dim == 1:
        x = np.linspace(0.0, extents[0], cells[0] + 1)
        return x.reshape(-1, 1)
    nx, ny = cells
    xs = np.linspace(0.0, extents[0], nx + 1)
    ys = np.linspace(0.0, extents[1], ny + 1)
    X, Y = np.meshgrid(xs, ys)  # row j = y index
    return np.column_stack([X.ravel(), Y.ravel()])


def build_lattice(geometry) -> Lattice:
    """Build a 1D chain or a 2D tensor grid from a geometry section.

    ``geometry`` needs ``dimension``, ``extents``, ``cells`` and
    ``dirichlet_edges``; edges not listed are traction free.
    """
    dim = int(geometry.dimension)
    extents = tuple(float(e) for e in geometry.extents)
    cells = tuple(int(c) for c in geometry.cells)
    edges = tuple(geometry.dirichlet_edges)
    if dim not in (1, 2):
        raise LatticeError(f"dimension must be 1 or 2, got {dim}")
    if len(extents) != dim or len(cells) != dim:
        raise LatticeError("extents and cells must have one entry per dimension")
    if any(c < 1 for c in cells) or any(e <= 0 for e in extents):
        raise LatticeError("cell counts must be >= 1 and extents positive")
    allowed = EDGES[:2] if dim == 1 else EDGES
    bad = [e for e in edges if e not in allowed]
    if bad:
        raise LatticeError(f"unknown boundary edge(s) {bad} for dimension {dim}")
    if not edges:
        raise LatticeError("Dirichlet boundary is empty: boundary program undefined")

    spacing = tuple(e / c for e, c in zip(extents, cells))
    coords = _node_grid(dim, extents, cells)

    if dim == 1:
        n = cells[0]
        h = spacing[0]
        bond_nodes = np.column_stack([np.arange(n), np.arange(1, n + 1)])
        bond_length = np.full(n, h)
        bond_section = np.ones(n)
        node_volume = np.full(n + 1, h)
        node_volume[[0, -1]] = 0.5 * h
        on_edge = {"left": [0], "right": [n]}
        anchor_meas = {0: 1.0, n: 1.0}
        anchor_normal = {0: (-1.0,), n: (1.0,)}
        labels = np.zeros(n + 1, dtype=int)
        labels[[0, n]] = NEUMANN
        anchors = sorted(node for e in edges for node in on_edge[e])
    else:
        nx, ny = cells
        hx, hy = spacing
        idx = lambda i, j: j * (nx + 1) + i  # noqa: E731
        horiz, vert, h_sec, v_sec = [], [], [], []
        for j in range(ny + 1):
            for i in range(nx):
                horiz.append((idx(i, j), idx(i + 1, j)))
                h_sec.append(hy if 0 < j < ny else 0.5 * hy)
        for j in range(ny):
            for i in range(nx + 1):
                vert.append((idx(i, j), idx(i, j + 1)))
                v_sec.append(hx if 0 < i < nx else 0.5 * hx)
        bond_nodes = np.array(horiz + vert, dtype=int)
        bond_length = np.array([hx] * len(horiz) + [hy] * len(vert))
        bond_section = np.array(h_sec + v_sec)
        wx = np.where((np.arange(nx + 1) == 0) | (np.arange(nx + 1) == nx), 0.5, 1.0)
        wy = np.where((np.arange(ny + 1) == 0) | (np.arange(ny + 1) == ny), 0.5, 1.0)
        node_volume = (np.outer(wy, wx) * hx * hy).ravel()
        on_edge = {
            "left": [idx(0, j) for j in range(ny + 1)],
            "right": [idx(nx, j) for j in range(ny + 1)],
            "bottom": [idx(i, 0) for i in range(nx + 1)],
            "top": [idx(i, ny) for i in range(nx + 1)],
        }
        labels = np.zeros((nx + 1) * (ny + 1), dtype=int)
        for e in EDGES:
            labels[on_edge[e]] = NEUMANN
        anchor_meas, normals = {}, {}
        for e in edges:
            along = hy if e in ("left", "right") else hx
            nodes = on_edge[e]
            for k, node in enumerate(nodes):
                w = 0.5 * along if k in (0, len(nodes) - 1) else along
                anchor_meas[node] = anchor_meas.get(node, 0.0) + w
                normals.setdefault(node, []).append(_EDGE_NORMALS[e])
        anchor_normal = {}
        for node, ns in normals.items():
            v = np.sum(ns, axis=0)
            anchor_normal[node] = tuple(v / np.linalg.norm(v))
        anchors = sorted(anchor_meas)

    labels[anchors] = DIRICHLET
    anchor_node = np.array(anchors, dtype=int)

    p0 = coords[bond_nodes[:, 0]]
    p1 = coords[bond_nodes[:, 1]]
    direction = (p1 - p0) / bond_length[:, None]
    seg_midpoint = np.vstack([0.5 * (p0 + p1), coords[anchor_node]])
    seg_normal = np.vstack([direction, np.array([anchor_normal[a] for a in anchors])])
    seg_area = np.concatenate([bond_section, [anchor_meas[a] for a in anchors]])

    digest = hashlib.sha1(
        repr((dim, extents, cells, tuple(sorted(edges)))).encode()
    ).hexdigest()[:16]

    return Lattice(
        dim=dim,
        extents=extents,
        cells=cells,
        spacing=spacing,
        dirichlet_edges=edges,
        coords=_frozen(coords),
        labels=_frozen(labels),
        node_volume=_frozen(node_volume),
        bond_nodes=_frozen(bond_nodes),
        bond_length=_frozen(bond_length),
        bond_section=_frozen(bond_section),
        anchor_node=_frozen(anchor_node),
        seg_midpoint=_frozen(seg_midpoint),
        seg_normal=_frozen(seg_normal),
        seg_area=_frozen(seg_area),
        key=digest,
    )


# ---------------------------------------------------------------------------
# Cracks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrackSet:
    """Immutable set of broken bond ids on one lattice."""

    bonds: frozenset
    lattice_key: str

    def __len__(self) -> int:
        return len(self.bonds)

    def __iter__(self):
        return iter(sorted(self.bonds))

    def __contains__(self, bond_id) -> bool:
        return bond_id in self.bonds

    @property
    def ids(self) -> tuple:
        return tuple(sorted(self.bonds))

    def with_bonds(self, ids: Iterable[int]) -> "CrackSet":
        return CrackSet(self.bonds | frozenset(int(b) for b in ids), self.lattice_key)

    def union(self, other: "CrackSet") -> "CrackSet":
        _same_lattice(self, other)
        return CrackSet(self.bonds | other.bonds, self.lattice_key)

    def difference(self, other: "CrackSet") -> "CrackSet":
        _same_lattice(self, other)
        return CrackSet(self.bonds - other.bonds, self.lattice_key)


def crack_set(lattice: Lattice, ids: Iterable[int] = ()) -> CrackSet:
    ids = frozenset(int(b) for b in ids)
    bad = sorted(b for b in ids if not 0 <= b < lattice.n_bonds)
    if bad:
        raise LatticeError(f"unknown bond id(s) {bad} (lattice has {lattice.n_bonds} bonds)")
    return CrackSet(ids, lattice.key)


def _same_lattice(a: CrackSet, b: CrackSet) -> None:
    if a.lattice_key != b.lattice_key:
        raise LatticeError("crack sets belong to different lattices")


class Segment(NamedTuple):
    bond_id: int
    midpoint: tuple
    normal: tuple
    area: float


def crack_segments(crack: CrackSet, lattice: Lattice) -> list[Segment]:
    """One segment per broken bond; the normal is the bond direction."""
    if crack.lattice_key != lattice.key:
        raise LatticeError("crack set does not belong to this lattice")
    out = []
    for b in crack.ids:
        if not 0 <= b < lattice.n_bonds:
            raise LatticeError(f"unknown bond id {b}")
        out.append(
            Segment(
                b,
                tuple(float(v) for v in lattice.seg_midpoint[b]),
                tuple(float(v) for v in lattice.seg_normal[b]),
                float(lattice.seg_area[b]),
            )
        )
    return out


def crack_contains(inner: CrackSet, outer: CrackSet) -> bool:
    """True iff ``inner`` is a subset of ``outer``."""
    _same_lattice(inner, outer)
    return inner.bonds <= outer.bonds


# ---------------------------------------------------------------------------
# Displacements and admissibility
# ---------------------------------------------------------------------------


def apply_boundary(u, t: float, crack: CrackSet, program, lattice: Lattice) -> np.ndarray:
    """Copy of ``u`` with every node of an intact anchor set to ``w(t, x)``."""
    out = np.array(u, dtype=float, copy=True)
    nodes = lattice.anchor_node[lattice.intact_anchor(crack)]
    out[nodes] = program.value(t, lattice.coords[nodes])
    return out


@dataclass(frozen=True)
class AdmissiblePair:
    u: np.ndarray
    crack: CrackSet
    t: float

    def violation(self, lattice: Lattice, program) -> Optional[str]:
        """Name of the violated constraint, or ``None`` when admissible."""
        u = np.asarray(self.u, dtype=float)
        if u.shape != (lattice.n_nodes,):
            return f"displacement has shape {u.shape}, expected ({lattice.n_nodes},)"
        if not np.all(np.isfinite(u)):
            return "displacement is not finite at every node"
        if self.crack.lattice_key != lattice.key:
            return "crack set belongs to another lattice"
        nodes = lattice.anchor_node[lattice.intact_anchor(self.crack)]
        w = program.value(self.t, lattice.coords[nodes])
        off = np.flatnonzero(u[nodes] != w)
        if off.size:
            node = int(nodes[off[0]])
            return f"u != w(t) at Dirichlet node {node} with intact anchor"
        return None


# ---------------------------------------------------------------------------
# Crack snapshot format
# ---------------------------------------------------------------------------


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def format_crack_snapshot(crack: CrackSet, lattice: Lattice) -> str:
    """``bond_id x_mid [y_mid] nu_x [nu_y] area`` per broken bond."""
    lines = []
    for seg in crack_segments(crack, lattice):
        cols = [str(seg.bond_id)]
        cols += [_g17(v) for v in seg.midpoint]
        cols += [_g17(v) for v in seg.normal]
        cols.append(_g17(seg.area))
        lines.append(" ".join(cols))
    return "".join(line + "\n" for line in lines)


def parse_crack_snapshot(text: str, lattice: Lattice, source: str = "<snapshot>") -> CrackSet:
    ncols = 2 + 2 * lattice.dim
    ids = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != ncols:
            raise LatticeError(f"{source}:{lineno}: expected {ncols} columns, got {len(parts)}")
        try:
            ids.append(int(parts[0]))
            [float(p) for p in parts[1:]]
        except ValueError as exc:
            raise LatticeError(f"{source}:{lineno}: {exc}") from None
    try:
        return crack_set(lattice, ids)
    except LatticeError as exc:
        raise LatticeError(f"{source}: {exc}") from None


def cut_section_sums(lattice: Lattice) -> list[tuple[str, float, float]]:
    """Bond cross-sections summed across each lattice-aligned cut.

    Returns ``(cut label, sum, continuum measure)`` triples.
    """
    out = []
    if lattice.dim == 1:
        for b in range(lattice.n_interior):
            out.append((f"x-cut {b}", float(lattice.bond_section[b]), 1.0))
        return out
    nx, ny = lattice.cells
    n_h = nx * (ny + 1)
    sec = lattice.bond_section
    for i in range(nx):
        ids = [j * nx + i for j in range(ny + 1)]
        out.append((f"x-cut {i}", float(np.sum(sec[ids])), lattice.extents[1]))
    for j in range(ny):
        ids = [n_h + j * (nx + 1) + i for i in range(nx + 1)]
        out.append((f"y-cut {j}", float(np.sum(sec[ids])), lattice.extents[0]))
    return out


def bond_strains(lattice: Lattice, u) -> np.ndarray:
    """Axial difference quotient ``(u_b - u_a) / h`` on every interior bond."""
    u = np.asarray(u, dtype=float)
    a, b = lattice.bond_nodes[:, 0], lattice.bond_nodes[:, 1]
    return (u[b] - u[a]) / lattice.bond_length


def ids_in_box(lattice: Lattice, box: Sequence[float]) -> list[int]:
    """Bond ids whose segment midpoint lies in ``[x0, x1] (x [y0, y1])``."""
    box = np.asarray(box, dtype=float).reshape(-1, 2)
    mid = lattice.seg_midpoint
    inside = np.ones(lattice.n_bonds, dtype=bool)
    for axis in range(lattice.dim):
        lo, hi = box[axis]
        inside &= (mid[:, axis] >= lo) & (mid[:, axis] <= hi)
    return [int(b) for b in np.flatnonzero(inside)]

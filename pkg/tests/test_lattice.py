"""Lattice construction, crack sets, admissibility and snapshots."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.csgraph import connected_components
import scipy.sparse as sp

from quasicrack.config import GeometrySection
from quasicrack.laws import BoundaryProgram
from quasicrack.lattice import (
    DIRICHLET,
    NEUMANN,
    AdmissiblePair,
    LatticeError,
    apply_boundary,
    build_lattice,
    crack_contains,
    crack_segments,
    crack_set,
    cut_section_sums,
    format_crack_snapshot,
    parse_crack_snapshot,
)


def lat1(n=4):
    return build_lattice(GeometrySection(1, [1.0], [n], ["left", "right"]))


def lat2(nx=3, ny=3, edges=("left", "right"), extents=(1.0, 1.0)):
    return build_lattice(GeometrySection(2, list(extents), [nx, ny], list(edges)))


def test_1d_counts():
    lat = lat1()
    assert lat.n_nodes == 5 and lat.n_interior == 4 and lat.n_anchor == 2
    np.testing.assert_array_equal(lat.bond_section, 1.0)


def test_2d_counts():
    lat = lat2()
    assert lat.n_nodes == 16 and lat.n_interior == 24 and lat.n_anchor == 8


def test_all_neumann_is_refused():
    with pytest.raises(LatticeError, match="empty"):
        lat2(edges=())


@pytest.mark.parametrize("bad", [GeometrySection(3, [1, 1, 1], [1, 1, 1], ["left"]),
                                 GeometrySection(1, [1.0], [0], ["left"]),
                                 GeometrySection(1, [1.0], [2], ["top"])])
def test_bad_geometry(bad):
    with pytest.raises(LatticeError):
        build_lattice(bad)


@pytest.mark.parametrize("lat", [lat1(), lat1(7), lat2(), lat2(4, 2, ("left", "bottom"), (2.0, 0.5))])
def test_lattice_invariants(lat):
    n = lat.n_nodes
    a, b = lat.bond_nodes.T
    ncomp, _ = connected_components(sp.coo_matrix((np.ones(a.size), (a, b)), shape=(n, n)), directed=False)
    assert ncomp == 1
    # one anchor per Dirichlet node, none elsewhere
    assert sorted(lat.anchor_node) == sorted(np.flatnonzero(lat.labels == DIRICHLET))
    assert len(set(lat.anchor_node)) == lat.n_anchor
    for label, sums, measure in cut_section_sums(lat):
        assert abs(sums - measure) <= 1e-12, label
    assert abs(np.sum(lat.node_volume) - lat.volume) <= 1e-12
    assert abs(np.sum(lat.bond_volume) - lat.dim * lat.volume) <= 1e-12
    np.testing.assert_allclose(np.linalg.norm(lat.seg_normal, axis=1), 1.0)


def test_neumann_nodes_carry_no_anchor():
    lat = lat2(3, 3, ("left",))
    neumann = np.flatnonzero(lat.labels == NEUMANN)
    assert neumann.size and not set(neumann) & set(lat.anchor_node)


def test_corner_anchor_area_and_normal():
    lat = lat2(2, 2, ("left", "bottom"))
    corner = lat.anchor_bond_of(0)
    assert lat.seg_area[corner] == pytest.approx(0.5)  # half of each edge measure h = 0.5
    np.testing.assert_allclose(lat.seg_normal[corner], [-np.sqrt(0.5), -np.sqrt(0.5)])
    edge = lat.anchor_bond_of(3)  # (0, 0.5) on the left edge
    assert lat.seg_area[edge] == pytest.approx(0.5)


def test_segments_examples():
    lat = lat1()
    assert crack_segments(lat.empty_crack(), lat) == []
    (seg,) = crack_segments(lat.crack([1]), lat)
    assert seg.midpoint == pytest.approx((0.375,)) and seg.area == 1.0
    lat = lat2(4, 4)
    n_h = 4 * 5
    ids = [n_h + j * 5 + 2 for j in range(3)]  # vertical bonds on x = 0.5
    segs = crack_segments(lat.crack(ids), lat)
    assert len(segs) == 3
    assert sum(s.area for s in segs) == pytest.approx(0.75)
    for s in segs:
        np.testing.assert_array_equal(s.normal, [0.0, 1.0])


def test_unknown_bond_id_is_refused():
    with pytest.raises(LatticeError):
        crack_set(lat1(), [6])


def test_contains_examples():
    lat = lat2()
    g = lat.crack([3, 7])
    assert crack_contains(lat.empty_crack(), g)
    assert crack_contains(lat.crack([3]), g)
    assert not crack_contains(lat.crack([3, 1]), g)
    assert crack_contains(g, g)
    with pytest.raises(LatticeError):
        crack_contains(g, lat1().crack([1]))


bond_sets = st.sets(st.integers(0, 31), max_size=10)


@given(bond_sets, bond_sets, bond_sets)
def test_contains_is_a_partial_order(a, b, c):
    lat = lat2()
    A, B, C = lat.crack(a), lat.crack(b), lat.crack(c)
    assert crack_contains(A, A)
    if crack_contains(A, B) and crack_contains(B, A):
        assert A.bonds == B.bonds
    if crack_contains(A, B) and crack_contains(B, C):
        assert crack_contains(A, C)


@given(bond_sets, bond_sets)
def test_segment_area_additive(a, b):
    lat = lat2()
    a = a - b
    area = lambda ids: sum(s.area for s in crack_segments(lat.crack(ids), lat))  # noqa: E731
    assert area(a | b) == pytest.approx(area(a) + area(b), abs=1e-12)


def test_breaking_anchor_removes_one_constraint_only():
    lat = lat2()
    anchor = lat.n_interior + 2
    crack = lat.crack([anchor])
    assert lat.intact_anchor(crack).sum() == lat.n_anchor - 1
    assert lat.intact_interior(crack).all()


def test_apply_boundary_examples():
    lat = lat1()
    prog = BoundaryProgram()
    u = apply_boundary(np.full(5, 7.0), 0.5, lat.empty_crack(), prog, lat)
    assert u[0] == 0.0 and u[4] == 0.5 and u[2] == 7.0
    right_anchor = lat.anchor_bond_of(4)
    u = apply_boundary(np.full(5, 7.0), 0.5, lat.crack([right_anchor]), prog, lat)
    assert u[0] == 0.0 and u[4] == 7.0
    # antiplane shear: w = +-t/2 on the left/right edges
    lat = lat2()
    shear = BoundaryProgram(-0.5, (1.0, 0.0))
    u = apply_boundary(np.full(lat.n_nodes, 9.0), 1.0, lat.empty_crack(), shear, lat)
    left = np.isclose(lat.coords[:, 0], 0.0)
    right = np.isclose(lat.coords[:, 0], 1.0)
    np.testing.assert_array_equal(u[left], -0.5)
    np.testing.assert_array_equal(u[right], 0.5)
    assert np.all(u[~(left | right)] == 9.0)


def test_admissibility_messages():
    lat = lat1()
    prog = BoundaryProgram()
    good = apply_boundary(np.zeros(5), 1.0, lat.empty_crack(), prog, lat)
    assert AdmissiblePair(good, lat.empty_crack(), 1.0).violation(lat, prog) is None
    assert "Dirichlet node 4" in AdmissiblePair(good, lat.empty_crack(), 2.0).violation(lat, prog)
    bad = good.copy()
    bad[2] = np.nan
    assert "finite" in AdmissiblePair(bad, lat.empty_crack(), 1.0).violation(lat, prog)


@settings(max_examples=30)
@given(bond_sets)
def test_snapshot_round_trip(ids):
    lat = lat2()
    crack = lat.crack(ids)
    text = format_crack_snapshot(crack, lat)
    assert parse_crack_snapshot(text, lat).bonds == crack.bonds
    for line in text.splitlines():
        assert len(line.split()) == 6


def test_snapshot_1d_columns_and_errors():
    lat = lat1()
    text = format_crack_snapshot(lat.crack([1, 5]), lat)
    assert text.splitlines()[0] == "1 0.375 1 1"
    with pytest.raises(LatticeError, match="snap.txt:2"):
        parse_crack_snapshot("1 0.375 1 1\n2 0.5 1\n", lat, "snap.txt")
    with pytest.raises(LatticeError, match="snap.txt:1"):
        parse_crack_snapshot("x 0.375 1 1\n", lat, "snap.txt")

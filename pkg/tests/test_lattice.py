"""Geometry, exact operator algebra, audit, and ground-state counting."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from qdw.groups import InvariantError, build_group, enumerate_subgroups
from qdw.classify import qudit_dimension
from qdw.groups import double_cosets
from qdw.lattice import (
    BoundaryRegion,
    GroundSpace,
    HamiltonianTerm,
    Lattice,
    Operator,
    audit_commutation,
    boundary_edge_term,
    build_terms,
    carve_hole,
    elimination_order,
    flux_sector_term,
    flux_term,
    gauge_vertex_term,
    ground_space,
    ground_space_dimension,
    half_translation_term,
    literal_gauge_edge_term,
    patch,
    ring,
    torus,
)

S3 = build_group("symmetric:3")
Z2 = build_group("cyclic:2")
Z3 = build_group("cyclic:3")


def two_hole_lattice():
    lat = patch(3, 5)
    lat = carve_hole(lat, ["p(1,1)"], "hole0")
    return carve_hole(lat, ["p(1,3)"], "hole1")


def dangling_lattice():
    """Square face with a spur edge kept despite having no faces."""
    return Lattice(
        5,
        edges=[(0, 1), (1, 2), (2, 3), (3, 0), (0, 4)],
        plaquettes=[((0, True), (1, True), (2, True), (3, True))],
        regions=[BoundaryRegion("bdry", rim_vertices=(0, 1, 2, 3, 4),
                                rim_edges=(0, 1, 2, 3), dangling_edges=(4,))],
        vertex_names=["a", "b", "c", "d", "m"],
        edge_names=["ab", "bc", "cd", "da", "am"],
        plaquette_names=["sq"],
    )


# geometry ------------------------------------------------------------------

class TestGeometry:
    def test_torus_cell_counts(self):
        lat = torus(3, 4)
        assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == (12, 24, 12)
        assert lat.euler_characteristic == 0
        assert lat.regions == []
        # every edge borders exactly two faces
        assert all(len(f) == 2 for f in lat.edge_faces)

    def test_torus_minimum_size(self):
        with pytest.raises(ValueError):
            torus(1, 5)

    def test_patch_cell_counts(self):
        lat = patch(2, 3)
        assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == (12, 17, 6)
        assert lat.euler_characteristic == 1
        outer = lat.region_by_name("outer")
        assert len(outer.rim_vertices) == 10
        assert len(outer.rim_edges) == 10
        assert outer.dangling_edges == ()

    def test_ring_cell_counts(self):
        lat = ring(4)
        assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == (8, 12, 4)
        assert lat.euler_characteristic == 0
        assert {r.name for r in lat.regions} == {"inner", "outer"}
        inner = lat.region_by_name("inner")
        assert len(inner.rim_vertices) == 4 and len(inner.rim_edges) == 4

    def test_face_walks_are_closed(self):
        for lat in (torus(2, 3), patch(3, 2), ring(5)):
            for pi, cyc in enumerate(lat.plaquettes):
                corners = lat.plaquette_base_vertices(pi)
                for i, (e, along) in enumerate(cyc):
                    end = lat.edges[e][1] if along else lat.edges[e][0]
                    assert end == corners[(i + 1) % len(cyc)]

    def test_open_face_walk_rejected(self):
        with pytest.raises(ValueError, match="not closed"):
            Lattice(3, [(0, 1), (1, 2)], [((0, True), (1, False))])

    def test_self_loop_rejected(self):
        with pytest.raises(ValueError, match="self-loop"):
            Lattice(2, [(0, 0)], [])

    def test_region_overlap_rejected(self):
        regions = [BoundaryRegion("a", (0,), ()), BoundaryRegion("b", (0,), ())]
        with pytest.raises(ValueError, match="shares cells"):
            Lattice(2, [(0, 1)], [], regions=regions)

    def test_dangling_edge_with_face_rejected(self):
        reg = BoundaryRegion("r", (0, 1, 2, 3), (), dangling_edges=(0,))
        sq = [((0, True), (1, True), (2, True), (3, True))]
        with pytest.raises(ValueError, match="dangling"):
            Lattice(4, [(0, 1), (1, 2), (2, 3), (3, 0)], sq, regions=[reg])

    def test_two_hole_lattice_census(self):
        lat = two_hole_lattice()
        assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == (24, 38, 13)
        assert lat.euler_characteristic == -1
        for name in ("hole0", "hole1"):
            reg = lat.region_by_name(name)
            assert len(reg.rim_vertices) == 4
            assert len(reg.rim_edges) == 4
            assert reg.dangling_edges == ()

    def test_carved_two_face_hole(self):
        lat = carve_hole(patch(4, 4), ["p(1,1)", "p(1,2)"], "hole0")
        assert lat.euler_characteristic == 0
        reg = lat.region_by_name("hole0")
        # the shared interior edge is gone; the rim is a hexagon
        assert len(reg.rim_vertices) == 6
        assert len(reg.rim_edges) == 6
        assert (lat.n_vertices, lat.n_edges, lat.n_plaquettes) == (25, 39, 14)

    def test_carve_rejects_torus(self):
        with pytest.raises(ValueError, match="patch"):
            carve_hole(torus(3, 3), [0], "x")

    def test_carve_rejects_boundary_contact(self):
        with pytest.raises(ValueError):
            carve_hole(patch(3, 5), ["p(0,0)"], "x")
        base = carve_hole(patch(4, 5), ["p(1,1)"], "a")
        with pytest.raises(ValueError, match="touches"):
            carve_hole(base, ["p(1,2)"], "b")       # shares an edge with hole a
        with pytest.raises(ValueError, match="touches"):
            carve_hole(base, ["p(2,2)"], "b")       # shares only a corner vertex

    def test_carve_rejects_non_disk(self):
        with pytest.raises(ValueError, match="disk"):
            carve_hole(patch(4, 6), ["p(1,1)", "p(1,3)"], "x")

    def test_carve_rejects_duplicate_region_name(self):
        with pytest.raises(ValueError, match="already in use"):
            carve_hole(patch(3, 5), ["p(1,1)"], "outer")

    def test_carve_rejects_empty_hole(self):
        with pytest.raises(ValueError):
            carve_hole(patch(3, 5), [], "x")


# operator algebra ----------------------------------------------------------

class TestOperatorAlgebra:
    def test_shift_operators_compose_like_the_group(self):
        n = S3.order
        for g in range(n):
            for h in range(n):
                a = Operator.monomial(n, Fraction(1), {0: tuple(
                    int(S3.table[g, x]) for x in range(n))})
                b = Operator.monomial(n, Fraction(1), {0: tuple(
                    int(S3.table[h, x]) for x in range(n))})
                gh = S3.mul(g, h)
                c = Operator.monomial(n, Fraction(1), {0: tuple(
                    int(S3.table[gh, x]) for x in range(n))})
                assert (a * b).equals(c)

    def test_adjoint_inverts_shifts(self):
        n = S3.order
        for g in range(n):
            a = Operator.monomial(n, Fraction(1), {0: tuple(
                int(S3.table[g, x]) for x in range(n))})
            ai = Operator.monomial(n, Fraction(1), {0: tuple(
                int(S3.table[S3.inv[g], x]) for x in range(n))})
            assert a.adjoint().equals(ai)
            assert (a.adjoint() * a).equals(Operator.identity(n))

    def test_sum_of_point_maps_is_identity(self):
        # the zero test must see through non-unique monomial presentations
        n = Z3.order
        acc = Operator(n)
        for x in range(n):
            m = tuple(x if y == x else -1 for y in range(n))
            acc = acc + Operator.monomial(n, Fraction(1), {0: m})
        assert acc.equals(Operator.identity(n))
        assert not acc.terms == {}  # syntactically distinct, semantically equal

    def test_vertex_average_is_a_projector(self):
        lat = torus(2, 2)
        op = gauge_vertex_term(lat, S3, 0)
        assert op.is_hermitian()
        assert op.is_projector()
        assert not op.is_diagonal()
        assert len(op.support) == 4

    def test_restricted_vertex_average_is_a_projector(self):
        lat = ring(3)
        for sub in enumerate_subgroups(S3):
            op = gauge_vertex_term(lat, S3, 0, sub)
            assert op.is_projector()

    def test_face_projector_properties(self):
        lat = torus(2, 2)
        op = flux_term(lat, S3, 0)
        assert op.is_diagonal()
        assert op.is_projector()
        assert len(op.terms) == S3.order ** 3

    def test_edge_pin_projector(self):
        op = boundary_edge_term(ring(3), S3, 0, S3.subgroup([0, 1]))
        assert op.is_diagonal() and op.is_projector()
        vals = op.diagonal_values((0,))
        assert vals == {(0,): Fraction(1), (1,): Fraction(1)}

    def test_trivial_flux_is_base_independent(self):
        lat = torus(2, 2)
        corners = lat.plaquette_base_vertices(0)
        ops = [flux_sector_term(lat, S3, 0, 0, base_vertex=v) for v in corners]
        for other in ops[1:]:
            assert ops[0].equals(other)

    def test_nontrivial_flux_depends_on_base(self):
        lat = torus(2, 2)
        corners = lat.plaquette_base_vertices(0)
        h = S3.index_of("(12)")
        a = flux_sector_term(lat, S3, 0, h, base_vertex=corners[0])
        b = flux_sector_term(lat, S3, 0, h, base_vertex=corners[2])
        assert not a.equals(b)

    def test_class_summed_flux_is_base_independent(self):
        lat = torus(2, 2)
        corners = lat.plaquette_base_vertices(0)
        cls = S3.conjugacy_classes()[1].members  # the transpositions
        sums = []
        for v in corners:
            acc = Operator(S3.order)
            for h in cls:
                acc = acc + flux_sector_term(lat, S3, 0, h, base_vertex=v)
            sums.append(acc)
        for other in sums[1:]:
            assert sums[0].equals(other)

    def test_flux_sectors_partition_unity(self):
        lat = torus(2, 2)
        acc = Operator(S3.order)
        for h in range(S3.order):
            acc = acc + flux_sector_term(lat, S3, 0, h)
        assert acc.equals(Operator.identity(S3.order))

    def test_flux_base_must_be_a_corner(self):
        lat = torus(2, 3)
        with pytest.raises(ValueError, match="corner"):
            flux_sector_term(lat, S3, 0, 0, base_vertex=lat.n_vertices - 1)

    def test_vertex_and_face_terms_commute_exactly(self):
        lat = torus(2, 2)
        a = gauge_vertex_term(lat, S3, 0)
        b = flux_term(lat, S3, 0)
        assert set(a.support) & set(b.support)
        assert a.commutator(b).is_zero()

    def test_half_shift_commutation_depends_on_vertex_restriction(self):
        # head-side average vs left half-shift on the same edge: the full
        # group average fails for a nonabelian group, the subgroup average
        # of the same subgroup succeeds.
        lat = dangling_lattice()
        k = S3.subgroup([0, 1])
        e_spur = lat.edge_index("am")
        p_right = half_translation_term(S3, e_spur, k, "right")  # tail side
        full_a = gauge_vertex_term(lat, S3, 0)                   # vertex a = tail
        sub_a = gauge_vertex_term(lat, S3, 0, k)
        assert not full_a.commutator(p_right).is_zero()
        assert sub_a.commutator(p_right).is_zero()
        # opposite sides always commute
        p_left = half_translation_term(S3, e_spur, k, "left")    # head side
        assert full_a.commutator(p_left).is_zero()
        assert p_left.commutator(p_right).is_zero()

    def test_literal_edge_average_is_not_idempotent(self):
        k = S3.subgroup([0, 1])
        lit = literal_gauge_edge_term(S3, 0, k)
        assert lit.is_hermitian()
        assert not lit.is_projector()

    def test_matrix_of_shift_is_a_permutation(self):
        n = Z3.order
        g = 1
        op = Operator.monomial(n, Fraction(1), {0: tuple(
            int(Z3.table[g, x]) for x in range(n))})
        mat = op.to_matrix((0,))
        expect = np.zeros((3, 3))
        for x in range(3):
            expect[(x + 1) % 3, x] = 1.0
        assert np.array_equal(mat, expect)

    def test_matrix_respects_identity_padding(self):
        n = Z2.order
        op = boundary_edge_term(ring(3), Z2, 1, Z2.trivial_subgroup())
        mat = op.to_matrix((0, 1))
        # acts on the second register only; first register untouched
        expect = np.kron(np.eye(2), np.diag([1.0, 0.0]))
        assert np.array_equal(mat, expect)

    def test_matrix_budget_guard(self):
        op = Operator.identity(S3.order)
        with pytest.raises(ValueError, match="budget"):
            op.to_matrix(tuple(range(8)))


# term assembly and audit ---------------------------------------------------

class TestTermsAndAudit:
    def test_torus_term_census(self):
        terms = build_terms(torus(2, 2), S3, {})
        names = [t.name for t in terms]
        assert sum(t.kind == "gauge" for t in terms) == 4
        assert sum(t.kind == "flux" for t in terms) == 4
        assert "A((0,0))" in names and "B(p(1,1))" in names

    def test_ring_term_census(self):
        k2, k3 = S3.subgroup([0, 1]), S3.subgroup([0, 3, 4])
        terms = build_terms(ring(3), S3, {"inner": k2, "outer": k3})
        by_kind = {}
        for t in terms:
            by_kind.setdefault(t.kind, []).append(t)
        assert len(by_kind["gauge"]) == 6
        assert len(by_kind["flux"]) == 3
        assert len(by_kind["edge-pin"]) == 6
        assert all(t.name.startswith("A_K") for t in by_kind["gauge"])
        assert {t.region for t in by_kind["edge-pin"]} == {"inner", "outer"}

    def test_dangling_term_census(self):
        lat = dangling_lattice()
        k = S3.subgroup([0, 1])
        terms = build_terms(lat, S3, {"bdry": k})
        kinds = sorted(t.name for t in terms if t.kind == "half-shift")
        assert kinds == ["P+(am)", "P-(am)"]
        assert sum(t.kind == "edge-pin" for t in terms) == 4

    def test_terms_require_every_region(self):
        with pytest.raises(ValueError, match="boundary subgroups"):
            build_terms(ring(3), S3, {"inner": S3.full_subgroup()})
        with pytest.raises(ValueError, match="boundary subgroups"):
            build_terms(torus(2, 2), S3, {"ghost": S3.full_subgroup()})

    def test_terms_reject_foreign_subgroup(self):
        with pytest.raises(ValueError, match="wrong group"):
            build_terms(ring(3), S3, {"inner": Z2.full_subgroup(),
                                      "outer": S3.full_subgroup()})

    def test_torus_audit_is_exact(self):
        terms = build_terms(torus(2, 2), S3, {})
        rep = audit_commutation(terms, S3.order)
        assert rep.ok
        assert all(t.is_projector and t.is_hermitian for t in rep.term_checks)
        assert all(p.residual_norm is None for p in rep.pair_checks)
        assert rep.skipped_pairs > 0  # diagonal pairs are skipped

    def test_mixed_boundary_audit_is_exact(self):
        k2, k3 = S3.subgroup([0, 1]), S3.subgroup([0, 3, 4])
        rep = audit_commutation(
            build_terms(ring(3), S3, {"inner": k2, "outer": k3}), S3.order)
        assert rep.ok
        assert rep.failures() == []

    def test_dangling_audit_is_exact(self):
        lat = dangling_lattice()
        for sub in (S3.subgroup([0, 1]), S3.subgroup([0, 3, 4]),
                    S3.full_subgroup()):
            rep = audit_commutation(build_terms(lat, S3, {"bdry": sub}), S3.order)
            assert rep.ok

    def test_literal_term_fails_the_audit(self):
        k2, k3 = S3.subgroup([0, 1]), S3.subgroup([0, 3, 4])
        terms = build_terms(ring(3), S3, {"inner": k2, "outer": k3})
        lit = HamiltonianTerm(name="L_K(in0)", kind="literal",
                              op=literal_gauge_edge_term(S3, 0, k2),
                              edges=(0,), diagonal=False, region="inner")
        rep = audit_commutation(list(terms) + [lit], S3.order)
        assert not rep.ok
        bad_terms = [t.name for t in rep.term_checks if not t.is_projector]
        assert bad_terms == ["L_K(in0)"]
        bad_pairs = [(p.left, p.right) for p in rep.pair_checks if not p.commutes]
        assert ("B(f0)", "L_K(in0)") in bad_pairs
        norms = [p.residual_norm for p in rep.pair_checks if not p.commutes]
        assert all(x is not None and x > 0.1 for x in norms)


# elimination order ---------------------------------------------------------

class TestEliminationOrder:
    @pytest.mark.parametrize("lat", [torus(2, 2), torus(3, 2), patch(2, 3),
                                     ring(4), two_hole_lattice()])
    def test_each_edge_assigned_once(self, lat):
        steps = elimination_order(lat)
        assert sorted(s.edge for s in steps) == list(range(lat.n_edges))

    @pytest.mark.parametrize("lat", [torus(2, 2), patch(2, 3), ring(4),
                                     two_hole_lattice()])
    def test_faces_solve_or_check(self, lat):
        steps = elimination_order(lat)
        solvers = [s.plaquette for s in steps if s.action == "solve"]
        checkers = [p for s in steps for p in s.checkers]
        assert sorted(solvers + checkers) == list(range(lat.n_plaquettes))

    def test_torus_has_one_redundant_face(self):
        # on a closed surface the face constraints have one relation
        steps = elimination_order(torus(2, 2))
        assert sum(len(s.checkers) for s in steps) == 1

    def test_disk_faces_all_solve(self):
        steps = elimination_order(patch(2, 3))
        assert sum(len(s.checkers) for s in steps) == 0


# ground-state counting -----------------------------------------------------

TORUS_COUNTS = {"cyclic:2": 4, "cyclic:3": 9, "symmetric:3": 8}


class TestGroundStateCounts:
    @pytest.mark.parametrize("spec,want", sorted(TORUS_COUNTS.items()))
    def test_torus_counts(self, spec, want):
        g = build_group(spec)
        rep = ground_space_dimension(torus(2, 2), g, {})
        assert rep.value == want
        assert len(rep.by_method) >= 2
        assert set(rep.by_method.values()) == {want}

    def test_torus_count_matches_sector_census(self):
        from qdw.classify import anyon_table
        for spec in TORUS_COUNTS:
            g = build_group(spec)
            rep = ground_space_dimension(torus(2, 2), g, {})
            assert rep.value == len(anyon_table(g).anyons)

    def test_torus_count_is_refinement_invariant(self):
        rep = ground_space_dimension(torus(3, 2), S3, {})
        assert rep.value == 8
        assert len(rep.by_method) >= 2

    @pytest.mark.parametrize("sub_elems", [(0,), (0, 1), (0, 2), (0, 5),
                                           (0, 3, 4), (0, 1, 2, 3, 4, 5)])
    def test_disk_is_nondegenerate_for_every_boundary(self, sub_elems):
        sub = S3.subgroup(sub_elems)
        rep = ground_space_dimension(patch(2, 2), S3, {"outer": sub})
        assert rep.value == 1

    @pytest.mark.parametrize("spec", ["cyclic:2", "cyclic:3"])
    def test_annulus_matches_strip_count_cyclic(self, spec):
        g = build_group(spec)
        lat = ring(3)
        for k1 in enumerate_subgroups(g):
            for k2 in enumerate_subgroups(g):
                rep = ground_space_dimension(lat, g, {"inner": k1, "outer": k2})
                assert rep.value == qudit_dimension(g, k1, k2)
                assert len(rep.by_method) == 3

    def test_annulus_matches_strip_count_s3(self):
        lat = ring(3)
        subs = enumerate_subgroups(S3)
        for k1 in subs:
            for k2 in subs:
                rep = ground_space_dimension(lat, S3, {"inner": k1, "outer": k2})
                assert rep.value == qudit_dimension(S3, k1, k2)
                assert len(rep.by_method) >= 2

    def test_two_hole_count(self):
        lat = two_hole_lattice()
        assign = {"outer": Z2.full_subgroup(), "hole0": Z2.trivial_subgroup(),
                  "hole1": Z2.trivial_subgroup()}
        rep = ground_space_dimension(lat, Z2, assign)
        assert rep.value == 2
        assert set(rep.by_method) == {"counting", "trace"}

    def test_two_hole_count_over_budget_reports_cleanly(self):
        lat = two_hole_lattice()
        assign = {"outer": Z3.full_subgroup(), "hole0": Z3.trivial_subgroup(),
                  "hole1": Z3.trivial_subgroup()}
        with pytest.raises(ValueError, match="budget"):
            ground_space_dimension(lat, Z3, assign)

    def test_dangling_edge_counts_double_cosets(self):
        lat = dangling_lattice()
        for sub in (S3.subgroup([0, 1]), S3.subgroup([0, 3, 4]),
                    S3.full_subgroup()):
            rep = ground_space_dimension(lat, S3, {"bdry": sub})
            assert rep.value == len(double_cosets(sub, sub))
            assert len(rep.by_method) == 3

    def test_method_selection(self):
        rep = ground_space_dimension(torus(2, 2), Z2, {}, methods=("dense",))
        assert rep.by_method == {"dense": 4}
        with pytest.raises(ValueError, match="unknown method"):
            ground_space_dimension(torus(2, 2), Z2, {}, methods=("magic",))


# explicit ground bases -----------------------------------------------------

class TestGroundSpace:
    def test_annulus_basis_sizes(self):
        gs = ground_space(ring(3), Z2, {"inner": Z2.trivial_subgroup(),
                                        "outer": Z2.full_subgroup()})
        assert gs.dimension == 1
        gs2 = ground_space(ring(3), Z2, {"inner": Z2.trivial_subgroup(),
                                         "outer": Z2.trivial_subgroup()})
        assert gs2.dimension == 2

    def test_torus_basis_is_orthonormal(self):
        gs = ground_space(torus(2, 2), Z2, {})
        assert gs.dimension == 4
        gram = gs.basis.T @ gs.basis
        assert np.abs(gram - np.eye(4)).max() < 1e-9

    def test_oversized_lattice_rejected(self):
        with pytest.raises(ValueError, match="too large"):
            ground_space(torus(3, 3), S3, {})

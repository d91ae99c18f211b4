"""Sector censuses, condensates, defects, and symmetry transport."""

import itertools
from fractions import Fraction

import numpy as np
import pytest

from qdw.groups import (
    build_group,
    character_table,
    enumerate_automorphisms,
    enumerate_subgroups,
    inner_automorphism,
)
from qdw.classify import (
    abelian_anyon_data,
    anyon_table,
    boundary_excitations,
    boundary_types,
    defect_list,
    lagrangian_algebra,
    qudit_dimension,
    symmetry_action,
)

OMEGA = complex(-0.5, 3 ** 0.5 / 2)


def _s3_with_subgroups():
    g = build_group("symmetric:3")
    return (g,
            g.trivial_subgroup(),
            g.generated_subgroup([g.index_of("(12)")]),
            g.generated_subgroup([g.index_of("(123)")]),
            g.full_subgroup())


def test_s3_sector_census():
    g = build_group("symmetric:3")
    t = anyon_table(g)
    assert [a.name for a in t.anyons] == [
        "C0-pi0", "C0-pi1", "C0-pi2", "C1-pi0", "C1-pi1", "C2-pi0", "C2-pi1", "C2-pi2"]
    assert [a.dim for a in t.anyons] == [1, 1, 2, 3, 3, 2, 2, 2]
    twists = [a.twist for a in t.anyons]
    expect = [1, 1, 1, 1, -1, 1, OMEGA, OMEGA.conjugate()]
    assert np.allclose(twists, expect, atol=1e-9)
    assert t.vacuum_index == 0
    assert t.anyons[0].dim == 1 and abs(t.anyons[0].twist - 1) < 1e-12


@pytest.mark.parametrize("spec,count", [
    ("cyclic:2", 4),
    ("cyclic:3", 9),
    ("symmetric:3", 8),
    ("dihedral:4", 22),
    ("quaternion8", 22),
    ("product:cyclic:2,cyclic:2", 16),
])
def test_sector_count_and_total_dimension(spec, count):
    g = build_group(spec)
    t = anyon_table(g)
    assert len(t) == count
    assert sum(a.dim ** 2 for a in t.anyons) == g.order ** 2
    for a in t.anyons:
        assert abs(abs(a.twist) - 1) < 1e-9


FROZEN_S3_CONDENSATES = {
    1: [1, 1, 2, 0, 0, 0, 0, 0],
    2: [1, 0, 1, 1, 0, 0, 0, 0],
    3: [1, 1, 0, 0, 0, 2, 0, 0],
    6: [1, 0, 0, 1, 0, 1, 0, 0],
}


def test_s3_condensates_frozen():
    g, ke, k2, k3, kg = _s3_with_subgroups()
    for sub in (ke, k2, k3, kg):
        alg = lagrangian_algebra(g, sub)
        assert alg.multiplicities == FROZEN_S3_CONDENSATES[sub.order]


def test_condensate_invariants_hold_broadly():
    for spec in ["symmetric:3", "dihedral:4", "cyclic:6", "quaternion8"]:
        g = build_group(spec)
        t = anyon_table(g)
        for sub in enumerate_subgroups(g):
            alg = lagrangian_algebra(g, sub)
            assert alg.multiplicities[0] == 1
            assert sum(m * a.dim for m, a in zip(alg.multiplicities, t.anyons)) == g.order
            for m, a in zip(alg.multiplicities, t.anyons):
                if m:
                    assert abs(a.twist - 1) < 1e-9


def test_condensate_depends_only_on_conjugacy_class():
    g = build_group("symmetric:3")
    subs = [s for s in enumerate_subgroups(g) if s.order == 2]
    assert len(subs) == 3
    vecs = [lagrangian_algebra(g, s).multiplicities for s in subs]
    assert vecs[0] == vecs[1] == vecs[2]


def test_boundary_type_census_s3():
    g = build_group("symmetric:3")
    bts = boundary_types(g)
    assert [(bt.order, len(bt.members)) for bt in bts] == [(1, 1), (2, 3), (3, 1), (6, 1)]


def test_boundary_excitations_s3():
    g, ke, k2, k3, kg = _s3_with_subgroups()
    assert [x.dim for x in boundary_excitations(k2)] == [1, 1, 2]
    assert [x.dim for x in boundary_excitations(k3)] == [1, 1, 1, 1, 1, 1]
    assert [x.dim for x in boundary_excitations(ke)] == [1] * 6
    assert [x.dim for x in boundary_excitations(kg)] == [1, 1, 2]
    assert [x.name for x in boundary_excitations(k2)] == ["T0-R0", "T0-R1", "T1-R0"]


def test_boundary_excitation_sum_rule():
    for spec in ["dihedral:4", "quaternion8", "cyclic:6"]:
        g = build_group(spec)
        for sub in enumerate_subgroups(g):
            xs = boundary_excitations(sub)
            assert sum(x.dim ** 2 for x in xs) == g.order


def test_defects_s3_mixed():
    g, ke, k2, k3, kg = _s3_with_subgroups()
    ds = defect_list(k2, k3)
    assert len(ds) == 1
    assert ds[0].dim_squared == Fraction(6)
    ds = defect_list(ke, kg)
    assert len(ds) == 1
    assert ds[0].dim_squared == Fraction(6)
    ds = defect_list(k2, kg)
    assert sorted(d.dim_squared for d in ds) == [Fraction(3), Fraction(3)]


def test_defect_sum_rule_all_pairs():
    for spec in ["symmetric:3", "dihedral:4", "product:cyclic:2,cyclic:2"]:
        g = build_group(spec)
        subs = enumerate_subgroups(g)
        for k1, k2 in itertools.product(subs, subs):
            ds = defect_list(k1, k2)
            assert sum(d.dim_squared for d in ds) == g.order


def test_defects_reduce_to_boundary_excitations():
    g, _, k2, _, _ = _s3_with_subgroups()
    ds = defect_list(k2, k2)
    xs = boundary_excitations(k2)
    assert [d.name for d in ds] == [x.name for x in xs]
    assert [d.dim_squared for d in ds] == [Fraction(x.dim ** 2) for x in xs]


@pytest.mark.parametrize("spec,k1_gens,k2_gens,expect", [
    ("symmetric:3", ["(12)"], ["(123)"], 1),
    ("symmetric:3", ["(12)"], ["(12)"], 3),
    ("symmetric:3", [], [], 6),
    ("cyclic:3", [], [], 3),
    ("product:cyclic:2,cyclic:2", ["(1,0)"], ["(0,1)"], 1),
    ("product:cyclic:2,cyclic:2", ["(1,0)"], ["(1,0)"], 4),
])
def test_strip_count_frozen(spec, k1_gens, k2_gens, expect):
    g = build_group(spec)
    k1 = g.generated_subgroup([g.index_of(x) for x in k1_gens])
    k2 = g.generated_subgroup([g.index_of(x) for x in k2_gens])
    assert qudit_dimension(g, k1, k2) == expect


def test_strip_count_dual_routes_agree_everywhere():
    """The overlap and coset routes are hard-asserted inside the call."""
    for spec in ["symmetric:3", "dihedral:4", "cyclic:4", "cyclic:6",
                 "product:cyclic:2,cyclic:2"]:
        g = build_group(spec)
        subs = enumerate_subgroups(g)
        for k1, k2 in itertools.product(subs, subs):
            d = qudit_dimension(g, k1, k2)
            assert d >= 1
            if k1 is k2:
                assert d == len(boundary_excitations(k1))


def test_strip_count_symmetric_in_boundaries():
    g = build_group("dihedral:4")
    subs = enumerate_subgroups(g)
    for k1, k2 in itertools.combinations(subs, 2):
        assert qudit_dimension(g, k1, k2) == qudit_dimension(g, k2, k1)


FROZEN_TORIC_S = 0.5 * np.array([
    [1, 1, 1, 1],
    [1, 1, -1, -1],
    [1, -1, 1, -1],
    [1, -1, -1, 1],
], dtype=complex)


def test_abelian_data_z2_frozen():
    g = build_group("cyclic:2")
    ab = abelian_anyon_data(g)
    assert np.allclose(ab.s_matrix, FROZEN_TORIC_S, atol=1e-9)
    assert ab.fusion.tolist() == [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]]
    assert ab.condensed_indices(g.full_subgroup()) == [0, 2]
    assert ab.condensed_indices(g.trivial_subgroup()) == [0, 1]


@pytest.mark.parametrize("spec", ["cyclic:2", "cyclic:3", "cyclic:4", "cyclic:6",
                                  "product:cyclic:2,cyclic:2"])
def test_abelian_data_invariants(spec):
    g = build_group(spec)
    ab = abelian_anyon_data(g)
    m = len(ab.charges)
    assert m == g.order ** 2
    assert np.allclose(ab.s_matrix @ np.conj(ab.s_matrix.T), np.eye(m), atol=1e-9)
    assert np.allclose(ab.s_matrix, ab.s_matrix.T, atol=1e-9)
    # fusion is an abelian group law on sector labels with the vacuum as unit
    assert ab.fusion[0].tolist() == list(range(m))
    assert np.array_equal(ab.fusion, ab.fusion.T)
    for a in range(m):
        assert sorted(ab.fusion[a].tolist()) == list(range(m))


def test_abelian_condensates_match_multiplicity_route():
    for spec in ["cyclic:2", "cyclic:4", "product:cyclic:2,cyclic:2", "cyclic:6"]:
        g = build_group(spec)
        ab = abelian_anyon_data(g)
        for sub in enumerate_subgroups(g):
            mult = lagrangian_algebra(g, sub).multiplicities
            assert set(mult) <= {0, 1}
            assert ab.condensed_indices(sub) == [i for i, m in enumerate(mult) if m]


def test_abelian_rejects_nonabelian():
    with pytest.raises(ValueError):
        abelian_anyon_data(build_group("symmetric:3"))


def test_twist_is_charge_pairing_for_abelian():
    g = build_group("cyclic:4")
    t = anyon_table(g)
    ct = character_table(g)
    for a in t.anyons:
        assert abs(a.twist - ct.value(a.irrep_index, a.class_index)) < 1e-9


def test_inner_automorphisms_act_trivially():
    for spec in ["symmetric:3", "dihedral:4"]:
        g = build_group(spec)
        for x in range(g.order):
            act = symmetry_action(g, inner_automorphism(g, x))
            assert act.is_identity()


def test_swap_symmetry_of_two_layer_code():
    g = build_group("product:cyclic:2,cyclic:2")
    swap = []
    for x in range(4):
        a, b = g.names[x][1:-1].split(",")
        swap.append(g.index_of(f"({b},{a})"))
    act = symmetry_action(g, swap)
    assert not act.is_identity()
    # independent expectation: (flux g, charge q) -> (swap g, q composed with swap)
    t = anyon_table(g)
    ct = character_table(g)
    expect = []
    for a in t.anyons:
        g2 = swap[a.class_index]
        row = [ct.chars[a.irrep_index][swap.index(x)] for x in range(4)]
        hits = [q for q in range(4) if np.allclose(ct.chars[q], row, atol=1e-9)]
        assert len(hits) == 1
        expect.append(t.index_of(g2, hits[0]))
    assert act.anyon_permutation == expect
    ka = g.generated_subgroup([g.index_of("(1,0)")])
    kb = g.generated_subgroup([g.index_of("(0,1)")])
    assert act.subgroup_image(ka) == kb


def test_symmetry_preserves_condensate_structure():
    """Transporting both the sector and the boundary leaves multiplicities fixed."""
    g = build_group("symmetric:3")
    t = anyon_table(g)
    for phi in enumerate_automorphisms(g):
        act = symmetry_action(g, phi)
        for sub in enumerate_subgroups(g):
            before = lagrangian_algebra(g, sub).multiplicities
            after = lagrangian_algebra(g, act.subgroup_image(sub)).multiplicities
            for i in range(len(t)):
                assert after[act.anyon_permutation[i]] == before[i]


def test_outer_automorphism_permutes_quaternion_fluxes():
    g = build_group("quaternion8")
    autos = enumerate_automorphisms(g)
    assert len(autos) == 24
    nontrivial = 0
    for phi in autos:
        act = symmetry_action(g, phi)
        if not act.is_identity():
            nontrivial += 1
    # Inn(Q8) has order 4 and acts trivially on sectors; the rest do not
    assert nontrivial == 20


def test_symmetry_rejects_non_automorphism():
    g = build_group("cyclic:4")
    with pytest.raises(ValueError):
        symmetry_action(g, (0, 2, 1, 3))

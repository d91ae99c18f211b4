"""Named cross-checks tying the computation modules together.

Every number the package reports is covered by at least one validation
route with a stable name, so a report can say exactly what was checked.
The registry here is what `qdw verify-all` runs and what the acceptance
tests call; each check either passes, is skipped with a reason, or
raises InvariantError naming the broken rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from qdw.classify import (
    abelian_anyon_data,
    anyon_table,
    boundary_excitations,
    defect_list,
    lagrangian_algebra,
    qudit_dimension,
    symmetry_action,
)
from qdw.groups import (
    FiniteGroup,
    InvariantError,
    Subgroup,
    enumerate_automorphisms,
    enumerate_subgroups,
    inner_automorphism,
)
from qdw.lattice import (
    audit_commutation,
    build_terms,
    ground_space_dimension,
    ring,
    torus,
)
from qdw.logical import (
    AbelianGroundSpace,
    charge_projectors,
    charge_string,
    logical_action,
    logical_algebra,
    loop_operator,
    tunnel_operator,
)

__all__ = [
    "DEFAULT_TOLERANCE",
    "VALIDATORS",
    "CheckResult",
    "run_check",
    "verify_group",
    "check_names",
]

DEFAULT_TOLERANCE = 1e-10

# which validation suites stand behind each command's numbers
VALIDATORS = {
    "group-info": ("character-orthogonality",),
    "anyons": ("sector-square-sum", "twist-unimodular"),
    "subgroups": ("subgroup-closure",),
    "lagrangian": ("condensate-dimension", "vacuum-multiplicity", "boson-support"),
    "excitations": ("excitation-square-sum",),
    "defects": ("defect-square-sum",),
    "qudit-dim": ("strip-route-agreement",),
    "lattice-audit": ("term-projector", "term-hermitian", "pairwise-commutation"),
    "gsd": ("gsd-route-agreement",),
    "logical": ("weyl-relations", "frame-transport", "operator-unitarity"),
    "charge-project": ("projector-completeness", "projector-orthogonality",
                       "projector-idempotence", "frame-diagonality"),
}

AUDIT_ORDER_CAP = 8     # torus/annulus audits stay desk-scale up to here
LOGICAL_ORDER_CAP = 5   # ring(3) counting budget holds through cyclic:5


@dataclass
class CheckResult:
    name: str
    status: str          # pass | skip | fail
    detail: str


def _is_cyclic_presentation(group: FiniteGroup) -> bool:
    n = group.order
    add = np.fromfunction(lambda i, j: (i + j) % n, (n, n), dtype=np.int64)
    return bool(np.array_equal(group.table, add))


def _check_sector_census(group: FiniteGroup, tol: float) -> str:
    table = anyon_table(group)
    total = sum(a.dim ** 2 for a in table.anyons)
    return f"{len(table)} sectors, sum of dim^2 = {total}"


def _check_condensates(group: FiniteGroup, tol: float) -> str:
    count = 0
    for sub in enumerate_subgroups(group):
        lagrangian_algebra(group, sub)
        count += 1
    return f"{count} subgroup condensates satisfy the dimension and boson rules"


def _check_excitations(group: FiniteGroup, tol: float) -> str:
    count = 0
    for sub in enumerate_subgroups(group):
        boundary_excitations(sub)
        count += 1
    return f"{count} boundary excitation censuses close the order sum rule"


def _check_defects(group: FiniteGroup, tol: float) -> str:
    subs = enumerate_subgroups(group)
    count = 0
    for k1 in subs:
        for k2 in subs:
            defect_list(k1, k2)
            count += 1
    return f"{count} boundary pairs close the defect sum rule"


def _check_strips(group: FiniteGroup, tol: float) -> str:
    subs = enumerate_subgroups(group)
    dims = []
    for k1 in subs:
        for k2 in subs:
            dims.append(qudit_dimension(group, k1, k2))
    return f"{len(dims)} strip counts agree across both routes"


def _check_conjugation(group: FiniteGroup, tol: float) -> str:
    count = 0
    for sub in enumerate_subgroups(group):
        base = lagrangian_algebra(group, sub).multiplicities
        for g in range(group.order):
            conj = lagrangian_algebra(group, sub.conjugate_by(g)).multiplicities
            if conj != base:
                raise InvariantError(
                    f"condensate changed under conjugation by {group.names[g]}")
            count += 1
    return f"{count} conjugations leave every condensate fixed"


def _check_automorphisms(group: FiniteGroup, tol: float) -> str:
    table = anyon_table(group)
    subs = enumerate_subgroups(group)
    autos = enumerate_automorphisms(group)
    for phi in autos:
        act = symmetry_action(group, phi)
        perm = act.anyon_permutation
        for sub in subs:
            image = Subgroup(group, [phi[k] for k in sub.elements])
            src = lagrangian_algebra(group, sub).multiplicities
            dst = lagrangian_algebra(group, image).multiplicities
            moved = [0] * len(src)
            for a, m in enumerate(src):
                moved[perm[a]] = m
            if moved != dst:
                raise InvariantError(
                    "condensate transport disagrees with the sector permutation")
    for g in range(group.order):
        act = symmetry_action(group, inner_automorphism(group, g))
        if act.anyon_permutation != list(range(len(table))):
            raise InvariantError(
                f"inner automorphism by {group.names[g]} moved a sector")
    return f"{len(autos)} automorphisms act equivariantly; inner ones act trivially"


def _check_lattice_audit(group: FiniteGroup, tol: float) -> str:
    reports = []
    lat = torus(2, 2)
    reports.append(("torus 2x2", audit_commutation(build_terms(lat, group, {}),
                                                   group.order)))
    lat = ring(3)
    subs = {"inner": group.trivial_subgroup(), "outer": group.full_subgroup()}
    reports.append(("ring 3", audit_commutation(build_terms(lat, group, subs),
                                                group.order)))
    for name, rep in reports:
        if not rep.ok:
            raise InvariantError(f"{name} audit failed: {'; '.join(rep.failures())}")
    pairs = sum(len(r.pair_checks) for _, r in reports)
    return f"all terms are commuting projectors ({pairs} overlapping pairs checked)"


def _check_gsd_census(group: FiniteGroup, tol: float) -> str:
    want = len(anyon_table(group))
    rep = ground_space_dimension(torus(2, 2), group, {})
    if rep.value != want:
        raise InvariantError(
            f"torus count {rep.value} != sector census {want}")
    routes = ",".join(sorted(rep.by_method))
    return f"torus 2x2 count {rep.value} matches the sector census ({routes})"


def _rough_ring_sector(group: FiniteGroup) -> AbelianGroundSpace:
    subs = {"inner": group.trivial_subgroup(), "outer": group.trivial_subgroup()}
    return AbelianGroundSpace(ring(3), group, subs)


def _check_hole_qudit(group: FiniteGroup, tol: float) -> str:
    n = group.order
    ags = _rough_ring_sector(group)
    want = qudit_dimension(group, group.trivial_subgroup(), group.trivial_subgroup())
    if ags.dimension != want:
        raise InvariantError(
            f"lattice sector count {ags.dimension} != strip count {want}")
    qud = logical_algebra(ags, tunnel_operator(ags, "inner", "outer"),
                          loop_operator(ags, "inner"))
    mx, mz = qud.x_action.matrix(), qud.z_action.matrix()
    omega = np.exp(2j * np.pi / n)
    if np.abs(mx @ mz - omega * mz @ mx).max() > tol:
        raise InvariantError("Weyl commutation phase is off")
    for name, m in (("X", mx), ("Z", mz)):
        if np.abs(np.linalg.matrix_power(m, n) - np.eye(n)).max() > tol:
            raise InvariantError(f"{name}^{n} is not the identity")
        if np.abs(m @ m.conj().T - np.eye(n)).max() > tol:
            raise InvariantError(f"{name} is not unitary")
    qud.relation_report()
    return f"rough-rim ring carries one exact {n}-state Weyl pair"


def _check_charge_readout(group: FiniteGroup, tol: float) -> str:
    ags = _rough_ring_sector(group)
    qud = logical_algebra(ags, tunnel_operator(ags, "inner", "outer"),
                          loop_operator(ags, "inner"))
    fam = charge_projectors(qud, "inner")
    n = ags.n
    total = sum(fam.projectors)
    if np.abs(total - np.eye(n)).max() > tol:
        raise InvariantError("projector family does not resolve the identity")
    return (f"{len(fam.projectors)} projectors resolve the identity; "
            f"{len(fam.selected)} select single frame states")


def _check_path_deformation(group: FiniteGroup, tol: float) -> str:
    ags = _rough_ring_sector(group)
    routes = [
        ["i0", "o0"],
        ["i0", "i1", "o1", "o0"],
        ["i0", "i2", "o2", "o0"],
    ]
    ops = [charge_string(ags, r) for r in routes]
    acts = [logical_action(ags, op) for op in ops]
    if any(a != acts[0] for a in acts[1:]):
        raise InvariantError("rerouted tunnel changed its ground-space action")
    if ags.n ** ags.lattice.n_edges <= 20_000:
        mats = [op.to_matrix() for op in ops]
        q = ags.orbit_state_matrix()
        for m in mats[1:]:
            if np.abs((m - mats[0]) @ q).max() > tol:
                raise InvariantError("rerouted tunnel moved a ground state")
    return f"{len(routes)} homotopic reroutes act identically on the sectors"


def _check_abelian_modular_data(group: FiniteGroup, tol: float) -> str:
    data = abelian_anyon_data(group)
    return f"S matrix over {len(data.charges)} sectors is unitary and symmetric"


_REGISTRY: list[tuple[str, Callable[[FiniteGroup], Optional[str]],
                      Callable[[FiniteGroup, float], str]]] = [
    ("sector-census", lambda g: None, _check_sector_census),
    ("condensate-rules", lambda g: None, _check_condensates),
    ("excitation-sum-rule", lambda g: None, _check_excitations),
    ("defect-sum-rule", lambda g: None, _check_defects),
    ("strip-route-agreement", lambda g: None, _check_strips),
    ("conjugation-invariance", lambda g: None, _check_conjugation),
    ("automorphism-equivariance", lambda g: None, _check_automorphisms),
    ("abelian-modular-data",
     lambda g: None if g.is_abelian else "needs an abelian group",
     _check_abelian_modular_data),
    ("lattice-audit",
     lambda g: None if g.order <= AUDIT_ORDER_CAP
     else f"group order {g.order} above audit cap {AUDIT_ORDER_CAP}",
     _check_lattice_audit),
    ("gsd-census",
     lambda g: None if g.order <= AUDIT_ORDER_CAP
     else f"group order {g.order} above audit cap {AUDIT_ORDER_CAP}",
     _check_gsd_census),
    ("hole-qudit",
     lambda g: None if _is_cyclic_presentation(g) and 2 <= g.order <= LOGICAL_ORDER_CAP
     else "needs a cyclic presentation of order 2..5",
     _check_hole_qudit),
    ("charge-readout",
     lambda g: None if _is_cyclic_presentation(g) and 2 <= g.order <= LOGICAL_ORDER_CAP
     else "needs a cyclic presentation of order 2..5",
     _check_charge_readout),
    ("path-deformation",
     lambda g: None if _is_cyclic_presentation(g) and 2 <= g.order <= LOGICAL_ORDER_CAP
     else "needs a cyclic presentation of order 2..5",
     _check_path_deformation),
]


def check_names() -> list[str]:
    return [name for name, _, _ in _REGISTRY]


def run_check(name: str, group: FiniteGroup,
              tolerance: float = DEFAULT_TOLERANCE) -> CheckResult:
    for reg_name, gate, fn in _REGISTRY:
        if reg_name != name:
            continue
        reason = gate(group)
        if reason is not None:
            return CheckResult(name, "skip", reason)
        return CheckResult(name, "pass", fn(group, tolerance))
    raise ValueError(f"unknown check {name!r}")


def verify_group(group: FiniteGroup,
                 tolerance: float = DEFAULT_TOLERANCE) -> list[CheckResult]:
    """Run every applicable registered check; failures are collected, not raised."""
    out = []
    for name, gate, fn in _REGISTRY:
        reason = gate(group)
        if reason is not None:
            out.append(CheckResult(name, "skip", reason))
            continue
        try:
            out.append(CheckResult(name, "pass", fn(group, tolerance)))
        except InvariantError as exc:
            out.append(CheckResult(name, "fail", str(exc)))
    return out

import pytest

from p3fusion.biset import biset_class, biset_mark, count_fixed_points, opposite
from p3fusion.errors import InfeasibleCoefficientsError
from p3fusion.fusion import builtin_fusion_system
from p3fusion.solver import (
    EXPECTED_TABLE,
    assemble,
    enumerate_feasible_upto,
    exoticity_bound,
    layer0,
    layer1,
    mark_identity_checks,
    minimal_biset,
    minimal_coefficients,
    size_of,
    solve_layer2,
    verify_relation_derivation,
    verify_table,
)

SMALL = ("d8", "sd16")


def test_layer0_structure():
    sys_ = builtin_fusion_system("d8")
    x0 = layer0(sys_, 1)
    assert x0.transitive_count() == 8
    assert len(x0.coeffs) == 8
    assert x0.e() == 8
    # marks at each own class equal c0 * |Z(S)|
    for cls in x0.support:
        assert biset_mark(x0, cls) == 3
    with pytest.raises(InfeasibleCoefficientsError):
        layer0(sys_, 3)
    with pytest.raises(InfeasibleCoefficientsError):
        layer0(sys_, 0)


def test_layer1_structure():
    sys_ = builtin_fusion_system("d8")
    x1 = layer1(sys_, 1, (0, 0, 0, 0))
    # only nonextendable classes, multiplicity 1 each
    assert x1.transitive_count() == 32
    assert all(mult == 1 for _, mult in x1.items())
    assert all(not sys_.is_extendable_v_morphism(cls.rep) for cls in x1.support)
    x1b = layer1(sys_, 1, (1, 0, 0, 0))
    ext = [cls for cls in x1b.support if sys_.is_extendable_v_morphism(cls.rep)]
    assert len(ext) == 8  # extendable classes out of V_0 appear with c1(0) = 1
    for cls in ext:
        assert x1b.coefficient(cls) == 1


def test_relation_derivation_matches_closed_forms():
    for name in ("d8", "sd16", "th4s4"):
        assert verify_relation_derivation(builtin_fusion_system(name))


def test_mark_identities():
    for name in SMALL:
        checks = mark_identity_checks(builtin_fusion_system(name))
        bad = [(nm, key) for nm, key, ok in checks if not ok]
        assert not bad


def test_solve_layer2_minimal_case():
    sys_ = builtin_fusion_system("d8")
    f = sys_.f
    c2u = tuple(f - sys_.spec.r_of_line(i) for i in range(4))
    assert c2u == (2, 2, 2, 2)
    coeffs = solve_layer2(sys_, 1, (0,) * 4, 0, c2u)
    # cross-class pairs get multiplicity f, central pairs vanish
    for (xi, zj, _m), mult in coeffs.pair_mults.items():
        if xi == -1 and zj == -1:
            assert mult == 0
        elif xi == -1 or zj == -1:
            assert mult == 0
        elif zj in sys_.spec.class_of_line(xi).members:
            assert mult == 2
        else:
            assert mult == 4


def test_solve_layer2_infeasible_witness():
    sys_ = builtin_fusion_system("d8")
    with pytest.raises(InfeasibleCoefficientsError) as err:
        solve_layer2(sys_, 1, (0,) * 4, 0, (1, 2, 2, 2))
    assert "pair" in str(err.value)


def test_minimal_biset_small_systems():
    for name in SMALL:
        sys_ = builtin_fusion_system(name)
        res = minimal_biset(sys_, certify=True)
        p, f, d0, d1, d2, e, _last = EXPECTED_TABLE[res.system_name]
        assert (res.p, res.f, res.d0, res.d1, res.d2, res.e) == (p, f, d0, d1, d2, e)
        assert res.certificates_ok()
        assert res.e == (p**5 - 1) // (p - 1) * res.out_order
        assert res.e % p != 0
        # d-values recomputed from the class counts, not the formulas
        assert res.d0 == res.biset.layer(0).transitive_count()
        assert res.d1 == res.biset.layer(1).transitive_count()
        assert res.d2 == res.biset.layer(2).transitive_count()


def test_minimal_biset_is_self_opposite():
    for name in SMALL:
        sys_ = builtin_fusion_system(name)
        x = minimal_biset(sys_, certify=False).biset
        assert opposite(x) == x


def test_uniqueness_frontier():
    sys_ = builtin_fusion_system("d8")
    e_min = 968
    feasible = enumerate_feasible_upto(sys_, e_min)
    assert len(feasible) == 1
    assert size_of(sys_, feasible[0]) == e_min
    # a larger budget reveals more feasible assignments (one c2z or c2u bump
    # adds 26 bottom pieces, i.e. 9 * 26 = 234 points over |S|)
    wider = enumerate_feasible_upto(sys_, e_min + 234)
    assert len(wider) > 1
    assert min(size_of(sys_, c) for c in wider) == e_min


def test_monotonicity_of_size():
    sys_ = builtin_fusion_system("d8")
    base = minimal_coefficients(sys_)
    e0 = size_of(sys_, base)
    bump_c0 = solve_layer2(sys_, 2, (0,) * 4, 0, tuple(2 * v for v in base.c2u))
    assert size_of(sys_, bump_c0) > e0
    bump_c1 = solve_layer2(sys_, 1, (1, 0, 0, 0), 0,
                           tuple(v + (3 * 2 if i == 0 else 0) for i, v in enumerate(base.c2u)))
    assert size_of(sys_, bump_c1) > e0
    bump_c2z = solve_layer2(sys_, 1, (0,) * 4, 1, base.c2u)
    assert size_of(sys_, bump_c2z) > e0
    bump_c2u = solve_layer2(sys_, 1, (0,) * 4, 0,
                            tuple(v + (3 if i == 0 else 0) for i, v in enumerate(base.c2u)))
    assert size_of(sys_, bump_c2u) > e0
    # every feasible assignment keeps e prime to p
    for coeffs in (base, bump_c0, bump_c1, bump_c2z, bump_c2u):
        assert size_of(sys_, coeffs) % 3 != 0


def test_marks_at_own_classes():
    # spot values from the fixed-point table used in the solve
    sys_ = builtin_fusion_system("d8")
    x = assemble(sys_, minimal_coefficients(sys_))
    grp = sys_.group
    from p3fusion.group import identity_morphism, morphism_from_images

    # mark at the central self-pair: p^3 * f * c0 (layers 0+1 only)
    zz = biset_class(morphism_from_images(grp.cyclic(grp.z), {grp.z: grp.z}))
    assert biset_mark(x.layer_upto(1), zz) == 27 * 4
    # diagonal fixed points
    assert count_fixed_points(zz, zz) == 3**5
    ident = biset_class(identity_morphism(grp.full))
    assert count_fixed_points(ident, ident) == 3


def test_exoticity_bound_values():
    assert exoticity_bound(134448, 7) == 425744
    assert exoticity_bound(201672, 7) == 638620
    assert exoticity_bound(268896, 7) == 851496
    assert exoticity_bound(1, 7) == 0
    assert exoticity_bound(1, 3) == 0
    with pytest.raises(ValueError):
        exoticity_bound(0, 3)


def test_verify_table_small():
    systems = [builtin_fusion_system(n) for n in SMALL]
    report = verify_table(systems)
    assert report.ok
    assert [row["e"] for row in report.rows] == [968, 1936]


def test_solver_result_json():
    res = minimal_biset(builtin_fusion_system("d8"), certify=False)
    data = res.to_json()
    assert data["e"] == 968
    assert data["coefficients"]["c0"] == 1
    assert data["biset"]["prime"] == 3

import pytest

from p3fusion.biset import biset_class
from p3fusion.errors import StabilityViolationError
from p3fusion.fusion import builtin_fusion_system, lift_matrix_to_aut
from p3fusion.realize import (
    UnionFind,
    build_index_set,
    check_transitivity,
    essential_generators,
    j0_class_action_checks,
    perm_from_morphism,
    perm_image_of_essential,
    perm_image_of_out,
)
from p3fusion.solver import minimal_biset


def _index(name, **kw):
    sys_ = builtin_fusion_system(name)
    x = minimal_biset(sys_, certify=False).biset
    return sys_, build_index_set(sys_, x, **kw)


def test_index_set_shape():
    sys_, index = _index("d8")
    assert index.size == 968
    assert len(index.j0) == 8
    # block counts per layer match the d-values
    by_size = {}
    for b in index.blocks:
        by_size[b.size] = by_size.get(b.size, 0) + 1
    assert by_size == {1: 8, 3: 32, 9: 96}
    # singleton blocks are exactly the automorphism summands
    for b in index.blocks:
        if b.size == 1:
            assert b.cls.rep.source.order == 27


def test_index_set_rejects_virtual():
    from p3fusion.idempotent import omega_upto2

    sys_ = builtin_fusion_system("d8")
    with pytest.raises(ValueError):
        build_index_set(sys_, omega_upto2(sys_))


def test_out_perm_bijective_and_class_respecting():
    sys_, index = _index("d8")
    for m in sys_.sorted_out:
        alpha = lift_matrix_to_aut(m)
        perm = perm_image_of_out(index, alpha)
        assert sorted(perm) == list(range(index.size))
        # block-to-block, preserving block sizes
        label_block = {}
        for b in index.blocks:
            for pos in range(b.size):
                label_block[b.offset + pos] = b
        for i, j in enumerate(perm):
            assert label_block[i].size == label_block[j].size


def test_out_perm_singleton_rule():
    # the singleton block [S, sigma] goes to the block of [S, sigma o alpha]
    sys_, index = _index("sd16")
    for m in sys_.sorted_out[:5]:
        alpha = lift_matrix_to_aut(m)
        perm = perm_image_of_out(index, alpha)
        for b in index.blocks:
            if b.size != 1:
                continue
            target_label = perm[b.offset]
            target_block = next(tb for tb in index.blocks
                                if tb.offset == target_label and tb.size == 1)
            expect = biset_class(b.cls.rep.compose(alpha))
            assert target_block.cls == expect


def test_identity_perm_is_identity():
    sys_, index = _index("d8")
    ident = lift_matrix_to_aut(sys_.sorted_out[0] * sys_.sorted_out[0].inv())
    perm = perm_image_of_out(index, ident)
    assert perm == list(range(index.size))


def test_essential_perm_merges_block_sizes():
    sys_, index = _index("d8")
    phi = essential_generators(sys_)[0]
    perm = perm_image_of_essential(index, phi)
    assert sorted(perm) == list(range(index.size))
    label_block = {}
    for b in index.blocks:
        for pos in range(b.size):
            label_block[b.offset + pos] = b
    sizes_mixed = any(label_block[i].size != label_block[j].size
                      for i, j in enumerate(perm))
    assert sizes_mixed  # singleton labels flow into p-sized blocks
    with pytest.raises(ValueError):
        ext = next(r for r in sys_.v_source_reps(0) if r.extendable)
        perm_image_of_essential(index, ext)


def test_double_application_respects_block_classes():
    # applying phi then its inverse stabilises every class's label set
    sys_, index = _index("d8")
    phi = essential_generators(sys_)[0]
    perm = perm_image_of_essential(index, phi)
    inv_mor = phi.morphism.inverse()
    perm_inv = perm_from_morphism(index, inv_mor)
    combined = [perm_inv[perm[i]] for i in range(index.size)]
    labels_by_class = {}
    for b in index.blocks:
        labels_by_class.setdefault(b.cls.uid, set()).update(
            range(b.offset, b.offset + b.size))
    for uid, labels in labels_by_class.items():
        assert {combined[i] for i in labels} == labels


def test_j0_class_action():
    for name in ("d8", "sd16", "th4s4", "rv48", "rv72", "rv96"):
        ok, reason = j0_class_action_checks(builtin_fusion_system(name))
        assert ok, reason


def test_transitivity_p3_both_systems():
    rep = check_transitivity(builtin_fusion_system("d8"))
    assert rep.j_size == 968 and rep.orbit_count == 1 and rep.ok
    rep = check_transitivity(builtin_fusion_system("sd16"))
    assert rep.j_size == 1936 and rep.orbit_count == 1 and rep.ok


def test_transitivity_invariant_under_choices():
    sys_ = builtin_fusion_system("d8")
    a = check_transitivity(sys_, paper_transversals=True)
    b = check_transitivity(sys_, paper_transversals=False)
    c = check_transitivity(sys_, all_out_reps=False)
    assert a.orbit_count == b.orbit_count == c.orbit_count == 1


def test_matching_invariance_of_orbits():
    # two different label conventions induce different piece matchings; the
    # orbit partition sizes cannot depend on the choice
    sys_ = builtin_fusion_system("d8")
    x = minimal_biset(sys_, certify=False).biset
    phi = essential_generators(sys_)[0]
    counts = []
    for paper in (True, False):
        index = build_index_set(sys_, x, paper_transversals=paper)
        uf = UnionFind(index.size)
        uf.apply_perm(perm_from_morphism(index, phi.morphism))
        counts.append(uf.count)
    assert counts[0] == counts[1]


def test_report_json():
    rep = check_transitivity(builtin_fusion_system("d8"))
    data = rep.to_json()
    assert data["J_size"] == 968
    assert data["orbit_count"] == 1
    assert data["J0_regular"] is True
    assert data["ok"] is True


def test_stability_violation_for_wrong_biset():
    # a lopsided biset is not stable: the permutation construction must fail
    sys_ = builtin_fusion_system("d8")
    from p3fusion.biset import FormalBiset
    from p3fusion.solver import layer0

    x0 = layer0(sys_, 1)
    bad = FormalBiset(3, dict(list(x0.coeffs.items())[:3]))
    index = build_index_set(sys_, bad)
    phi = essential_generators(sys_)[0]
    with pytest.raises(StabilityViolationError):
        perm_image_of_essential(index, phi)

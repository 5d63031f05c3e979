import random

import pytest

from p3fusion.errors import MorphismError, PrimeMismatchError
from p3fusion.group import (
    GroupElement,
    ambient_group,
    centralizer,
    commutator,
    conjugation_morphism,
    identity_morphism,
    maximal_subgroups,
    morphism_from_images,
    multiply,
    require_odd_prime,
)


def test_require_odd_prime():
    assert require_odd_prime(3) == 3
    assert require_odd_prime(7) == 7
    assert require_odd_prime(11) == 11
    for bad in (1, 2, 4, 9, 15, -3):
        with pytest.raises(ValueError):
            require_odd_prime(bad)


def test_defining_relation():
    g = ambient_group(3)
    assert g.x * g.y == GroupElement(3, 1, 1, 1)
    assert g.y * g.x == GroupElement(3, 1, 1, 0)
    assert commutator(g.x, g.y) == g.z


def test_group_axioms_exhaustive_p3():
    g = ambient_group(3)
    e = g.identity
    for a in g.elements:
        assert a * a.inv() == e
        assert a.inv() * a == e
    for a in g.elements:
        for b in g.elements:
            ab = a * b
            assert ab in g.element_set
            for c in g.elements:
                assert (ab) * c == a * (b * c)


def test_exponent_p():
    for p in (3, 5, 7):
        g = ambient_group(p)
        for a in g.elements:
            x = a
            for _ in range(p - 1):
                x = x * a
            assert x == g.identity
            assert a**p == g.identity


def test_x_power_p_is_identity_at_5():
    g = ambient_group(5)
    acc = g.identity
    for _ in range(5):
        acc = multiply(acc, g.x)
    assert acc == g.identity


def test_prime_mismatch():
    with pytest.raises(PrimeMismatchError):
        multiply(GroupElement(3, 1, 0, 0), GroupElement(5, 1, 0, 0))


def test_center_and_sizes():
    for p in (3, 5, 7):
        g = ambient_group(p)
        assert len(g.elements) == p**3
        assert g.center.order == p
        assert all(z.is_central() for z in g.center)
        assert centralizer(g.full) == g.center
        assert centralizer(g.center) == g.full


def test_arbitrary_odd_prime_accepted():
    g = ambient_group(11)
    assert len(g.elements) == 11**3
    assert len(g.maximal_subgroups) == 12
    assert (g.x * g.y) * g.z == g.x * (g.y * g.z)
    assert g.x**11 == g.identity


def test_maximal_subgroups():
    for p in (3, 5, 7):
        vs = maximal_subgroups(p)
        g = ambient_group(p)
        assert len(vs) == p + 1
        for v in vs:
            assert v.order == p * p
            assert g.z in v
            # elementary abelian: every pair commutes
            gens = v.canonical_gens
            assert commutator(gens[0], gens[1]).is_identity()
            assert centralizer(v) == v
        # pairwise intersections are exactly the center
        for i in range(len(vs)):
            for j in range(i + 1, len(vs)):
                assert vs[i].elements & vs[j].elements == g.center.elements


def test_commutator_subgroup_is_frattini_p3():
    g = ambient_group(3)
    comms = {commutator(a, b) for a in g.elements for b in g.elements}
    assert comms == set(g.center.elements)
    # Frattini = intersection of maximals
    inter = set(g.elements)
    for v in g.maximal_subgroups:
        inter &= v.elements
    assert inter == set(g.center.elements)


def test_conjugation_morphism():
    g = ambient_group(3)
    for q in g.maximal_subgroups:
        cz = conjugation_morphism(g.z, q)
        assert cz.is_identity_map()
    # c_v(u0) = z * u0 for a v with [v, u0] = z
    p = 5
    g5 = ambient_group(p)
    u0 = g5.x
    v = g5.y.inv()
    assert commutator(v, u0) == g5.z
    c = conjugation_morphism(v, g5.generated([g5.z, u0]))
    assert c(u0) == g5.z * u0


def test_conjugation_functorial_exhaustive_p3():
    g = ambient_group(3)
    v0 = g.maximal_subgroups[0]
    for a in g.elements:
        ca = conjugation_morphism(a, v0)
        for b in g.elements:
            cb = conjugation_morphism(b, v0)
            cab = conjugation_morphism(a * b, v0)
            assert ca.compose(cb).mapping == cab.mapping


def test_morphism_construction_and_rejection():
    g = ambient_group(3)
    v0 = g.maximal_subgroups[0]
    z, u = v0.canonical_gens
    ok = morphism_from_images(v0, {z: z, u: u * g.z})
    assert ok(u) == u * g.z
    # non-injective assignment
    with pytest.raises(MorphismError):
        morphism_from_images(v0, {z: g.identity, u: u})
    # relation-breaking assignment on S: x,y must have commutator of z-shape
    with pytest.raises(MorphismError):
        morphism_from_images(g.full, {g.x: g.x, g.y: g.identity})


def test_morphism_random_rejection_property():
    rng = random.Random(7)
    g = ambient_group(3)
    v0 = g.maximal_subgroups[0]
    z, u = v0.canonical_gens
    accepted = 0
    for _ in range(200):
        imgs = {z: rng.choice(g.elements), u: rng.choice(g.elements)}
        try:
            mor = morphism_from_images(v0, imgs)
        except MorphismError:
            continue
        accepted += 1
        # accepted maps really are injective homomorphisms
        seen = set()
        for a in v0:
            for b in v0:
                assert mor(a * b) == mor(a) * mor(b)
            assert mor(a) not in seen
            seen.add(mor(a))
    assert 0 < accepted < 200


def test_morphism_compose_inverse_restrict():
    g = ambient_group(5)
    v0 = g.maximal_subgroups[0]
    idm = identity_morphism(v0)
    assert idm.compose(idm) == idm
    c = conjugation_morphism(g.y, g.full)
    assert c.compose(c.inverse()).is_identity_map()
    r = c.restrict(v0)
    assert r.source == v0
    assert all(r(a) == c(a) for a in v0)


def test_subgroup_registry_deterministic():
    g = ambient_group(3)
    subs = g.all_subgroups
    # 1 + (p^2+p+1) + (p+1) + 1 subgroups
    assert len(subs) == 1 + (9 + 3 + 1) + 4 + 1
    orders = [s.order for s in subs]
    assert orders == sorted(orders)
    assert g.subgroup_id(g.trivial) == 0
    assert g.subgroup_id(g.full) == len(subs) - 1


def test_transversals():
    g = ambient_group(3)
    for q in g.all_subgroups:
        reps = g.transversal(q)
        assert len(reps) == g.full.order // q.order
        seen = set()
        for t in reps:
            coset = {t * h for h in q.elements}
            assert not (coset & seen)
            seen |= coset
        assert len(seen) == g.full.order

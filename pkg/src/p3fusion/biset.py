"""Formal sums of transitive S-S-bisets and their fixed-point calculus.

A transitive S-S-biset is classified by a graph subgroup: a subgroup Q of S
together with an injective homomorphism phi into S, taken up to simultaneous
conjugation on both sides.  Everything here is exact: marks are integers,
idempotent coefficients are fractions, and the two fixed-point routines
(the transporter formula and the explicit coset count) are kept independent
so each can check the other.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

from .errors import (
    ConditionAViolationError,
    MorphismError,
    P3FusionError,
    ResourceLimitError,
)
from .group import (
    GroupElement,
    GroupMorphism,
    Subgroup,
    ambient_group,
    identity_morphism,
)

__all__ = [
    "GraphSubgroup",
    "BisetClass",
    "FormalBiset",
    "MarkVector",
    "StabilityResult",
    "biset_class",
    "n_set",
    "n_size",
    "count_fixed_points",
    "brute_force_fixed_points",
    "are_conjugate",
    "is_subconjugate",
    "mark_vector",
    "subconjugate_closure",
    "opposite",
    "restrict_left",
    "restrict_left_biset",
    "is_left_stable",
    "is_right_stable",
    "check_condition_a",
    "biset_mark",
    "ExplicitBiset",
    "explicit_from_formal",
    "compose",
    "decompose_by_marks",
    "all_graph_classes",
]


# -- conjugacy-class keys ------------------------------------------------------

def _conjugators_in(left: Subgroup, q: Subgroup) -> tuple:
    """Coset reps of the centralizer of q inside `left`: enough conjugators
    to hit every conjugate pair (source, twisted map)."""
    grp = ambient_group(left.p)
    if left.order == grp.full.order:
        return grp.conj_transversal(q)
    cent = grp.centralizer(q)
    reps, covered = [], set()
    for g in left.sorted_elements:
        if g not in covered:
            reps.append(g)
            covered.update(g * h for h in cent.elements if h in left.elements)
    return tuple(reps)


def _class_key(mor: GroupMorphism, left: Subgroup) -> tuple:
    """Lexicographic minimum over the left x S conjugation orbit of the
    normal-form encoding (sorted source, images of canonical generators)."""
    p = mor.p
    grp = ambient_group(p)
    q = mor.source
    if q.order == p**3 and left.order == p**3:
        # automorphisms of S are conjugate exactly when they induce the same
        # map on S modulo the center
        fx, fy = mor(grp.x), mor(grp.y)
        return (p, "auts", fx.a, fy.a, fx.b, fy.b)
    image = mor.image
    t_reps = grp.conj_transversal(image)
    best = None
    for s in _conjugators_in(left, q):
        si = s.inv()
        q_conj = q.conjugate_by(s)
        src_code = tuple(e.code() for e in q_conj.sorted_elements)
        base = [mor.mapping[g.conj_by(si)] for g in q_conj.canonical_gens]
        for t in t_reps:
            enc = (src_code, tuple(b.conj_by(t).code() for b in base))
            if best is None or enc < best:
                best = enc
    return (p, "gen", left.order, best)


_CLASS_REGISTRY: dict = {}


class BisetClass:
    """A left x S conjugacy class of graph subgroups, interned by key."""

    __slots__ = ("key", "rep", "left", "uid", "layer")

    def __init__(self, key, rep, left, uid, layer):
        self.key = key
        self.rep = rep
        self.left = left
        self.uid = uid
        self.layer = layer

    def __eq__(self, other):
        return self is other or (isinstance(other, BisetClass) and self.key == other.key)

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        gens = {g: self.rep.mapping[g] for g in self.rep.source.canonical_gens}
        return f"BisetClass(|Q|={self.rep.source.order}, {gens})"

    @property
    def source(self) -> Subgroup:
        return self.rep.source


def biset_class(mor: GroupMorphism, left: Subgroup | None = None) -> BisetClass:
    grp = ambient_group(mor.p)
    if left is None:
        left = grp.full
    cache = mor._cls_cache
    if cache is None:
        cache = mor._cls_cache = {}
    cached = cache.get(left.elements)
    if cached is not None:
        return cached
    if not mor.source.elements <= left.elements:
        raise ValueError("source must lie inside the left-hand group")
    key = _class_key(mor, left)
    cls = _CLASS_REGISTRY.get(key)
    if cls is None:
        order = mor.source.order
        layer = 0
        while left.order > order * mor.p**layer:
            layer += 1
        cls = BisetClass(key, mor, left, len(_CLASS_REGISTRY), layer)
        _CLASS_REGISTRY[key] = cls
    cache[left.elements] = cls
    return cls


@dataclass(frozen=True)
class GraphSubgroup:
    """The graph of an injective homomorphism, as a subgroup of S x S."""

    morphism: GroupMorphism

    @property
    def source(self) -> Subgroup:
        return self.morphism.source

    @property
    def order(self) -> int:
        return self.morphism.source.order

    def pairs(self) -> frozenset:
        return frozenset((g, h) for g, h in self.morphism.mapping.items())

    def conjugate_by(self, s: GroupElement, t: GroupElement) -> "GraphSubgroup":
        si = s.inv()
        mapping = {g.conj_by(s): h.conj_by(t) for g, h in self.morphism.mapping.items()}
        src = self.morphism.source.conjugate_by(s)
        gens = {g: mapping[g] for g in src.canonical_gens}
        return GraphSubgroup(GroupMorphism(src, gens, _mapping=mapping))

    def biset_class(self) -> BisetClass:
        return biset_class(self.morphism)


def _as_morphism(obj) -> GroupMorphism:
    if isinstance(obj, GroupMorphism):
        return obj
    if isinstance(obj, GraphSubgroup):
        return obj.morphism
    if isinstance(obj, BisetClass):
        return obj.rep
    if hasattr(obj, "morphism"):
        return obj.morphism
    raise TypeError(f"expected a morphism-like object, got {type(obj).__name__}")


# -- transporter sets and fixed points -----------------------------------------

def _solvable_2var(p: int, rows) -> bool:
    """Consistency of rows (c1, c2, t): c1*y1 + c2*y2 = t over F_p."""
    mat = [[r[0] % p, r[1] % p, r[2] % p] for r in rows]
    piv = 0
    for col in (0, 1):
        row_i = next((i for i in range(piv, len(mat)) if mat[i][col]), None)
        if row_i is None:
            continue
        mat[piv], mat[row_i] = mat[row_i], mat[piv]
        inv = pow(mat[piv][col], p - 2, p)
        mat[piv] = [v * inv % p for v in mat[piv]]
        for i in range(len(mat)):
            if i != piv and mat[i][col]:
                f = mat[i][col]
                mat[i] = [(v - f * w) % p for v, w in zip(mat[i], mat[piv])]
        piv += 1
    return all(row[2] == 0 for row in mat if not row[0] and not row[1])


def n_size(psi, phi) -> int:
    """|N_{psi,phi}| = |{x : xRx^-1 <= Q and phi o c_x|_R = c_y o psi for some y}|."""
    psi, phi = _as_morphism(psi), _as_morphism(phi)
    p = psi.p
    grp = ambient_group(p)
    r_sub, q_sub = psi.source, phi.source
    if r_sub.order > q_sub.order:
        return 0
    gens = r_sub.canonical_gens
    a_list = [psi.mapping[r] for r in gens]
    q_elems = q_sub.elements
    phi_map = phi.mapping
    coset_size = grp.centralizer(r_sub).order
    total = 0
    for x in grp.conj_transversal(r_sub):
        rows = []
        for r, a in zip(gens, a_list):
            rx = r.conj_by(x)
            if rx not in q_elems:
                break
            b = phi_map[rx]
            if b.a != a.a or b.b != a.b:
                break
            rows.append((a.b, -a.a, b.c - a.c))
        else:
            if _solvable_2var(p, rows):
                total += coset_size
    return total


def n_set(psi, phi) -> frozenset:
    """The transporter subset of S realised elementwise (see n_size)."""
    psi, phi = _as_morphism(psi), _as_morphism(phi)
    p = psi.p
    grp = ambient_group(p)
    r_sub, q_sub = psi.source, phi.source
    gens = r_sub.canonical_gens
    a_list = [psi.mapping[r] for r in gens]
    centralizer = grp.centralizer(r_sub)
    out = set()
    if r_sub.order > q_sub.order:
        return frozenset()
    for x in grp.conj_transversal(r_sub):
        rows = []
        for r, a in zip(gens, a_list):
            rx = r.conj_by(x)
            if rx not in q_sub.elements:
                break
            b = phi.mapping[rx]
            if b.a != a.a or b.b != a.b:
                break
            rows.append((a.b, -a.a, b.c - a.c))
        else:
            if _solvable_2var(p, rows):
                out.update(x * c for c in centralizer.elements)
    return frozenset(out)


def is_subconjugate(psi, phi) -> bool:
    return n_size(psi, phi) > 0


def graph_class_size(cls) -> int:
    """Number of graph subgroups conjugate to the representative: the S x S
    orbit has size |S|^2 / (|N_phi| * |C_S(phi(Q))|)."""
    mor = _as_morphism(cls)
    grp = ambient_group(mor.p)
    stab = n_size(mor, mor) * grp.centralizer(mor.image).order
    total = grp.full.order**2
    if total % stab:
        raise P3FusionError("orbit-stabilizer count is not integral")
    return total // stab


def are_conjugate(a, b) -> bool:
    """S x S conjugacy via mutual subconjugacy at equal order."""
    ma, mb = _as_morphism(a), _as_morphism(b)
    if ma.source.order != mb.source.order:
        return False
    return is_subconjugate(ma, mb) and is_subconjugate(mb, ma)


_CFP_MEMO: dict = {}
_FITS_MEMO: dict = {}


def _fits_conjugately(r_sub: Subgroup, q_sub: Subgroup) -> bool:
    """Whether some conjugate of r_sub lies inside q_sub.  Every subgroup here
    is normal except the noncentral order-p ones, whose conjugates sweep the
    central coset of a generator."""
    key = (r_sub.elements, q_sub.elements)
    try:
        return _FITS_MEMO[key]
    except KeyError:
        pass
    p = r_sub.p
    if r_sub.order > q_sub.order:
        ok = False
    elif r_sub.order != p or r_sub.canonical_gens[0].is_central():
        ok = r_sub.elements <= q_sub.elements
    else:
        g = r_sub.canonical_gens[0]
        ok = any(GroupElement(p, g.a, g.b, c) in q_sub.elements for c in range(p))
    _FITS_MEMO[key] = ok
    return ok


def count_fixed_points(cls, by) -> int:
    """Fixed points of the graph of `by` on the transitive biset of `cls`:
    |N_{psi,phi}| / |Q| * |C_S(psi(R))|."""
    if isinstance(cls, BisetClass):
        phi_cls = cls
    else:
        phi_cls = biset_class(_as_morphism(cls))
    psi = _as_morphism(by)
    by_cls = by if isinstance(by, BisetClass) else biset_class(psi)
    memo_key = (phi_cls.uid, by_cls.uid)
    try:
        return _CFP_MEMO[memo_key]
    except KeyError:
        pass
    phi = phi_cls.rep
    psi = by_cls.rep
    if not (_fits_conjugately(psi.source, phi.source)
            and _fits_conjugately(psi.image, phi.image)):
        _CFP_MEMO[memo_key] = 0
        return 0
    grp = ambient_group(phi.p)
    num = n_size(psi, phi) * grp.centralizer(psi.image).order
    q_order = phi.source.order
    if num % q_order:
        raise P3FusionError("fixed-point formula returned a non-integer")
    val = num // q_order
    _CFP_MEMO[memo_key] = val
    return val


def brute_force_fixed_points(cls, by) -> int:
    """Independent oracle: build (S x S)/Delta_Q^phi as explicit cosets
    (t, y) and count the ones fixed by every generator pair of the graph."""
    phi = _as_morphism(cls)
    psi = _as_morphism(by)
    grp = ambient_group(phi.p)
    q_sub = phi.source
    reps = grp.transversal(q_sub)
    rep_pos = {}
    for idx, t in enumerate(reps):
        for q in q_sub.elements:
            rep_pos[t * q] = (idx, q)
    gens = psi.source.canonical_gens
    pairs = [(r, psi.mapping[r].inv()) for r in gens]
    count = 0
    for idx, t in enumerate(reps):
        for y in grp.elements:
            for r, psir_inv in pairs:
                idx2, q = rep_pos[r * t]
                if idx2 != idx or phi.mapping[q] * y * psir_inv != y:
                    break
            else:
                count += 1
    return count


# -- formal bisets ---------------------------------------------------------------

class FormalBiset:
    """Finite formal sum of transitive biset classes with exact coefficients."""

    __slots__ = ("p", "left", "coeffs")

    def __init__(self, p: int, coeffs: dict | None = None, left: Subgroup | None = None):
        self.p = p
        self.left = left if left is not None else ambient_group(p).full
        self.coeffs = {}
        if coeffs:
            for cls, c in coeffs.items():
                if c:
                    self.coeffs[cls] = self.coeffs.get(cls, 0) + c
            self.coeffs = {cls: c for cls, c in self.coeffs.items() if c}

    def items(self):
        return sorted(self.coeffs.items(), key=lambda kv: (kv[0].layer, kv[0].key))

    @property
    def support(self):
        return [cls for cls, _ in self.items()]

    def coefficient(self, cls) -> int:
        return self.coeffs.get(cls, 0)

    def layer(self, r: int) -> "FormalBiset":
        return FormalBiset(self.p, {c: v for c, v in self.coeffs.items() if c.layer == r},
                           left=self.left)

    def layer_upto(self, r: int) -> "FormalBiset":
        return FormalBiset(self.p, {c: v for c, v in self.coeffs.items() if c.layer <= r},
                           left=self.left)

    def transitive_count(self) -> int:
        return sum(self.coeffs.values())

    def e(self):
        """Size divided by |S|: each layer-r class contributes p**r per copy."""
        return sum(c * self.p**cls.layer for cls, c in self.coeffs.items())

    def size(self):
        return self.e() * self.left.order

    def is_genuine(self) -> bool:
        return all(isinstance(c, int) and c >= 0 or
                   (isinstance(c, Fraction) and c.denominator == 1 and c >= 0)
                   for c in self.coeffs.values())

    def denominators_coprime_to_p(self) -> bool:
        return all(Fraction(c).denominator % self.p != 0 for c in self.coeffs.values())

    def __add__(self, other):
        if self.p != other.p or self.left != other.left:
            raise ValueError("cannot add bisets over different contexts")
        out = dict(self.coeffs)
        for cls, c in other.coeffs.items():
            out[cls] = out.get(cls, 0) + c
        return FormalBiset(self.p, out, left=self.left)

    def __rmul__(self, scalar):
        return FormalBiset(self.p, {cls: scalar * c for cls, c in self.coeffs.items()},
                           left=self.left)

    def __eq__(self, other):
        return (isinstance(other, FormalBiset) and self.p == other.p
                and self.left == other.left and self.coeffs == other.coeffs)

    def __hash__(self):
        return hash((self.p, self.left, frozenset(self.coeffs.items())))

    def __repr__(self):
        return f"FormalBiset(p={self.p}, {self.transitive_count()} transitive pieces)"

    def to_json(self, system_name: str | None = None) -> dict:
        classes = []
        for cls, c in self.items():
            gens = cls.rep.source.canonical_gens
            classes.append({
                "source_generators": [[g.a, g.b, g.c] for g in gens],
                "image_generators": [[cls.rep.mapping[g].a, cls.rep.mapping[g].b,
                                      cls.rep.mapping[g].c] for g in gens],
                "multiplicity": str(Fraction(c)),
            })
        out = {"prime": self.p, "classes": classes}
        if system_name is not None:
            out["system"] = system_name
        return out

    @staticmethod
    def from_json(data: dict) -> "FormalBiset":
        from .group import morphism_from_images

        p = int(data["prime"])
        grp = ambient_group(p)
        coeffs = {}
        for entry in data["classes"]:
            srcs = [GroupElement(p, *map(lambda v: v % p, triple))
                    for triple in entry["source_generators"]]
            imgs = [GroupElement(p, *map(lambda v: v % p, triple))
                    for triple in entry["image_generators"]]
            source = grp.generated(srcs) if srcs else grp.trivial
            mor = (identity_morphism(grp.trivial) if not srcs
                   else morphism_from_images(source, dict(zip(srcs, imgs))))
            cls = biset_class(mor)
            mult = Fraction(entry["multiplicity"])
            if mult.denominator == 1:
                mult = int(mult)
            coeffs[cls] = coeffs.get(cls, 0) + mult
        return FormalBiset(p, coeffs)


def opposite(b: FormalBiset) -> FormalBiset:
    """Class map [Q, phi] -> [phi(Q), phi^-1], coefficients preserved."""
    grp = ambient_group(b.p)
    if b.left != grp.full:
        raise ValueError("opposite is defined for S-S bisets")
    out = {}
    for cls, c in b.coeffs.items():
        opp = biset_class(cls.rep.inverse())
        out[opp] = out.get(opp, 0) + c
    return FormalBiset(b.p, out)


# -- marks -----------------------------------------------------------------------

class MarkVector(NamedTuple):
    entries: tuple  # ((BisetClass, value), ...) in deterministic order

    def as_dict(self):
        return dict(self.entries)

    def value_at(self, cls):
        for c, v in self.entries:
            if c == cls:
                return v
        return 0


def subconjugate_closure(b: FormalBiset) -> tuple:
    """Every class [R, phi|_R] under a support class, i.e. everything that can
    have a nonzero mark on b."""
    grp = ambient_group(b.p)
    seen = {}
    for cls in b.support:
        phi = cls.rep
        for r_sub in grp.all_subgroups:
            if r_sub.elements <= phi.source.elements:
                sub = biset_class(phi.restrict(r_sub))
                seen[sub.uid] = sub
    return tuple(sorted(seen.values(), key=lambda c: (c.layer, c.key)))


def mark_vector(b: FormalBiset, classes=None) -> MarkVector:
    if classes is None:
        classes = subconjugate_closure(b)
    entries = []
    for test in classes:
        entries.append((test, biset_mark(b, test)))
    return MarkVector(tuple(entries))


def biset_mark(b: FormalBiset, test) -> int:
    test_cls = test if isinstance(test, BisetClass) else biset_class(_as_morphism(test))
    total = 0
    for cls, c in b.coeffs.items():
        if cls.source.order >= test_cls.source.order:
            total += c * count_fixed_points(cls, test_cls)
    return total


# -- restriction -------------------------------------------------------------------

def restrict_left(cls: BisetClass, psi: GroupMorphism) -> FormalBiset:
    """Double-coset decomposition of the transitive biset of cls as an R-S-biset,
    the left R-action arriving through psi: R -> S."""
    phi = cls.rep
    p = phi.p
    grp = ambient_group(p)
    q_sub = phi.source
    r_sub = psi.source
    psi_image = psi.image
    coeffs = {}
    seen = set()
    total_ratio = 0
    for t in grp.elements:
        if t in seen:
            continue
        coset = {a * t * q for a in psi_image.elements for q in q_sub.elements}
        seen |= coset
        ti = t.inv()
        a_elems = [r for r in r_sub.elements if ti * psi.mapping[r] * t in q_sub.elements]
        a_sub = Subgroup(p, a_elems, _checked=True)
        mapping = {a: phi.mapping[ti * psi.mapping[a] * t] for a in a_elems}
        gens = {g: mapping[g] for g in a_sub.canonical_gens}
        piece = GroupMorphism(a_sub, gens, _mapping=mapping)
        piece_cls = biset_class(piece, left=r_sub)
        coeffs[piece_cls] = coeffs.get(piece_cls, 0) + 1
        total_ratio += r_sub.order // a_sub.order
    # size preserved: the regular right-S-orbits of the pieces count |S:Q|
    assert total_ratio == grp.full.order // q_sub.order, "restriction lost cosets"
    return FormalBiset(p, coeffs, left=r_sub)


def restrict_left_biset(b: FormalBiset, psi: GroupMorphism) -> FormalBiset:
    out = None
    for cls, c in b.items():
        piece = c * restrict_left(cls, psi)
        out = piece if out is None else out + piece
    if out is None:
        return FormalBiset(b.p, {}, left=psi.source)
    return out


# -- stability ----------------------------------------------------------------------

class StabilityResult(NamedTuple):
    ok: bool
    witness: object  # None, or (FusionMorphism, lhs, rhs)

    def __bool__(self):
        return self.ok


def _fusion_class_uids(system) -> frozenset:
    uids = {biset_class(identity_morphism(system.group.trivial)).uid}
    for rep in system.all_class_reps():
        uids.add(biset_class(rep.morphism).uid)
    return frozenset(uids)


@lru_cache(maxsize=None)
def _fusion_class_uids_cached(system):
    return _fusion_class_uids(system)


def check_condition_a(system, b: FormalBiset):
    """Support must lie inside the system's morphism classes."""
    allowed = _fusion_class_uids_cached(system)
    for cls in b.support:
        if cls.uid not in allowed:
            raise ConditionAViolationError(cls)


def _stability_sweep(system, b: FormalBiset, side: str) -> StabilityResult:
    check_condition_a(system, b)
    id_marks = {}
    for rep in system.all_class_reps():
        test = biset_class(rep.morphism)
        lhs = biset_mark(b, test)
        anchor = rep.morphism.image if side == "left" else rep.morphism.source
        key = anchor.elements
        try:
            rhs = id_marks[key]
        except KeyError:
            rhs = biset_mark(b, biset_class(identity_morphism(anchor)))
            id_marks[key] = rhs
        if lhs != rhs:
            return StabilityResult(False, (rep, lhs, rhs))
    return StabilityResult(True, None)


def is_left_stable(system, b: FormalBiset) -> StabilityResult:
    """Marks at [Q, phi] equal marks at [phi(Q), id] for every enumerated class."""
    return _stability_sweep(system, b, "left")


def is_right_stable(system, b: FormalBiset) -> StabilityResult:
    """Marks at [Q, phi] equal marks at [Q, id] for every enumerated class."""
    return _stability_sweep(system, b, "right")


# -- explicit bisets ------------------------------------------------------------------

class ExplicitBiset:
    """An explicit finite S-S-set with free actions on both sides.

    Elements are opaque indices; the two actions are stored as permutations
    for each of the three generators and composed on demand for arbitrary
    group elements via the normal form g = x**a y**b z**(c - a*b).
    """

    def __init__(self, p: int, size: int, left_gen, right_gen):
        self.p = p
        self.size = size
        grp = ambient_group(p)
        self._gens = (grp.x, grp.y, grp.z)
        self.left_gen = left_gen    # {gen: perm list}
        self.right_gen = right_gen

    def _word(self, g: GroupElement):
        # g = x**a * y**b * z**(c - a*b)
        return (g.a, g.b, (g.c - g.a * g.b) % self.p)

    def left(self, g: GroupElement, i: int) -> int:
        a, b, k = self._word(g)
        x, y, z = self._gens
        for _ in range(k):
            i = self.left_gen[z][i]
        for _ in range(b):
            i = self.left_gen[y][i]
        for _ in range(a):
            i = self.left_gen[x][i]
        return i

    def right(self, i: int, g: GroupElement) -> int:
        a, b, k = self._word(g)
        x, y, z = self._gens
        for _ in range(a):
            i = self.right_gen[x][i]
        for _ in range(b):
            i = self.right_gen[y][i]
        for _ in range(k):
            i = self.right_gen[z][i]
        return i

    def verify_free(self):
        grp = ambient_group(self.p)
        for g in grp.elements:
            if g.is_identity():
                continue
            for i in range(self.size):
                if self.left(g, i) == i:
                    raise ValueError("left action is not free")
                if self.right(i, g) == i:
                    raise ValueError("right action is not free")

    def fixed_point_count(self, psi: GroupMorphism) -> int:
        """|X^{Delta_R^psi}|: elements with r.e = e.psi(r) for all generators."""
        gens = psi.source.canonical_gens
        if not gens:
            return self.size
        count = 0
        pairs = [(r, psi.mapping[r]) for r in gens]
        for i in range(self.size):
            if all(self.left(r, i) == self.right(i, pr) for r, pr in pairs):
                count += 1
        return count

    def orbit_decomposition(self) -> FormalBiset:
        """Independent route: split into biorbits and read each stabilizer graph."""
        grp = ambient_group(self.p)
        unassigned = set(range(self.size))
        coeffs = {}
        while unassigned:
            seed = min(unassigned)
            orbit = {seed}
            frontier = [seed]
            while frontier:
                i = frontier.pop()
                for g in self._gens:
                    for j in (self.left_gen[g][i], self.right_gen[g][i]):
                        if j not in orbit:
                            orbit.add(j)
                            frontier.append(j)
            unassigned -= orbit
            right_orbit = {}
            for g in grp.elements:
                right_orbit[self.right(seed, g)] = g
            q_elems, images = [], {}
            for s in grp.elements:
                j = self.left(s, seed)
                if j in right_orbit:
                    q_elems.append(s)
                    images[s] = right_orbit[j]
            q_sub = Subgroup(self.p, q_elems)
            gens = {g: images[g] for g in q_sub.canonical_gens}
            mor = GroupMorphism(q_sub, gens, _mapping=images)
            cls = biset_class(mor)
            coeffs[cls] = coeffs.get(cls, 0) + 1
        return FormalBiset(self.p, coeffs)

    def restricted_orbit_decomposition(self, psi: GroupMorphism) -> FormalBiset:
        """Orbit split with the left action pulled back along psi: R -> S.

        Serves as the explicit-set oracle for restrict_left: each biorbit of
        (psi(R), S) is a transitive R-S-piece whose graph is read off the
        right-regular coordinates of a seed point."""
        grp = ambient_group(self.p)
        r_sub = psi.source
        psi_gen_elems = [psi.mapping[r] for r in r_sub.canonical_gens]
        unassigned = set(range(self.size))
        coeffs = {}
        while unassigned:
            seed = min(unassigned)
            orbit = {seed}
            frontier = [seed]
            while frontier:
                i = frontier.pop()
                moved = [self.left(m, i) for m in psi_gen_elems]
                moved.extend(self.right_gen[g][i] for g in self._gens)
                for j in moved:
                    if j not in orbit:
                        orbit.add(j)
                        frontier.append(j)
            unassigned -= orbit
            right_orbit = {}
            for g in grp.elements:
                right_orbit[self.right(seed, g)] = g
            a_elems, images = [], {}
            for r in r_sub.elements:
                j = self.left(psi.mapping[r], seed)
                if j in right_orbit:
                    a_elems.append(r)
                    images[r] = right_orbit[j]
            a_sub = Subgroup(self.p, a_elems)
            gens = {g: images[g] for g in a_sub.canonical_gens}
            mor = GroupMorphism(a_sub, gens, _mapping=images)
            cls = biset_class(mor, left=r_sub)
            coeffs[cls] = coeffs.get(cls, 0) + 1
        return FormalBiset(self.p, coeffs, left=r_sub)


def explicit_from_formal(b: FormalBiset, limit: int = 2_000_000) -> ExplicitBiset:
    """Materialise a genuine S-S formal biset as explicit points (t, y)."""
    if not b.is_genuine():
        raise ValueError("only genuine bisets (nonnegative integers) can be realised")
    p = b.p
    grp = ambient_group(p)
    n = b.size()
    if n > limit:
        raise ResourceLimitError(f"explicit biset would have {n} > {limit} points")
    blocks = []
    for cls, mult in b.items():
        for copy in range(int(mult)):
            reps = grp.transversal(cls.rep.source)
            blocks.append((cls, copy, reps))
    idx = 0
    y_index = {g: i for i, g in enumerate(grp.elements)}
    offsets = []
    for bi, (cls, copy, reps) in enumerate(blocks):
        offsets.append(idx)
        idx += len(reps) * len(grp.elements)
    size = idx
    left_gen = {g: [0] * size for g in (grp.x, grp.y, grp.z)}
    right_gen = {g: [0] * size for g in (grp.x, grp.y, grp.z)}
    for bi, (cls, copy, reps) in enumerate(blocks):
        base = offsets[bi]
        phi = cls.rep
        q_sub = phi.source
        rep_pos = {}
        for ti, t in enumerate(reps):
            for q in q_sub.elements:
                rep_pos[t * q] = (ti, q)
        n_y = len(grp.elements)
        for ti, t in enumerate(reps):
            for g in (grp.x, grp.y, grp.z):
                ti2, q = rep_pos[g * t]
                shift = phi.mapping[q]
                for yi, y in enumerate(grp.elements):
                    left_gen[g][base + ti * n_y + yi] = (
                        base + ti2 * n_y + y_index[shift * y])
        for g in (grp.x, grp.y, grp.z):
            for ti in range(len(reps)):
                for yi, y in enumerate(grp.elements):
                    right_gen[g][base + ti * n_y + yi] = (
                        base + ti * n_y + y_index[y * g])
    return ExplicitBiset(p, size, left_gen, right_gen)


def _product_explicit(a: FormalBiset, x_b: ExplicitBiset, limit: int) -> ExplicitBiset:
    """X x_S Y for X the formal biset `a` (labels x section form) and Y explicit."""
    p = a.p
    grp = ambient_group(p)
    labels = []  # (cls, copy, transversal)
    for cls, mult in a.items():
        reps = grp.transversal(cls.rep.source)
        for copy in range(int(mult)):
            labels.append((cls, reps))
    n_labels = sum(len(reps) for _, reps in labels)
    size = n_labels * x_b.size
    if size > limit:
        raise ResourceLimitError(f"composite would have {size} > {limit} points")
    # flatten labels
    flat = []
    for cls, reps in labels:
        q_sub = cls.rep.source
        rep_pos = {}
        for ti, t in enumerate(reps):
            for q in q_sub.elements:
                rep_pos[t * q] = (ti, q)
        flat.append((cls, reps, rep_pos))
    offsets = []
    acc = 0
    for cls, reps, _ in flat:
        offsets.append(acc)
        acc += len(reps)
    left_gen = {g: [0] * size for g in (grp.x, grp.y, grp.z)}
    right_gen = {g: [0] * size for g in (grp.x, grp.y, grp.z)}
    m = x_b.size
    for li, (cls, reps, rep_pos) in enumerate(flat):
        base = offsets[li]
        phi = cls.rep
        for ti, t in enumerate(reps):
            for g in (grp.x, grp.y, grp.z):
                ti2, q = rep_pos[g * t]
                shift = phi.mapping[q]  # acts on the Y element from the left
                row = (base + ti) * m
                row2 = (base + ti2) * m
                for j in range(m):
                    left_gen[g][row + j] = row2 + x_b.left(shift, j)
                    right_gen[g][row + j] = row + x_b.right(j, g)
    return ExplicitBiset(p, size, left_gen, right_gen)


def compose(a: FormalBiset, b: FormalBiset, limit: int = 2_000_000,
            classes=None) -> FormalBiset:
    """Double Burnside product via the explicit-set construction, decomposed
    back into classes by marks.  [S, id] is a two-sided identity."""
    if a.p != b.p:
        raise ValueError("bisets over different primes")
    if not (a.is_genuine() and b.is_genuine()):
        raise ValueError("compose needs genuine bisets")
    x_b = explicit_from_formal(b, limit=limit)
    prod = _product_explicit(a, x_b, limit)
    return decompose_by_marks(prod, classes=classes)


@lru_cache(maxsize=None)
def all_graph_classes(p: int) -> tuple:
    """Every S x S class of graph subgroups (not only fusion-respecting ones),
    ordered by layer.  Feasible for p <= 5."""
    if p > 5:
        raise ResourceLimitError("full graph-class enumeration is limited to p <= 5")
    grp = ambient_group(p)
    found = {}
    for r_sub in grp.all_subgroups:
        gens = r_sub.canonical_gens
        if not gens:
            cls = biset_class(identity_morphism(r_sub))
            found[cls.uid] = cls
            continue
        candidates = [[g for g in grp.elements if not g.is_identity()]] * len(gens)
        if len(gens) == 1:
            pools = [(img,) for img in candidates[0]]
        else:
            pools = [(i1, i2) for i1 in candidates[0] for i2 in candidates[1]]
        from .group import morphism_from_images

        for images in pools:
            try:
                mor = morphism_from_images(r_sub, dict(zip(gens, images)))
            except MorphismError:
                continue
            cls = biset_class(mor)
            found.setdefault(cls.uid, cls)
    return tuple(sorted(found.values(), key=lambda c: (c.layer, c.key)))


def decompose_by_marks(x: ExplicitBiset, classes=None) -> FormalBiset:
    """Unique class decomposition of an explicit biset from its mark vector,
    solved layer by layer down the triangular table of marks."""
    x.verify_free()
    p = x.p
    if classes is None:
        classes = all_graph_classes(p)
    coeffs = {}
    for cls in sorted(classes, key=lambda c: (c.layer, c.key)):
        mark = x.fixed_point_count(cls.rep)
        for prev, c in coeffs.items():
            if prev.layer <= cls.layer:
                mark -= c * count_fixed_points(prev, cls)
        diag = count_fixed_points(cls, cls)
        if mark % diag:
            raise P3FusionError("marks are not an integral combination of classes")
        c = mark // diag
        if c < 0:
            raise P3FusionError("negative multiplicity: not a genuine biset")
        if c:
            coeffs[cls] = c
    out = FormalBiset(p, coeffs)
    if out.size() != x.size:
        raise P3FusionError("decomposition does not account for every point")
    return out

"""Arithmetic in the extraspecial group S of order p**3 and exponent p.

Elements are triples (a, b, c) of residues mod p multiplying by

    (a, b, c) * (a', b', c') = (a + a', b + b', c + c' + a*b')

so that x = (1,0,0), y = (0,1,0) generate S, z = (0,0,1) = [x, y] spans the
center, and every element has order dividing p (p odd).  Subgroups are stored
as explicit element sets; morphisms as full element-to-element mappings built
from generator images and verified on construction.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterable, NamedTuple

from .errors import MorphismError, PrimeMismatchError

_SMALL_PRIMES = (3, 5, 7, 11, 13, 17, 19, 23)


def require_odd_prime(p: int) -> int:
    if not isinstance(p, int) or p < 3 or p % 2 == 0:
        raise ValueError(f"p must be an odd prime, got {p!r}")
    for q in range(3, int(p**0.5) + 1, 2):
        if p % q == 0:
            raise ValueError(f"p must be an odd prime, got {p!r}")
    return p


class GroupElement(NamedTuple):
    """A point (a, b, c) of the mod-p Heisenberg group, tagged with its prime."""

    p: int
    a: int
    b: int
    c: int

    def __mul__(self, other):
        if not isinstance(other, GroupElement):
            return NotImplemented
        p = self.p
        if other.p != p:
            raise PrimeMismatchError(f"cannot multiply elements over p={p} and p={other.p}")
        return GroupElement(
            p, (self.a + other.a) % p, (self.b + other.b) % p,
            (self.c + other.c + self.a * other.b) % p,
        )

    def inv(self) -> "GroupElement":
        p = self.p
        return GroupElement(p, -self.a % p, -self.b % p, (self.a * self.b - self.c) % p)

    def __pow__(self, n: int) -> "GroupElement":
        # closed form: g^n = (na, nb, nc + C(n,2) ab)
        p = self.p
        if n < 0:
            return self.inv() ** (-n)
        return GroupElement(
            p, n * self.a % p, n * self.b % p,
            (n * self.c + (n * (n - 1) // 2) * self.a * self.b) % p,
        )

    def conj_by(self, x: "GroupElement") -> "GroupElement":
        """x * self * x**-1; only the central coordinate moves."""
        p = self.p
        return GroupElement(p, self.a, self.b, (self.c + x.a * self.b - x.b * self.a) % p)

    def is_identity(self) -> bool:
        return self.a == 0 and self.b == 0 and self.c == 0

    def is_central(self) -> bool:
        return self.a == 0 and self.b == 0

    def order(self) -> int:
        return 1 if self.is_identity() else self.p

    def code(self) -> int:
        """Dense integer encoding, used for deterministic sorting and keys."""
        return (self.a * self.p + self.b) * self.p + self.c


def multiply(g: GroupElement, h: GroupElement) -> GroupElement:
    """Group product; raises PrimeMismatchError on mixed primes."""
    return g * h


def commutator(g: GroupElement, h: GroupElement) -> GroupElement:
    """[g, h] = g h g**-1 h**-1, always central here."""
    p = g.p
    if h.p != p:
        raise PrimeMismatchError(f"cannot commutate elements over p={p} and p={h.p}")
    return GroupElement(p, 0, 0, (g.a * h.b - g.b * h.a) % p)


class Subgroup:
    """An explicit subgroup of the ambient group for one prime."""

    __slots__ = ("p", "elements", "order", "_sorted", "_gens", "_hash")

    def __init__(self, p: int, elements: Iterable[GroupElement], _checked: bool = False):
        self.p = p
        self.elements = frozenset(elements)
        self.order = len(self.elements)
        self._sorted = None
        self._gens = None
        self._hash = hash((p, self.elements))
        if not _checked:
            self._validate()

    def _validate(self):
        p = self.p
        if GroupElement(p, 0, 0, 0) not in self.elements:
            raise ValueError("subgroup must contain the identity")
        if p**3 % self.order != 0:
            raise ValueError(f"order {self.order} does not divide {p**3}")
        for g in self.elements:
            if g.p != p:
                raise PrimeMismatchError("subgroup elements over mixed primes")
            if g.inv() not in self.elements:
                raise ValueError(f"subgroup not closed under inverse at {g}")
        if self.order < p**3:
            for g in self.elements:
                for h in self.elements:
                    if g * h not in self.elements:
                        raise ValueError(f"subgroup not closed under product at {g}, {h}")
        else:
            if self.order != p**3:
                raise ValueError("order exceeds the ambient group")

    @property
    def sorted_elements(self) -> tuple:
        if self._sorted is None:
            self._sorted = tuple(sorted(self.elements, key=GroupElement.code))
        return self._sorted

    @property
    def canonical_gens(self) -> tuple:
        """Content-derived generator tuple: deterministic for equal subgroups."""
        if self._gens is None:
            p = self.p
            if self.order == 1:
                self._gens = ()
            elif self.order == p:
                self._gens = (min((g for g in self.elements if not g.is_identity()),
                                  key=GroupElement.code),)
            elif self.order == p * p:
                z = GroupElement(p, 0, 0, 1)
                if z not in self.elements:
                    raise ValueError("unexpected order-p^2 subgroup without the center")
                u = min((g for g in self.elements if not g.is_central()), key=GroupElement.code)
                self._gens = (z, u)
            else:
                self._gens = (GroupElement(p, 1, 0, 0), GroupElement(p, 0, 1, 0))
        return self._gens

    def __contains__(self, g) -> bool:
        return g in self.elements

    def __iter__(self):
        return iter(self.sorted_elements)

    def __len__(self) -> int:
        return self.order

    def __eq__(self, other) -> bool:
        return isinstance(other, Subgroup) and self.p == other.p and self.elements == other.elements

    def __hash__(self) -> int:
        return self._hash

    def __le__(self, other) -> bool:
        return self.elements <= other.elements

    def __repr__(self) -> str:
        return f"Subgroup(p={self.p}, order={self.order})"

    def conjugate_by(self, x: GroupElement) -> "Subgroup":
        return Subgroup(self.p, (g.conj_by(x) for g in self.elements), _checked=True)


class ExtraspecialGroup:
    """Ambient context for one prime: the full group and its subgroup lattice."""

    def __init__(self, p: int):
        self.p = require_odd_prime(p)
        self.identity = GroupElement(p, 0, 0, 0)
        self.x = GroupElement(p, 1, 0, 0)
        self.y = GroupElement(p, 0, 1, 0)
        self.z = GroupElement(p, 0, 0, 1)
        self.elements = tuple(
            GroupElement(p, a, b, c)
            for a in range(p) for b in range(p) for c in range(p)
        )
        self.element_set = frozenset(self.elements)
        self.full = Subgroup(p, self.elements, _checked=True)
        self.center = Subgroup(p, (GroupElement(p, 0, 0, c) for c in range(p)), _checked=True)
        self.trivial = Subgroup(p, [self.identity], _checked=True)
        self._maximals = None
        self._pinned_u = None
        self._all_subgroups = None
        self._subgroup_ids = None
        self._centralizers = {}
        self._conj_transversals = {}

    # -- subgroup construction ------------------------------------------------

    def subgroup(self, elements: Iterable[GroupElement]) -> Subgroup:
        return Subgroup(self.p, elements)

    def generated(self, gens: Iterable[GroupElement]) -> Subgroup:
        seen = {self.identity}
        frontier = [self.identity]
        gens = list(gens)
        while frontier:
            g = frontier.pop()
            for s in gens:
                h = g * s
                if h not in seen:
                    seen.add(h)
                    frontier.append(h)
        return Subgroup(self.p, seen, _checked=True)

    def cyclic(self, g: GroupElement) -> Subgroup:
        return self.generated([g])

    @property
    def pinned_line_generators(self) -> tuple:
        """u_i = x*y**i for i < p and u_p = y; one per order-p^2 subgroup."""
        if self._pinned_u is None:
            us = [self.x * self.y**i for i in range(self.p)]
            us.append(self.y)
            self._pinned_u = tuple(us)
        return self._pinned_u

    @property
    def maximal_subgroups(self) -> tuple:
        if self._maximals is None:
            self._maximals = tuple(self.generated([self.z, u]) for u in self.pinned_line_generators)
        return self._maximals

    def line_of(self, g: GroupElement) -> int:
        """Index i of the order-p^2 subgroup containing a noncentral g."""
        if g.is_central():
            raise ValueError("central elements lie on every line")
        if g.a % self.p != 0:
            return g.b * pow(g.a, self.p - 2, self.p) % self.p
        return self.p

    def centralizer(self, q: Subgroup) -> Subgroup:
        try:
            return self._centralizers[q.elements]
        except KeyError:
            pass
        gens = q.canonical_gens
        members = [
            g for g in self.elements
            if all((g.a * h.b - g.b * h.a) % self.p == 0 for h in gens)
        ]
        res = Subgroup(self.p, members, _checked=True)
        self._centralizers[q.elements] = res
        return res

    @property
    def all_subgroups(self) -> tuple:
        """Every subgroup of S, deterministically ordered by (order, content)."""
        if self._all_subgroups is None:
            subs = [self.trivial, self.center]
            for g in self.elements:
                if not g.is_central():
                    c = self.cyclic(g)
                    if c not in subs:
                        subs.append(c)
            subs.extend(self.maximal_subgroups)
            subs.append(self.full)
            uniq = {}
            for s in subs:
                uniq[s.elements] = s
            self._all_subgroups = tuple(sorted(
                uniq.values(),
                key=lambda s: (s.order, tuple(e.code() for e in s.sorted_elements)),
            ))
        return self._all_subgroups

    def subgroup_id(self, q: Subgroup) -> int:
        if self._subgroup_ids is None:
            self._subgroup_ids = {s.elements: i for i, s in enumerate(self.all_subgroups)}
        return self._subgroup_ids[q.elements]

    def transversal(self, q: Subgroup) -> tuple:
        """Lexicographic left-coset representatives of q in S."""
        reps = []
        covered = set()
        for g in self.elements:
            if g not in covered:
                reps.append(g)
                covered.update(g * h for h in q.elements)
        return tuple(reps)

    def conj_transversal(self, q: Subgroup) -> tuple:
        """Coset reps of C_S(q): enough conjugators to reach every c_x|_q."""
        key = q.elements
        try:
            return self._conj_transversals[key]
        except KeyError:
            reps = self.transversal(self.centralizer(q))
            self._conj_transversals[key] = reps
            return reps


@lru_cache(maxsize=None)
def ambient_group(p: int) -> ExtraspecialGroup:
    return ExtraspecialGroup(p)


def centralizer(q: Subgroup) -> Subgroup:
    return ambient_group(q.p).centralizer(q)


def maximal_subgroups(p: int) -> tuple:
    return ambient_group(p).maximal_subgroups


class GroupMorphism:
    """An injective homomorphism from a subgroup of S into S.

    Built from generator images; the full element mapping is materialised and
    the homomorphism property f(g*s) = f(g)*f(s) is checked for every g in the
    source and every generator s, which forces it for all pairs.
    """

    __slots__ = ("p", "source", "gen_images", "mapping", "_image", "_hash", "_cls_cache")

    def __init__(self, source: Subgroup, gen_images: dict, _mapping: dict | None = None):
        self.p = source.p
        self.source = source
        self.gen_images = dict(gen_images)
        if _mapping is not None:
            self.mapping = _mapping
        else:
            self.mapping = self._extend()
            self._verify()
        self._image = None
        self._hash = None
        self._cls_cache = None

    def _extend(self) -> dict:
        p = self.p
        identity = GroupElement(p, 0, 0, 0)
        mapping = {identity: identity}
        frontier = [identity]
        gens = list(self.gen_images.items())
        for g, img in gens:
            if g not in self.source:
                raise MorphismError(f"generator {g} outside the source subgroup")
            if img.p != p:
                raise PrimeMismatchError("generator image over a different prime")
        while frontier:
            g = frontier.pop()
            fg = mapping[g]
            for s, fs in gens:
                h = g * s
                fh = fg * fs
                known = mapping.get(h)
                if known is None:
                    mapping[h] = fh
                    frontier.append(h)
                elif known != fh:
                    raise MorphismError("generator images are inconsistent with the group law")
        if len(mapping) != self.source.order:
            raise MorphismError("generators do not generate the source subgroup")
        return mapping

    def _verify(self):
        for g, fg in self.mapping.items():
            for s, fs in self.gen_images.items():
                if self.mapping[g * s] != fg * fs:
                    raise MorphismError("generator images do not define a homomorphism")
        if len(set(self.mapping.values())) != len(self.mapping):
            raise MorphismError("generator images do not define an injective map")

    def __call__(self, g: GroupElement) -> GroupElement:
        return self.mapping[g]

    @property
    def image(self) -> Subgroup:
        if self._image is None:
            self._image = Subgroup(self.p, self.mapping.values(), _checked=True)
        return self._image

    def compose(self, other: "GroupMorphism") -> "GroupMorphism":
        """self after other; other's image must lie in self's source."""
        if not other.image.elements <= self.source.elements:
            raise MorphismError("composition out of domain")
        mapping = {g: self.mapping[h] for g, h in other.mapping.items()}
        gens = {g: mapping[g] for g in other.source.canonical_gens}
        return GroupMorphism(other.source, gens, _mapping=mapping)

    def inverse(self) -> "GroupMorphism":
        mapping = {h: g for g, h in self.mapping.items()}
        src = self.image
        gens = {g: mapping[g] for g in src.canonical_gens}
        return GroupMorphism(src, gens, _mapping=mapping)

    def restrict(self, q: Subgroup) -> "GroupMorphism":
        if not q.elements <= self.source.elements:
            raise MorphismError("restriction outside the source")
        mapping = {g: self.mapping[g] for g in q.elements}
        gens = {g: mapping[g] for g in q.canonical_gens}
        return GroupMorphism(q, gens, _mapping=mapping)

    def is_identity_map(self) -> bool:
        return all(g == h for g, h in self.mapping.items())

    def __eq__(self, other) -> bool:
        return (isinstance(other, GroupMorphism) and self.source == other.source
                and self.mapping == other.mapping)

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.source, frozenset(self.mapping.items())))
        return self._hash

    def __repr__(self) -> str:
        ims = {g: self.mapping[g] for g in self.source.canonical_gens}
        return f"GroupMorphism({ims})"


def identity_morphism(q: Subgroup) -> GroupMorphism:
    mapping = {g: g for g in q.elements}
    gens = {g: g for g in q.canonical_gens}
    return GroupMorphism(q, gens, _mapping=mapping)


def conjugation_morphism(x: GroupElement, q: Subgroup) -> GroupMorphism:
    """The map u -> x u x**-1 restricted to q."""
    if x.p != q.p:
        raise PrimeMismatchError("conjugator over a different prime")
    mapping = {g: g.conj_by(x) for g in q.elements}
    gens = {g: mapping[g] for g in q.canonical_gens}
    return GroupMorphism(q, gens, _mapping=mapping)


def morphism_from_images(source: Subgroup, gen_images: dict) -> GroupMorphism:
    """Public constructor that always runs the relation check."""
    return GroupMorphism(source, gen_images)

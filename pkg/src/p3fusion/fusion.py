"""Fusion-system data on the extraspecial group of order p**3.

A system is described by a partition of the p+1 order-p^2 subgroups into
conjugacy classes together with an integer r dividing p-1 for each class
(the index of the automorphism group of a class member over SL_2(p)).  The
outer automorphism group of S realising such a description is constructed
as an explicit matrix group inside GL_2(p) and checked against every
counting constraint the description implies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import NamedTuple

from .errors import InconsistentSpecError, UnknownSystemError
from .group import (
    GroupElement,
    GroupMorphism,
    Subgroup,
    ambient_group,
    identity_morphism,
    morphism_from_images,
    require_odd_prime,
)


# -- GL_2(p) helpers ----------------------------------------------------------

class MatrixGL2(NamedTuple):
    """An invertible 2x2 matrix ((a, b), (c, d)) over F_p."""

    p: int
    a: int
    b: int
    c: int
    d: int

    def __mul__(self, other):
        if not isinstance(other, MatrixGL2):
            return NotImplemented
        p = self.p
        return MatrixGL2(
            p,
            (self.a * other.a + self.b * other.c) % p,
            (self.a * other.b + self.b * other.d) % p,
            (self.c * other.a + self.d * other.c) % p,
            (self.c * other.b + self.d * other.d) % p,
        )

    def det(self) -> int:
        return (self.a * self.d - self.b * self.c) % self.p

    def inv(self) -> "MatrixGL2":
        p = self.p
        di = pow(self.det(), p - 2, p)
        return MatrixGL2(p, self.d * di % p, -self.b * di % p, -self.c * di % p, self.a * di % p)

    def is_identity(self) -> bool:
        return (self.a, self.b, self.c, self.d) == (1, 0, 0, 1)


def gl2_elements(p: int):
    for a, b, c, d in product(range(p), repeat=4):
        if (a * d - b * c) % p:
            yield MatrixGL2(p, a, b, c, d)


def identity_matrix(p: int) -> MatrixGL2:
    return MatrixGL2(p, 1, 0, 0, 1)


@lru_cache(maxsize=None)
def primitive_root(p: int) -> int:
    for g in range(2, p):
        x, seen = 1, set()
        for _ in range(p - 1):
            x = x * g % p
            seen.add(x)
        if len(seen) == p - 1:
            return g
    raise ValueError(f"no primitive root mod {p}")


@lru_cache(maxsize=None)
def power_subgroup(p: int, r: int) -> frozenset:
    """The order-r subgroup of F_p^* generated by mu**((p-1)/r)."""
    if (p - 1) % r:
        raise ValueError(f"r={r} does not divide p-1={p - 1}")
    h = pow(primitive_root(p), (p - 1) // r, p)
    out, x = set(), 1
    for _ in range(r):
        x = x * h % p
        out.add(x)
    return frozenset(out)


def line_vectors(p: int) -> tuple:
    """Index i < p is the line through (1, i); index p the line through (0, 1)."""
    return tuple((1, i) for i in range(p)) + ((0, 1),)


def line_index(p: int, v: tuple) -> int:
    a, b = v[0] % p, v[1] % p
    if (a, b) == (0, 0):
        raise ValueError("zero vector spans no line")
    if a:
        return b * pow(a, p - 2, p) % p
    return p


def act_on_line(m: MatrixGL2, i: int) -> int:
    p = m.p
    v = line_vectors(p)[i]
    return line_index(p, (m.a * v[0] + m.b * v[1], m.c * v[0] + m.d * v[1]))


def line_scaling(m: MatrixGL2, i: int) -> int:
    """lambda with m . u_i = lambda * u_j in the pinned basis, j = m(i)."""
    p = m.p
    v = line_vectors(p)[i]
    w = ((m.a * v[0] + m.b * v[1]) % p, (m.c * v[0] + m.d * v[1]) % p)
    t = line_vectors(p)[act_on_line(m, i)]
    if t[0]:
        return w[0] * pow(t[0], p - 2, p) % p
    return w[1] * pow(t[1], p - 2, p) % p


def matrix_closure(p: int, gens) -> frozenset:
    seen = set(gens)
    seen.add(identity_matrix(p))
    frontier = list(seen)
    gens = list(seen)
    while frontier:
        m = frontier.pop()
        for g in gens:
            for prod_ in (m * g, g * m):
                if prod_ not in seen:
                    seen.add(prod_)
                    frontier.append(prod_)
    return frozenset(seen)


# -- system descriptions ------------------------------------------------------

@dataclass(frozen=True)
class FusionClass:
    members: frozenset
    r: int


@dataclass(frozen=True)
class FusionSystemSpec:
    """p plus the partition of the p+1 lines into classes with their r values."""

    p: int
    name: str
    classes: tuple

    def __post_init__(self):
        require_odd_prime(self.p)
        seen = set()
        total = 0
        f_values = set()
        for cls in self.classes:
            if not cls.members:
                raise InconsistentSpecError("empty conjugacy class")
            if (self.p - 1) % cls.r:
                raise InconsistentSpecError(f"r={cls.r} does not divide p-1={self.p - 1}")
            if seen & cls.members:
                raise InconsistentSpecError("classes overlap")
            if not cls.members <= set(range(self.p + 2)) or max(cls.members) > self.p:
                raise InconsistentSpecError("line index out of range")
            seen |= cls.members
            total += len(cls.members)
            f_values.add(len(cls.members) * cls.r)
        if total != self.p + 1:
            raise InconsistentSpecError("classes do not cover all p+1 lines")
        if len(f_values) != 1:
            raise InconsistentSpecError(
                f"|class|*r must agree across classes, got {sorted(f_values)}")

    @property
    def f(self) -> int:
        cls = self.classes[0]
        return len(cls.members) * cls.r

    @property
    def out_order(self) -> int:
        return (self.p - 1) * self.f

    def class_of_line(self, i: int) -> FusionClass:
        for cls in self.classes:
            if i in cls.members:
                return cls
        raise ValueError(f"line {i} not covered")

    def r_of_line(self, i: int) -> int:
        return self.class_of_line(i).r

    def to_json(self) -> dict:
        return {
            "prime": self.p,
            "name": self.name,
            "classes": [
                {"lines": sorted(cls.members), "r": cls.r} for cls in self.classes
            ],
        }

    @staticmethod
    def from_json(data: dict) -> "FusionSystemSpec":
        classes = tuple(
            FusionClass(frozenset(entry["lines"]), int(entry["r"]))
            for entry in data["classes"]
        )
        return FusionSystemSpec(int(data["prime"]), str(data.get("name", "custom")), classes)


def load_spec_file(path: str) -> FusionSystemSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return FusionSystemSpec.from_json(json.load(fh))


# -- catalog of outer automorphism groups -------------------------------------

def _split_torus_normalizer(p: int) -> frozenset:
    mats = set()
    for a in range(1, p):
        for d in range(1, p):
            mats.add(MatrixGL2(p, a, 0, 0, d))
            mats.add(MatrixGL2(p, 0, a, d, 0))
    return frozenset(mats)


@lru_cache(maxsize=None)
def _nonsquare(p: int) -> int:
    squares = {x * x % p for x in range(1, p)}
    for v in range(2, p):
        if v not in squares:
            return v
    raise ValueError(f"no nonsquare mod {p}")


def _nonsplit_torus(p: int) -> frozenset:
    nu = _nonsquare(p)
    return frozenset(
        MatrixGL2(p, a, nu * b % p, b, a)
        for a in range(p) for b in range(p) if (a, b) != (0, 0)
    )


def _nonsplit_torus_normalizer(p: int) -> frozenset:
    torus = _nonsplit_torus(p)
    sigma = MatrixGL2(p, 1, 0, 0, p - 1)
    return frozenset(torus | {sigma * t for t in torus})


def _nonsplit_half_normalizer(p: int) -> frozenset:
    """Index-2 subgroup of the nonsplit normalizer: torus squares plus the flip."""
    torus = _nonsplit_torus(p)
    half = matrix_closure(p, [t * t for t in torus])
    sigma = MatrixGL2(p, 1, 0, 0, p - 1)
    return frozenset(half | {sigma * t for t in half})


def _quaternion_normalizer(p: int) -> frozenset:
    i = MatrixGL2(p, 0, p - 1, 1, 0)
    j = MatrixGL2(p, 0, 2, 2, 0)
    q8 = matrix_closure(p, [i, j])
    if len(q8) != 8:
        raise InconsistentSpecError("quaternion seed did not close to 8 matrices")
    out = []
    for m in gl2_elements(p):
        mi = m.inv()
        if all(m * q * mi in q8 for q in q8):
            out.append(m)
    return frozenset(out)


_CATALOG_BUILDERS = {
    "split-normalizer": _split_torus_normalizer,
    "nonsplit-normalizer": _nonsplit_torus_normalizer,
    "nonsplit-half": _nonsplit_half_normalizer,
    "quaternion-normalizer": _quaternion_normalizer,
}

_BUILTIN_ROWS = (
    # (p, name, builder, realizing group or None when exotic)
    (3, "D8", "split-normalizer", "2F4(2)'"),
    (3, "SD16", "nonsplit-normalizer", "J4"),
    (5, "4S4", "quaternion-normalizer", "Th"),
    (7, "D16x3", "nonsplit-half", None),
    (7, "6sq:2", "split-normalizer", None),
    (7, "SD32x3", "nonsplit-normalizer", None),
)

SYSTEM_ALIASES = {
    "d8": "D8",
    "2f4": "D8",
    "sd16": "SD16",
    "j4": "SD16",
    "th4s4": "4S4",
    "4s4": "4S4",
    "th": "4S4",
    "rv48": "D16x3",
    "d16x3": "D16x3",
    "rv72": "6sq:2",
    "6sq:2": "6sq:2",
    "rv96": "SD32x3",
    "sd32x3": "SD32x3",
}


def _line_orbits(p: int, mats: frozenset) -> list:
    orbits, seen = [], set()
    for i in range(p + 1):
        if i in seen:
            continue
        orb = {i}
        frontier = [i]
        while frontier:
            j = frontier.pop()
            for m in mats:
                k = act_on_line(m, j)
                if k not in orb:
                    orb.add(k)
                    frontier.append(k)
        seen |= orb
        orbits.append(frozenset(orb))
    return orbits


def _spec_from_matrices(p: int, name: str, mats: frozenset) -> FusionSystemSpec:
    classes = []
    for orb in _line_orbits(p, mats):
        i = min(orb)
        stab = sum(1 for m in mats if act_on_line(m, i) == i)
        if stab % (p - 1):
            raise InconsistentSpecError("line stabilizer order not divisible by p-1")
        classes.append(FusionClass(orb, stab // (p - 1)))
    classes.sort(key=lambda cls: min(cls.members))
    return FusionSystemSpec(p, name, tuple(classes))


@lru_cache(maxsize=None)
def _builtin_table():
    rows = []
    for p, name, builder, group_name in _BUILTIN_ROWS:
        mats = _CATALOG_BUILDERS[builder](p)
        spec = _spec_from_matrices(p, name, mats)
        rows.append((spec, mats, group_name))
    return tuple(rows)


def builtin_systems() -> tuple:
    """The six built-in system descriptions, in table order."""
    return tuple(row[0] for row in _builtin_table())


def realizing_group_name(spec: FusionSystemSpec):
    """ATLAS-style name of a finite group realizing the system, None if exotic."""
    for built, _, group_name in _builtin_table():
        if built == spec:
            return group_name
    return None


def resolve_system(name: str) -> FusionSystemSpec:
    canonical = SYSTEM_ALIASES.get(name.lower(), name)
    for spec in builtin_systems():
        if spec.name.lower() == canonical.lower():
            return spec
    raise UnknownSystemError(f"unknown system {name!r}; known: "
                             + ", ".join(s.name for s in builtin_systems()))


# -- consistency checks and construction of Out_F(S) --------------------------

def aut_F_V(spec: FusionSystemSpec, i: int) -> frozenset:
    """All of the automorphism group of V_i as matrices: det in <mu**((p-1)/r_i)>."""
    p = spec.p
    allowed = power_subgroup(p, spec.r_of_line(i))
    return frozenset(m for m in gl2_elements(p) if m.det() in allowed)


@dataclass(frozen=True)
class LambdaSets:
    extendable: frozenset
    nonextendable: frozenset


def lambda_sets(spec: FusionSystemSpec, i: int) -> LambdaSets:
    """Index pairs (k, l): k*l in the allowed determinant group (extendable side),
    -k*l in it (nonextendable side)."""
    p = spec.p
    allowed = power_subgroup(p, spec.r_of_line(i))
    ext = frozenset((k, l) for k in range(1, p) for l in range(1, p) if k * l % p in allowed)
    non = frozenset((k, l) for k in range(1, p) for l in range(1, p) if -k * l % p in allowed)
    return LambdaSets(ext, non)


def _verify_out_group(spec: FusionSystemSpec, mats: frozenset):
    p = spec.p
    if len(mats) != spec.out_order:
        raise InconsistentSpecError(
            f"outer group has order {len(mats)}, expected (p-1)f = {spec.out_order}")
    for m in mats:
        if m.inv() not in mats:
            raise InconsistentSpecError("outer group not closed under inverse")
    for m in mats:
        for n in mats:
            if m * n not in mats:
                raise InconsistentSpecError("outer group not closed under product")
    # determinant fibers all have size f
    fibers = {}
    for m in mats:
        fibers[m.det()] = fibers.get(m.det(), 0) + 1
    if set(fibers) != set(range(1, p)) or set(fibers.values()) != {spec.f}:
        raise InconsistentSpecError(f"determinant fibers are not uniform of size f: {fibers}")
    # orbits match the class partition; stabilizer (det, lambda) pairs match Lambda^e
    orbits = {frozenset(o) for o in _line_orbits(p, mats)}
    if orbits != {cls.members for cls in spec.classes}:
        raise InconsistentSpecError(
            f"line orbits {sorted(map(sorted, orbits))} do not match the class partition")
    for cls in spec.classes:
        lam_e = lambda_sets(spec, min(cls.members)).extendable
        for i in cls.members:
            stab_pairs = [(m.det(), line_scaling(m, i)) for m in mats if act_on_line(m, i) == i]
            if len(stab_pairs) != (p - 1) * cls.r:
                raise InconsistentSpecError(
                    f"stabilizer of line {i} has size {len(stab_pairs)}, "
                    f"expected (p-1)r = {(p - 1) * cls.r}")
            if len(set(stab_pairs)) != len(stab_pairs) or set(stab_pairs) != lam_e:
                raise InconsistentSpecError(
                    f"stabilizer action pairs at line {i} do not realise the extendable set")


def _relabel_to_spec(spec: FusionSystemSpec, mats: frozenset):
    """Conjugate a catalog group so its line orbits match spec's partition."""
    p = spec.p
    catalog_spec = _spec_from_matrices(p, spec.name, mats)
    want = {(cls.members, cls.r) for cls in spec.classes}
    have = {(cls.members, cls.r) for cls in catalog_spec.classes}
    if want == have:
        return mats
    for g in gl2_elements(p):
        mapped = {
            (frozenset(act_on_line(g, i) for i in cls.members), cls.r)
            for cls in catalog_spec.classes
        }
        if mapped == want:
            gi = g.inv()
            return frozenset(g * m * gi for m in mats)
    return None


@lru_cache(maxsize=None)
def build_out_F(spec: FusionSystemSpec) -> frozenset:
    """The outer automorphism group of S for this system, as matrices in GL_2(p).

    Built from a catalog of torus-normalizer style subgroups (relabelled to the
    requested class partition when needed) and verified against every counting
    constraint: order (p-1)f, uniform determinant fibers, line orbits equal to
    the class partition, and line stabilizers acting exactly by the extendable
    index pairs.
    """
    last_error = None
    for builder_name, builder in _CATALOG_BUILDERS.items():
        if builder_name == "quaternion-normalizer" and spec.p != 5:
            continue
        mats = builder(spec.p)
        if len(mats) != spec.out_order:
            continue
        mats = _relabel_to_spec(spec, mats)
        if mats is None:
            continue
        try:
            _verify_out_group(spec, mats)
            return mats
        except InconsistentSpecError as exc:  # try the next candidate
            last_error = exc
    if last_error is not None:
        raise InconsistentSpecError(
            f"no catalog construction satisfies {spec.name!r}: {last_error}")
    raise InconsistentSpecError(
        f"no known outer automorphism group of order {spec.out_order} for {spec.name!r}")


def f_number(spec: FusionSystemSpec) -> int:
    """|Out_F(S)|/(p-1), equal to |class|*r for every class."""
    values = {len(cls.members) * cls.r for cls in spec.classes}
    if len(values) != 1:
        raise InconsistentSpecError(f"classes disagree on |class|*r: {sorted(values)}")
    return values.pop()


# -- lifting matrices to automorphisms of S -----------------------------------

def lift_matrix_to_aut(m: MatrixGL2) -> GroupMorphism:
    """The automorphism of S acting by m on exponent vectors and by det(m) on z."""
    p = m.p
    if m.det() == 0:
        raise ValueError("matrix is not invertible")
    grp = ambient_group(p)
    images = {
        grp.x: GroupElement(p, m.a, m.c, 0),
        grp.y: GroupElement(p, m.b, m.d, 0),
    }
    return morphism_from_images(grp.full, images)


def matrix_of_automorphism(alpha: GroupMorphism) -> MatrixGL2:
    """Inverse of the lift on outer classes: read the induced map on S/Z."""
    p = alpha.p
    grp = ambient_group(p)
    fx, fy = alpha(grp.x), alpha(grp.y)
    return MatrixGL2(p, fx.a, fy.a, fx.b, fy.b)


# -- morphism representatives -------------------------------------------------

@dataclass(frozen=True)
class FusionMorphism:
    """A representative F-morphism together with its classification data.

    kind is one of "aut_s", "extendable", "nonextendable", "order_p".
    For V-to-V representatives (i, j, k, l) carry the source line, target line
    and the index pair; order-p representatives carry (xi, zeta) instead.
    """

    morphism: GroupMorphism
    kind: str
    extendable: object = None  # True/False for V-sources, None otherwise
    meta: tuple = ()

    @property
    def source(self) -> Subgroup:
        return self.morphism.source


class FusionSystem:
    """A builtin or custom system together with all derived structure."""

    def __init__(self, spec: FusionSystemSpec):
        self.spec = spec
        self.p = spec.p
        self.group = ambient_group(spec.p)
        self.out_matrices = build_out_F(spec)
        self.sorted_out = tuple(sorted(self.out_matrices))
        self.f = f_number(spec)
        self.maximals = self.group.maximal_subgroups
        self._normalize_generators()
        self._aut_s_reps = None
        self._v_reps = {}
        self._order_p_reps = None
        self._class_reps_all = None

    # -- normalization of line generators and the alpha_{i,j} family ---------

    def _normalize_generators(self):
        p = self.p
        grp = self.group
        pinned = grp.pinned_line_generators
        u = list(pinned)
        alpha_to_rep = {}
        sl_mats = [m for m in self.sorted_out if m.det() == 1]
        for cls in self.spec.classes:
            members = sorted(cls.members)
            i0 = members[0]
            alpha_to_rep[(i0, i0)] = identity_morphism(grp.full)
            for j in members[1:]:
                m = next((mm for mm in sl_mats if act_on_line(mm, i0) == j), None)
                if m is None:
                    raise InconsistentSpecError(
                        f"no determinant-1 outer element moves line {i0} to line {j}")
                lam = line_scaling(m, i0)
                u[j] = pinned[j] ** lam
                alpha = lift_matrix_to_aut(m)
                # adjust by an inner map so u_{i0} goes exactly to the new u_j
                img = alpha(u[i0])
                defect = (img.c - u[j].c) % p  # img = u_j * z**defect
                s = self._solve_commuting_conjugator(u[j], -defect % p)
                alpha = self._conjugation_by(s).compose(alpha)
                if alpha(grp.z) != grp.z or alpha(u[i0]) != u[j]:
                    raise InconsistentSpecError("generator normalization failed")
                alpha_to_rep[(i0, j)] = alpha
        self.u = tuple(u)
        self.v_subgroups = self.maximals
        self._alpha_to_rep = alpha_to_rep
        self._alpha_cache = {}
        self._verify_restrictions()

    def _verify_restrictions(self):
        """Elementwise filter in the normalized bases: the restriction of every
        outer representative to every V_i lands in the automorphism group of
        the target line (its determinant is an allowed power)."""
        p = self.p
        for m in self.sorted_out:
            alpha = lift_matrix_to_aut(m)
            k = alpha(self.group.z).c  # z -> z**k with k = det(m)
            for i in range(p + 1):
                img = alpha(self.u[i])
                j = self.group.line_of(img)
                if j != act_on_line(m, i):
                    raise InconsistentSpecError("lift does not follow the line action")
                lam = self._power_along_line(img, j)
                allowed = power_subgroup(p, self.spec.r_of_line(j))
                if k * lam % p not in allowed:
                    raise InconsistentSpecError(
                        f"restriction of {m} to line {i} leaves the target automorphism group")

    def _power_along_line(self, g: GroupElement, j: int) -> int:
        """lam with g = u_j**lam modulo the center."""
        p = self.p
        u = self.u[j]
        if u.a % p:
            return g.a * pow(u.a, p - 2, p) % p
        return g.b * pow(u.b, p - 2, p) % p

    def _conjugation_by(self, s: GroupElement) -> GroupMorphism:
        from .group import conjugation_morphism

        return conjugation_morphism(s, self.group.full)

    def _solve_commuting_conjugator(self, target: GroupElement, t: int) -> GroupElement:
        """Some s with s*target*s**-1 = target * z**t (target noncentral)."""
        p = self.p
        for s in self.group.elements:
            if (s.a * target.b - s.b * target.a) % p == t:
                return s
        raise InconsistentSpecError("no conjugator found")  # unreachable for noncentral targets

    def alpha_iso(self, i: int, j: int) -> GroupMorphism:
        """Automorphism of S with z -> z and u_i -> u_j, for conjugate lines."""
        cls = self.spec.class_of_line(i)
        if j not in cls.members:
            raise UnknownSystemError(f"lines {i} and {j} are not conjugate in {self.spec.name}")
        key = (i, j)
        if key not in self._alpha_cache:
            i0 = min(cls.members)
            a_j = self._alpha_to_rep[(i0, j)]
            a_i = self._alpha_to_rep[(i0, i)]
            self._alpha_cache[key] = a_j.compose(a_i.inverse())
        return self._alpha_cache[key]

    def normalized_isos(self) -> dict:
        out = {}
        for cls in self.spec.classes:
            for i in cls.members:
                for j in cls.members:
                    out[(i, j)] = self.alpha_iso(i, j)
        return out

    # -- representative morphism classes --------------------------------------

    def aut_s_reps(self) -> tuple:
        """One automorphism of S per outer class, tagged with its matrix."""
        if self._aut_s_reps is None:
            reps = []
            for m in self.sorted_out:
                reps.append(FusionMorphism(lift_matrix_to_aut(m), "aut_s", None, (m,)))
            self._aut_s_reps = tuple(reps)
        return self._aut_s_reps

    def v_source_reps(self, i: int) -> tuple:
        """S-S-class representatives of F-morphisms out of V_i.

        Extendable: z -> z**k, u_i -> u_j**l over conjugate targets j and
        (k, l) in the extendable index set.  Nonextendable: z -> u_j**k,
        u_i -> z**l over the nonextendable index set.
        """
        if i not in self._v_reps:
            grp = self.group
            lam = lambda_sets(self.spec, i)
            v_i = self.maximals[i]
            u_i = self.u[i]
            reps = []
            members = sorted(self.spec.class_of_line(i).members)
            for j in members:
                u_j = self.u[j]
                for (k, l) in sorted(lam.extendable):
                    mor = morphism_from_images(v_i, {grp.z: grp.z ** k, u_i: u_j ** l})
                    reps.append(FusionMorphism(mor, "extendable", True, (i, j, k, l)))
                for (k, l) in sorted(lam.nonextendable):
                    mor = morphism_from_images(v_i, {grp.z: u_j ** k, u_i: grp.z ** l})
                    reps.append(FusionMorphism(mor, "nonextendable", False, (i, j, k, l)))
            self._v_reps[i] = tuple(reps)
        return self._v_reps[i]

    def order_p_reps(self) -> tuple:
        """Class representatives of F-maps between order-p subgroups: one per
        pair (xi, zeta) with xi in {z, u_0..u_p} and zeta in {z**m, u_j**m}."""
        if self._order_p_reps is None:
            grp = self.group
            p = self.p
            sources = [grp.z] + list(self.u)
            targets = [grp.z ** m for m in range(1, p)]
            for j in range(p + 1):
                targets.extend(self.u[j] ** m for m in range(1, p))
            reps = []
            for xi in sources:
                src = grp.cyclic(xi)
                for zeta in targets:
                    mor = morphism_from_images(src, {xi: zeta})
                    reps.append(FusionMorphism(mor, "order_p", None, (xi, zeta)))
            self._order_p_reps = tuple(reps)
        return self._order_p_reps

    def all_class_reps(self) -> tuple:
        """Every enumerated F-morphism class of source order >= p."""
        if self._class_reps_all is None:
            reps = list(self.aut_s_reps())
            for i in range(self.p + 1):
                reps.extend(self.v_source_reps(i))
            reps.extend(self.order_p_reps())
            self._class_reps_all = tuple(reps)
        return self._class_reps_all

    def enumerate_hom_classes(self, q: Subgroup) -> tuple:
        """Class representatives of F-morphisms out of q (canonical sources)."""
        p = self.p
        if not q.elements <= self.group.full.elements or q.p != p:
            raise UnknownSystemError("q is not a subgroup of S")
        if q.order == p**3:
            return self.aut_s_reps()
        if q.order == p * p:
            i = self.group.line_of(next(g for g in q.elements if not g.is_central()))
            return self.v_source_reps(i)
        if q.order == p:
            gen = q.canonical_gens[0]
            if gen.is_central():
                want = self.group.z
            else:
                want = self.u[self.group.line_of(gen)]
            return tuple(r for r in self.order_p_reps() if r.meta[0] == want)
        if q.order == 1:
            return (FusionMorphism(identity_morphism(q), "trivial", None, ()),)
        raise UnknownSystemError(f"unexpected subgroup order {q.order}")

    def is_extendable_v_morphism(self, mor: GroupMorphism) -> bool:
        """Extendability of a V-source F-morphism: the center must map inside
        the center (upper-triangular shape in the line bases)."""
        return self.mapping_is_central(mor)

    def mapping_is_central(self, mor: GroupMorphism) -> bool:
        return mor(self.group.z).is_central()


@lru_cache(maxsize=None)
def fusion_system(spec: FusionSystemSpec) -> FusionSystem:
    return FusionSystem(spec)


def builtin_fusion_system(name: str) -> FusionSystem:
    return fusion_system(resolve_system(name))

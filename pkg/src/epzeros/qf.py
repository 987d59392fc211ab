"""Binary quadratic forms of negative discriminant and their class groups.

Covers reduction, enumeration of reduced classes, Gauss composition, the
cyclic decomposition of the class group, ideal class characters, prime
splitting in Q(sqrt D) and the Hecke coefficient tables a_j(p^n).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from ._arith import is_fundamental, kronecker, primes_upto, xgcd
from .errors import DomainError, InvalidDiscriminant, NonPositiveDefinite


# ---------------------------------------------------------------------------
# forms


@dataclass(frozen=True, order=True)
class BinaryQuadraticForm:
    """Q(m, n) = a m^2 + b m n + c n^2 with a > 0 and b^2 - 4ac < 0."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        for v in (self.a, self.b, self.c):
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise TypeError("form coefficients must be integers")
        object.__setattr__(self, "a", int(self.a))
        object.__setattr__(self, "b", int(self.b))
        object.__setattr__(self, "c", int(self.c))
        if self.a <= 0 or self.b * self.b - 4 * self.a * self.c >= 0:
            raise NonPositiveDefinite(f"{self.as_tuple()} is not positive definite")

    @property
    def D(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def __call__(self, m, n):
        return self.a * m * m + self.b * m * n + self.c * n * n

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.a, self.b, self.c)

    def is_reduced(self) -> bool:
        a, b, c = self.a, self.b, self.c
        if not (abs(b) <= a <= c):
            return False
        if (abs(b) == a or a == c) and b < 0:
            return False
        return True

    def is_primitive(self) -> bool:
        return math.gcd(math.gcd(self.a, self.b), self.c) == 1

    def inverse(self) -> "BinaryQuadraticForm":
        return reduce_form(BinaryQuadraticForm(self.a, -self.b, self.c))

    def __str__(self):
        return f"({self.a},{self.b},{self.c})"


def _as_form(f) -> BinaryQuadraticForm:
    if isinstance(f, BinaryQuadraticForm):
        return f
    a, b, c = f
    return BinaryQuadraticForm(int(a), int(b), int(c))


def reduce_form(f) -> BinaryQuadraticForm:
    """Unique reduced representative of the SL2(Z)-class of f."""
    if not isinstance(f, BinaryQuadraticForm):
        a, b, c = (int(x) for x in f)
        if a <= 0 or b * b - 4 * a * c >= 0:
            raise NonPositiveDefinite(f"({a},{b},{c}) is not positive definite")
        f = BinaryQuadraticForm(a, b, c)
    a, b, c = f.a, f.b, f.c
    while True:
        # bring b into (-a, a]
        r = (a - b) // (2 * a)
        if r:
            c = a * r * r + b * r + c
            b = b + 2 * a * r
        if a > c:
            a, b, c = c, -b, a
            continue
        if a == c and b < 0:
            b = -b
        return BinaryQuadraticForm(a, b, c)


def check_discriminant(D: int) -> int:
    D = int(D)
    if D >= 0 or D % 4 not in (0, 1):
        raise InvalidDiscriminant(f"D={D} must be negative and congruent to 0 or 1 mod 4")
    return D


def reduced_forms(D: int, primitive: bool = True) -> list[BinaryQuadraticForm]:
    """All reduced forms of discriminant D, principal form first."""
    D = check_discriminant(D)
    out = []
    amax = math.isqrt(-D // 3) + 1
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            if (b - D) % 2:
                continue
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (a == c and b < 0):
                continue
            if primitive and math.gcd(math.gcd(a, b), c) != 1:
                continue
            out.append(BinaryQuadraticForm(a, b, c))
    out.sort(key=lambda f: (f.a, abs(f.b), -f.b))
    return out


def principal_form(D: int) -> BinaryQuadraticForm:
    D = check_discriminant(D)
    k = D % 2
    return BinaryQuadraticForm(1, k, (k - D) // 4)


def compose_forms(f, g) -> BinaryQuadraticForm:
    """Gauss-Dirichlet composition of two primitive forms of equal discriminant."""
    f, g = _as_form(f), _as_form(g)
    if f.D != g.D:
        raise InvalidDiscriminant("forms have different discriminants")
    D = f.D
    if f.a > g.a:
        f, g = g, f
    a1, b1 = f.a, f.b
    a2, b2, c2 = g.a, g.b, g.c
    s = (b1 + b2) // 2
    n = b2 - s
    if a2 % a1 == 0:
        y1, d = 0, a1
    else:
        u, _, d = xgcd(a2, a1)
        y1 = u
    if s % d == 0:
        x2, y2, d1 = 0, -1, d
    else:
        x2, y2, d1 = xgcd(s, d)
        y2 = -y2
    v1 = a1 // d1
    v2 = a2 // d1
    r = (y1 * y2 * n - x2 * c2) % v1
    b3 = b2 + 2 * v2 * r
    a3 = v1 * v2
    num = b3 * b3 - D
    assert num % (4 * a3) == 0
    return reduce_form((a3, b3, num // (4 * a3)))


# ---------------------------------------------------------------------------
# class group


@dataclass(frozen=True)
class ClassGroup:
    D: int
    classes: tuple
    composition_table: np.ndarray
    generator_indices: tuple
    cyclic_orders: tuple
    # coordinates of every class w.r.t. the generators, shape (h, r)
    coordinates: np.ndarray = field(repr=False)

    @property
    def h(self) -> int:
        return len(self.classes)

    def index_of(self, f) -> int:
        red = reduce_form(f).as_tuple()
        for i, g in enumerate(self.classes):
            if g.as_tuple() == red:
                return i
        raise DomainError(f"form {red} is not a primitive form of discriminant {self.D}")

    def inverse(self, i: int) -> int:
        f = self.classes[i]
        return self.index_of((f.a, -f.b, f.c))

    def order(self, i: int) -> int:
        k, x = 1, i
        while x != 0:
            x = self.composition_table[x, i]
            k += 1
        return k

    def power(self, i: int, e: int) -> int:
        x = 0
        for _ in range(e % self.order(i)):
            x = self.composition_table[x, i]
        return x

    def to_dict(self) -> dict:
        return {
            "discriminant": self.D,
            "h": self.h,
            "forms": [list(f.as_tuple()) for f in self.classes],
            "generator_indices": [int(i) for i in self.generator_indices],
            "cyclic_orders": [int(m) for m in self.cyclic_orders],
        }


def compose(g: ClassGroup, i: int, k: int) -> int:
    h = g.h
    if not (0 <= i < h and 0 <= k < h):
        raise IndexError("class index out of range")
    return int(g.composition_table[i, k])


def _decompose(table: np.ndarray) -> tuple[list[int], list[int], np.ndarray]:
    """Cyclic decomposition of a finite abelian group given by its Cayley table."""
    h = table.shape[0]

    def power(x, e):
        y = 0
        for _ in range(e):
            y = table[y, x]
        return y

    def order_mod(x, sub):
        k, y = 1, x
        while y not in sub:
            y = table[y, x]
            k += 1
        return k, y

    gens: list[int] = []
    orders: list[int] = []
    sub = {0}
    # subgroup element -> coordinate vector
    coords = {0: ()}
    while len(sub) < h:
        best = None
        for x in range(h):
            if x in sub:
                continue
            m, y = order_mod(x, sub)
            if best is None or m > best[0]:
                best = (m, x, y)
        m, x, y = best
        # x^m = y lies in sub; shift x so that its order is exactly m
        cy = coords[y]
        shift = 0
        for gi, (g, og) in enumerate(zip(gens, orders)):
            e = cy[gi]
            assert e % m == 0, "maximal-order lifting failed"
            shift = table[shift, power(g, (og - e // m) % og)]
        x = table[x, shift]
        assert power(x, m) == 0
        new_coords = {}
        xp = 0
        for k in range(m):
            for el, c in coords.items():
                new_coords[table[el, xp]] = c + (k,)
            xp = table[xp, x]
        gens.append(x)
        orders.append(m)
        coords = new_coords
        sub = set(coords)
    r = len(gens)
    arr = np.zeros((h, r), dtype=np.int64)
    for el, c in coords.items():
        arr[el] = c
    return gens, orders, arr


def enumerate_classes(D: int) -> ClassGroup:
    D = check_discriminant(D)
    classes = reduced_forms(D)
    index = {f.as_tuple(): i for i, f in enumerate(classes)}
    h = len(classes)
    table = np.zeros((h, h), dtype=np.int64)
    for i in range(h):
        for k in range(i, h):
            idx = index[compose_forms(classes[i], classes[k]).as_tuple()]
            table[i, k] = table[k, i] = idx
    gens, orders, coords = _decompose(table)
    if int(np.prod(orders, dtype=np.int64)) != h:
        raise AssertionError("cyclic decomposition does not cover the group")
    table.setflags(write=False)
    coords.setflags(write=False)
    return ClassGroup(D, tuple(classes), table, tuple(gens), tuple(orders), coords)


# ---------------------------------------------------------------------------
# characters


def w_of(D: int) -> int:
    return 6 if D == -3 else 4 if D == -4 else 2


@dataclass(frozen=True)
class CharacterSystem:
    group: ClassGroup
    anchor_class: int
    w_D: int
    J: int
    # angle tables: value chi_j(A) = exp(2 pi i angles[j][A])
    angles: tuple
    is_real: tuple
    coeffs: np.ndarray
    all_angles: tuple = field(repr=False)

    @property
    def D(self) -> int:
        return self.group.D

    @property
    def h(self) -> int:
        return self.group.h

    @property
    def chars(self) -> np.ndarray:
        """J x h complex value tables of the retained characters."""
        return _values(self.angles)

    def full_chars(self) -> np.ndarray:
        return _values(self.all_angles)

    def to_dict(self) -> dict:
        d = self.group.to_dict()
        d.update(
            anchor_class=self.anchor_class,
            w_D=self.w_D,
            J=self.J,
            characters=[[[a.numerator, a.denominator] for a in row] for row in self.angles],
            is_real=list(self.is_real),
            coeffs=[float(c) for c in self.coeffs],
        )
        return d


def _cos2pi(x: Fraction) -> float:
    x = x % 1
    # exact values on the quarter grid keep homomorphism tests clean
    if x.denominator in (1, 2, 4):
        return {Fraction(0): 1.0, Fraction(1, 4): 0.0, Fraction(1, 2): -1.0, Fraction(3, 4): 0.0}[x]
    return math.cos(2 * math.pi * float(x))


def _sin2pi(x: Fraction) -> float:
    return _cos2pi(Fraction(1, 4) - x)


def _values(angles) -> np.ndarray:
    return np.array([[complex(_cos2pi(a), _sin2pi(a)) for a in row] for row in angles], dtype=complex)


def character_system(g: ClassGroup, anchor: int = 0) -> CharacterSystem:
    """All class-group characters, collapsed to one per conjugate pair."""
    if not 0 <= anchor < g.h:
        raise IndexError("anchor class out of range")
    orders = g.cyclic_orders
    coords = g.coordinates
    tables = []
    for ks in itertools.product(*(range(m) for m in orders)):
        row = []
        for A in range(g.h):
            ang = sum((Fraction(k * int(coords[A, i]), orders[i]) for i, k in enumerate(ks)), Fraction(0))
            row.append(ang % 1)
        tables.append(tuple(row))
    real = sorted(t for t in tables if all(a.denominator <= 2 for a in t))
    cplx = []
    for t in tables:
        if all(a.denominator <= 2 for a in t):
            continue
        conj = tuple((-a) % 1 for a in t)
        if t < conj:
            cplx.append(t)
    cplx.sort()
    retained = real + cplx
    w = w_of(g.D)
    pref = Fraction(w, g.h)
    coeffs = []
    for t in real:
        coeffs.append(float(pref) * _cos2pi(t[anchor]))
    for t in cplx:
        coeffs.append(float(pref) * 2.0 * _cos2pi(t[anchor]))
    coeffs = np.array(coeffs, dtype=float)
    coeffs.setflags(write=False)
    return CharacterSystem(
        group=g,
        anchor_class=anchor,
        w_D=w,
        J=len(retained),
        angles=tuple(retained),
        is_real=tuple([True] * len(real) + [False] * len(cplx)),
        coeffs=coeffs,
        all_angles=tuple(sorted(tables)),
    )


def system_for_form(form) -> CharacterSystem:
    """Character system of disc(form) anchored at the class of the form."""
    f = reduce_form(form)
    g = enumerate_classes(f.D)
    return character_system(g, g.index_of(f))


# ---------------------------------------------------------------------------
# prime splitting


@dataclass(frozen=True)
class SplittingType:
    kind: str  # "split" | "inert" | "ramified"
    form: BinaryQuadraticForm | None = None
    class_index: int | None = None

    def __post_init__(self):
        if self.kind not in ("split", "inert", "ramified"):
            raise ValueError(self.kind)


def _sqrt_mod(a: int, p: int) -> int:
    """Square root of a mod an odd prime p (Tonelli-Shanks)."""
    a %= p
    if a == 0:
        return 0
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c, t, r = i, b * b % p, t * b * b % p, r * b % p
    return r


def prime_form(D: int, p: int) -> BinaryQuadraticForm:
    """Reduced form of a prime ideal above p (requires (D|p) != -1)."""
    if p == 2:
        cands = [b for b in range(4) if (b * b - D) % 8 == 0]
    else:
        r = _sqrt_mod(D, p)
        cands = sorted(
            b for b in {r, p - r, r + p, 2 * p - r} if 0 <= b < 2 * p and (b - D) % 2 == 0 and (b * b - D) % (4 * p) == 0
        )
    if not cands:
        raise ValueError(f"{p} is inert for D={D}")
    b = cands[0]
    return reduce_form((p, b, (b * b - D) // (4 * p)))


def splitting_type(D: int, p: int, group: ClassGroup | None = None) -> SplittingType:
    D = check_discriminant(D)
    k = kronecker(D, p)
    if k == -1:
        return SplittingType("inert")
    f = prime_form(D, p)
    idx = group.index_of(f) if group is not None else None
    return SplittingType("split" if k == 1 else "ramified", f, idx)


# ---------------------------------------------------------------------------
# Euler tables

SPLIT, INERT, RAMIFIED = 1, -1, 0


@dataclass(frozen=True)
class EulerTable:
    """Coefficients a_j(p^n) with log L_j(s) = sum a_j(p^n) p^{-ns}."""

    system: CharacterSystem
    P_max: int
    Y_max: float
    primes: np.ndarray
    kinds: np.ndarray  # SPLIT / INERT / RAMIFIED per prime
    prime_class: np.ndarray  # class index of the prime ideal above p (-1 if inert)
    pn: np.ndarray  # ascending prime powers
    pn_prime: np.ndarray
    pn_exp: np.ndarray
    coeffs: np.ndarray  # shape (J, len(pn))
    # per prime and character: angle of chi_j(p_1) as a float in [0, 1)
    prime_angles: np.ndarray = field(repr=False)

    @property
    def J(self) -> int:
        return self.system.J

    def coeff(self, j: int, p: int, n: int) -> float:
        idx = np.flatnonzero((self.pn_prime == p) & (self.pn_exp == n))
        if idx.size == 0:
            raise KeyError((p, n))
        return float(self.coeffs[j, idx[0]])

    def to_dict(self) -> dict:
        return {
            "discriminant": self.system.D,
            "P_max": self.P_max,
            "Y_max": self.Y_max,
            "primes": self.primes.tolist(),
            "kinds": self.kinds.tolist(),
            "prime_class": self.prime_class.tolist(),
            "pn": self.pn.tolist(),
            "coeffs": self.coeffs.tolist(),
        }


def build_euler_table(sys: CharacterSystem, P_max: int, Y_max: float | None = None) -> EulerTable:
    if P_max < 2:
        raise ValueError("P_max must be >= 2")
    D = sys.D
    if not is_fundamental(D):
        raise InvalidDiscriminant(f"Euler tables need a fundamental discriminant, got {D}")
    if Y_max is None:
        Y_max = float(P_max)
    g = sys.group
    plist = primes_upto(int(min(P_max, Y_max)))
    kinds = np.empty(plist.size, dtype=np.int8)
    pclass = np.full(plist.size, -1, dtype=np.int64)
    index = {f.as_tuple(): i for i, f in enumerate(g.classes)}
    J = sys.J
    num = np.array([[a.numerator for a in row] for row in sys.angles], dtype=np.int64).reshape(J, g.h)
    den = np.array([[a.denominator for a in row] for row in sys.angles], dtype=np.int64).reshape(J, g.h)
    angles = np.zeros((plist.size, J))
    pn, pn_p, pn_e, cols = [], [], [], []
    for i, p in enumerate(plist.tolist()):
        st = splitting_type(D, p)
        kinds[i] = {"split": SPLIT, "inert": INERT, "ramified": RAMIFIED}[st.kind]
        if st.form is not None:
            A = index[st.form.as_tuple()]
            pclass[i] = A
            angles[i] = num[:, A] / den[:, A]
        n, q = 1, p
        while q <= Y_max:
            if st.kind == "inert":
                col = np.full(J, 0.0 if n % 2 else 2.0 / n)
            else:
                A = pclass[i]
                # cos(2 pi n k/d) evaluated on the exact residue n k mod d
                r = (n * num[:, A]) % den[:, A]
                c = np.array([_cos2pi(Fraction(int(a), int(b))) for a, b in zip(r, den[:, A])])
                col = (2.0 * c if st.kind == "split" else c) / n
            pn.append(q)
            pn_p.append(p)
            pn_e.append(n)
            cols.append(col)
            n += 1
            q *= p
    order = np.argsort(np.array(pn, dtype=np.int64), kind="stable")
    pn_arr = np.array(pn, dtype=np.int64)[order]
    coeffs = np.array(cols, dtype=float).reshape(-1, J).T[:, order] if cols else np.zeros((J, 0))
    arrays = [plist, kinds, pclass, pn_arr, np.array(pn_p, dtype=np.int64)[order], np.array(pn_e, dtype=np.int64)[order], coeffs, angles]
    for a in arrays:
        a.setflags(write=False)
    return EulerTable(sys, int(P_max), float(Y_max), *arrays[:7], prime_angles=arrays[7])


def represented_values(f, bound: int) -> set[int]:
    """Values 0 < Q(m, n) <= bound taken by f (small brute force helper)."""
    f = _as_form(f)
    out = set()
    nmax = math.isqrt(4 * f.a * bound // -f.D) + 1
    for n in range(-nmax, nmax + 1):
        mmax = math.isqrt(bound // f.a + 1) + abs(f.b * n) // f.a + 1
        for m in range(-mmax, mmax + 1):
            v = f(m, n)
            if 0 < v <= bound:
                out.add(v)
    return out


def forms_from_dict(items: Iterable[Sequence[int]]) -> list[BinaryQuadraticForm]:
    return [BinaryQuadraticForm(*map(int, t)) for t in items]

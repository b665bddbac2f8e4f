"""Young diagrams, their boundary cells and characters, and the sign-reversing
involution on triples (lambda, mu, l) that cancels the YX bilinear sum term by term.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

from .errors import CapacityError, ParameterError
from .laurent import LaurentPoly2

ENUMERATION_CAP = 60
CANCELLATION_CAP = 12


class Cell(NamedTuple):
    i: int  # row, from 1
    j: int  # column, from 1


@dataclass(frozen=True, order=True)
class Partition:
    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(int(p) for p in self.parts)
        while parts and parts[-1] == 0:
            parts = parts[:-1]
        for a, b in zip(parts, parts[1:]):
            if b > a:
                raise ParameterError(f"parts must be non-increasing: {parts}")
        if parts and parts[-1] < 0:
            raise ParameterError(f"parts must be positive: {parts}")
        object.__setattr__(self, "parts", parts)

    @property
    def size(self) -> int:
        return sum(self.parts)

    @property
    def length(self) -> int:
        return len(self.parts)

    def part(self, i: int) -> int:
        """lambda_i with 1-based i; zero beyond the length."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def cells(self) -> list[Cell]:
        return [Cell(i, j) for i, row in enumerate(self.parts, 1) for j in range(1, row + 1)]

    def transpose(self) -> "Partition":
        return transpose(self)

    def __repr__(self):
        return f"Partition{self.parts}"


EMPTY = Partition()


def enumerate_partitions(d: int) -> list[Partition]:
    """All partitions of d, in lexicographically descending order."""
    if d < 0:
        raise ParameterError("size must be non-negative")
    if d > ENUMERATION_CAP:
        raise CapacityError(f"enumeration capped at size {ENUMERATION_CAP}, asked for {d}")
    return [Partition(p) for p in _partitions(d, d)]


@lru_cache(maxsize=None)
def _partitions(d: int, largest: int) -> tuple[tuple[int, ...], ...]:
    if d == 0:
        return ((),)
    out = []
    for first in range(min(d, largest), 0, -1):
        for rest in _partitions(d - first, first):
            out.append((first,) + rest)
    return tuple(out)


def transpose(lam: Partition) -> Partition:
    if not lam.parts:
        return EMPTY
    return Partition(tuple(sum(1 for p in lam.parts if p >= j) for j in range(1, lam.parts[0] + 1)))


def contents(c: Cell, hbar: complex, n: complex) -> tuple[complex, complex, complex]:
    """The three contents (xi, upsilon, zeta) of a cell."""
    i, j = c
    xi = hbar * (i - j + n * (j - 1))
    ups = hbar * (n * (j - i) + 1 - j)
    zeta = hbar * (i - 1 - n * (j - 1))
    return xi, ups, zeta


def boundary_sets(lam: Partition) -> tuple[list[Cell], list[Cell]]:
    """Addable corners (Gamma+) and removable corners (Gamma-), top row first."""
    plus, minus = [], []
    for i in range(1, lam.length + 2):
        if i == 1 or lam.part(i - 1) > lam.part(i):
            plus.append(Cell(i, lam.part(i) + 1))
    for i in range(1, lam.length + 1):
        if lam.part(i) > lam.part(i + 1):
            minus.append(Cell(i, lam.part(i)))
    return plus, minus


_PLANES = {(3, 4), (1, 4), (1, 3)}


def char(lam: Partition, a: int, b: int) -> LaurentPoly2:
    """sum over cells of q_a^(i-1) q_b^(j-1)."""
    if (a, b) not in _PLANES:
        raise ParameterError(f"character plane ({a},{b}) not supported")
    qa, qb = LaurentPoly2.q(a), LaurentPoly2.q(b)
    terms: dict[tuple[int, int], int] = {}
    for i, j in lam.cells():
        ((e1a, e4a), _), = (qa ** (i - 1)).terms.items()
        ((e1b, e4b), _), = (qb ** (j - 1)).terms.items()
        key = (e1a + e1b, e4a + e4b)
        terms[key] = terms.get(key, 0) + 1
    return LaurentPoly2(terms)


_P = {a: LaurentPoly2.P(a) for a in (1, 3, 4)}


def origami_S(plane: int, l: int, lam: Partition) -> LaurentPoly2:
    """S_34(l, lam) or S_14(l, lam) with the common exp(w) factor dropped."""
    one = LaurentPoly2.const(1)
    if plane == 34:
        return LaurentPoly2.q(3, l + 1) * (one - _P[3] * _P[4] * char(lam, 3, 4))
    if plane == 14:
        return LaurentPoly2.q(1, -l) * (one - _P[1] * _P[4] * char(lam, 1, 4))
    raise ParameterError(f"plane must be 34 or 14, got {plane}")


def cancellation_lhs(t: "OrigamiTriple") -> LaurentPoly2:
    """P1 S_34(l, lambda) + P3 S_14(l, mu)."""
    return _P[1] * origami_S(34, t.l, t.lam) + _P[3] * origami_S(14, t.l, t.mu)


@dataclass(frozen=True)
class OrigamiTriple:
    lam: Partition
    mu: Partition
    l: int

    @property
    def weight(self) -> int:
        return self.l * (self.l + 1) // 2 + self.lam.size + self.mu.size

    @property
    def sign(self) -> int:
        return -1 if self.l % 2 else 1


def involution(t: OrigamiTriple) -> OrigamiTriple:
    lam, mu, l = t.lam, t.mu, t.l
    if mu.part(1) + l >= lam.part(1):
        new_lam = (mu.part(1) + l,) + lam.parts
        new_mu = mu.parts[1:]
        out = OrigamiTriple(_checked(new_lam), _checked(new_mu), l - 1)
    else:
        new_mu = (lam.part(1) - l - 1,) + mu.parts
        new_lam = lam.parts[1:]
        out = OrigamiTriple(_checked(new_lam), _checked(new_mu), l + 1)
    return out


def _checked(parts) -> Partition:
    # a leading zero is legal only when nothing follows it
    if parts and parts[0] == 0:
        assert not any(parts[1:]), f"internal: invalid involution output {parts}"
        return EMPTY
    assert all(a >= b for a, b in zip(parts, parts[1:])), f"internal: {parts}"
    return Partition(parts)


def q4_geometric(l: int) -> LaurentPoly2:
    """(1 - q4^l) / (1 - q4) as a Laurent polynomial."""
    if l >= 0:
        return LaurentPoly2({(0, k): 1 for k in range(l)})
    return LaurentPoly2({(0, k): -1 for k in range(l, 0)})


def character_identity(t: OrigamiTriple) -> tuple[LaurentPoly2, LaurentPoly2]:
    """Both sides of the reduced character identity for a first-branch triple."""
    tt = involution(t)
    q4l = LaurentPoly2.q(4, t.l)
    lhs = (
        q4_geometric(t.l)
        + LaurentPoly2.q(3) * char(t.lam, 3, 4)
        + q4l * char(t.mu, 1, 4)
    )
    rhs = char(tt.lam, 3, 4) + q4l * LaurentPoly2.q(1) * char(tt.mu, 1, 4)
    return lhs, rhs


def enumerate_triples(d_max: int) -> list[OrigamiTriple]:
    """Every triple of weight <= d_max, ordered by (l, |lam|+|mu|, lam, mu)."""
    by_size = [enumerate_partitions(k) for k in range(d_max + 1)]
    out = []
    K = 0
    while (K + 1) * (K + 2) // 2 <= d_max:
        K += 1
    for l in range(-K - 1, K + 1):
        tri = l * (l + 1) // 2
        if tri > d_max:
            continue
        budget = d_max - tri
        for total in range(budget + 1):
            for k in range(total + 1):
                for lam in by_size[k]:
                    for mu in by_size[total - k]:
                        out.append(OrigamiTriple(lam, mu, l))
    return out


@dataclass
class CancellationReport:
    d_max: int
    n_triples: int = 0
    n_orbits: int = 0
    checks: dict[str, bool] = field(default_factory=dict)
    counterexample: str | None = None

    @property
    def passed(self) -> bool:
        return all(self.checks.values()) and self.counterexample is None

    def to_dict(self) -> dict:
        return {
            "d_max": self.d_max,
            "n_triples": self.n_triples,
            "n_orbits": self.n_orbits,
            "checks": dict(self.checks),
            "counterexample": self.counterexample,
            "passed": self.passed,
        }


def verify_cancellation(d_max: int) -> CancellationReport:
    """Exhaustively check the involution on all triples of weight <= d_max.

    Checks: |l - l~| = 1, equality of P1 S_34 + P3 S_14 (exact), weight
    preservation, Upsilon^2 = id, a fixed-point-free sign-reversing perfect
    matching of the enumerated set, and the reduced character identity.
    """
    if d_max < 0:
        raise ParameterError("d_max must be non-negative")
    if d_max > CANCELLATION_CAP:
        raise CapacityError(f"exhaustive check capped at weight {CANCELLATION_CAP}")
    triples = enumerate_triples(d_max)
    index = set(triples)
    names = ["step", "characters", "weight", "involutive", "matching", "character_identity"]
    rep = CancellationReport(d_max, n_triples=len(triples), checks={k: True for k in names})

    def fail(name, t, detail=""):
        rep.checks[name] = False
        if rep.counterexample is None:
            rep.counterexample = f"{name}: {t} {detail}".strip()

    lhs_cache: dict[OrigamiTriple, LaurentPoly2] = {}

    def lhs(t):
        if t not in lhs_cache:
            lhs_cache[t] = cancellation_lhs(t)
        return lhs_cache[t]

    partners = set()
    for t in triples:
        tt = involution(t)
        if abs(t.l - tt.l) != 1:
            fail("step", t)
        if lhs(t) != lhs(tt):
            fail("characters", t, f"-> {tt}")
        if t.weight != tt.weight:
            fail("weight", t)
        if involution(tt) != t:
            fail("involutive", t)
        if tt not in index or tt == t or tt.sign == t.sign:
            fail("matching", t)
        if tt.l == t.l - 1:
            a, b = character_identity(t)
            if a != b:
                fail("character_identity", t)
        partners.add(frozenset((t, tt)))
    if 2 * len(partners) != len(triples):
        fail("matching", "orbit count", f"{len(partners)} orbits for {len(triples)} triples")
    rep.n_orbits = len(partners)
    return rep

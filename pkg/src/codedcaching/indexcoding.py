"""Index coding instances, generalized independence number and min-rank.

Message indices are 0-based in the API; the text format is 1-based.
Index sets are handled internally as int bitmasks.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .caching import (
    IDEALIZED,
    SubfilePartition,
    canonical_subsets,
    check_demand,
    deliver,
    format_subset,
    subset_members,
    zero_error_rate,
)
from .gf2 import reduce_basis

SUBSET_CHECK_LIMIT = 25
ALPHA_LIMIT = 20
KAPPA_BUDGET = 1 << 24


class InstanceError(ValueError):
    pass


class LimitExceeded(InstanceError):
    pass


def _mask(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        m |= 1 << i
    return m


def _indices(mask: int) -> list[int]:
    return subset_members(mask)


@dataclass(frozen=True)
class Receiver:
    demand: int
    side: frozenset[int]


@dataclass(frozen=True)
class IndexInstance:
    n: int
    receivers: tuple[Receiver, ...]
    weights: tuple[int, ...] = ()
    labels: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if not self.weights:
            object.__setattr__(self, "weights", (1,) * self.n)
        if len(self.weights) != self.n:
            raise InstanceError(f"{len(self.weights)} weights for {self.n} messages")
        if any(w < 1 for w in self.weights):
            raise InstanceError("message weights must be >= 1")
        for r in self.receivers:
            if not 0 <= r.demand < self.n:
                raise InstanceError(f"demand {r.demand} outside [0, {self.n})")
            if r.demand in r.side:
                raise InstanceError(f"receiver demanding {r.demand} already has it")
            if any(not 0 <= x < self.n for x in r.side):
                raise InstanceError("side information outside the message set")

    @classmethod
    def build(cls, n: int, receivers: Iterable[tuple[int, Iterable[int]]], weights=(), labels=()):
        recs = tuple(Receiver(f, frozenset(X)) for f, X in receivers)
        return cls(n, recs, tuple(weights), tuple(labels))

    @property
    def unit_weights(self) -> bool:
        return all(w == 1 for w in self.weights)

    def _masks(self) -> list[tuple[int, int]]:
        return [(1 << r.demand, _mask(r.side)) for r in self.receivers]

    def weight_of(self, mask: int) -> int:
        return sum(self.weights[i] for i in _indices(mask))


def _in_J_mask(recv: Sequence[tuple[int, int]], C: int) -> bool:
    # C in J iff some receiver demands a member of C and holds none of C
    return any(C & f and not C & X for f, X in recv)


def in_J(inst: IndexInstance, C: Iterable[int]) -> bool:
    C = _mask(C)
    if not C:
        raise InstanceError("J membership is defined for nonempty sets")
    if C >> inst.n:
        raise InstanceError("set contains indices outside the instance")
    return _in_J_mask(inst._masks(), C)


def _submasks(mask: int) -> Iterable[int]:
    sub = mask
    while sub:
        yield sub
        sub = (sub - 1) & mask


def is_generalized_independent(
    inst: IndexInstance, H: Iterable[int], limit: int = SUBSET_CHECK_LIMIT
) -> bool:
    H = _mask(H)
    if H.bit_count() > limit:
        raise LimitExceeded(f"|H|={H.bit_count()} exceeds subset-check limit {limit}")
    recv = inst._masks()
    return all(_in_J_mask(recv, C) for C in _submasks(H))


@dataclass(frozen=True)
class GenIndepCertificate:
    H: frozenset[int]
    weighted_size: int
    unit: int = 1
    members: tuple = ()

    @property
    def bits(self) -> int:
        return self.weighted_size * self.unit


def alpha_brute(inst: IndexInstance, limit: int = ALPHA_LIMIT) -> tuple[int, GenIndepCertificate]:
    """Maximum-weight generalized independent set by branch and bound.

    Generalized independence is hereditary, so a set is grown one message
    at a time and only the new subsets (those containing the added
    message) need checking.
    """
    n = inst.n
    if n > limit:
        raise LimitExceeded(f"n={n} exceeds alpha brute-force limit {limit}")
    recv = inst._masks()
    memo: dict[int, bool] = {}

    def ok(C: int) -> bool:
        v = memo.get(C)
        if v is None:
            v = memo[C] = _in_J_mask(recv, C)
        return v

    # singletons that no receiver demands can never be in a GIS
    cand = [i for i in range(n) if ok(1 << i)]
    cand.sort(key=lambda i: -inst.weights[i])
    suffix = [0] * (len(cand) + 1)
    for j in range(len(cand) - 1, -1, -1):
        suffix[j] = suffix[j + 1] + inst.weights[cand[j]]

    best_w, best_H = 0, 0

    def extend(pos: int, H: int, w: int) -> None:
        nonlocal best_w, best_H
        if w > best_w:
            best_w, best_H = w, H
        for j in range(pos, len(cand)):
            if w + suffix[j] <= best_w:
                return
            x = 1 << cand[j]
            if all(ok(x | T) for T in _submasks(H)):
                extend(j + 1, H | x, w + inst.weights[cand[j]])

    extend(0, 0, 0)
    cert = GenIndepCertificate(frozenset(_indices(best_H)), best_w)
    return best_w, cert


def expand_units(inst: IndexInstance) -> IndexInstance:
    """Split every message of weight w into w unit messages.

    Each receiver of a weighted message becomes one receiver per unit, with
    side information expanded the same way.
    """
    offsets = list(itertools.accumulate(inst.weights, initial=0))
    n = offsets[-1]

    def units(i: int) -> range:
        return range(offsets[i], offsets[i + 1])

    receivers = []
    for r in inst.receivers:
        side = [u for x in sorted(r.side) for u in units(x)]
        receivers.extend((u, side) for u in units(r.demand))
    labels = ()
    if inst.labels:
        labels = tuple((inst.labels[i], j) for i in range(inst.n) for j in range(inst.weights[i]))
    return IndexInstance.build(n, receivers, labels=labels)


def kappa_enumeration_size(inst: IndexInstance) -> int:
    return 1 << sum(len(r.side) for r in inst.receivers)


def kappa_brute(inst: IndexInstance, budget: int = KAPPA_BUDGET) -> int:
    """Min-rank over GF(2) by exhaustive search over side-information fits.

    Receivers are taken in turn; each choice of ``v_i`` supported on the
    side information gives the row ``v_i + e_f(i)``.  The partial rank
    never decreases, so branches whose rank already reaches the best
    complete value are cut.  The search is exact.
    """
    if not inst.unit_weights:
        raise InstanceError("min-rank needs unit weights; call expand_units first")
    size = kappa_enumeration_size(inst)
    if size > budget:
        raise LimitExceeded(f"enumeration size {size} exceeds budget {budget}")
    recs = [(1 << r.demand, sorted(r.side)) for r in inst.receivers]
    # receivers with less freedom first keeps the tree narrow near the root
    recs.sort(key=lambda fr: len(fr[1]))
    choices = []
    for f, side in recs:
        opts = []
        for m in range(1 << len(side)):
            v = f
            for j, x in enumerate(side):
                if (m >> j) & 1:
                    v |= 1 << x
            opts.append(v)
        choices.append(opts)

    best = len(recs)

    def search(i: int, basis: dict[int, int]) -> None:
        nonlocal best
        if len(basis) >= best:
            return
        if i == len(choices):
            best = len(basis)
            return
        # rows already in the span cost nothing; try those first
        grow = []
        for row in choices[i]:
            res = reduce_basis(basis, row)
            if not res:
                search(i + 1, basis)
                if len(basis) >= best:
                    return
            else:
                grow.append(res)
        if len(basis) + 1 >= best:
            return
        for res in grow:
            nb = dict(basis)
            nb[res & -res] = res
            search(i + 1, nb)
            if len(basis) + 1 >= best:
                return

    search(0, {})
    return best


# Caching-induced instances ------------------------------------------------

def subfile_messages(part: SubfilePartition) -> list[tuple[int, int]]:
    """Nonempty subfiles as (file, owner set) in file then canonical order."""
    c = part.config
    return [(i, S) for i in range(c.N) for S in canonical_subsets(c.K) if part.size(i, S)]


def induced_instance(part: SubfilePartition, d: Sequence[int]) -> IndexInstance:
    """Index coding problem of the delivery phase at subfile granularity.

    Weights are subfile sizes in units of F / b^K.
    """
    c = part.config
    if c.mode != IDEALIZED:
        raise InstanceError("subfile weights are only defined for idealized placement")
    d = check_demand(c, d)
    msgs = subfile_messages(part)
    index = {m: j for j, m in enumerate(msgs)}
    weights = [c.subfile_units(S.bit_count()) for _, S in msgs]
    receivers = []
    for k in range(c.K):
        side = [index[(i, S)] for (i, S) in msgs if (S >> k) & 1]
        for (i, S) in msgs:
            if i == d[k] and not (S >> k) & 1:
                receivers.append((index[(i, S)], side))
    return IndexInstance.build(len(msgs), receivers, weights, labels=tuple(msgs))


class CertificationError(AssertionError):
    pass


def construct_B(part: SubfilePartition, d: Sequence[int], verify: bool = True) -> GenIndepCertificate:
    """Generalized independent set {X[d_i, S] : S within the users after i}.

    Members are listed user by user.  ``H`` indexes into
    ``induced_instance(part, d)``.
    """
    c = part.config
    d = check_demand(c, d)
    if len(set(d)) != len(d):
        raise InstanceError("B(I) is defined for distinct demands")
    if c.mode != IDEALIZED:
        raise InstanceError("B(I) is built on idealized placement")
    members = []
    for i in range(c.K):
        later = ((1 << c.K) - 1) & ~((1 << (i + 1)) - 1)
        for S in canonical_subsets(c.K):
            if S & ~later == 0 and part.size(d[i], S):
                members.append((d[i], S))
    inst = induced_instance(part, d)
    index = {m: j for j, m in enumerate(inst.labels)}
    H = frozenset(index[m] for m in members)
    weighted = sum(inst.weights[j] for j in H)
    cert = GenIndepCertificate(H, weighted, c.F // c.granularity, tuple(members))
    if verify and not verify_B_ordering(part, d, cert):
        raise CertificationError("B(I) failed the ordering check")
    return cert


def verify_B_ordering(part: SubfilePartition, d: Sequence[int], cert: GenIndepCertificate) -> bool:
    """Pairwise form of the generalized-independence argument.

    For a subset C of B, the member whose user comes first is wanted by a
    receiver that caches no other member of C.  It suffices that for every
    member of user i, user i caches no member belonging to users >= i.
    """
    d = tuple(d)
    owner_user = {}
    for i, f in enumerate(d):
        owner_user.setdefault(f, i)
    for f, S in cert.members:
        i = owner_user[f]
        if (S >> i) & 1:
            return False  # user i would already hold its own member
        for g, T in cert.members:
            if owner_user[g] >= i and (g, T) != (f, S) and (T >> i) & 1:
                return False
    return True


def format_member(member: tuple[int, int]) -> str:
    f, S = member
    return f"X_{{{f + 1},{format_subset(S)}}}"


@dataclass(frozen=True)
class SandwichReport:
    demand: tuple[int, ...]
    b_bits: int
    delivery_bits: int
    formula_bits: Fraction
    kappa_units: int
    certificate: GenIndepCertificate

    @property
    def certified(self) -> bool:
        return self.b_bits == self.delivery_bits == self.formula_bits


def sandwich_check(part: SubfilePartition, d: Sequence[int]) -> SandwichReport:
    """Compare the α lower bound |B|, the delivered bits, and the rate formula.

    Equality of all three certifies α = κ and optimality of the delivery
    for this demand.
    """
    c = part.config
    cert = construct_B(part, d)
    batch = deliver(part, d)
    if c.p == 0:
        formula = Fraction(c.K * c.F)
    else:
        formula = zero_error_rate(c) * c.F
    unit = c.F // c.granularity
    return SandwichReport(tuple(d), cert.bits, batch.total_bits, formula, batch.total_bits // unit, cert)


# Text format ---------------------------------------------------------------

def parse_instance(text: str) -> IndexInstance:
    """Line 1: n.  Line 2: weights.  Then ``f | x1 x2 ...`` per receiver (1-based)."""
    lines = [ln.split("#")[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) < 2:
        raise InstanceError("instance needs a message count and a weight line")
    n = int(lines[0])
    weights = [int(w) for w in lines[1].split()]
    receivers = []
    for ln in lines[2:]:
        if "|" not in ln:
            raise InstanceError(f"receiver line without '|': {ln!r}")
        f, _, rest = ln.partition("|")
        receivers.append((int(f) - 1, [int(x) - 1 for x in rest.split()]))
    return IndexInstance.build(n, receivers, weights)


def format_instance(inst: IndexInstance) -> str:
    lines = [str(inst.n), " ".join(map(str, inst.weights))]
    for r in inst.receivers:
        side = " ".join(str(x + 1) for x in sorted(r.side))
        lines.append(f"{r.demand + 1} | {side}".rstrip())
    return "\n".join(lines) + "\n"


def load_instance(path: str | Path) -> IndexInstance:
    """Read an instance file; a bare name like ``example1`` means a bundled fixture."""
    path = Path(path)
    if not path.exists():
        bundled = fixture_path(path.name if path.suffix else path.name + ".idx")
        if bundled.exists():
            path = bundled
        else:
            raise InstanceError(f"no instance file {str(path)!r}")
    return parse_instance(path.read_text())


def fixture_path(name: str) -> Path:
    return Path(__file__).parent / "data" / name

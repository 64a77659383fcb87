"""Group arithmetic, canonical element enumeration, and validated step measures.

Supported group kinds and their canonical element payloads:

* ``Z``       -- the integer line; payload is a plain ``int``.
* ``Zd``      -- the rank-``d`` integer lattice; payload is a length-``d``
  tuple of ints.
* ``free``    -- the free group on ``rank`` generators; payload is a reduced
  word, i.e. a tuple of nonzero ints in ``{-rank..-1, 1..rank}`` with no
  adjacent cancelling pair.
* ``cyclic``  -- a finite product of cyclic groups; payload is a tuple of
  residues, one per modulus.

Every kind carries one fixed enumeration ``g_0 = e, g_1, g_2, ...``:
the integer line spirals ``0, 1, -1, 2, -2, ...``; lattices go by L-infinity
shell radius with lexicographic ties; free groups go by word length with
symbol order ``1 < -1 < 2 < -2 < ...``; finite products are lexicographic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DescriptorMismatchError, UnsupportedGroupError, ValidationError

KINDS = ("Z", "Zd", "free", "cyclic")


@dataclass(frozen=True)
class GroupDescriptor:
    """Identifies one concrete group: a kind plus its parameters."""

    kind: str
    d: int | None = None
    rank: int | None = None
    moduli: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown group kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "Zd":
            if not isinstance(self.d, int) or self.d < 1:
                raise ValidationError("Zd requires a positive integer dimension d")
        elif self.kind == "free":
            if not isinstance(self.rank, int) or self.rank < 1:
                raise ValidationError("free group requires a positive integer rank")
        elif self.kind == "cyclic":
            if self.moduli is None or len(self.moduli) == 0:
                raise ValidationError("cyclic product requires at least one modulus")
            object.__setattr__(self, "moduli", tuple(int(m) for m in self.moduli))
            if any(m < 2 for m in self.moduli):
                raise ValidationError(f"moduli must all be >= 2, got {self.moduli}")

    @staticmethod
    def integer_line() -> "GroupDescriptor":
        return GroupDescriptor("Z")

    @staticmethod
    def integer_lattice(d: int) -> "GroupDescriptor":
        return GroupDescriptor("Zd", d=d)

    @staticmethod
    def free_group(rank: int) -> "GroupDescriptor":
        return GroupDescriptor("free", rank=rank)

    @staticmethod
    def cyclic_product(moduli: Sequence[int]) -> "GroupDescriptor":
        return GroupDescriptor("cyclic", moduli=tuple(moduli))

    @property
    def is_finite(self) -> bool:
        return self.kind == "cyclic"

    @property
    def order(self) -> int | None:
        if self.kind == "cyclic":
            return math.prod(self.moduli)
        return None

    def describe(self) -> str:
        if self.kind == "Z":
            return "Z"
        if self.kind == "Zd":
            return f"Z^{self.d}"
        if self.kind == "free":
            return f"F_{self.rank}"
        return "Z/" + "xZ/".join(str(m) for m in self.moduli)


# ---------------------------------------------------------------------------
# payload-level arithmetic


def identity_value(desc: GroupDescriptor):
    if desc.kind == "Z":
        return 0
    if desc.kind == "Zd":
        return (0,) * desc.d
    if desc.kind == "free":
        return ()
    return (0,) * len(desc.moduli)


def validate_value(desc: GroupDescriptor, value) -> None:
    """Raise ValidationError unless ``value`` is a canonical payload for ``desc``."""
    kind = desc.kind
    if kind == "Z":
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValidationError(f"Z element must be an int, got {value!r}")
        return
    if not isinstance(value, tuple):
        raise ValidationError(f"{desc.describe()} element must be a tuple, got {value!r}")
    if kind == "Zd":
        if len(value) != desc.d or not all(isinstance(c, int) for c in value):
            raise ValidationError(f"Z^{desc.d} element must be a length-{desc.d} int tuple")
        return
    if kind == "free":
        r = desc.rank
        for s in value:
            if not isinstance(s, int) or s == 0 or abs(s) > r:
                raise ValidationError(f"free word symbol {s!r} out of range for rank {r}")
        for a, b in zip(value, value[1:]):
            if a == -b:
                raise ValidationError(f"free word {value!r} is not reduced")
        return
    moduli = desc.moduli
    if len(value) != len(moduli):
        raise ValidationError(f"residue vector must have length {len(moduli)}")
    for x, m in zip(value, moduli):
        if not isinstance(x, int) or not 0 <= x < m:
            raise ValidationError(f"residue {x!r} not in [0, {m})")


def mul_values(desc: GroupDescriptor, a, b):
    kind = desc.kind
    if kind == "Z":
        return a + b
    if kind == "Zd":
        return tuple(x + y for x, y in zip(a, b))
    if kind == "free":
        return _reduce_concat(a, b)
    return tuple((x + y) % m for x, y, m in zip(a, b, desc.moduli))


def inverse_value(desc: GroupDescriptor, a):
    kind = desc.kind
    if kind == "Z":
        return -a
    if kind == "Zd":
        return tuple(-x for x in a)
    if kind == "free":
        return tuple(-s for s in reversed(a))
    return tuple((-x) % m for x, m in zip(a, desc.moduli))


def _reduce_concat(a: tuple, b: tuple) -> tuple:
    # a and b are reduced; cancellation can only happen at the junction.
    i = len(a)
    j = 0
    while i > 0 and j < len(b) and a[i - 1] == -b[j]:
        i -= 1
        j += 1
    return a[:i] + b[j:]


def reduce_word(symbols: Iterable[int]) -> tuple:
    """Reduce an arbitrary symbol sequence to canonical form."""
    out: list[int] = []
    for s in symbols:
        if out and out[-1] == -s:
            out.pop()
        else:
            out.append(s)
    return tuple(out)


def sort_key(desc: GroupDescriptor, value):
    """A deterministic total order on payloads, compatible with the enumeration
    for the free kinds (shorter words first)."""
    kind = desc.kind
    if kind == "Z":
        return value
    if kind == "free":
        return (len(value), tuple(_symbol_rank(s) for s in value))
    return value


def _symbol_rank(s: int) -> int:
    # symbol order 1 < -1 < 2 < -2 < ...
    return 2 * (abs(s) - 1) + (1 if s < 0 else 0)


# ---------------------------------------------------------------------------
# the fixed enumeration g_0 = e, g_1, g_2, ...


def element_at(desc: GroupDescriptor, i: int):
    """The i-th element of the group's fixed enumeration (0 is the identity)."""
    if i < 0:
        raise ValidationError(f"enumeration index must be >= 0, got {i}")
    kind = desc.kind
    if kind == "Z":
        if i == 0:
            return 0
        return (i + 1) // 2 if i % 2 == 1 else -(i // 2)
    if kind == "Zd":
        return _lattice_element_at(desc.d, i)
    if kind == "free":
        return _free_element_at(desc.rank, i)
    order = desc.order
    if i >= order:
        raise ValidationError(f"index {i} out of range for finite group of order {order}")
    out = []
    for m in reversed(desc.moduli):
        i, x = divmod(i, m)
        out.append(x)
    return tuple(reversed(out))


def index_of_value(desc: GroupDescriptor, value) -> int:
    """Inverse of :func:`element_at`."""
    validate_value(desc, value)
    kind = desc.kind
    if kind == "Z":
        if value == 0:
            return 0
        return 2 * value - 1 if value > 0 else -2 * value
    if kind == "Zd":
        return _lattice_index_of(desc.d, value)
    if kind == "free":
        return _free_index_of(desc.rank, value)
    idx = 0
    for x, m in zip(value, desc.moduli):
        idx = idx * m + x
    return idx


def _lattice_element_at(d: int, i: int) -> tuple:
    if i == 0:
        return (0,) * d
    r = 1
    while (2 * r + 1) ** d <= i:
        r += 1
    j = i - (2 * r - 1) ** d
    digits = []
    has_extreme = False
    for pos in range(d):
        L = d - pos - 1
        full = (2 * r + 1) ** L
        inner = full if has_extreme else full - (2 * r - 1) ** L
        # block v = -r
        if j < full:
            digits.append(-r)
            has_extreme = True
            continue
        j -= full
        # block -r < v < r
        if inner > 0:
            k = j // inner
            if k < 2 * r - 1:
                digits.append(-r + 1 + k)
                j -= k * inner
                j %= inner if inner else 1
                continue
            j -= (2 * r - 1) * inner
        # block v = +r
        digits.append(r)
        has_extreme = True
    return tuple(digits)


def _lattice_index_of(d: int, value: tuple) -> int:
    r = max(abs(c) for c in value)
    if r == 0:
        return 0
    rank = 0
    has_extreme = False
    for pos, v in enumerate(value):
        L = d - pos - 1
        full = (2 * r + 1) ** L
        inner = full if has_extreme else full - (2 * r - 1) ** L
        if v > -r:
            rank += full  # the v = -r block
            n_inner = min(v, r) - (-r + 1)  # inner values strictly below v
            rank += n_inner * inner
        has_extreme = has_extreme or abs(v) == r
    return (2 * r - 1) ** d + rank


def _free_alphabet(rank: int) -> list[int]:
    out = []
    for g in range(1, rank + 1):
        out.extend((g, -g))
    return out


def _free_element_at(rank: int, i: int) -> tuple:
    if i == 0:
        return ()
    alphabet = _free_alphabet(rank)
    n_sym = 2 * rank
    length = 1
    count = n_sym
    j = i - 1
    while j >= count:
        j -= count
        length += 1
        count *= n_sym - 1
    word = []
    block = count // n_sym
    k, j = divmod(j, block)
    word.append(alphabet[k])
    for _ in range(length - 1):
        block //= n_sym - 1
        k, j = divmod(j, block)
        allowed = [s for s in alphabet if s != -word[-1]]
        word.append(allowed[k])
    return tuple(word)


def _free_index_of(rank: int, word: tuple) -> int:
    if not word:
        return 0
    alphabet = _free_alphabet(rank)
    n_sym = 2 * rank
    idx = 1
    count = n_sym
    for _ in range(1, len(word)):
        idx += count
        count *= n_sym - 1
    block = count // n_sym
    idx += alphabet.index(word[0]) * block
    prev = word[0]
    for s in word[1:]:
        block //= n_sym - 1
        allowed = [t for t in alphabet if t != -prev]
        idx += allowed.index(s) * block
        prev = s
    return idx


class GroupEnumeration:
    """The fixed bijection index <-> element for one group."""

    def __init__(self, group: GroupDescriptor):
        self.group = group

    def element(self, i: int):
        return element_at(self.group, i)

    def index(self, value) -> int:
        return index_of_value(self.group, value)


# ---------------------------------------------------------------------------
# element wrapper


@dataclass(frozen=True)
class GroupElement:
    """A canonical element of a concrete group."""

    group: GroupDescriptor
    value: object

    def __post_init__(self):
        validate_value(self.group, self.value)

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.group, inverse_value(self.group, self.value))

    @property
    def is_identity(self) -> bool:
        return self.value == identity_value(self.group)


def identity(desc: GroupDescriptor) -> GroupElement:
    return GroupElement(desc, identity_value(desc))


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    if a.group != b.group:
        raise DescriptorMismatchError(
            f"cannot multiply elements of {a.group.describe()} and {b.group.describe()}"
        )
    return GroupElement(a.group, mul_values(a.group, a.value, b.value))


def inverse(a: GroupElement) -> GroupElement:
    return a.inverse()


def index_of(elem: GroupElement) -> int:
    return index_of_value(elem.group, elem.value)


# ---------------------------------------------------------------------------
# step distributions


@dataclass(frozen=True)
class StepDistribution:
    """A finitely supported step measure driving a walk.

    ``values[k]`` occurs with probability ``probs[k]``.  When every input
    probability is an exact rational (``Fraction`` or int), the measure also
    carries ``fractions`` and exact-arithmetic law computations are available.
    """

    group: GroupDescriptor
    values: tuple
    probs: tuple
    fractions: tuple | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.values) != len(self.probs):
            raise ValidationError("values and probs must have equal length")
        if len(self.values) < 2:
            raise ValidationError(
                "step distribution needs at least two support points "
                "(single-point measures have zero step entropy and are rejected)"
            )
        seen = set()
        for v in self.values:
            validate_value(self.group, v)
            if v in seen:
                raise ValidationError(f"duplicate support element {v!r}")
            seen.add(v)
        for p in self.probs:
            if not (0.0 < p <= 1.0):
                raise ValidationError(f"probability {p!r} outside (0, 1]")
        total = math.fsum(self.probs)
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"probabilities sum to {total!r}, expected 1 within 1e-12")
        if self.fractions is not None:
            if sum(self.fractions) != 1:
                raise ValidationError("exact probabilities must sum to exactly 1")
        _check_generation(self.group, self.values)

    @staticmethod
    def from_pairs(group: GroupDescriptor, pairs) -> "StepDistribution":
        """Build from (payload-or-GroupElement, probability) pairs.

        Probabilities may be floats, ints, or Fractions; if all are exact,
        the rational representation is kept alongside the float one.
        """
        values = []
        raw = []
        for v, p in pairs:
            if isinstance(v, GroupElement):
                if v.group != group:
                    raise DescriptorMismatchError("support element from a different group")
                v = v.value
            values.append(v)
            raw.append(p)
        exact = all(isinstance(p, (Fraction, int)) for p in raw)
        fractions = tuple(Fraction(p) for p in raw) if exact else None
        probs = tuple(float(p) for p in raw)
        return StepDistribution(group, tuple(values), probs, fractions)

    @property
    def support_size(self) -> int:
        return len(self.values)

    def elements(self) -> list[GroupElement]:
        return [GroupElement(self.group, v) for v in self.values]

    def prob_of(self, value) -> float:
        for v, p in zip(self.values, self.probs):
            if v == value:
                return p
        return 0.0

    def step_entropy(self) -> float:
        """Shannon entropy of a single step, in nats."""
        return -math.fsum(p * math.log(p) for p in self.probs)

    def is_uniform(self) -> bool:
        return len(set(self.probs)) == 1

    def cumulative(self):
        import numpy as np

        cum = np.cumsum(np.asarray(self.probs, dtype=np.float64))
        cum[-1] = 1.0
        return cum


def reversed_measure(mu: StepDistribution) -> StepDistribution:
    """The measure of the inverted steps: mass of x moves to x^-1."""
    values = tuple(inverse_value(mu.group, v) for v in mu.values)
    return StepDistribution(mu.group, values, mu.probs, mu.fractions)


def interval_ranges(mu: StepDistribution) -> bool:
    """Whether every visited set of this walk is an integer interval, which
    lets range states be stored as (lo, hi) pairs: true exactly when the walk
    lives on the line and never jumps more than one site."""
    return mu.group.kind == "Z" and all(abs(v) <= 1 for v in mu.values)


def _check_generation(desc: GroupDescriptor, values) -> None:
    """Sanity check that the support can generate the whole group.

    Decidable (and checked) only for Z and Zd; other kinds are taken on trust.
    """
    if desc.kind == "Z":
        g = 0
        for v in values:
            g = math.gcd(g, abs(v))
        if g != 1:
            raise ValidationError(
                f"support generates {g}Z, not Z (gcd of steps is {g}); "
                "rescale the steps or use a measure with gcd 1"
            )
    elif desc.kind == "Zd":
        idx = _lattice_span_index(values, desc.d)
        if idx != 1:
            raise ValidationError(
                "support does not span the full lattice "
                f"(sublattice index {'infinite' if idx == 0 else idx})"
            )


def _lattice_span_index(vectors, d: int) -> int:
    """Index of the integer span of ``vectors`` inside Z^d (0 if rank-deficient)."""
    vs = [list(v) for v in vectors]
    det = 1
    for col in range(d):
        pivot = None
        for v in vs:
            if v[col] == 0:
                continue
            if pivot is None:
                pivot = v
                continue
            g, x, y = _extgcd(pivot[col], v[col])
            a, b = pivot[col] // g, v[col] // g
            combined = [x * pivot[i] + y * v[i] for i in range(d)]
            reduced = [a * v[i] - b * pivot[i] for i in range(d)]
            pivot[:] = combined
            v[:] = reduced
        if pivot is None:
            return 0
        det *= abs(pivot[col])
        vs = [v for v in vs if v is not pivot]
    return det


def _extgcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


# ---------------------------------------------------------------------------
# positive gradings (homomorphisms to Z that are >= 1 on the whole support)


def positive_grading(mu: StepDistribution, bound: int = 6) -> tuple[int, ...] | None:
    """Search for integer weights certifying that every step strictly increases
    a homomorphic height, which forces escape rate 1.

    Returns generator weights (one per coordinate / free generator, a single
    weight for Z) or None.  Finite groups never admit one.
    """
    desc = mu.group
    if desc.kind == "cyclic":
        return None
    if desc.kind == "Z":
        if all(v > 0 for v in mu.values):
            return (1,)
        if all(v < 0 for v in mu.values):
            return (-1,)
        return None
    if desc.kind == "Zd":
        dims = desc.d
        evaluate = lambda w, v: sum(wi * vi for wi, vi in zip(w, v))
    else:
        dims = desc.rank
        evaluate = lambda w, v: sum((1 if s > 0 else -1) * w[abs(s) - 1] for s in v)
    from itertools import product

    for w in product(range(-bound, bound + 1), repeat=dims):
        if all(x == 0 for x in w):
            continue
        if all(evaluate(w, v) >= 1 for v in mu.values):
            return tuple(w)
    return None


def grade_value(desc: GroupDescriptor, weights: tuple[int, ...], value) -> int:
    """Evaluate a grading (as returned by :func:`positive_grading`) at a payload."""
    if desc.kind == "Z":
        return weights[0] * value
    if desc.kind == "Zd":
        return sum(w * c for w, c in zip(weights, value))
    if desc.kind == "free":
        return sum((1 if s > 0 else -1) * weights[abs(s) - 1] for s in value)
    raise UnsupportedGroupError("finite groups carry no nontrivial grading")

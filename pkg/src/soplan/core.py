"""Ground-set indexing, exact rationals, set partitions, and rate vectors.

Subsets of the ground set are plain ``int`` bitmasks over the fixed user
order: bit ``k`` stands for the user at position ``k``, so the prefix of
the first ``i`` users is ``(1 << i) - 1``.  Every numeric quantity in
this package is a :class:`fractions.Fraction`; nothing is rounded and no
comparison uses a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

#: Hard cap on the number of users.  The exact oracles enumerate all
#: 2^|V| subsets (and, for sum-rates, all partitions), so instances are
#: deliberately desk-scale.
MAX_USERS = 20


class SoplanError(Exception):
    """Base class for every error raised by this package."""


class DomainError(SoplanError):
    """An argument lies outside an operation's domain."""


class FormatError(SoplanError):
    """An input file or serialized structure is malformed."""


class CertificationError(SoplanError):
    """A result failed its own a-posteriori certificate.

    This signals an implementation bug, not bad user input.
    """


class PlanningError(SoplanError):
    """Multi-stage planning could not complete, e.g. a rank deficiency
    persisted across the bounded number of seeded retries."""


SubsetLike = Union[int, Iterable]


def parse_fraction(value, where: str = "value") -> Fraction:
    """Parse an exact rational from ``"p/q"`` / ``"n"`` strings or ints.

    Floats are rejected: they would silently break exactness.
    """
    if isinstance(value, bool):
        raise FormatError(f"{where}: expected a rational, got a bool")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        raise FormatError(f"{where}: floats are not accepted, use a 'p/q' string")
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"{where}: not a rational: {value!r}") from exc
    raise FormatError(f"{where}: cannot read a rational from {type(value).__name__}")


def bit_positions(mask: int) -> Iterator[int]:
    """Yield the set bit positions of ``mask`` in ascending order."""
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def iter_submasks(mask: int) -> Iterator[int]:
    """Yield every submask of ``mask`` in ascending numeric order,
    including 0 and ``mask`` itself."""
    sub = 0
    while True:
        yield sub
        if sub == mask:
            return
        sub = (sub - mask) & mask


@dataclass(frozen=True)
class GroundSet:
    """The ordered set of users.

    The position of a label in ``labels`` fixes the bit used for that
    user in every subset mask, the prefix sets scanned by the rate
    update loop, and all tie-breaking.
    """

    labels: tuple

    def __post_init__(self):
        labels = tuple(self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DomainError("a ground set needs at least two users")
        if len(labels) > MAX_USERS:
            raise DomainError(
                f"at most {MAX_USERS} users are supported: the exact oracles "
                f"enumerate every subset"
            )
        index = {}
        for pos, label in enumerate(labels):
            if label in index:
                raise DomainError(f"duplicate user label {label!r}")
            index[label] = pos
        object.__setattr__(self, "_index", index)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.labels)) - 1

    def position(self, label) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise DomainError(f"unknown user {label!r}") from None

    def bit(self, label) -> int:
        return 1 << self.position(label)

    def mask(self, subset: SubsetLike) -> int:
        """Normalize a subset given as a bitmask or an iterable of labels.

        An ``int`` argument is always read as a bitmask, never as a
        single label; pass ``[label]`` for a singleton.
        """
        if isinstance(subset, int):
            if not 0 <= subset <= self.full_mask:
                raise DomainError(f"mask {subset:#x} is out of range for {self.size} users")
            return subset
        mask = 0
        for label in subset:
            mask |= self.bit(label)
        return mask

    def labels_of(self, mask: int) -> tuple:
        return tuple(self.labels[pos] for pos in bit_positions(self.mask(mask)))

    def format(self, mask: int) -> str:
        return "{%s}" % ",".join(str(label) for label in self.labels_of(mask))

    def prefix_mask(self, count: int) -> int:
        """Mask of the first ``count`` users in ground order."""
        if not 1 <= count <= self.size:
            raise DomainError(f"prefix length {count} out of range")
        return (1 << count) - 1


@dataclass(frozen=True)
class RateVector:
    """Per-user transmission rates with an explicit domain.

    ``values`` holds one Fraction per ground position; positions outside
    ``domain`` are structurally zero.  Entries may be negative while an
    update loop is running; final results are certified separately.
    """

    ground: GroundSet
    values: tuple
    domain: int

    def __post_init__(self):
        values = tuple(Fraction(v) for v in self.values)
        if len(values) != self.ground.size:
            raise DomainError("rate vector length does not match the ground set")
        domain = self.ground.mask(self.domain)
        for pos, value in enumerate(values):
            if not domain >> pos & 1 and value != 0:
                raise DomainError(
                    f"nonzero rate for {self.ground.labels[pos]!r} outside the domain"
                )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "domain", domain)

    @classmethod
    def from_map(
        cls,
        ground: GroundSet,
        rates: Mapping,
        domain: SubsetLike | None = None,
    ) -> "RateVector":
        values = [Fraction(0)] * ground.size
        for label, value in rates.items():
            values[ground.position(label)] = Fraction(value)
        mask = ground.full_mask if domain is None else ground.mask(domain)
        return cls(ground, tuple(values), mask)

    @classmethod
    def zeros(cls, ground: GroundSet, domain: SubsetLike | None = None) -> "RateVector":
        return cls.from_map(ground, {}, domain)

    def rate(self, label) -> Fraction:
        return self.values[self.ground.position(label)]

    def sum_over(self, subset: SubsetLike) -> Fraction:
        """Sum of rates over ``subset``; the subset must lie inside the
        domain."""
        mask = self.ground.mask(subset)
        if mask & ~self.domain:
            raise DomainError(
                f"subset {self.ground.format(mask)} is not inside the rate "
                f"vector's domain {self.ground.format(self.domain)}"
            )
        return sum((self.values[pos] for pos in bit_positions(mask)), Fraction(0))

    @property
    def total(self) -> Fraction:
        return self.sum_over(self.domain)

    def __add__(self, other: "RateVector") -> "RateVector":
        if not isinstance(other, RateVector):
            return NotImplemented
        if other.ground is not self.ground and other.ground != self.ground:
            raise DomainError("cannot add rate vectors over different ground sets")
        values = tuple(a + b for a, b in zip(self.values, other.values))
        return RateVector(self.ground, values, self.domain | other.domain)

    def scaled(self, factor) -> "RateVector":
        factor = Fraction(factor)
        return RateVector(self.ground, tuple(v * factor for v in self.values), self.domain)

    def as_dict(self) -> dict:
        return {label: self.values[pos] for pos, label in enumerate(self.ground.labels)}

    def format(self) -> str:
        parts = [
            f"{label}:{self.values[pos]}"
            for pos, label in enumerate(self.ground.labels)
            if self.domain >> pos & 1
        ]
        return "(" + ", ".join(parts) + ")"


def rate_sum(rates: RateVector, subset: SubsetLike) -> Fraction:
    """Sum of ``rates`` over ``subset`` (must lie inside the domain)."""
    return rates.sum_over(subset)


@dataclass(frozen=True)
class Partition:
    """A set partition stored as disjoint block bitmasks.

    Blocks are kept in canonical order, sorted by their lowest member,
    which is exactly the order the restricted-growth enumeration emits.
    """

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(sorted((int(b) for b in self.blocks), key=lambda b: b & -b))
        if not blocks:
            raise DomainError("a partition needs at least one block")
        union = 0
        total_bits = 0
        for block in blocks:
            if block <= 0:
                raise DomainError("partition blocks must be nonempty masks")
            union |= block
            total_bits += block.bit_count()
        if total_bits != union.bit_count():
            raise DomainError("partition blocks overlap")
        object.__setattr__(self, "blocks", blocks)

    @property
    def union(self) -> int:
        result = 0
        for block in self.blocks:
            result |= block
        return result

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


def _iter_partition_masks(mask: int) -> Iterator[tuple]:
    """Yield the partitions of ``mask`` as tuples of block masks.

    Order follows the lexicographic restricted-growth strings over the
    elements in ascending bit order: the one-block partition comes
    first, the all-singletons partition last.
    """
    elements = [1 << pos for pos in bit_positions(mask)]
    n = len(elements)
    blocks: list = []

    def rec(pos: int) -> Iterator[tuple]:
        if pos == n:
            yield tuple(blocks)
            return
        bit = elements[pos]
        for k in range(len(blocks)):
            blocks[k] |= bit
            yield from rec(pos + 1)
            blocks[k] ^= bit
        blocks.append(bit)
        yield from rec(pos + 1)
        blocks.pop()

    return rec(0)


def enumerate_partitions(mask: int) -> Iterator[Partition]:
    """Enumerate all partitions of the nonempty subset ``mask``.

    Deterministic restricted-growth order; the number of partitions of
    an n-element subset is the n-th Bell number.
    """
    if mask == 0:
        raise DomainError("cannot partition the empty set")
    if mask < 0:
        raise DomainError("subset masks are nonnegative")
    for blocks in _iter_partition_masks(mask):
        yield Partition(blocks)

"""Entropy models for correlated sources.

Three interchangeable models expose ``entropy(subset) -> Fraction``:

* :class:`PacketSource` - each user holds a set of packets; the entropy
  of a subset is the number of distinct packets its members hold.
* :class:`LinearSource` - each user observes rows of a matrix over a
  prime field; entropy is the rank of the stacked rows.
* :class:`TableSource` - an explicit entropy value for every subset,
  validated against the polymatroid axioms at load time.

Sources are immutable after construction; per-subset results are
memoized internally, which is safe for the same reason.

JSON file format (used by :func:`load_source` / :func:`dump_source`)::

    {"model": "packet", "users": [1, 2], "packets": {"1": ["a"], "2": []}}
    {"model": "table", "users": [1, 2],
     "entropy": {"": "0", "1": "1", "2": "1", "1,2": "3/2"}}

Packet dict keys and table subset keys use ``str(label)``; table keys
join the subset's labels with commas (so labels must not contain
commas).  Rationals are ``"p/q"`` strings or integers, never floats.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from . import gf
from .core import (
    DomainError,
    FormatError,
    GroundSet,
    SubsetLike,
    bit_positions,
    iter_submasks,
    parse_fraction,
)

PACKET_MODEL = "packet"
TABLE_MODEL = "table"


class _SourceBase:
    """Shared plumbing: mask normalization, memoized Fraction entropy."""

    ground: GroundSet
    integral: bool  # True when every subset entropy is an integer

    def _h(self, mask: int):
        raise NotImplementedError

    def entropy(self, subset: SubsetLike) -> Fraction:
        mask = self.ground.mask(subset)
        cache = self._cache
        value = cache.get(mask)
        if value is None:
            value = Fraction(self._h(mask))
            cache[mask] = value
        return value


class PacketSource(_SourceBase):
    """Users holding packets; entropy counts distinct packets.

    ``possession`` maps each user label to an iterable of packet ids.
    Users absent from the mapping hold nothing.  The packet universe is
    the union of all holdings plus any extra ids passed explicitly; ids
    nobody holds do not contribute to any entropy.
    """

    def __init__(self, ground: GroundSet, possession: Mapping, universe: Iterable = None):
        self.ground = ground
        unknown = set(possession) - set(ground.labels)
        if unknown:
            raise DomainError(f"possession lists unknown users: {sorted(map(str, unknown))}")
        self.possession = {
            label: frozenset(possession.get(label, ())) for label in ground.labels
        }
        held = frozenset().union(*self.possession.values())
        if universe is not None:
            universe = frozenset(universe)
            if not held <= universe:
                raise DomainError("explicit packet universe misses some held packets")
        #: Held packets in a fixed order; column layout for RLNC lifting.
        self.packet_order = tuple(sorted(held, key=str))
        packet_index = {packet: k for k, packet in enumerate(self.packet_order)}
        self._user_bits = tuple(
            sum(1 << packet_index[p] for p in self.possession[label])
            for label in ground.labels
        )
        self.integral = True
        self._cache: dict = {}

    def _h(self, mask: int) -> int:
        bits = 0
        for pos in bit_positions(mask):
            bits |= self._user_bits[pos]
        return bits.bit_count()

    def lift(self, chunk_factor: int, field_order: int) -> "LinearSource":
        """The identity-row linear view of this source.

        Each packet becomes ``chunk_factor`` chunks; the chunk ``c`` of
        packet number ``p`` (in ``packet_order``) is column
        ``p * chunk_factor + c``.  Subset ranks equal ``chunk_factor``
        times the packet-count entropies.
        """
        if chunk_factor < 1:
            raise DomainError("chunk factor must be a positive integer")
        width = chunk_factor * len(self.packet_order)
        index = {packet: k for k, packet in enumerate(self.packet_order)}
        rows = {}
        for label in self.ground.labels:
            user_rows = []
            for packet in sorted(self.possession[label], key=str):
                base = index[packet] * chunk_factor
                for c in range(chunk_factor):
                    row = [0] * width
                    row[base + c] = 1
                    user_rows.append(tuple(row))
            rows[label] = tuple(user_rows)
        return LinearSource(self.ground, field_order, width, rows)


class LinearSource(_SourceBase):
    """Users observing rows over GF(q); entropy is rank in symbols.

    When built by lifting a packet source with chunk factor L, one
    symbol is one chunk and every entropy is L times its packet-unit
    counterpart.
    """

    def __init__(self, ground: GroundSet, field_order: int, width: int, rows: Mapping):
        if not gf.is_prime(field_order):
            raise DomainError(f"field order {field_order} is not prime")
        self.ground = ground
        self.field_order = field_order
        self.width = width
        unknown = set(rows) - set(ground.labels)
        if unknown:
            raise DomainError(f"rows listed for unknown users: {sorted(map(str, unknown))}")
        normalized = {}
        for label in ground.labels:
            user_rows = []
            for row in rows.get(label, ()):
                if len(row) != width:
                    raise DomainError(f"row of width {len(row)} for user {label!r}, expected {width}")
                user_rows.append(tuple(value % field_order for value in row))
            normalized[label] = tuple(user_rows)
        self.rows = normalized
        self.integral = True
        self._cache: dict = {}
        self._rank_cache: dict = {}

    def _h(self, mask: int) -> int:
        value = self._rank_cache.get(mask)
        if value is None:
            space = gf.RowSpace(self.field_order, self.width)
            for pos in bit_positions(mask):
                for row in self.rows[self.ground.labels[pos]]:
                    space.add(row)
            value = space.rank
            self._rank_cache[mask] = value
        return value


class TableSource(_SourceBase):
    """An explicit entropy table covering every subset.

    ``table`` maps subset masks to rationals and must cover all 2^|V|
    subsets.  With ``validate=True`` (the default) the polymatroid
    axioms are checked up front so that a bad table fails loudly here
    instead of mysteriously inside an optimization loop.
    """

    def __init__(self, ground: GroundSet, table: Mapping, validate: bool = True):
        self.ground = ground
        full = ground.full_mask
        parsed = {}
        for mask, value in table.items():
            mask = ground.mask(mask)
            parsed[mask] = Fraction(value)
        missing = [m for m in range(full + 1) if m not in parsed]
        if missing:
            raise DomainError(
                f"entropy table misses {len(missing)} subsets, first {ground.format(missing[0])}"
            )
        self.table = parsed
        self.integral = all(v.denominator == 1 for v in parsed.values())
        self._cache: dict = {}
        if validate:
            report = validate_polymatroid(self)
            if not report.ok:
                raise DomainError("entropy table is not a polymatroid:\n" + report.summary())

    def _h(self, mask: int) -> Fraction:
        return self.table[mask]


Source = PacketSource | LinearSource | TableSource


def entropy(source: Source, subset: SubsetLike) -> Fraction:
    """H(subset) under the source's model."""
    return source.entropy(subset)


def conditional_entropy(source: Source, subset: SubsetLike, given: SubsetLike) -> Fraction:
    """H(A | C) = H(A united with C) - H(C) for disjoint A and C."""
    a = source.ground.mask(subset)
    c = source.ground.mask(given)
    if a & c:
        raise DomainError(
            f"conditional entropy needs disjoint sets, got overlap "
            f"{source.ground.format(a & c)}"
        )
    return source.entropy(a | c) - source.entropy(c)


@dataclass(frozen=True)
class Violation:
    kind: str  # "normalization" | "monotonicity" | "submodularity"
    detail: str


@dataclass(frozen=True)
class PolymatroidReport:
    ok: bool
    violations: tuple

    def summary(self) -> str:
        if self.ok:
            return "polymatroid axioms hold (normalized, monotone, submodular)"
        lines = [f"{len(self.violations)} violation(s):"]
        lines += [f"  [{v.kind}] {v.detail}" for v in self.violations]
        return "\n".join(lines)


def validate_polymatroid(source: Source) -> PolymatroidReport:
    """Check normalization, monotonicity and submodularity exhaustively.

    Monotonicity is checked one element at a time and submodularity on
    all triples (C, i, j), the local characterization equivalent to the
    pairwise form.  Every violated case is reported.  Cost is
    O(2^|V| * |V|^2) entropy evaluations.
    """
    ground = source.ground
    n = ground.size
    violations = []
    h = [source.entropy(mask) for mask in range(ground.full_mask + 1)]
    if h[0] != 0:
        violations.append(Violation("normalization", f"H({{}}) = {h[0]}, expected 0"))
    for mask in range(ground.full_mask + 1):
        outside = [pos for pos in range(n) if not mask >> pos & 1]
        for ai, i in enumerate(outside):
            with_i = mask | 1 << i
            if h[mask] > h[with_i]:
                violations.append(
                    Violation(
                        "monotonicity",
                        f"H({ground.format(mask)}) = {h[mask]} > "
                        f"{h[with_i]} = H({ground.format(with_i)})",
                    )
                )
            for j in outside[ai + 1:]:
                with_j = mask | 1 << j
                both = with_i | 1 << j
                if h[with_i] + h[with_j] < h[both] + h[mask]:
                    violations.append(
                        Violation(
                            "submodularity",
                            f"H({ground.format(with_i)}) + H({ground.format(with_j)}) = "
                            f"{h[with_i] + h[with_j]} < {h[both] + h[mask]} = "
                            f"H({ground.format(both)}) + H({ground.format(mask)})",
                        )
                    )
    return PolymatroidReport(not violations, tuple(violations))


def induced_table(source: Source) -> TableSource:
    """The explicit-table view of any source (2^|V| evaluations)."""
    table = {mask: source.entropy(mask) for mask in range(source.ground.full_mask + 1)}
    return TableSource(source.ground, table, validate=False)


def reorder(source: Source, labels: Iterable) -> Source:
    """The same source over a permuted user order.

    The order matters: subset masks, prefix sets and therefore the
    subset-search trajectory all follow it.
    """
    new_ground = GroundSet(tuple(labels))
    if set(new_ground.labels) != set(source.ground.labels):
        raise DomainError("reorder must use exactly the existing user labels")
    if isinstance(source, PacketSource):
        return PacketSource(new_ground, source.possession)
    if isinstance(source, LinearSource):
        return LinearSource(new_ground, source.field_order, source.width, source.rows)
    if isinstance(source, TableSource):
        table = {}
        for new_mask in range(new_ground.full_mask + 1):
            old_mask = source.ground.mask(new_ground.labels_of(new_mask))
            table[new_mask] = source.table[old_mask]
        return TableSource(new_ground, table, validate=False)
    raise DomainError(f"cannot reorder {type(source).__name__}")


def _label_lookup(ground: GroundSet) -> dict:
    lookup = {}
    for label in ground.labels:
        key = str(label)
        if key in lookup:
            raise FormatError(f"user labels {lookup[key]!r} and {label!r} collide as {key!r}")
        lookup[key] = label
    return lookup


def source_from_dict(data) -> Source:
    """Build a source from the JSON structure documented in the module
    docstring.  Raises :class:`FormatError` on malformed input."""
    if not isinstance(data, dict):
        raise FormatError("source document must be a JSON object")
    model = data.get("model")
    if model not in (PACKET_MODEL, TABLE_MODEL):
        raise FormatError(f"unknown source model {model!r}; expected 'packet' or 'table'")
    users = data.get("users")
    if not isinstance(users, list) or not users:
        raise FormatError("'users' must be a nonempty list")
    try:
        ground = GroundSet(tuple(users))
    except DomainError as exc:
        raise FormatError(str(exc)) from None
    lookup = _label_lookup(ground)

    if model == PACKET_MODEL:
        packets = data.get("packets")
        if not isinstance(packets, dict):
            raise FormatError("'packets' must map users to packet-id lists")
        unknown = [key for key in packets if key not in lookup]
        if unknown:
            raise FormatError(f"'packets' lists unknown users: {unknown}")
        possession = {}
        for key, ids in packets.items():
            if not isinstance(ids, list):
                raise FormatError(f"packets for user {key} must be a list")
            possession[lookup[key]] = ids
        return PacketSource(ground, possession)

    for label in ground.labels:
        if "," in str(label):
            raise FormatError(f"table sources need comma-free labels, got {label!r}")
    raw = data.get("entropy")
    if not isinstance(raw, dict):
        raise FormatError("'entropy' must map subset keys to rationals")
    table = {0: Fraction(0)}
    seen = set()
    for key, value in raw.items():
        if not isinstance(key, str):
            raise FormatError("entropy keys must be strings")
        mask = 0
        if key:
            for part in key.split(","):
                if part not in lookup:
                    raise FormatError(f"entropy key {key!r} names unknown user {part!r}")
                mask |= ground.bit(lookup[part])
        if mask in seen:
            raise FormatError(f"entropy key {key!r} repeats a subset")
        seen.add(mask)
        table[mask] = parse_fraction(value, where=f"entropy[{key!r}]")
    missing = [m for m in range(ground.full_mask + 1) if m not in table]
    if missing:
        raise FormatError(
            f"entropy table misses {len(missing)} subsets, e.g. {ground.format(missing[0])}"
        )
    try:
        return TableSource(ground, table, validate=True)
    except DomainError as exc:
        raise FormatError(str(exc)) from None


def source_to_dict(source: Source) -> dict:
    ground = source.ground
    if isinstance(source, PacketSource):
        return {
            "model": PACKET_MODEL,
            "users": list(ground.labels),
            "packets": {
                str(label): sorted(source.possession[label], key=str)
                for label in ground.labels
            },
        }
    if isinstance(source, TableSource):
        return {
            "model": TABLE_MODEL,
            "users": list(ground.labels),
            "entropy": {
                ",".join(str(l) for l in ground.labels_of(mask)): str(source.table[mask])
                for mask in range(ground.full_mask + 1)
            },
        }
    raise DomainError(f"{type(source).__name__} has no file representation")


def load_source(path, validate: bool = True) -> Source:
    """Read a source JSON file.  ``validate=False`` skips the table
    polymatroid gate so a defective table can still be inspected."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path} is not valid JSON: {exc}") from None
    if not validate and isinstance(data, dict) and data.get("model") == TABLE_MODEL:
        return _table_without_gate(data)
    return source_from_dict(data)


def _table_without_gate(data) -> TableSource:
    strict = dict(data)
    try:
        return source_from_dict(strict)
    except FormatError as exc:
        if "not a polymatroid" not in str(exc):
            raise
    # Shape is fine, axioms are not: construct unvalidated.
    users = tuple(data["users"])
    ground = GroundSet(users)
    lookup = _label_lookup(ground)
    table = {0: Fraction(0)}
    for key, value in data["entropy"].items():
        mask = 0
        if key:
            for part in key.split(","):
                mask |= ground.bit(lookup[part])
        table[mask] = parse_fraction(value, where=f"entropy[{key!r}]")
    return TableSource(ground, table, validate=False)


def dump_source(source: Source, path) -> None:
    with open(path, "w") as fh:
        json.dump(source_to_dict(source), fh, indent=2, sort_keys=True)
        fh.write("\n")

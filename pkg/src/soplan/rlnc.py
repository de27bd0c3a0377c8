"""Random linear network coding simulation of a stage plan.

Packets are split into chunks, chunks become symbols of GF(q), and
every broadcast is a fresh random linear combination of whatever the
sender can currently span: its own chunks plus all earlier broadcasts.
A user decodes once its received span covers every chunk of every
packet in play.

The field order is chosen so large that a random stage essentially
never loses rank.  When a stage does come up short, its rows are
redrawn from fresh randomness (the rate budget is unchanged; the failed
draw is discarded) and the attempt count is recorded in the stage
report, so no failure passes silently.  A stage that stays short after
``STAGE_REDRAW_LIMIT`` attempts keeps its last draw and the honest
decode flags propagate to the final report.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import TYPE_CHECKING, Mapping

from .core import DomainError, FormatError
from .gf import RowSpace, is_prime, next_prime, random_combination
from .sources import PacketSource

if TYPE_CHECKING:
    from .multistage import StagePlan

STAGE_REDRAW_LIMIT = 25


@dataclass(frozen=True)
class FieldSpec:
    """A prime field big enough for ``n_users`` users sharing a source
    of ``source_entropy`` packets split into ``chunk_factor`` chunks."""

    order: int
    chunk_factor: int
    source_entropy: Fraction
    n_users: int

    def __post_init__(self):
        if not is_prime(self.order):
            raise DomainError(f"field order {self.order} is not prime")
        if self.order <= self.chunk_factor * self.source_entropy * self.n_users:
            raise DomainError(
                f"field order {self.order} is not above "
                f"{self.chunk_factor} * {self.source_entropy} * {self.n_users}"
            )


def choose_field(chunk_factor: int, source_entropy, n_users: int) -> FieldSpec:
    """The smallest prime exceeding chunk_factor * entropy * users."""
    if not isinstance(chunk_factor, int) or chunk_factor < 1:
        raise DomainError("chunk factor must be a positive integer")
    if n_users < 1:
        raise DomainError("need at least one user")
    entropy = Fraction(source_entropy)
    if entropy < 0:
        raise DomainError("source entropy cannot be negative")
    total = entropy * chunk_factor
    if total.denominator != 1:
        raise DomainError(
            f"chunk factor {chunk_factor} does not clear the entropy denominator "
            f"{entropy.denominator}"
        )
    order = next_prime(int(total) * n_users)
    return FieldSpec(order, chunk_factor, entropy, n_users)


@dataclass(frozen=True)
class Broadcast:
    stage: int
    sender: object
    row: tuple


@dataclass(frozen=True)
class StageReport:
    """Decode flags for one stage: did each target member end the stage
    spanning every chunk the target group holds?  ``attempts`` counts
    the draws the stage took; anything above 1 means an earlier draw
    lost rank and was redrawn."""

    stage: int
    target: int
    achieved: Mapping
    attempts: int = 1

    @property
    def ok(self) -> bool:
        return all(self.achieved.values())


@dataclass(frozen=True)
class Transcript:
    """Everything a simulation produced, replayable from the seed."""

    seed: int
    field_order: int
    chunk_factor: int
    broadcasts: tuple
    stage_reports: tuple
    decoded: Mapping
    ranks: Mapping
    required_rank: int

    @property
    def ok(self) -> bool:
        return all(self.decoded.values())

    def to_jsonl(self) -> str:
        """One JSON record per broadcast, then a closing summary record."""
        lines = []
        for broadcast in self.broadcasts:
            lines.append(
                json.dumps(
                    {
                        "stage": broadcast.stage,
                        "sender": str(broadcast.sender),
                        "coding_row": list(broadcast.row),
                        "field": self.field_order,
                    },
                    sort_keys=True,
                )
            )
        lines.append(
            json.dumps(
                {
                    "ok": self.ok,
                    "decoded": {str(u): flag for u, flag in self.decoded.items()},
                    "ranks": {str(u): rank for u, rank in self.ranks.items()},
                    "required_rank": self.required_rank,
                    "stage_attempts": [r.attempts for r in self.stage_reports],
                },
                sort_keys=True,
            )
        )
        return "\n".join(lines) + "\n"


def _unit_row(width: int, index: int) -> tuple:
    row = [0] * width
    row[index] = 1
    return tuple(row)


def decode_check(
    source: PacketSource,
    user,
    received_rows,
    target,
    chunk_factor: int,
    field_order: int,
) -> bool:
    """Can ``user`` reconstruct every packet held inside ``target``
    from its own observation plus ``received_rows``?"""
    lifted = source.lift(chunk_factor, field_order)
    if user not in lifted.rows:
        raise DomainError(f"unknown user {user!r}")
    space = RowSpace(field_order, lifted.width, lifted.rows[user])
    for row in received_rows:
        space.add(row)
    target_mask = source.ground.mask(target)
    packets = set()
    for label in source.ground.labels_of(target_mask):
        packets.update(source.possession[label])
    index_of = {packet: k for k, packet in enumerate(source.packet_order)}
    for packet in packets:
        base = index_of[packet] * chunk_factor
        for c in range(chunk_factor):
            if not space.contains(_unit_row(lifted.width, base + c)):
                return False
    return True


def execute_plan(source: PacketSource, plan: "StagePlan", seed: int = None) -> Transcript:
    """Run a stage plan and report per-user decode results.

    Broadcasts reach every user, not only the stage's target; later
    stages count on bystanders having heard earlier stages.  ``seed``
    defaults to the seed recorded in the plan.
    """
    if not isinstance(source, PacketSource):
        raise DomainError("the simulator needs a packet source")
    if tuple(plan.ground.labels) != tuple(source.ground.labels):
        raise FormatError("plan users do not match source users")
    ground = source.ground
    q = plan.field_order
    chunk = plan.chunk_factor
    if not is_prime(q):
        raise FormatError(f"plan field order {q} is not prime")
    h_total = source.entropy(ground.full_mask)
    if q <= chunk * h_total * ground.size:
        raise FormatError(
            f"plan field order {q} is too small for {ground.size} users times "
            f"{chunk * h_total} chunks"
        )
    lifted = source.lift(chunk, q)
    width = lifted.width
    if seed is None:
        seed = plan.seed
    rng = random.Random(seed)

    spaces = {user: RowSpace(q, width, lifted.rows[user]) for user in ground.labels}
    broadcasts = []
    reports = []
    index_of = {packet: k for k, packet in enumerate(source.packet_order)}
    for stage_index, stage in enumerate(plan.stages):
        members = ground.labels_of(stage.target)
        counts = {}
        for member in members:
            scaled = stage.rates.rate(member) * chunk
            if scaled.denominator != 1:
                raise FormatError(
                    f"stage {stage_index} rate {stage.rates.rate(member)} for "
                    f"{member!r} is not a whole number of chunks at chunk factor {chunk}"
                )
            counts[member] = int(scaled)
        group_packets = set()
        for member in members:
            group_packets.update(source.possession[member])
        needed = [
            _unit_row(width, index_of[packet] * chunk + c)
            for packet in group_packets
            for c in range(chunk)
        ]
        attempts = 0
        while True:
            attempts += 1
            trial = {user: spaces[user].clone() for user in ground.labels}
            stage_rows = []
            for sender in members:
                basis = trial[sender].basis()
                for _ in range(counts[sender]):
                    row = random_combination(basis, width, q, rng)
                    # a sender can only combine what it already spans
                    assert trial[sender].contains(row)
                    stage_rows.append((sender, row))
                    for user in ground.labels:
                        if user != sender:
                            trial[user].add(row)
            achieved = {
                member: all(trial[member].contains(row) for row in needed)
                for member in members
            }
            # redraw on a rank shortfall; without fresh rows a retry
            # cannot change the outcome, so report honestly instead
            if all(achieved.values()) or not stage_rows or attempts >= STAGE_REDRAW_LIMIT:
                spaces = trial
                broadcasts.extend(
                    Broadcast(stage_index, sender, row) for sender, row in stage_rows
                )
                reports.append(StageReport(stage_index, stage.target, achieved, attempts))
                break

    decoded = {user: spaces[user].rank == width for user in ground.labels}
    ranks = {user: spaces[user].rank for user in ground.labels}
    return Transcript(
        seed=seed,
        field_order=q,
        chunk_factor=chunk,
        broadcasts=tuple(broadcasts),
        stage_reports=tuple(reports),
        decoded=decoded,
        ranks=ranks,
        required_rank=width,
    )

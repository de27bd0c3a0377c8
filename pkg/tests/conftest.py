"""Shared fixtures: the worked five-user example, small named sources,
and a reproducible corpus of random packet sources."""

from __future__ import annotations

import random

import pytest

from soplan import GroundSet, PacketSource

CORPUS_SEED = 20260823
CORPUS_SIZE = 200


def make_five_user() -> PacketSource:
    """Five users sharing ten packets; the running example used for all
    hand-checked golden values."""
    ground = GroundSet((1, 2, 3, 4, 5))
    return PacketSource(
        ground,
        {
            1: "abcdfgij",
            2: "abcfij",
            3: "efhi",
            4: "bcej",
            5: "bcdhi",
        },
    )


def make_cyclic_triple() -> PacketSource:
    """Three users, packets shared pairwise in a cycle."""
    ground = GroundSet((1, 2, 3))
    return PacketSource(ground, {1: "ab", 2: "bc", 3: "ac"})


def make_independent_triple() -> PacketSource:
    """Three users with pairwise disjoint observations."""
    ground = GroundSet((1, 2, 3))
    return PacketSource(ground, {1: "a", 2: "b", 3: "c"})


def make_identical_pair() -> PacketSource:
    """Two users observing the same single packet; nothing to send."""
    ground = GroundSet((1, 2))
    return PacketSource(ground, {1: "p", 2: "p"})


@pytest.fixture
def five_user() -> PacketSource:
    return make_five_user()


@pytest.fixture
def cyclic_triple() -> PacketSource:
    return make_cyclic_triple()


@pytest.fixture
def independent_triple() -> PacketSource:
    return make_independent_triple()


@pytest.fixture
def identical_pair() -> PacketSource:
    return make_identical_pair()


def random_packet_source(rng: random.Random, n_users: int, n_packets: int) -> PacketSource:
    """A random possession pattern where every packet has at least one
    holder and every user holds at least one packet."""
    labels = tuple(range(1, n_users + 1))
    ground = GroundSet(labels)
    packets = [f"p{k}" for k in range(n_packets)]
    possession = {label: set() for label in labels}
    for packet in packets:
        for holder in rng.sample(labels, rng.randint(1, n_users)):
            possession[holder].add(packet)
    for label in labels:
        if not possession[label]:
            possession[label].add(rng.choice(packets))
    return PacketSource(ground, possession)


@pytest.fixture(scope="session")
def source_corpus() -> tuple:
    """200 random packet sources with 3..6 users, frozen by seed."""
    rng = random.Random(CORPUS_SEED)
    sizes = (3, 4, 5, 6)
    corpus = []
    for k in range(CORPUS_SIZE):
        n_users = sizes[k % len(sizes)]
        n_packets = rng.randint(n_users, 12)
        corpus.append(random_packet_source(rng, n_users, n_packets))
    return tuple(corpus)

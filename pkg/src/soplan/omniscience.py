"""Minimum sum-rates for omniscience and the complementarity oracle.

Two rate models are supported everywhere:

* ``asymptotic`` - rates are arbitrary rationals; the minimum sum-rate
  is the partition bound
  ``max over P of sum_{C in P} (H(X) - H(C)) / (|P| - 1)``
  taken over all partitions of X into at least two blocks.
* ``non_asymptotic`` - rates are integers (packets); the minimum
  sum-rate is the ceiling of the asymptotic one.

A rate vector r achieves omniscience of X iff every proper subset C of
X satisfies ``r(C) >= H(X) - H(X minus C)``, i.e. the members of C can
jointly make up everything the rest cannot already infer.

A non-singleton proper subset X of V is *complementary* when local
omniscience inside X followed by global omniscience costs no more than
going directly: ``H(V) - H(X) + R(X) <= R(V)`` with R per model.  Such
subsets are exactly what the staged planner peels off first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    CertificationError,
    DomainError,
    GroundSet,
    Partition,
    RateVector,
    SubsetLike,
    _iter_partition_masks,
    iter_submasks,
)
from .submodular import AlphaFunction, dilworth_truncation, run_rate_update

ASYMPTOTIC = "asymptotic"
NON_ASYMPTOTIC = "non_asymptotic"
MODELS = (ASYMPTOTIC, NON_ASYMPTOTIC)


def check_model(model: str) -> str:
    if model not in MODELS:
        raise DomainError(f"unknown model {model!r}; expected one of {MODELS}")
    return model


@dataclass(frozen=True)
class MinSumRateResult:
    """Value of the minimum sum-rate, with the partition that attains
    the bound (asymptotic model only)."""

    model: str
    value: Fraction
    maximizing_partition: Partition | None


def _min_sum_rate_asymptotic(source, mask: int):
    """Exhaustive evaluation of the partition bound.  Returns the value
    and the first maximizing partition in enumeration order."""
    h_x = source.entropy(mask)
    if source.integral:
        hx = int(h_x)
        h_cache: dict = {}
        best_num = None  # value = best_num / best_den, compared exactly
        best_den = 1
        best_blocks = None
        for blocks in _iter_partition_masks(mask):
            k = len(blocks)
            if k == 1:
                continue
            total = 0
            for b in blocks:
                hb = h_cache.get(b)
                if hb is None:
                    hb = h_cache[b] = int(source.entropy(b))
                total += hb
            num = k * hx - total
            den = k - 1
            if best_num is None or num * best_den > best_num * den:
                best_num, best_den, best_blocks = num, den, blocks
        return Fraction(best_num, best_den), Partition(best_blocks)

    best_value = None
    best_blocks = None
    for blocks in _iter_partition_masks(mask):
        k = len(blocks)
        if k == 1:
            continue
        deficit = sum((h_x - source.entropy(b) for b in blocks), Fraction(0))
        value = deficit / (k - 1)
        if best_value is None or value > best_value:
            best_value = value
            best_blocks = blocks
    return best_value, Partition(best_blocks)


def min_sum_rate(source, subset: SubsetLike = None, model: str = ASYMPTOTIC) -> MinSumRateResult:
    """Minimum total rate for omniscience of ``subset`` (default: V).

    Exhaustive over partitions, hence exact; this is the oracle the
    rest of the package certifies against.  Needs at least two users in
    the subset.
    """
    check_model(model)
    ground = source.ground
    mask = ground.full_mask if subset is None else ground.mask(subset)
    if mask.bit_count() < 2:
        raise DomainError("minimum sum-rate needs a subset of at least two users")
    cache = source.__dict__.setdefault("_minrate_cache", {})
    result = cache.get((mask, model))
    if result is not None:
        return result
    asym = cache.get((mask, ASYMPTOTIC))
    if asym is None:
        value, partition = _min_sum_rate_asymptotic(source, mask)
        asym = MinSumRateResult(ASYMPTOTIC, value, partition)
        cache[(mask, ASYMPTOTIC)] = asym
    if model == ASYMPTOTIC:
        return asym
    result = MinSumRateResult(NON_ASYMPTOTIC, Fraction(math.ceil(asym.value)), None)
    cache[(mask, NON_ASYMPTOTIC)] = result
    return result


@dataclass(frozen=True)
class SwCheck:
    """Result of the achievability check; ``violating`` is the first
    offending subset in ascending mask order, with its rate deficit."""

    ok: bool
    violating: int | None
    deficit: Fraction | None

    def __bool__(self) -> bool:
        return self.ok


def check_sw_achievable(source, subset: SubsetLike, rates: RateVector) -> SwCheck:
    """Does ``rates`` let every user in ``subset`` reach omniscience of
    the subset?  Checks ``r(C) >= H(X) - H(X minus C)`` for every proper
    subset C of X."""
    ground = source.ground
    mask = ground.mask(subset)
    if mask.bit_count() < 2:
        raise DomainError("achievability concerns subsets of at least two users")
    if mask & ~rates.domain:
        raise DomainError("rate vector domain does not cover the subset")
    h_x = source.entropy(mask)
    for c in iter_submasks(mask):
        if c == 0 or c == mask:
            continue
        need = h_x - source.entropy(mask ^ c)
        have = rates.sum_over(c)
        if have < need:
            return SwCheck(False, c, need - have)
    return SwCheck(True, None, None)


def is_complementary(source, subset: SubsetLike, model: str = ASYMPTOTIC) -> bool:
    """Whether splitting local omniscience of ``subset`` off first costs
    nothing extra.  Defined only for non-singleton proper subsets."""
    check_model(model)
    ground = source.ground
    mask = ground.mask(subset)
    _require_testable(ground, mask)
    r_whole = min_sum_rate(source, None, model).value
    return _complementary_given(source, mask, model, r_whole)


def _require_testable(ground: GroundSet, mask: int) -> None:
    if mask == ground.full_mask:
        raise DomainError("complementarity is about proper subsets, not V itself")
    if mask.bit_count() < 2:
        raise DomainError("complementarity is not defined for singletons")


def _complementary_given(source, mask: int, model: str, r_whole: Fraction) -> bool:
    h_v = source.entropy(source.ground.full_mask)
    h_x = source.entropy(mask)
    r_x = min_sum_rate(source, mask, model).value
    return h_v - h_x + r_x <= r_whole


def enumerate_complementary(source, model: str = ASYMPTOTIC, verify: bool = False) -> tuple:
    """All complementary subsets, as masks in ascending order.

    With ``verify=True`` the list is recomputed through the truncation
    characterization (f#_alpha(X) equals its partition truncation at
    alpha = R(V)) and the two paths must agree.  The truncation equality
    is equivalent to the direct inequality with the asymptotic local
    rate; under the non-asymptotic model the ceiling on R(X) changes
    nothing when entropies are integers, which is the only case the
    returned list is cross-checked against.
    """
    check_model(model)
    ground = source.ground
    full = ground.full_mask
    r_whole = min_sum_rate(source, None, model).value
    found = []
    for mask in range(3, full):
        if mask.bit_count() < 2:
            continue
        if _complementary_given(source, mask, model, r_whole):
            found.append(mask)
    if verify:
        af = AlphaFunction(source, r_whole)
        by_truncation = []
        by_inequality = []
        for mask in range(3, full):
            if mask.bit_count() < 2:
                continue
            value, _ = dilworth_truncation(af, mask)
            if value == af.value(mask):
                by_truncation.append(mask)
            if _complementary_given(source, mask, ASYMPTOTIC, r_whole):
                by_inequality.append(mask)
        if by_truncation != by_inequality:
            only_direct = [ground.format(m) for m in by_inequality if m not in by_truncation]
            only_trunc = [ground.format(m) for m in by_truncation if m not in by_inequality]
            raise CertificationError(
                "complementary-subset characterizations disagree: "
                f"only direct: {only_direct}; only truncation: {only_trunc}"
            )
        if (model == ASYMPTOTIC or source.integral) and by_truncation != found:
            raise CertificationError(
                "truncation path disagrees with the model's complementary list"
            )
    return tuple(found)


def optimal_rate_vector(source, model: str = ASYMPTOTIC) -> RateVector:
    """An optimal omniscience rate vector for V.

    Runs the prefix rate update to completion at alpha equal to the
    exact minimum sum-rate.  The result is certified before being
    returned: it must sum to the minimum and pass the achievability
    check, otherwise something is broken and a
    :class:`CertificationError` is raised.  With integer entropies and
    the non-asymptotic model every entry is an integer.
    """
    check_model(model)
    ground = source.ground
    target = min_sum_rate(source, None, model).value
    af = AlphaFunction(source, target)
    run = run_rate_update(af, early_exit=False)
    rates = RateVector(ground, run.rates, ground.full_mask)
    if rates.total != target:
        raise CertificationError(
            f"rate update reached {rates.total}, expected the minimum sum-rate {target}"
        )
    check = check_sw_achievable(source, ground.full_mask, rates)
    if not check:
        raise CertificationError(
            f"optimal rate vector fails achievability on {ground.format(check.violating)} "
            f"(deficit {check.deficit})"
        )
    return rates

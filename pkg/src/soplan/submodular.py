"""The parametrized set function f#_alpha, its partition truncation, and
the prefix-lattice minimization that drives the subset search.

For a source with ground set V and a parameter alpha in [0, H(V)]::

    f#_alpha(X) = 0                          if X is empty
                  alpha - H(V) + H(X)        otherwise

The truncation minimizes the block sum of f#_alpha over all partitions
of a subset; equality of f#_alpha(X) with its truncation at the right
alpha characterizes the subsets worth splitting off early.

All minimizations here are exhaustive.  That is deliberate: at desk
scale they are exact and fast enough, and they double as the trusted
oracle for everything built on top.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .core import (
    DomainError,
    GroundSet,
    Partition,
    RateVector,
    SubsetLike,
    _iter_partition_masks,
)


@dataclass(frozen=True)
class AlphaFunction:
    """f#_alpha for a fixed source and alpha.

    Constructing one checks 0 <= alpha <= H(V); values outside that
    range have no meaning in this model.
    """

    source: object
    alpha: Fraction

    def __post_init__(self):
        alpha = Fraction(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        h_total = self.source.entropy(self.ground.full_mask)
        if not 0 <= alpha <= h_total:
            raise DomainError(f"alpha = {alpha} outside [0, H(V)] = [0, {h_total}]")
        object.__setattr__(self, "_shift", alpha - h_total)

    @property
    def ground(self) -> GroundSet:
        return self.source.ground

    def value(self, subset: SubsetLike) -> Fraction:
        mask = self.ground.mask(subset)
        if mask == 0:
            return Fraction(0)
        return self._shift + self.source.entropy(mask)


def dilworth_truncation(af: AlphaFunction, subset: SubsetLike) -> tuple:
    """Minimize the block sum of f#_alpha over all partitions of
    ``subset``.

    Returns ``(min_value, partition)`` where the partition is the first
    minimizer in restricted-growth enumeration order.  Because the
    one-block partition is enumerated first, the minimum equals
    f#_alpha(subset) exactly when no finer partition beats it.
    """
    ground = af.ground
    mask = ground.mask(subset)
    if mask == 0:
        raise DomainError("truncation of the empty set is not defined")
    source = af.source
    alpha = af.alpha
    h_total = source.entropy(ground.full_mask)

    if source.integral:
        # Integer entropies: a block sum is k*alpha + (sum H - k*H(V)),
        # so scaling by alpha's denominator gives an all-int sort key.
        p, q = alpha.numerator, alpha.denominator
        hv = int(h_total)
        h = {}
        best_key = None
        best_blocks = None
        for blocks in _iter_partition_masks(mask):
            total = 0
            for b in blocks:
                hb = h.get(b)
                if hb is None:
                    hb = h[b] = int(source.entropy(b))
                total += hb
            key = len(blocks) * (p - q * hv) + q * total
            if best_key is None or key < best_key:
                best_key = key
                best_blocks = blocks
        return Fraction(best_key, q), Partition(best_blocks)

    best_value = None
    best_blocks = None
    for blocks in _iter_partition_masks(mask):
        total = sum((af.value(b) for b in blocks), Fraction(0))
        if best_value is None or total < best_value:
            best_value = total
            best_blocks = blocks
    return best_value, Partition(best_blocks)


@dataclass(frozen=True)
class SfmResult:
    """Outcome of minimizing f#_alpha(X) - r(X) over the sets X that
    contain the newest user inside the current prefix.

    The minimizers of such a function are closed under union and
    intersection, so ``minimal_minimizer`` / ``maximal_minimizer`` are
    themselves minimizers.  ``nonsingleton_proper_minimizer`` applies
    the early-exit tie-break: smallest cardinality first, then smallest
    bitmask; it is None when every minimizer is a singleton or the full
    ground set.
    """

    min_value: Fraction
    minimizers: tuple
    minimal_minimizer: int
    maximal_minimizer: int
    nonsingleton_proper_minimizer: int | None
    candidates_examined: int

    @property
    def a_minimizer(self) -> int:
        return self.minimizers[0]


def minimize_over_prefix(af: AlphaFunction, rates, position: int) -> SfmResult:
    """Exhaustively minimize g(X) = f#_alpha(X) - r(X) over
    ``{X : position's user in X, X inside the first `position` users}``.

    ``position`` is 1-based in ground order; candidates are enumerated
    by ascending mask value, which fixes ``a_minimizer``
    deterministically.
    """
    ground = af.ground
    if not 1 <= position <= ground.size:
        raise DomainError(f"position {position} out of range")
    if isinstance(rates, RateVector):
        values = list(rates.values)
    else:
        values = [Fraction(v) for v in rates]
        if len(values) != ground.size:
            raise DomainError("rate sequence length does not match the ground set")

    top = 1 << (position - 1)
    below = top - 1
    full = ground.full_mask

    # Subset sums of the rates over the prefix below the newest user.
    rate_sum = [Fraction(0)] * (below + 1)
    for sub in range(1, below + 1):
        low = sub & -sub
        rate_sum[sub] = rate_sum[sub ^ low] + values[low.bit_length() - 1]
    top_rate = values[position - 1]

    best_value = None
    minimizers: list = []
    count = 0
    sub = 0
    while True:
        candidate = sub | top
        count += 1
        g = af.value(candidate) - rate_sum[sub] - top_rate
        if best_value is None or g < best_value:
            best_value = g
            minimizers = [candidate]
        elif g == best_value:
            minimizers.append(candidate)
        if sub == below:
            break
        sub = (sub - below) & below

    minimal = minimizers[0]
    maximal = 0
    for m in minimizers:
        minimal &= m
        maximal |= m
    eligible = [m for m in minimizers if m.bit_count() >= 2 and m != full]
    chosen = min(eligible, key=lambda m: (m.bit_count(), m)) if eligible else None
    return SfmResult(
        min_value=best_value,
        minimizers=tuple(minimizers),
        minimal_minimizer=minimal,
        maximal_minimizer=maximal,
        nonsingleton_proper_minimizer=chosen,
        candidates_examined=count,
    )


@dataclass(frozen=True)
class UpdateRun:
    """Trace of the rate update loop.

    ``snapshots`` holds the rate tuple after initialization and after
    every completed update, so invariants over the running vector can be
    replayed.  On an early exit ``rates`` is the state at the moment the
    subset surfaced.
    """

    exit_subset: int | None
    exit_position: int | None
    rates: tuple
    snapshots: tuple
    candidates_examined: int


def run_rate_update(af: AlphaFunction, early_exit: bool = True) -> UpdateRun:
    """The prefix-sweep rate update.

    Start from r = (f#_alpha({first user}), alpha - H(V), ...); for each
    later user, minimize f#_alpha - r over the prefix sets containing
    that user.  With ``early_exit`` the sweep stops as soon as a
    minimizer is a non-singleton proper subset of V and reports it;
    otherwise the minimum is absorbed into that user's rate and the
    sweep continues to completion.
    """
    ground = af.ground
    n = ground.size
    rates = [af.value(1)] + [af.alpha - af.source.entropy(ground.full_mask)] * (n - 1)
    snapshots = [tuple(rates)]
    candidates = 0
    for position in range(2, n + 1):
        result = minimize_over_prefix(af, rates, position)
        candidates += result.candidates_examined
        if early_exit and result.nonsingleton_proper_minimizer is not None:
            return UpdateRun(
                exit_subset=result.nonsingleton_proper_minimizer,
                exit_position=position,
                rates=tuple(rates),
                snapshots=tuple(snapshots),
                candidates_examined=candidates,
            )
        rates[position - 1] += result.min_value
        snapshots.append(tuple(rates))
    return UpdateRun(
        exit_subset=None,
        exit_position=None,
        rates=tuple(rates),
        snapshots=tuple(snapshots),
        candidates_examined=candidates,
    )

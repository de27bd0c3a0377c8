"""Row-space arithmetic over prime fields GF(q).

Rows are tuples of ints in ``[0, q)``.  :class:`RowSpace` keeps a
reduced row-echelon basis incrementally, which is all the rank and
span-membership machinery the simulator and the linear entropy model
need.  Pure Python keeps everything exact; the matrices involved are
desk-scale.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .core import DomainError


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def next_prime(n: int) -> int:
    """Smallest prime strictly greater than ``n``."""
    candidate = max(2, n + 1)
    while not is_prime(candidate):
        candidate += 1
    return candidate


class RowSpace:
    """A subspace of GF(q)^width, maintained as a reduced echelon basis.

    Basis rows have leading coefficient 1, are sorted by pivot column,
    and every pivot column is zero in all other basis rows, so a single
    forward pass reduces any vector.
    """

    __slots__ = ("q", "width", "rows", "pivots")

    def __init__(self, q: int, width: int, rows: Iterable[Sequence[int]] = ()):
        if not is_prime(q):
            raise DomainError(f"field order {q} is not prime")
        if width < 0:
            raise DomainError("row width must be nonnegative")
        self.q = q
        self.width = width
        self.rows: list = []
        self.pivots: list = []
        for row in rows:
            self.add(row)

    def _reduce(self, row: Sequence[int]) -> list:
        q = self.q
        if len(row) != self.width:
            raise DomainError(f"row width {len(row)} != {self.width}")
        out = [value % q for value in row]
        for basis_row, pivot in zip(self.rows, self.pivots):
            coeff = out[pivot]
            if coeff:
                out = [(a - coeff * b) % q for a, b in zip(out, basis_row)]
        return out

    def add(self, row: Sequence[int]) -> bool:
        """Insert ``row``; return True iff it enlarged the space."""
        reduced = self._reduce(row)
        pivot = next((j for j, value in enumerate(reduced) if value), None)
        if pivot is None:
            return False
        inv = pow(reduced[pivot], -1, self.q)
        reduced = [value * inv % self.q for value in reduced]
        # Clear the new pivot column from the existing basis rows to keep
        # the basis fully reduced.
        for k, basis_row in enumerate(self.rows):
            coeff = basis_row[pivot]
            if coeff:
                self.rows[k] = [
                    (a - coeff * b) % self.q for a, b in zip(basis_row, reduced)
                ]
        at = next((k for k, p in enumerate(self.pivots) if p > pivot), len(self.pivots))
        self.rows.insert(at, reduced)
        self.pivots.insert(at, pivot)
        return True

    def contains(self, row: Sequence[int]) -> bool:
        return not any(self._reduce(row))

    @property
    def rank(self) -> int:
        return len(self.rows)

    def basis(self) -> tuple:
        return tuple(tuple(row) for row in self.rows)

    def clone(self) -> "RowSpace":
        other = RowSpace.__new__(RowSpace)
        other.q = self.q
        other.width = self.width
        other.rows = [list(row) for row in self.rows]
        other.pivots = list(self.pivots)
        return other


def rank_of(rows: Iterable[Sequence[int]], q: int, width: int) -> int:
    return RowSpace(q, width, rows).rank


def random_combination(basis: Sequence[Sequence[int]], width: int, q: int, rng) -> tuple:
    """A uniformly random GF(q)-combination of ``basis`` rows.

    With an empty basis this is the zero row: a sender that knows
    nothing can only broadcast nothing.
    """
    out = [0] * width
    for row in basis:
        coeff = rng.randrange(q)
        if coeff:
            for j, value in enumerate(row):
                if value:
                    out[j] = (out[j] + coeff * value) % q
    return tuple(out)

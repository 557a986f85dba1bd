"""Sieving, interval factorization, square-free detection and prime-set
utilities shared by every other module.

The interval convention is half-open everywhere: (x, x+y] means the
integers x+1, ..., x+y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractViolation

_U64_LIMIT = 1 << 64


def sieve_primes(limit: int) -> list[int]:
    """All primes <= limit, by Eratosthenes."""
    if limit < 2:
        return []
    flags = bytearray([1]) * (limit + 1)
    flags[0] = flags[1] = 0
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p :: p] = bytearray(len(range(p * p, limit + 1, p)))
    return [i for i in range(2, limit + 1) if flags[i]]


def trial_factorize(n: int) -> list[tuple[int, int]]:
    """(prime, exponent) pairs of n >= 1 by trial division. Desk scale only."""
    if n < 1:
        raise ValueError(f"cannot factorize n={n}")
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                e += 1
                n //= d
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return out


def is_squarefree(n: int) -> bool:
    """True iff no prime square divides n (n >= 1)."""
    if n < 1:
        raise ValueError(f"square-free test needs n >= 1, got {n}")
    if n % 4 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        if n % d == 0:
            n //= d
        d += 2
    return True


@dataclass(frozen=True)
class IntervalTable:
    """Complete factorizations and square-free flags for (x, x+y].

    entries[i] holds the (prime, exponent) pairs of n = x_lo + 1 + i;
    flags[i] is True iff that n is square-free.
    """

    x_lo: int
    y_len: int
    entries: tuple[tuple[tuple[int, int], ...], ...]
    flags: tuple[bool, ...]
    squarefree_count: int

    @property
    def x_hi(self) -> int:
        return self.x_lo + self.y_len

    def contains(self, n: int) -> bool:
        return self.x_lo < n <= self.x_hi

    def _index(self, n: int) -> int:
        if not self.contains(n):
            raise ValueError(
                f"n={n} outside table interval ({self.x_lo}, {self.x_hi}]"
            )
        return n - self.x_lo - 1

    def factors(self, n: int) -> tuple[tuple[int, int], ...]:
        return self.entries[self._index(n)]

    def is_squarefree(self, n: int) -> bool:
        return self.flags[self._index(n)]

    def squarefree_values(self) -> list[int]:
        lo = self.x_lo + 1
        return [lo + i for i, f in enumerate(self.flags) if f]

    def squarefree_items(self) -> list[tuple[int, tuple[int, ...]]]:
        """(n, distinct primes of n) for every square-free n in the table."""
        lo = self.x_lo + 1
        return [
            (lo + i, tuple(p for p, _ in self.entries[i]))
            for i, f in enumerate(self.flags)
            if f
        ]


def _factor_segment(lo: int, length: int) -> IntervalTable:
    """Factor every n in (lo, lo+length]; lo >= 0 allowed (n = 1 gets the
    empty factorization and counts as square-free)."""
    hi = lo + length
    first = lo + 1
    rem = list(range(first, hi + 1))
    facs: list[list[tuple[int, int]]] = [[] for _ in range(length)]
    for p in sieve_primes(math.isqrt(hi)):
        start = ((lo // p) + 1) * p
        for m in range(start, hi + 1, p):
            i = m - first
            e = 0
            while rem[i] % p == 0:
                rem[i] //= p
                e += 1
            facs[i].append((p, e))
    flags = []
    entries = []
    count = 0
    for i in range(length):
        if rem[i] > 1:
            # leftover cofactor is a single prime > sqrt(hi)
            facs[i].append((rem[i], 1))
        sf = all(e == 1 for _, e in facs[i])
        flags.append(sf)
        count += sf
        entries.append(tuple(facs[i]))
    return IntervalTable(lo, length, tuple(entries), tuple(flags), count)


def segmented_factorize(x: int, y: int) -> IntervalTable:
    """Factor table for the interval (x, x+y].

    Sieves primes up to sqrt(x+y) once, divides them out of the segment and
    recovers any remaining prime cofactor exceeding sqrt(x+y).
    """
    if x < 1:
        raise ValueError(f"x must be >= 1, got {x}")
    if y < 1:
        raise ValueError(f"y must be >= 1, got {y}")
    if x + y >= _U64_LIMIT:
        raise ValueError(f"x+y={x + y} exceeds 64-bit unsigned range")
    return _factor_segment(x, y)


def squarefree_count(table: IntervalTable) -> int:
    """S(x, y): number of square-free integers in (x, x+y]."""
    return table.squarefree_count


def squarefree_flags(x: int, y: int) -> bytearray:
    """Square-free flags for (x, x+y] without full factorizations;
    index i corresponds to n = x + 1 + i."""
    hi = x + y
    first = x + 1
    flags = bytearray([1]) * y
    for p in sieve_primes(math.isqrt(hi)):
        sq = p * p
        start = ((x // sq) + 1) * sq
        for m in range(start, hi + 1, sq):
            flags[m - first] = 0
    return flags


def kernel_xor(a: int, b: int) -> int:
    """Symmetric difference of prime sets of square-free a and b, as the
    square-free integer a*b / gcd(a,b)^2.

    A product of square-free numbers is a perfect square iff folding them
    through kernel_xor yields 1.
    """
    if not is_squarefree(a):
        raise ContractViolation(f"kernel_xor needs square-free inputs, got a={a}")
    if not is_squarefree(b):
        raise ContractViolation(f"kernel_xor needs square-free inputs, got b={b}")
    g = math.gcd(a, b)
    return (a // g) * (b // g)


def _kernel_unchecked(a: int, b: int) -> int:
    g = math.gcd(a, b)
    return (a // g) * (b // g)


@dataclass(frozen=True)
class PrimeSplit:
    """Primes relevant to an interval, split at the threshold z into
    small (<= z) and large (> z)."""

    z: float
    small_primes: tuple[int, ...]
    large_primes: tuple[int, ...]


def z_of_delta(delta: float) -> float:
    """Threshold z = (1/2) ln(1/delta)."""
    if not 0 < delta < 0.1:
        raise ValueError(f"delta must lie in (0, 1/10), got {delta}")
    return 0.5 * math.log(1.0 / delta)


def prime_split(delta: float, table: IntervalTable) -> PrimeSplit:
    """Split primes at z = (1/2) ln(1/delta): small primes are all p <= z,
    large primes are the p > z dividing some entry of the table."""
    z = z_of_delta(delta)
    small = tuple(sieve_primes(math.floor(z)))
    large = sorted(
        {p for fac in table.entries for p, _ in fac if p > z}
    )
    return PrimeSplit(z, small, tuple(large))


def omega_L(n: int, z: float) -> int:
    """Number of distinct prime factors of n strictly greater than z."""
    return sum(1 for p, _ in trial_factorize(n) if p > z) if n > 1 else 0

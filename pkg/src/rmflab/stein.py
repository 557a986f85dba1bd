"""Ingredients of the normal-approximation diagnostics for the interval sum.

Notation used throughout this module, for an interval (x, x+y] and a
small/large prime threshold z:

  f        the interval sum of the random multiplicative function, viewed
           as a function of the signs of the large primes (> z);
  N(p)     support of prime p: square-free k coprime to p with k*p in the
           interval (equivalently, k*p a square-free interval entry);
  Delta_p f  change in f when the sign of p is resampled;
  T_p      per-prime exchange statistic: the omega-weighted off-diagonal
           quadratic form over N(p) defined in exchange_statistic;
  W(A)     subset weight 1 / (C(|L|,|A|) (|L|-|A|)) over subsets A of the
           large-prime set L.

Identity checks run in exact rational arithmetic (fractions.Fraction);
exhaustive sign-vector averages run as integer Walsh-Hadamard transforms,
which evaluate f at ALL 2^k sign vectors in O(k 2^k) exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np

from .errors import ScaleError
from .numtheory import IntervalTable, sieve_primes, z_of_delta
from .quadruples import _oracle_count_members
from .rmf_core import SignSource


@dataclass(frozen=True)
class IncrementSupport:
    """Support of Delta_p f: square-free k coprime to p with k*p in the
    interval (equivalently k*p a square-free interval entry)."""

    p: int
    members: tuple[int, ...]


def increment_support(p: int, table: IntervalTable) -> IncrementSupport:
    members = []
    start = (table.x_lo // p + 1) * p
    for m in range(start, table.x_hi + 1, p):
        if table.is_squarefree(m):
            members.append(m // p)
    return IncrementSupport(p, tuple(members))


def _member_primes(p: int, k: int, table: IntervalTable) -> tuple[int, ...]:
    """Distinct primes of member k of N(p), read off the table entry of k*p."""
    return tuple(q for q, _ in table.factors(k * p) if q != p)


# ---------------------------------------------------------------------------
# Exhaustive sign-vector enumeration (integer Walsh-Hadamard transform)
# ---------------------------------------------------------------------------

def _walsh_inplace(v: np.ndarray) -> np.ndarray:
    """In-place Walsh-Hadamard transform of an int64 vector of length 2^k."""
    n = v.shape[0]
    h = 1
    while h < n:
        v = v.reshape(-1, 2 * h)
        left = v[:, :h].copy()
        right = v[:, h:].copy()
        v[:, :h] = left + right
        v[:, h:] = left - right
        v = v.reshape(n)
        h *= 2
    return v


def _all_sign_values(masks: list[int], coeffs: list[int], k: int) -> np.ndarray:
    """f(eps) = sum_i coeffs[i] * (-1)^popcount(masks[i] & eps) for every
    eps in {0,1}^k, as an int64 vector indexed by eps."""
    g = np.zeros(1 << k, dtype=np.int64)
    for m, c in zip(masks, coeffs):
        g[m] += c
    return _walsh_inplace(g)


def sign_vector_moments(masks: list[int], coeffs: list[int], k: int
                        ) -> tuple[Fraction, Fraction]:
    """Exact (mean, second moment) of f over all 2^k sign vectors."""
    v = _all_sign_values(masks, coeffs, k)
    n = 1 << k
    total = int(v.sum())
    total_sq = int((v * v).sum())
    return Fraction(total, n), Fraction(total_sq, n)


# ---------------------------------------------------------------------------
# Exact Delta_p moments
# ---------------------------------------------------------------------------

def delta2_exact(p: int, table: IntervalTable) -> int:
    """E|Delta_p f|^2 = 2 |N(p)|."""
    return 2 * len(increment_support(p, table).members)


def delta4_exact(p: int, table: IntervalTable, max_members: int = 400) -> int:
    """E|Delta_p f|^4 = 8 * (ordered square quadruples within N(p))."""
    members = increment_support(p, table).members
    if len(members) > max_members:
        raise ScaleError(f"|N(p)| = {len(members)} exceeds {max_members}")
    return 8 * _oracle_count_members(list(members))


def delta3_exact_tiny(p: int, table: IntervalTable, prime_budget: int = 20) -> float:
    """Exact E|Delta_p f|^3 = 4 * E|sum_{k in N(p)} X(k)|^3 by exhaustive
    sign-vector enumeration.  The factor 4 is E|X(p) - X'(p)|^3: the
    difference takes values -2, 0, 2 with probabilities 1/4, 1/2, 1/4.

    The result is a dyadic rational represented exactly in a float."""
    members = increment_support(p, table).members
    if not members:
        return 0.0
    prime_sets = [_member_primes(p, k, table) for k in members]
    primes = sorted({q for ps in prime_sets for q in ps})
    if len(primes) > prime_budget:
        raise ScaleError(
            f"{len(primes)} distinct primes in N({p}) exceeds budget {prime_budget}"
        )
    index = {q: j for j, q in enumerate(primes)}
    k = len(primes)
    masks = [sum(1 << index[q] for q in ps) for ps in prime_sets]
    v = _all_sign_values(masks, [1] * len(masks), k)
    a = np.abs(v)
    third = int((a * a * a).sum())
    return 4 * third / float(1 << k)


# ---------------------------------------------------------------------------
# Subset weights and the combinatorial identity
# ---------------------------------------------------------------------------

def subset_weight(l_size: int, a_size: int) -> Fraction:
    """W(A) = 1 / (C(|L|, |A|) (|L| - |A|)) = 1 / (|L| C(|L|-1, |A|))."""
    if not 0 <= a_size < l_size:
        raise ValueError(f"need 0 <= |A| < |L|, got |A|={a_size}, |L|={l_size}")
    return Fraction(1, comb(l_size, a_size) * (l_size - a_size))


def subset_weight_identity(l_size: int, omega: int) -> Fraction:
    """sum_{k=0}^{L-w} subset_weight(L, k) * C(L-w, k) in exact rationals;
    the identity says this equals 1/w."""
    if not 1 <= omega <= l_size:
        raise ValueError(f"need 1 <= omega <= L, got omega={omega}, L={l_size}")
    return sum(
        (Fraction(1, l_size * comb(l_size - 1, k)) * comb(l_size - omega, k)
         for k in range(l_size - omega + 1)),
        Fraction(0),
    )


# ---------------------------------------------------------------------------
# Exchange statistics
# ---------------------------------------------------------------------------

def _omega_large(n: int, z: float, table: IntervalTable) -> int:
    return sum(1 for q, _ in table.factors(n) if q > z)


def _x_of_member(p: int, k: int, table: IntervalTable, signs: SignSource) -> int:
    v = 1
    for q in _member_primes(p, k, table):
        v *= signs.sign(q)
    return v


def exchange_statistic(p: int, table: IntervalTable, signs: SignSource,
                       z: float) -> Fraction:
    """T_p = sum over ordered pairs k != l in N(p) of X(k) X(l) / omega_L(l p),
    exactly."""
    if p <= z:
        raise ValueError(f"T_p is defined for large primes only: p={p} <= z={z}")
    members = increment_support(p, table).members
    if len(members) <= 1:
        return Fraction(0)
    xs = [_x_of_member(p, k, table, signs) for k in members]
    g = sum(xs)
    total = Fraction(0)
    for k, xk in zip(members, xs):
        total += Fraction((g - xk) * xk, _omega_large(k * p, z, table))
    return total


def exchange_variance_monte_carlo(table: IntervalTable, z: float, trials: int,
                                  master_seed: int) -> float:
    """Sample variance (ddof=1) of sum_{p in L} T_p over seeded trials.

    Only primes z < p <= y can have |N(p)| >= 2; all other T_p vanish."""
    if trials < 2:
        raise ValueError(f"need at least 2 trials, got {trials}")
    per_p = []
    prime_pool: set[int] = set()
    for p in sieve_primes(table.y_len):
        if p <= z:
            continue
        members = increment_support(p, table).members
        if len(members) < 2:
            continue
        rows = []
        for k in members:
            qs = _member_primes(p, k, table)
            rows.append((qs, _omega_large(k * p, z, table)))
            prime_pool.update(qs)
        per_p.append(rows)
    if not per_p:
        return 0.0
    pool = sorted(prime_pool)
    root = SignSource(master_seed)
    values = np.empty(trials)
    for t in range(trials):
        signs = root.for_trial(t)
        sgn = {q: signs.sign(q) for q in pool}
        total = 0.0
        for rows in per_p:
            xs = [(math.prod(sgn[q] for q in qs), w) for qs, w in rows]
            g = sum(x for x, _ in xs)
            total += sum((g - x) * x / w for x, w in xs)
        values[t] = total
    return float(values.var(ddof=1))


@dataclass(frozen=True)
class SteinTerms:
    """Aggregated ingredients of the normal-approximation bound for one
    interval: per-prime second/fourth moments of Delta_p f, the summed third
    moments, and the Monte Carlo variance estimate for the exchange term."""

    sum_delta3: float
    exchange_variance: float
    delta2_by_p: dict[int, int]
    delta4_by_p: dict[int, int]
    exact_primes: int
    bounded_primes: int


def stein_terms(table: IntervalTable, z: float, var_trials: int = 2000,
                master_seed: int = 0, prime_budget: int = 20,
                member_budget: int = 400) -> SteinTerms:
    """Sum E|Delta_p f|^3 over large primes with nonempty N(p): exactly where
    the support involves at most prime_budget distinct primes, otherwise by
    the Cauchy-Schwarz bound sqrt(E|Delta_p f|^2 E|Delta_p f|^4); plus the
    sampled Var(sum_p T_p)."""
    relevant = sorted({
        q for _, primes in table.squarefree_items() for q in primes if q > z
    })
    total = 0.0
    d2: dict[int, int] = {}
    d4: dict[int, int] = {}
    exact_primes = bounded_primes = 0
    for p in relevant:
        members = increment_support(p, table).members
        if len(members) > member_budget:
            raise ScaleError(f"|N({p})| = {len(members)} exceeds {member_budget}")
        d2[p] = 2 * len(members)
        d4[p] = delta4_exact(p, table, member_budget)
        distinct = {q for k in members for q in _member_primes(p, k, table)}
        if len(distinct) <= prime_budget:
            total += delta3_exact_tiny(p, table, prime_budget)
            exact_primes += 1
        else:
            total += math.sqrt(d2[p] * d4[p])
            bounded_primes += 1
    var_t = exchange_variance_monte_carlo(table, z, var_trials, master_seed)
    return SteinTerms(total, var_t, d2, d4, exact_primes, bounded_primes)


# ---------------------------------------------------------------------------
# Conditional-moment checks
# ---------------------------------------------------------------------------

def _split_entries(table: IntervalTable, z: float):
    """Square-free entries as (n, small primes, large primes) triples."""
    out = []
    for n, primes in table.squarefree_items():
        small = tuple(q for q in primes if q <= z)
        large = tuple(q for q in primes if q > z)
        out.append((n, small, large))
    return out


@dataclass(frozen=True)
class ConditionalMomentsReport:
    """Exhaustive conditional moments of the interval sum given the small
    signs: one (mean, second moment) pair per small-sign assignment."""

    s_count: int
    z: float
    large_primes: tuple[int, ...]
    means: tuple[Fraction, ...]
    second_moments: tuple[Fraction, ...]

    @property
    def ok(self) -> bool:
        return all(m == 0 for m in self.means) and all(
            q == self.s_count for q in self.second_moments
        )


def conditional_moments_check(table: IntervalTable, delta: float,
                  small_sign_assignments: list[dict[int, int]],
                  large_prime_budget: int = 22) -> ConditionalMomentsReport:
    """For each fixed assignment of signs to the small primes, average the
    interval sum and its square over ALL 2^k large-prime sign vectors; the
    conditional mean must be exactly 0 and the second moment exactly S."""
    z = z_of_delta(delta)
    entries = _split_entries(table, z)
    large = sorted({q for _, _, lg in entries for q in lg})
    if len(large) > large_prime_budget:
        raise ScaleError(
            f"{len(large)} distinct large primes exceeds budget {large_prime_budget}"
        )
    index = {q: j for j, q in enumerate(large)}
    k = len(large)
    masks = [sum(1 << index[q] for q in lg) for _, _, lg in entries]
    small_present = sorted({q for _, sm, _ in entries for q in sm})
    means = []
    seconds = []
    for assignment in small_sign_assignments:
        missing = [q for q in small_present if q not in assignment]
        if missing:
            raise ValueError(f"assignment missing small primes {missing}")
        if any(v not in (-1, 1) for v in assignment.values()):
            raise ValueError("assignment values must be +1 or -1")
        coeffs = [
            math.prod(assignment[q] for q in sm) if sm else 1
            for _, sm, _ in entries
        ]
        mean, second = sign_vector_moments(masks, coeffs, k)
        means.append(mean)
        seconds.append(second)
    return ConditionalMomentsReport(
        table.squarefree_count, z, tuple(large), tuple(means), tuple(seconds)
    )


def _large_prime_set(table: IntervalTable, z: float) -> list[int]:
    return sorted({
        q for _, primes in table.squarefree_items() for q in primes if q > z
    })


def decomposition_sides(table: IntervalTable, z: float, signs: SignSource,
                        l_budget: int = 12) -> tuple[Fraction, Fraction]:
    """Both sides of the conditional decomposition of the exchange statistic,
    exactly.

    Left: the subset-weighted sum (1/2) sum_{p} sum_{A not containing p}
    W(A) E(Delta_p f Delta_p f^A | X), where f^A has the signs on A
    resampled and each conditional expectation is computed by literal
    enumeration of the resampled signs on A union {p}.

    Right: the closed form sum_p sum_A W(A) |N^A(p)| + sum_p T_p, where
    N^A(p) drops from N(p) the members divisible by any prime of A.

    The prime set L here is the effective one: large primes (> z) dividing
    some square-free entry; primes outside it have Delta_p f identically 0
    and identical nu-weighted contributions on both sides.
    """
    large = _large_prime_set(table, z)
    l_size = len(large)
    if l_size > l_budget:
        raise ScaleError(f"|L| = {l_size} exceeds budget {l_budget}")
    if l_size == 0:
        return Fraction(0), Fraction(0)
    index = {q: j for j, q in enumerate(large)}
    entries = _split_entries(table, z)
    coeffs = [
        math.prod(signs.sign(q) for q in sm) if sm else 1 for _, sm, _ in entries
    ]
    masks = [sum(1 << index[q] for q in lg) for _, _, lg in entries]
    x_bits = sum(1 << j for j, q in enumerate(large) if signs.sign(q) < 0)

    f_cache: dict[int, int] = {}

    def f_of(bits: int) -> int:
        val = f_cache.get(bits)
        if val is None:
            val = sum(
                c if (m & bits).bit_count() % 2 == 0 else -c
                for c, m in zip(coeffs, masks)
            )
            f_cache[bits] = val
        return val

    full = (1 << l_size) - 1
    f_x = f_of(x_bits)

    nus = [subset_weight(l_size, a) for a in range(l_size)]

    direct = Fraction(0)
    for j in range(l_size):
        bit_p = 1 << j
        rest = full & ~bit_p
        a = rest
        while True:  # all subsets A of L \ {p}, descending submask order
            scope = a | bit_p
            acc = 0
            v = scope
            while True:  # all resampled sign patterns on A union {p}
                d1 = f_x - f_of((x_bits & ~bit_p) | (v & bit_p))
                d2 = f_of((x_bits & ~a) | (v & a)) - f_of((x_bits & ~scope) | (v & scope))
                acc += d1 * d2
                if v == 0:
                    break
                v = (v - 1) & scope
            a_size = a.bit_count()
            direct += nus[a_size] * Fraction(acc, 1 << (a_size + 1)) / 2
            if a == 0:
                break
            a = (a - 1) & rest

    closed = Fraction(0)
    for j, p in enumerate(large):
        members = increment_support(p, table).members
        if not members:
            continue
        mem_masks = []
        mem_x = []
        mem_omega = []
        for k in members:
            qs = _member_primes(p, k, table)
            mem_masks.append(sum(1 << index[q] for q in qs if q > z))
            mem_x.append(_x_of_member(p, k, table, signs))
            mem_omega.append(_omega_large(k * p, z, table))
        # diagonal part: sum over A of W(A) |N^A(p)|
        rest = full & ~(1 << j)
        a = rest
        while True:
            n_a = sum(1 for m in mem_masks if m & a == 0)
            closed += nus[a.bit_count()] * n_a
            if a == 0:
                break
            a = (a - 1) & rest
        # off-diagonal part: T_p
        g = sum(mem_x)
        for xk, w in zip(mem_x, mem_omega):
            closed += Fraction((g - xk) * xk, w)

    return direct, closed


def conditional_t_decomposition_check(table: IntervalTable, z: float,
                                      signs: SignSource,
                                      l_budget: int = 12) -> bool:
    """Exact rational equality of the two sides in decomposition_sides."""
    direct, closed = decomposition_sides(table, z, signs, l_budget)
    return direct == closed

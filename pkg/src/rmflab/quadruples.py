"""Exact counting of ordered square quadruples n1*n2*n3*n4 = perfect square
over square-free members of a short interval: a kernel-folding oracle, the
diagonal closed form 3S^2 - 2S, and enumeration through the six-variable
parametrization (A, B, r, s, u, v) with

    n1 = A*r*u,  n2 = A*s*v,  n3 = B*r*v,  n4 = B*s*u,
    gcd(r, s) = gcd(u, v) = 1.

All counts are of ORDERED quadruples, matching the expansion of the fourth
moment of the interval sum.  Square tests always fold kernels, never form
the raw four-fold product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractViolation, ScaleError
from .numtheory import (
    IntervalTable,
    _kernel_unchecked,
    is_squarefree,
    squarefree_flags,
)

ORACLE_MAX_S = 400
DEFAULT_BUDGET = 10**9


def diagonal_count(s: int) -> int:
    """Ordered quadruples equal in pairs: 3*S^2 - 2*S (three pairings, the
    all-equal case counted three times)."""
    if s < 0:
        raise ValueError(f"S must be >= 0, got {s}")
    return 3 * s * s - 2 * s


def oracle_count_square_quadruples(table: IntervalTable) -> int:
    """Count ordered square quadruples among the square-free members of the
    interval by matching kernels of pairs: n1*n2*n3*n4 is a square iff
    kernel(n1, n2) == kernel(n3, n4).

    Refuses S > ORACLE_MAX_S; exact counting at larger scale belongs to the
    parametrized enumeration.
    """
    members = table.squarefree_values()
    s = len(members)
    if s > ORACLE_MAX_S:
        raise ScaleError(f"oracle limited to S <= {ORACLE_MAX_S}, got S = {s}")
    return _oracle_count_members(members)


def _oracle_count_members(members: list[int]) -> int:
    counts: dict[int, int] = {}
    for a in members:
        for b in members:
            k = _kernel_unchecked(a, b)
            counts[k] = counts.get(k, 0) + 1
    return sum(c * c for c in counts.values())


@dataclass(frozen=True)
class QuadrupleParam:
    """The six-variable parametrization of one ordered square quadruple."""

    A: int
    B: int
    r: int
    s: int
    u: int
    v: int

    def reconstruct(self) -> tuple[int, int, int, int]:
        A, B, r, s, u, v = self.A, self.B, self.r, self.s, self.u, self.v
        return (A * r * u, A * s * v, B * r * v, B * s * u)

    def check(self, x: int, y: int) -> None:
        """Assert every invariant the construction promises, for a quadruple
        drawn from (x, x+y]."""
        A, B, r, s, u, v = self.A, self.B, self.r, self.s, self.u, self.v
        if math.gcd(r, s) != 1 or math.gcd(u, v) != 1:
            raise ContractViolation(f"(r,s) or (u,v) not coprime in {self}")
        quad = self.reconstruct()
        for n in quad:
            if not (x < n <= x + y):
                raise ContractViolation(f"{n} outside ({x}, {x + y}] in {self}")
            if not is_squarefree(n):
                raise ContractViolation(f"{n} not square-free in {self}")
        delta = y / x
        for hi, lo_ in ((A, B), (r, s), (u, v)):
            ratio = hi / lo_
            if not (1 / (1 + delta) <= ratio <= 1 + delta):
                raise ContractViolation(f"ratio bound fails for {self}")
            if hi != lo_ and (hi < 1 / delta or lo_ < 1 / delta):
                raise ContractViolation(f"unequal pair below 1/delta in {self}")


def param_of_quadruple(n1: int, n2: int, n3: int, n4: int) -> QuadrupleParam:
    """Recover the unique parameter tuple of a square quadruple:
    A = gcd(n1,n2), B = gcd(n3,n4), r = gcd(n1/A, n3/B), s = gcd(n2/A, n4/B),
    u = n1/(A r), v = n2/(A s)."""
    for n in (n1, n2, n3, n4):
        if not is_squarefree(n):
            raise ContractViolation(f"{n} is not square-free")
    k = _kernel_unchecked(_kernel_unchecked(n1, n2), _kernel_unchecked(n3, n4))
    if k != 1:
        raise ContractViolation(
            f"product of ({n1}, {n2}, {n3}, {n4}) is not a perfect square"
        )
    A = math.gcd(n1, n2)
    B = math.gcd(n3, n4)
    r = math.gcd(n1 // A, n3 // B)
    s = math.gcd(n2 // A, n4 // B)
    u = n1 // (A * r)
    v = n2 // (A * s)
    param = QuadrupleParam(A, B, r, s, u, v)
    if param.reconstruct() != (n1, n2, n3, n4):
        raise ContractViolation(
            f"reconstruction failed for ({n1}, {n2}, {n3}, {n4}): {param}"
        )
    return param


class _Budget:
    __slots__ = ("left",)

    def __init__(self, budget: int):
        self.left = budget

    def spend(self, amount: int) -> None:
        self.left -= amount
        if self.left < 0:
            raise ScaleError("enumeration budget exceeded")


def nondiagonal_quadruples(x: int, y: int, budget: int = DEFAULT_BUDGET):
    """Yield (QuadrupleParam, (n1, n2, n3, n4)) for every ordered
    non-diagonal square quadruple in (x, x+y], each exactly once.

    A solution is diagonal iff its entries are equal in pairs, which in
    parameters means r=s=u=v=1, or A=B with u=v=1, or A=B with r=s=1.
    Unequal coprime pairs force both elements past x/y (the ratio bounds),
    so the loops below cover the three non-diagonal shapes:

      (b) u=v=1, r,s > x/y distinct, A,B > x/y distinct;
      (c) r=s=1, u,v > x/y distinct, A,B > x/y distinct;
      (d) r,s > x/y distinct and u,v > x/y distinct, A,B arbitrary.
    """
    if x < 2 or y < 1:
        raise ValueError(f"need x >= 2, y >= 1, got x={x}, y={y}")
    if y > x:
        # the ratio bounds that drive the case split need x/y >= 1
        raise ValueError(f"enumeration needs y <= x, got x={x}, y={y}")
    lo, hi = x + 1, x + y
    if y == 1:
        return  # one integer: every solution is the all-equal diagonal
    flags = squarefree_flags(x, y)

    def sf(n: int) -> bool:
        return bool(flags[n - lo])

    m = x // y + 1  # unequal ratio pairs are both > x/y, hence >= m >= 2
    gcd = math.gcd
    bud = _Budget(budget)

    # shapes (b) and (c): one inner pair is (1,1).  Both shapes run over the
    # same (A, B, c1, c2) loops and square-free conditions; they differ only
    # in which of n3/n4 carries which cofactor, so each hit yields twice.
    for A in range(m, hi // m + 1):
        c_lo = max(m, -(-lo // A))  # ceil(lo/A)
        c_hi = hi // A
        bud.spend(max(0, c_hi - c_lo + 1))
        for c1 in range(c_lo, c_hi + 1):
            if not sf(A * c1):
                continue
            for c2 in range(c_lo, c_hi + 1):
                bud.spend(1)
                if c2 == c1 or gcd(c1, c2) != 1 or not sf(A * c2):
                    continue
                b_lo = max(m, -(-lo // c1), -(-lo // c2))
                b_hi = min(hi // c1, hi // c2)
                for B in range(b_lo, b_hi + 1):
                    bud.spend(1)
                    if B == A or not sf(B * c1) or not sf(B * c2):
                        continue
                    yield (
                        QuadrupleParam(A, B, c1, c2, 1, 1),
                        (A * c1, A * c2, B * c1, B * c2),
                    )
                    yield (
                        QuadrupleParam(A, B, 1, 1, c1, c2),
                        (A * c1, A * c2, B * c2, B * c1),
                    )

    # shape (d): both inner pairs distinct, so n1 = A*r*u >= A*m*m
    for A in range(1, hi // (m * m) + 1):
        for r in range(m, hi // (A * m) + 1):
            u_lo = max(m, -(-lo // (A * r)))
            u_hi = hi // (A * r)
            bud.spend(max(0, u_hi - u_lo + 1))
            for u in range(u_lo, u_hi + 1):
                if not sf(A * r * u):
                    continue
                for s in range(m, hi // (A * m) + 1):
                    bud.spend(1)
                    if gcd(r, s) != 1:
                        continue
                    v_lo = max(m, -(-lo // (A * s)))
                    v_hi = hi // (A * s)
                    for v in range(v_lo, v_hi + 1):
                        bud.spend(1)
                        if gcd(u, v) != 1 or not sf(A * s * v):
                            continue
                        rv, su = r * v, s * u
                        b_lo = max(1, -(-lo // rv), -(-lo // su))
                        b_hi = min(hi // rv, hi // su)
                        for B in range(b_lo, b_hi + 1):
                            bud.spend(1)
                            if sf(B * rv) and sf(B * su):
                                yield (
                                    QuadrupleParam(A, B, r, s, u, v),
                                    (A * r * u, A * s * v, B * rv, B * su),
                                )


def param_enumerate_nondiagonal(x: int, y: int, budget: int = DEFAULT_BUDGET) -> int:
    """Exact number of ordered non-diagonal square quadruples in (x, x+y]."""
    seen: set[tuple[int, int, int, int]] = set()
    count = 0
    for _, quad in nondiagonal_quadruples(x, y, budget):
        if quad in seen:
            raise ContractViolation(f"parametrization visited {quad} twice")
        seen.add(quad)
        count += 1
    return count


def fourth_moment_exact(table: IntervalTable, budget: int = DEFAULT_BUDGET) -> int:
    """E (sum of X over the interval)^4: the exact ordered count of square
    quadruples, diagonal closed form plus parametrized non-diagonal count."""
    s = table.squarefree_count
    return diagonal_count(s) + param_enumerate_nondiagonal(
        table.x_lo, table.y_len, budget
    )

"""Random multiplicative functions from seeded prime signs, interval sums
and the normalized statistic W = (interval sum)/sqrt(S).

Signs are a pure function of (seed, prime) built from the splitmix64
finalizer, so a sign source needs O(1) memory and replays bit-identically
across runs, platforms and worker counts.  Per-trial sources are derived
from (master_seed, trial_index) through the same keyed construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateIntervalError
from .numtheory import IntervalTable, _factor_segment

_M64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_SIGN_TAG = 0x243F6A8885A308D3
_TRIAL_TAG = 0x452821E638D01377


def _mix64(z: int) -> int:
    """splitmix64 finalizer: bijective on 64-bit words, strong avalanche."""
    z &= _M64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _prf(key: int, data: int) -> int:
    return _mix64(_mix64(key) ^ _mix64((data + _GOLDEN) & _M64))


@dataclass(frozen=True)
class SignSource:
    """Deterministic assignment of +/-1 signs to primes from a 64-bit seed."""

    master_seed: int

    def sign(self, p: int) -> int:
        h = _prf((self.master_seed ^ _SIGN_TAG) & _M64, p)
        return 1 if (h >> 63) == 0 else -1

    def for_trial(self, trial_index: int) -> "SignSource":
        """Independent source for one Monte Carlo trial; adding trials never
        perturbs earlier ones."""
        return SignSource(_prf((self.master_seed ^ _TRIAL_TAG) & _M64, trial_index))


def rmf_value(n: int, table: IntervalTable, signs: SignSource) -> int:
    """X(n): 0 if n is not square-free, else the product of sign(p) over the
    distinct prime factors of n.  X(1) = +1 (empty product)."""
    if not table.is_squarefree(n):
        return 0
    v = 1
    for p, _ in table.factors(n):
        v *= signs.sign(p)
    return v


def interval_sum(table: IntervalTable, signs: SignSource) -> int:
    """Exact integer sum of X(n) over (x, x+y]."""
    total = 0
    for _, primes in table.squarefree_items():
        v = 1
        for p in primes:
            v *= signs.sign(p)
        total += v
    return total


@dataclass(frozen=True)
class WStatistic:
    raw_sum: int
    s_count: int
    w: float


def normalized_w(table: IntervalTable, signs: SignSource) -> WStatistic:
    """W = (sum of X over the interval) / sqrt(S); requires S >= 1."""
    s = table.squarefree_count
    if s == 0:
        raise DegenerateIntervalError(
            f"interval ({table.x_lo}, {table.x_hi}] has no square-free integer"
        )
    raw = interval_sum(table, signs)
    return WStatistic(raw, s, raw / math.sqrt(s))


def partial_sum_m(x: int, signs: SignSource, block: int = 1 << 16) -> int:
    """M(x) = sum of X(n) for n <= x, by blocked segment factorization.
    Desk scale: x <= 10^8."""
    if x < 1:
        raise ValueError(f"x must be >= 1, got {x}")
    if x > 10**8:
        raise ValueError(f"x={x} beyond desk scale 10^8")
    total = 1  # X(1) = +1
    lo = 1
    while lo < x:
        length = min(block, x - lo)
        total += interval_sum(_factor_segment(lo, length), signs)
        lo += length
    return total


# ---------------------------------------------------------------------------
# Vectorized trial engine
# ---------------------------------------------------------------------------

def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


class IntervalSampler:
    """Batched sampler of interval sums over derived per-trial sign sources.

    Produces exactly the values the scalar path (SignSource.for_trial +
    interval_sum) would, but evaluates whole batches of trials through
    packed bit masks: entry i of the interval carries the bit set of its
    prime factors, a trial carries the bit vector of negative signs, and
    X(n) = (-1)^popcount(mask & trial_bits).
    """

    def __init__(self, table: IntervalTable, master_seed: int):
        items = table.squarefree_items()
        self.s_count = len(items)
        self.master_seed = master_seed & _M64
        primes = sorted({p for _, ps in items for p in ps})
        self._primes = np.array(primes, dtype=np.uint64)
        index = {p: j for j, p in enumerate(primes)}
        n_primes = len(primes)
        bits = np.zeros((self.s_count, n_primes), dtype=np.uint8)
        for i, (_, ps) in enumerate(items):
            for p in ps:
                bits[i, index[p]] = 1
        self._masks = self._pack(bits)
        self._blocks = self._masks.shape[1]
        # hoisted PRF halves: sign bit of entry (t, j) is the top bit of
        # mix64(mix64(trial_seed ^ SIGN_TAG) ^ mix64(prime_j + GOLDEN))
        self._prime_half = _mix64_np(self._primes + np.uint64(_GOLDEN))

    @staticmethod
    def _pack(bits: np.ndarray) -> np.ndarray:
        nbytes = bits.shape[1] // 8 + (bits.shape[1] % 8 > 0)
        pad = (-nbytes) % 8
        packed = np.packbits(bits, axis=1, bitorder="little")
        if pad:
            packed = np.pad(packed, ((0, 0), (0, pad)))
        return packed.view(np.uint64)

    def trial_seeds(self, indices: np.ndarray) -> np.ndarray:
        key = np.uint64(_mix64((self.master_seed ^ _TRIAL_TAG) & _M64))
        return _mix64_np(key ^ _mix64_np(indices.astype(np.uint64) + np.uint64(_GOLDEN)))

    def raw_sums(self, start: int, count: int, batch: int = 512) -> np.ndarray:
        """Interval sums for trials start, ..., start+count-1 (int64)."""
        out = np.empty(count, dtype=np.int64)
        for off in range(0, count, batch):
            t = min(batch, count - off)
            idx = np.arange(start + off, start + off + t, dtype=np.uint64)
            seeds = self.trial_seeds(idx)
            seed_half = _mix64_np(seeds ^ np.uint64(_SIGN_TAG))
            h = _mix64_np(seed_half[:, None] ^ self._prime_half[None, :])
            neg = (h >> np.uint64(63)).astype(np.uint8)
            eps = self._pack(neg)
            par = np.zeros((t, self.s_count), dtype=np.uint64)
            for b in range(self._blocks):
                par += np.bitwise_count(eps[:, b, None] & self._masks[None, :, b])
            n_neg = (par & np.uint64(1)).sum(axis=1).astype(np.int64)
            out[off : off + t] = self.s_count - 2 * n_neg
        return out

    def w_values(self, start: int, count: int, batch: int = 512) -> np.ndarray:
        if self.s_count == 0:
            raise DegenerateIntervalError("no square-free integers in interval")
        return self.raw_sums(start, count, batch) / math.sqrt(self.s_count)

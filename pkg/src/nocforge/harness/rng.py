"""Seeded 64-bit xorshift* generator.

Recurrence (all arithmetic modulo 2**64)::

    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    out = x * 0x2545F4914F6CDD1D

Streams are keyed: the initial state for key ``(seed, k)`` is
``splitmix64(splitmix64(seed) ^ k)`` (replaced by 1 if zero), where
splitmix64 is the standard finaliser::

    z = x + 0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    return z ^ (z >> 31)
"""

MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


class XorShift64Star:
    __slots__ = ("state",)

    def __init__(self, seed: int, key: int = 0):
        s = splitmix64(splitmix64(seed & MASK64) ^ (key & MASK64))
        self.state = s or 1

    def next(self) -> int:
        x = self.state
        x ^= x >> 12
        x ^= (x << 25) & MASK64
        x ^= x >> 27
        self.state = x
        return (x * 0x2545F4914F6CDD1D) & MASK64

    def below(self, n: int) -> int:
        """Integer in ``[0, n)`` (plain modulo reduction)."""
        return self.next() % n

    def chance(self, p: float) -> bool:
        """True with probability ``p``; always consumes exactly one draw."""
        return self.next() < int(min(max(p, 0.0), 1.0) * (1 << 64))

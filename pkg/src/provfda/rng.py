"""SplitMix64: a tiny 64-bit-state generator with a fully pinned algorithm.

Used wherever results must be reproducible bit-for-bit across platforms and
across independent implementations (walk sampling, per-node seed derivation).

    state <- state + 0x9E3779B97F4A7C15            (mod 2**64)
    z <- state
    z <- (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9      (mod 2**64)
    z <- (z ^ (z >> 27)) * 0x94D049BB133111EB      (mod 2**64)
    output z ^ (z >> 31)

uniform()   = (next() >> 11) * 2**-53              in [0, 1)
below(m)    = (next() * m) >> 64                   in [0, m)
derive(s,k) = mix(s ^ mix(k))   where mix(x) is one SplitMix64 output for state x
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
M1 = 0xBF58476D1CE4E5B9
M2 = 0x94D049BB133111EB
INV53 = 1.0 / (1 << 53)


def mix(x: int) -> int:
    z = (x + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * M1) & MASK64
    z = ((z ^ (z >> 27)) * M2) & MASK64
    return z ^ (z >> 31)


def derive(seed: int, key: int) -> int:
    """Independent stream seed for ``key`` (e.g. a node id) under ``seed``."""
    return mix((seed & MASK64) ^ mix(key & MASK64))


class SplitMix64:
    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = z = (self.state + GOLDEN) & MASK64
        z = ((z ^ (z >> 30)) * M1) & MASK64
        z = ((z ^ (z >> 27)) * M2) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        return (self.next() >> 11) * INV53

    def below(self, m: int) -> int:
        return (self.next() * m) >> 64

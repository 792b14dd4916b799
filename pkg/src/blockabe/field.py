"""Prime-field arithmetic for exponents, shares and Lagrange weights.

Scalars are plain Python ints reduced modulo the field prime. The
production field is the BLS12-381 scalar field (the pairing group order);
``TINY_FIELD`` (p = 2**31 - 1) exists so that sharing code can be checked
against exhaustive oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

# r for BLS12-381; must match pymcl.r (asserted in pairing.py)
BLS12_381_ORDER = 0x73EDA753299D7D483339D80809A1D80553BDA402FFFE5BFEFFFFFFFF00000001


@dataclass(frozen=True)
class PrimeField:
    p: int

    @property
    def nbytes(self) -> int:
        """Width of the fixed big-endian scalar encoding."""
        return (self.p.bit_length() + 7) // 8

    @property
    def limb_bytes(self) -> int:
        """Largest byte count whose every value fits below ``p``."""
        return (self.p.bit_length() - 1) // 8

    def __call__(self, value: int) -> int:
        return value % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("zero has no inverse in the field")
        return pow(a, -1, self.p)

    def div(self, a: int, b: int) -> int:
        return a * self.inv(b) % self.p

    def random(self, rng, nonzero: bool = False) -> int:
        """Uniform element drawn from ``rng`` (re-drawn while zero if asked)."""
        while True:
            value = rng.randrange(self.p)
            if value or not nonzero:
                return value

    def to_bytes(self, a: int) -> bytes:
        return (a % self.p).to_bytes(self.nbytes, "big")

    def from_bytes(self, data: bytes) -> int:
        if len(data) != self.nbytes:
            raise ValueError(f"scalar encoding must be {self.nbytes} bytes, got {len(data)}")
        value = int.from_bytes(data, "big")
        if value >= self.p:
            raise ValueError("scalar encoding out of range")
        return value


GROUP_FIELD = PrimeField(BLS12_381_ORDER)
TINY_FIELD = PrimeField(2**31 - 1)

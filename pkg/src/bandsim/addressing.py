"""Fixed-width addresses and the XOR metric.

Peers and chunks share one ``bits``-wide address space.  Addresses are
compared most-significant-bit first: the length of the common prefix of two
addresses decides which k-bucket a peer files a neighbour under and whether
a peer is responsible for storing a chunk.
"""

from __future__ import annotations

from dataclasses import dataclass

DEFAULT_BITS = 16
MIN_BITS = 8
MAX_BITS = 64


@dataclass(frozen=True, order=True)
class Address:
    value: int
    bits: int = DEFAULT_BITS

    def __post_init__(self):
        if not MIN_BITS <= self.bits <= MAX_BITS:
            raise ValueError(f"address width must be in [{MIN_BITS}, {MAX_BITS}], got {self.bits}")
        if not 0 <= self.value < (1 << self.bits):
            raise ValueError(f"address value {self.value} out of range for {self.bits} bits")

    @classmethod
    def from_binary(cls, text: str) -> "Address":
        text = text.strip()
        if not text or set(text) - {"0", "1"}:
            raise ValueError(f"not a binary string: {text!r}")
        return cls(int(text, 2), len(text))

    def to_binary(self) -> str:
        return format(self.value, f"0{self.bits}b")

    def prefix(self, depth: int) -> int:
        """Top ``depth`` bits as an integer (the neighbourhood id at that depth)."""
        return self.value >> (self.bits - depth)

    def __str__(self):
        return self.to_binary()


def _check(a: Address, b: Address) -> None:
    if a.bits != b.bits:
        raise ValueError(f"address width mismatch: {a.bits} vs {b.bits}")


def common_prefix_len(x: int, y: int, bits: int) -> int:
    """Integer-level common prefix length; no validation."""
    return bits - (x ^ y).bit_length()


def common_bits(a: Address, b: Address) -> int:
    """Length of the shared most-significant-bit prefix of ``a`` and ``b``."""
    _check(a, b)
    return common_prefix_len(a.value, b.value, a.bits)


def xor_distance(a: Address, b: Address) -> int:
    _check(a, b)
    return a.value ^ b.value


def bucket_index(own: Address, other: Address) -> int:
    """Bucket in which ``own`` files ``other``.

    Raises ValueError for ``own == other``: a peer keeps no bucket for itself.
    """
    _check(own, other)
    if own.value == other.value:
        raise ValueError("a peer has no bucket for its own address")
    return common_prefix_len(own.value, other.value, own.bits)


def to_binary(value: int, bits: int) -> str:
    return format(value, f"0{bits}b")

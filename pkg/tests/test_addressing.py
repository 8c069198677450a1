import pytest

from bandsim.addressing import Address, bucket_index, common_bits, to_binary, xor_distance
from conftest import CHUNK, EXAMPLE


def A(text):
    return Address.from_binary(text)


C = Address(CHUNK, 16)


def test_common_bits_examples():
    a = A("1010101010101010")
    assert common_bits(a, a) == 16
    assert common_bits(A(EXAMPLE["F1"]), C) == 3
    assert common_bits(A(EXAMPLE["F2"]), C) == 7
    assert common_bits(A(EXAMPLE["S"]), C) == 11
    assert common_bits(A(EXAMPLE["G"]), C) == 0


def test_xor_distance():
    a = A("10110000")
    assert xor_distance(a, a) == 0
    assert xor_distance(Address(0b0001, 8), Address(0b0000, 8)) == 1
    assert xor_distance(Address(0b1000, 8), Address(0b0000, 8)) == 8


def test_bucket_index():
    assert bucket_index(A("10000000"), A("01110000")) == 0
    assert bucket_index(A("10100000"), A("10000000")) == 2
    assert bucket_index(A(EXAMPLE["G"]), A(EXAMPLE["F1"])) == 0
    with pytest.raises(ValueError):
        bucket_index(C, C)


def test_validation():
    with pytest.raises(ValueError):
        Address(256, 8)
    with pytest.raises(ValueError):
        Address(0, 4)
    with pytest.raises(ValueError):
        Address.from_binary("10x1")
    with pytest.raises(ValueError):
        common_bits(Address(1, 8), Address(1, 16))


def test_binary_round_trip():
    a = A(EXAMPLE["S"])
    assert a.to_binary() == EXAMPLE["S"]
    assert to_binary(5, 8) == "00000101"
    assert a.prefix(11) == int(EXAMPLE["S"][:11], 2)

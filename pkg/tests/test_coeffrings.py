import pytest

from kwheel.coeffrings import (
    ZZ,
    KSurfaceModel,
    NotInvertible,
    RingModel,
    augmentation,
    format_model,
    invert,
    is_unit,
    parse_model,
    ring_validate,
    tensor_power,
)


def test_kp2_products(kp2):
    R = kp2.ring
    s, s2 = R.basis(1), R.basis(2)
    assert s * s == s2
    assert (s * s2).is_zero()


def test_kp2_validates(kp2):
    assert ring_validate(kp2.ring) == []
    assert ring_validate(tensor_power(kp2.ring, 2)) == []
    assert kp2.problems() == []


def test_corrupted_table_names_associativity_triple():
    table = {(0, 0): (1, 0), (0, 1): (0, 1), (1, 1): (2, 0)}
    good = RingModel(["1", "x"], table, unit=(1, 0))
    assert ring_validate(good) == []
    # x*x = 2 + x breaks nothing; make 1*1 = 2 instead, corrupting the constant
    bad = RingModel(["1", "x"], {**table, (0, 0): (2, 0)}, unit=(1, 0))
    report = ring_validate(bad)
    assert any(line.startswith("associativity fails at (") for line in report)
    assert any("unit fails" in line for line in report)


def test_missing_constant_reported():
    m = RingModel(["a", "b"], {(0, 0): (1, 0), (0, 1): (0, 1)}, unit=(1, 0))
    assert ring_validate(m) == ["missing structure constant (b, b)"]


def test_invert(kp2):
    R = kp2.ring
    one, s = R.one(), R.basis(1)
    assert invert(one) == one
    L = one + s
    assert invert(L) == one - s + R.basis(2)
    with pytest.raises(NotInvertible):
        invert(s)
    assert not is_unit(s)
    assert kp2.omega * invert(kp2.omega) == one


def test_invert_needs_integer_solution():
    assert invert(ZZ.from_int(-1)) == ZZ.from_int(-1)
    with pytest.raises(NotInvertible):
        invert(ZZ.from_int(2))


def test_tensor_power(kp2):
    R = kp2.ring
    T1 = tensor_power(R, 1)
    assert T1.rank == 3
    assert tensor_power(ZZ, 5).rank == 1
    T2 = tensor_power(R, 2)
    assert T2.rank == 9
    s = R.basis(1)
    assert T2.place({0: s}) * T2.place({1: s}) == T2.place({0: s, 1: s})
    # row-major: slot 1 is the most significant digit
    assert T2.place({0: s}).coords[3] == 1


@pytest.mark.parametrize("n", [1, 2, 3])
def test_tensor_powers_validate(kp2, n):
    assert ring_validate(tensor_power(kp2.ring, n)) == []


def test_kp2_classes(kp2):
    R = kp2.ring
    one, s = R.one(), R.basis(1)
    L = kp2.hyperplane
    assert (L - one) ** 3 == R.zero()
    assert kp2.omega == one - 3 * s + 6 * R.basis(2)
    assert kp2.c_omega == 2 * one - 3 * s + 3 * R.basis(2)
    rank = (1, 0, 0)
    assert augmentation(kp2.c_omega, rank) == 2
    assert [augmentation(w, rank) for w in kp2.wedgeW] == [1, 2, 1]


def test_model_file_roundtrip(kp2):
    text = format_model(kp2)
    again = parse_model(text)
    assert isinstance(again, KSurfaceModel)
    assert again == kp2
    ring_only = parse_model(format_model(kp2.ring))
    assert ring_only == kp2.ring


def test_model_file_errors():
    with pytest.raises(ValueError):
        parse_model("rank 1\nbasis e\nmul 0 0 : 1\nbogus: 1\n")
    with pytest.raises(ValueError):
        parse_model("rank 2\nbasis a\n")

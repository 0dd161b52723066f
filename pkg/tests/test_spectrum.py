import math
from fractions import Fraction

import numpy as np
import pytest

from screwcohom.errors import InputError, SpecMismatch
from screwcohom.spectrum import (
    CoefficientField,
    PhasePoint,
    ScrewMotion,
    TruncationSpec,
    evaluate,
    evaluate_many,
    field_from_records,
    field_to_records,
    koopman_minus_id,
    parse_rational,
    random_field,
    sample_haar,
    transport,
    unit_phase,
    zero_mean,
)
from screwcohom.wigner import irrep

from conftest import ORDER4, SCREWS, make_screw

SPEC = TruncationSpec(2, 2)
ORIGIN = PhasePoint(np.zeros(3), np.eye(3))


def direct_value(field, point):
    """Series evaluated term by term, for cross-checking the kernels."""
    total = 0j
    for (k, ell, n), vec in field.blocks.items():
        d = irrep(ell, point.R)
        ek = np.exp(2j * np.pi * np.dot(k, point.x))
        total += ek * sum(vec[m + ell] * d[m + ell, n + ell] for m in range(-ell, ell + 1))
    return total


def test_parse_rational():
    assert parse_rational("3/6") == Fraction(1, 2)
    assert parse_rational("0") == 0
    assert parse_rational(2) == 2
    for bad in ("1/0", "x", "", None, 0.5, True, "0.5", "1/-2", "1e3"):
        with pytest.raises(InputError):
            parse_rational(bad)


def test_unit_phase_exact_quarters():
    assert unit_phase(Fraction(1, 4)) == 1j
    assert unit_phase(Fraction(-1, 2)) == -1
    assert unit_phase(Fraction(1, 3)) == pytest.approx(complex(-0.5, math.sqrt(3) / 2), abs=1e-15)


def test_screw_normalizes_translation():
    s = make_screw(ORDER4, ["5/4", "-1/3", "2/4"])
    assert s.t == (Fraction(1, 4), Fraction(2, 3), Fraction(1, 2))


def test_evaluate_zero_field():
    assert evaluate(CoefficientField(SPEC), sample_haar(0, 1)[0]) == 0


def test_evaluate_single_torus_mode():
    f = CoefficientField(SPEC, {((0, 0, 1), 0, 0): [1.0]})
    val = evaluate(f, PhasePoint([0, 0, 0.25], np.eye(3)))
    assert val == pytest.approx(1j, abs=1e-15)


def test_evaluate_l1_block_at_identity():
    vec = np.array([0.3, -1.2 + 0.5j, 2.0])
    f = CoefficientField(SPEC, {((0, 0, 0), 1, 0): vec})
    # D^1(I) = I picks out the m = n = 0 entry
    assert evaluate(f, ORIGIN) == pytest.approx(vec[1], abs=1e-15)


def test_evaluate_matches_direct_sum():
    f = random_field(TruncationSpec(1, 2), 4)
    for p in sample_haar(4, 5):
        assert evaluate(f, p) == pytest.approx(direct_value(f, p), abs=1e-11)


def test_evaluate_is_linear():
    f, g = random_field(SPEC, 1), random_field(SPEC, 2)
    pts = sample_haar(5, 10)
    lhs = evaluate_many(2.0 * f - g, pts)
    rhs = 2.0 * evaluate_many(f, pts) - evaluate_many(g, pts)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_transport_identity_screw():
    f = random_field(SPEC, 3)
    out = transport(f, ScrewMotion.identity())
    assert (out - f).norm() == 0.0


def test_transport_single_mode():
    screw = make_screw(ORDER4, ["0", "0", "1/4"])
    f = CoefficientField(SPEC, {((0, 0, 1), 0, 0): [1.0]})
    out = transport(f, screw)
    assert list(out.blocks) == [((0, 0, 1), 0, 0)]
    assert out.block((0, 0, 1), 0, 0)[0] == 1j


def test_transport_preserves_norm(screw):
    f = random_field(SPEC, 7, decay=0.5)
    assert abs(transport(f, screw).norm() - f.norm()) <= 1e-10


def test_transport_matches_pointwise_composition(screw):
    f = random_field(SPEC, 8)
    pts = sample_haar(8, 100)
    lhs = evaluate_many(transport(f, screw), pts)
    rhs = evaluate_many(f, [screw.apply(p) for p in pts])
    assert np.max(np.abs(lhs - rhs)) <= 1e-8 * (1 + f.norm())


def test_koopman_examples():
    f = random_field(SPEC, 9)
    assert koopman_minus_id(f, ScrewMotion.identity()).norm() == 0.0
    screw = make_screw(ORDER4, ["0", "0", "1/4"])
    g = koopman_minus_id(CoefficientField(SPEC, {((0, 0, 1), 0, 0): [1.0]}), screw)
    assert g.block((0, 0, 1), 0, 0)[0] == 1j - 1


def test_koopman_pointwise(screw):
    f = random_field(SPEC, 10)
    g = koopman_minus_id(f, screw)
    pts = sample_haar(10, 100)
    moved = [screw.apply(p) for p in pts]
    expect = evaluate_many(f, moved) - evaluate_many(f, pts)
    assert np.max(np.abs(evaluate_many(g, pts) - expect)) <= 1e-8


def test_zero_mean():
    assert zero_mean(CoefficientField(SPEC))
    assert not zero_mean(CoefficientField(SPEC, {((0, 0, 0), 0, 0): [1.0]}))


def test_coboundaries_have_zero_mean(screw):
    for seed in range(3):
        assert zero_mean(koopman_minus_id(random_field(SPEC, seed), screw))


def test_random_field_deterministic():
    a, b = random_field(SPEC, 42), random_field(SPEC, 42)
    assert a.blocks.keys() == b.blocks.keys()
    assert all(np.array_equal(a.blocks[k], b.blocks[k]) for k in a.blocks)
    assert a.norm() == b.norm()
    assert random_field(SPEC, 43).norm() != a.norm()


def test_random_field_decay():
    flat = random_field(SPEC, 1, decay=0.0)
    mags = np.concatenate([np.abs(v) for v in flat.blocks.values()])
    assert 0.3 < np.mean(mags) < 3.0
    steep = random_field(SPEC, 1, decay=2.0)
    far = np.abs(steep.block((2, 2, 2), 2, 0))
    near = np.abs(flat.block((2, 2, 2), 2, 0))
    assert np.allclose(far, near * (1 + math.sqrt(12)) ** -2 * 3.0 ** -2)


def test_parseval_norm_matches_monte_carlo():
    f = random_field(TruncationSpec(1, 1), 2)
    pts = sample_haar(21, 20000)
    vals = evaluate_many(f, pts)
    mc = np.mean(np.abs(vals) ** 2)
    # 4 sigma of the Monte Carlo estimate
    sigma = np.std(np.abs(vals) ** 2) / math.sqrt(len(pts))
    assert abs(mc - f.norm_sq()) <= 4 * sigma


def test_sample_haar():
    assert sample_haar(0, 0) == []
    a, b = sample_haar(5, 3), sample_haar(5, 3)
    assert all(np.array_equal(p.x, q.x) and np.array_equal(p.R, q.R) for p, q in zip(a, b))
    pts = sample_haar(6, 10000)
    one = CoefficientField(SPEC, {((0, 0, 0), 0, 0): [1.0]})
    assert np.mean(evaluate_many(one, pts[:100])) == 1.0
    e100 = CoefficientField(SPEC, {((1, 0, 0), 0, 0): [1.0]})
    assert abs(np.mean(evaluate_many(e100, pts))) <= 0.05
    xs = np.array([p.x for p in pts])
    assert xs.min() >= 0 and xs.max() < 1


def test_screw_apply_stays_on_torus():
    s = SCREWS["order4x"]
    for p in sample_haar(1, 20):
        q = s.apply(p)
        assert np.all((q.x >= 0) & (q.x < 1))
        assert np.allclose(q.R, s.rotation.array @ p.R)


def test_field_validation():
    with pytest.raises(SpecMismatch):
        CoefficientField(SPEC, {((3, 0, 0), 0, 0): [1.0]})
    with pytest.raises(SpecMismatch):
        CoefficientField(SPEC, {((0, 0, 0), 3, 0): np.zeros(7)})
    with pytest.raises(InputError):
        CoefficientField(SPEC, {((0, 0, 0), 1, 2): np.zeros(3)})
    with pytest.raises(InputError):
        CoefficientField(SPEC, {((0, 0, 0), 1, 0): np.zeros(2)})


def test_records_roundtrip():
    f = random_field(TruncationSpec(1, 1), 3)
    recs = field_to_records(f)
    assert recs[0]["k"] == [-1, -1, -1] and recs[0]["l"] == 0
    back = field_from_records(f.spec, recs)
    assert (back - f).norm() == 0.0


@pytest.mark.parametrize(
    "records, err",
    [
        ([{"k": [0, 0, 0], "l": 0, "m": 0, "n": 0, "re": 1, "im": 0}] * 2, InputError),
        ([{"k": [9, 0, 0], "l": 0, "m": 0, "n": 0, "re": 1, "im": 0}], SpecMismatch),
        ([{"k": [0, 0, 0], "l": 1, "m": 2, "n": 0, "re": 1, "im": 0}], InputError),
        ([{"k": [0, 0], "l": 0, "m": 0, "n": 0, "re": 1, "im": 0}], InputError),
        ([{"k": [0, 0, 0], "l": 0, "m": 0, "n": 0, "re": 1}], InputError),
        ([{"k": [0, 0, 0], "l": 0, "m": 0, "n": 0, "re": "a", "im": 0}], InputError),
        ({"k": [0, 0, 0]}, InputError),
    ],
)
def test_records_errors(records, err):
    with pytest.raises(err):
        field_from_records(SPEC, records)

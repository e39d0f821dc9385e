# tests/test_flops.py
import pytest

from vulcan_fem.flops import (JACOBIAN_FLOPS, PHASES, PUBLISHED_JACOBIAN_FLOPS, FlopCounter,
                              element_flops, jacobian_cost_note, jacobian_flop_figures)


def test_jacobian_cost() -> None:
    assert JACOBIAN_FLOPS == 150


@pytest.mark.parametrize("computes_jacobian, expected", [
    (True, {"block_update": 367416, "jacobian": 2700, "shape_derivatives": 4860,
            "scaling": 54, "coefficients": 8}),
    (False, {"block_update": 367416, "jacobian": 0, "shape_derivatives": 4860,
             "scaling": 54, "coefficients": 8}),
])
def test_element_flops_sequential(computes_jacobian, expected) -> None:
    """One pass, N_sh^2 blocks, p = 2 sizes."""

    result = element_flops(1, 324, 18, 18, computes_jacobian)
    assert result == expected, f"Expected {expected}, got {result}"


def test_element_flops_parts() -> None:
    """Every part repeats the quadrature loop; coefficients are computed once."""

    result = element_flops(32, 512, 150, 126, True)
    assert result["block_update"] == 32 * 150 * 512 * 63
    assert result["jacobian"] == 32 * 150 * 150
    assert result["shape_derivatives"] == 32 * 150 * 126 * 15
    assert result["coefficients"] == 8


def test_counter_add_merge() -> None:
    counter = FlopCounter()
    counter.add("block_update", 63)
    other = FlopCounter()
    other.add("scaling", 3)
    counter.merge(other)
    assert counter.total == 66
    assert counter.as_dict()["total"] == 66
    assert set(counter.counts) == set(PHASES)


def test_counter_unknown_phase() -> None:
    with pytest.raises(KeyError):
        FlopCounter().add("assembly", 1)


@pytest.mark.parametrize("computes_jacobian, counted, published", [
    (True, 32 * 150 * 150, 32 * 150 * 37),
    (False, 0, 0),
])
def test_jacobian_flop_figures(computes_jacobian, counted, published) -> None:
    """Both per-point figures are reported side by side."""

    result = jacobian_flop_figures(32, 150, computes_jacobian)
    assert result == {"per_point_counted": 150, "per_point_published": 37,
                      "counted": counted, "published": published}, f"Got {result}"


def test_jacobian_cost_note() -> None:
    note = jacobian_cost_note()
    assert str(JACOBIAN_FLOPS) in note and str(PUBLISHED_JACOBIAN_FLOPS) in note

# tests/test_config.py
import json

import pytest

from vulcan_fem.coefficients import MaterialData
from vulcan_fem.config import (DEFAULT_ORDERS, DEFAULT_PLAN_ORDERS, RunConfig, invert_element,
                               parse_mesh, parse_orders, parse_variants)
from vulcan_fem.errors import (CapacityError, ConfigurationError, DomainError,
                               IncompressibleMaterialError, InvertedElementError)
from vulcan_fem.geometry import jacobian_terms, reference_prism
from vulcan_fem.kernels import Precision
from vulcan_fem.planner import KernelVariant


@pytest.mark.parametrize("value, expected", [
    (5, (5,)),
    ("5", (5,)),
    ("2..5", (2, 3, 4, 5)),
    ("4,2,4", (2, 4)),
    ([7, 1], (1, 7)),
])
def test_parse_orders(value, expected) -> None:
    result = parse_orders(value)
    assert result == expected, f"Expected {expected}, got {result}"


def test_parse_orders_errors() -> None:
    with pytest.raises(ConfigurationError):
        parse_orders("two")
    with pytest.raises(DomainError):
        parse_orders("0..3")


def test_parse_variants() -> None:
    assert parse_variants("all") == tuple(KernelVariant)
    assert parse_variants("shm-nojac,reg-jac,shm-nojac") == (KernelVariant.SHM_NOJAC,
                                                             KernelVariant.REG_JAC)
    with pytest.raises(ConfigurationError):
        parse_variants("reg-jac,foo")


@pytest.mark.parametrize("value", ["4,4", "a,b,c", [1, 0, 1]])
def test_parse_mesh_errors(value) -> None:
    with pytest.raises(ConfigurationError):
        parse_mesh(value)


def test_defaults() -> None:
    """Every option has a default; plan covers all orders with published tables."""

    verify = RunConfig.from_options("verify", {})
    assert verify.orders == DEFAULT_ORDERS
    assert verify.variants == tuple(KernelVariant)
    assert verify.n_elements == 128
    assert verify.precision is Precision.SINGLE
    assert RunConfig.from_options("plan", {}).orders == DEFAULT_PLAN_ORDERS


def test_options_override_file(tmp_path) -> None:
    """File values fill unset options; flags win."""

    path = tmp_path / "run.json"
    path.write_text(json.dumps({"p": "2..3", "mesh": [2, 1, 1], "material": [1.0, 0.3],
                                "precision": "f64", "repetitions": 2}))
    cfg = RunConfig.from_options("bench", {"p": "2", "variant": "reg-jac", "warmup": None},
                                 str(path))
    assert cfg.orders == (2,)
    assert cfg.mesh == (2, 1, 1)
    assert cfg.material == MaterialData(1.0, 0.3)
    assert cfg.precision is Precision.WIDE
    assert (cfg.repetitions, cfg.warmup) == (2, 1)
    assert cfg.variants == (KernelVariant.REG_JAC,)


def test_unknown_file_key(tmp_path) -> None:
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"orders": [2]}))
    with pytest.raises(ConfigurationError) as info:
        RunConfig.from_options("verify", {}, str(path))
    assert info.value.details["keys"] == ["orders"]


@pytest.mark.parametrize("options", [
    {"distortion": 0.3},
    {"repetitions": 0},
    {"warmup": -1},
    {"workers": 0},
    {"wg": 100},
    {"mesh": "1,1,1", "inject_inverted": 2},
    {"mesh": "1,1,1", "materials": [[1.0, 0.3]]},
    {"precision": "f16"},
    {"profile": "no-such-device"},
])
def test_invalid_options(options) -> None:
    with pytest.raises(ConfigurationError):
        RunConfig.from_options("bench", options)


@pytest.mark.parametrize("entry", [
    {"material": 5},
    {"material": [1.0]},
    {"material": ["stiff", 0.3]},
    {"materials": [1.0, 0.3]},
    {"materials": [[1.0, 0.3, 7.0]]},
    {"materials": "1.0,0.3"},
])
def test_malformed_material_in_file(tmp_path, entry) -> None:
    """Material entries of the wrong shape are configuration errors, not crashes."""

    path = tmp_path / "run.json"
    path.write_text(json.dumps(entry))
    with pytest.raises(ConfigurationError):
        RunConfig.from_options("verify", {"mesh": "1,1,1"}, str(path))


def test_invalid_material() -> None:
    with pytest.raises(IncompressibleMaterialError):
        RunConfig.from_options("verify", {"material": "1.0,0.5"})


def test_unplannable_order(tmp_path) -> None:
    """Capacity limits are found before any buffer is built."""

    document = {"name": "small", "global_mem_bytes": 1 << 30, "max_alloc_bytes": 1 << 20,
                "shared_mem_bytes": 49152, "constant_mem_bytes": 65536, "max_work_group": 1024,
                "compute_units": 4}
    path = tmp_path / "small.json"
    path.write_text(json.dumps(document))
    with pytest.raises(CapacityError):
        RunConfig.from_options("plan", {"profile": str(path), "p": "7"})


def test_material_field_and_mesh() -> None:
    cfg = RunConfig.from_options("verify", {
        "mesh": "1,1,1", "materials": [[1.0, 0.2], [2.0, 0.3]], "inject_inverted": 1,
        "distortion": 0.0})
    field = cfg.material_field()
    assert field[1] == MaterialData(2.0, 0.3)
    assert len(cfg.material_field(1)) == 1
    mesh = cfg.build_mesh()
    assert jacobian_terms(mesh[0], (0.2, 0.2, 0.0)).det > 0
    with pytest.raises(InvertedElementError) as info:
        jacobian_terms(mesh[1], (0.2, 0.2, 0.0))
    assert info.value.details["element_id"] == 1


def test_invert_element_flips_determinant() -> None:
    geom = invert_element(reference_prism(4))
    assert geom.element_id == 4
    assert geom.vertices[0].tolist() == [0.0, 0.0, 1.0]

# tests/test_encoder.py
import json
import uuid
from dataclasses import dataclass
from datetime import date, datetime, time
from pathlib import Path

import numpy as np
import pytest

from vulcan_fem.encoder import Encoder
from vulcan_fem.kernels import Precision
from vulcan_fem.planner import KernelVariant


@pytest.mark.parametrize("obj, expected", [
    (datetime(2022, 3, 4, 5, 6, 7), '"2022-03-04T05:06:07"'),
    (date(2022, 3, 4), '"2022-03-04"'),
    (time(5, 6, 7), '"05:06:07"'),
])
def test_encode_datetimes(obj, expected) -> None:
    """Dates and times become ISO strings."""

    result = json.dumps(obj, cls=Encoder)
    assert result == expected, f"Expected {expected}, got {result}"


@pytest.mark.parametrize("obj, expected", [
    (np.array([[1.5, 2.0], [3.0, 4.25]]), [[1.5, 2.0], [3.0, 4.25]]),
    (np.float32(0.5), 0.5),
    (np.int64(672), 672),
    (np.bool_(True), True),
])
def test_encode_numpy(obj, expected) -> None:
    """Arrays become nested lists and numpy scalars plain numbers."""

    result = json.loads(json.dumps(obj, cls=Encoder))
    assert result == expected, f"Expected {expected}, got {result}"


@pytest.mark.parametrize("obj, expected", [
    (KernelVariant.SHM_NOJAC, '"SHM_NOJAC"'),
    (Precision.SINGLE, '"f32"'),
])
def test_encode_enum(obj, expected) -> None:
    """Enum members are encoded by value."""

    assert json.dumps(obj, cls=Encoder) == expected


def test_encode_dataclass_and_path() -> None:
    """Dataclasses become objects; paths and sets become strings and sorted lists."""

    @dataclass
    class Check:
        name: str
        passed: bool
        files: set

    payload = {"check": Check("symmetry", True, {"b", "a"}), "dir": Path("/tmp/dump")}
    result = json.loads(json.dumps(payload, cls=Encoder))
    expected = {"check": {"name": "symmetry", "passed": True, "files": ["a", "b"]},
                "dir": "/tmp/dump"}
    assert result == expected, f"Expected {expected}, got {result}"


def test_encode_object_dict() -> None:
    """Plain objects are encoded by their public attributes."""

    class Device:
        def __init__(self):
            self.name = "hd5870"
            self.compute_units = 20
            self._secret = 1

    result = json.loads(json.dumps(Device(), cls=Encoder))
    assert result == {"name": "hd5870", "compute_units": 20}, f"Got {result}"


def test_encode_uuid() -> None:
    """Anything else falls back to str()."""

    obj = uuid.uuid4()
    assert json.dumps(obj, cls=Encoder) == f'"{str(obj)}"'

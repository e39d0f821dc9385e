"""
vulcan_fem/encoder.py

This module provides the JSON encoder used for every report, profile echo and manifest written by
vulcan_fem.

Classes:
    - Encoder: json.JSONEncoder aware of numpy, dataclasses, enums, paths and datetimes.
"""

import dataclasses
import json
from datetime import date, datetime, time
from enum import Enum
from pathlib import PurePath
from typing import Any

import numpy as np


class Encoder(json.JSONEncoder):
    """
    JSON encoder with serialization for the numeric and record types used in reports.
    """

    def default(self, o: Any) -> Any:
        """
        Serializes types the standard encoder rejects.

        Args:
            o: The object to be serialized.

        Returns:
            A JSON-compatible value.
        """

        if isinstance(o, np.ndarray):
            return o.tolist()
        elif isinstance(o, np.generic):
            return o.item()
        elif isinstance(o, (datetime, date, time)):
            return o.isoformat()
        elif isinstance(o, Enum):
            return o.value
        elif isinstance(o, PurePath):
            return str(o)
        elif isinstance(o, (set, frozenset)):
            return sorted(o)
        elif dataclasses.is_dataclass(o) and not isinstance(o, type):
            return {field.name: getattr(o, field.name) for field in dataclasses.fields(o)}
        elif hasattr(o, "__dict__"):
            return {key: value for key, value in vars(o).items() if not key.startswith("_")}
        else:
            return str(o)

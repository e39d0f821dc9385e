"""
vulcan_fem/printable.py

This module defines the Printable mixin for the array-holding domain types (quadrature rules,
shape tables, stiffness matrices, kernel buffers, device profiles). Their representations list
every attribute but show numpy arrays by shape and dtype and dictionaries by their keys, so
logging an object never prints thousands of numbers.
"""

import numpy as np


def _describe(value) -> str:
    if isinstance(value, np.ndarray):
        return f"ndarray(shape={value.shape}, dtype={value.dtype})"
    if isinstance(value, dict):
        return f"dict(keys={sorted(map(str, value))})"
    return repr(value)


class Printable:
    """
    Mixin providing a compact ``__repr__``/``__str__`` built from the instance variables.
    """

    def __repr__(self) -> str:
        """
        Returns:
            str: ``ClassName(attr=value, ...)`` with arrays summarized.
        """

        fields = ", ".join(f"{key}={_describe(value)}" for key, value in vars(self).items()
                           if not key.startswith("_"))
        return f"{self.__class__.__name__}({fields})"

    def __str__(self) -> str:
        return self.__repr__()

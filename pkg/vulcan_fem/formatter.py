"""
vulcan_fem/formatter.py

This module provides the Formatter class used by the command-line reports. It renders kernel phase
durations (measured in seconds, printed down to microseconds as in the published timing tables),
memory sizes in binary megabytes, and fixed-width text tables.

Constants:
    US_IN_MILLISECOND, US_IN_SECOND, US_IN_MINUTE, US_IN_HOUR: Microseconds per unit.
    BYTES_IN_MB: Bytes per (binary) megabyte, the unit of the planner tables.
"""

from typing import Any, Dict, List, Sequence

US_IN_MILLISECOND = 1000
US_IN_SECOND = 1000 * US_IN_MILLISECOND
US_IN_MINUTE = 60 * US_IN_SECOND
US_IN_HOUR = 60 * US_IN_MINUTE
BYTES_IN_MB = 1024 * 1024


class Formatter:
    """
    Formats durations, byte counts and tables for human-readable reports.
    """

    def duration(self, seconds: float, format_type: type = str, delimiter: str = " ") -> Any:
        """
        Formats a duration given in seconds.

        Args:
            seconds (float): The duration in seconds.
            format_type (type): One of str, list or dict.
            delimiter (str): Separator between units in string format.

        Returns:
            str, list or dict: e.g. "1s 250ms 3us", [("seconds", 1), ...], {"seconds": 1, ...}.
        """

        parts = self._duration_parts(round(seconds * US_IN_SECOND))
        if format_type == str:
            return delimiter.join(f"{value}{abbr}" for _, value, abbr in parts) or "0us"
        elif format_type == list:
            return [(name, value) for name, value, _ in parts]
        elif format_type == dict:
            return {name: value for name, value, _ in parts}
        raise ValueError(f"Unsupported format type: {format_type}")

    def _duration_parts(self, microseconds: int) -> list:
        """
        Splits microseconds into non-zero (name, value, abbreviation) parts.

        Args:
            microseconds (int): Duration in microseconds.

        Returns:
            list of tuples: The non-zero parts, largest unit first.
        """

        parts = []
        for name, size, abbr in (
            ("hours", US_IN_HOUR, "h"),
            ("minutes", US_IN_MINUTE, "m"),
            ("seconds", US_IN_SECOND, "s"),
            ("milliseconds", US_IN_MILLISECOND, "ms"),
            ("microseconds", 1, "us"),
        ):
            value, microseconds = divmod(microseconds, size)
            if value > 0:
                parts.append((name, value, abbr))
        return parts

    def megabytes(self, n_bytes: int, digits: int = 2) -> str:
        """
        Formats a byte count in binary megabytes.

        Args:
            n_bytes (int): Size in bytes.
            digits (int): Decimal places.

        Returns:
            str: e.g. "318.94 MB".
        """

        return f"{n_bytes / BYTES_IN_MB:.{digits}f} MB"

    def table(self, rows: Sequence[Dict[str, Any]], columns: Sequence[str] = ()) -> str:
        """
        Renders dictionaries as a left-aligned text table.

        Args:
            rows (Sequence[Dict[str, Any]]): One mapping per row.
            columns (Sequence[str]): Column order; defaults to the keys of the first row.

        Returns:
            str: The table with a header line and a separator.
        """

        if not rows:
            return ""
        columns = list(columns) or list(rows[0].keys())
        cells: List[List[str]] = [[str(row.get(column, "")) for column in columns]
                                  for row in rows]
        widths = [max(len(column), *(len(line[i]) for line in cells))
                  for i, column in enumerate(columns)]
        header = "  ".join(column.ljust(widths[i]) for i, column in enumerate(columns))
        separator = "  ".join("-" * width for width in widths)
        body = ["  ".join(value.ljust(widths[i]) for i, value in enumerate(line))
                for line in cells]
        return "\n".join([header, separator, *body])

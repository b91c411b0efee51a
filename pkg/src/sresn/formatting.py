"""Shared numeric formatting for CSV/JSON output.

CSV cells use the shortest decimal string that round-trips the double, so
rewriting a file from identical data is byte-identical.
"""

from __future__ import annotations


def fmt_float(x) -> str:
    """Shortest round-trip decimal representation of a double."""
    return repr(float(x))

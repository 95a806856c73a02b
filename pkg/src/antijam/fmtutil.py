"""Shared numeric formatting and key=value text helpers.

Run logs, checkpoints, config files, and the insight prompt all print reals
to two decimals with half-away-from-zero rounding, so the rules live here.
"""

from __future__ import annotations

from decimal import Decimal, ROUND_HALF_UP

_UNSAFE = {" ": "%20", "\t": "%09", "\n": "%0A", "\r": "%0D", "%": "%25", "=": "%3D"}


def round2(x: float) -> float:
    """Round to 2 decimals, ties away from zero (matches the report precision)."""
    if x != x:
        raise ValueError("cannot round NaN")
    return float(Decimal(repr(x)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def fmt2(x: float) -> str:
    """Print with exactly 2 decimals after round2."""
    return f"{round2(x):.2f}"


def quote_value(value: str) -> str:
    """Escape characters that would break a space-separated key=value line."""
    return "".join(_UNSAFE.get(ch, ch) for ch in value)


def unquote_value(value: str) -> str:
    out = []
    i = 0
    while i < len(value):
        if value[i] == "%" and i + 3 <= len(value):
            try:
                out.append(chr(int(value[i + 1 : i + 3], 16)))
                i += 3
                continue
            except ValueError:
                pass
        out.append(value[i])
        i += 1
    return "".join(out)


def format_pairs(pairs: dict[str, str]) -> str:
    """Canonical one-line rendering: key=value pairs sorted by key."""
    return " ".join(f"{k}={quote_value(v)}" for k, v in sorted(pairs.items()))


def parse_pairs(line: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for token in line.split():
        if "=" not in token:
            raise ValueError(f"malformed key=value token: {token!r}")
        key, _, value = token.partition("=")
        pairs[key] = unquote_value(value)
    return pairs

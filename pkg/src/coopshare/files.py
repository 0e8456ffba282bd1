"""Instance and allocation documents: strict JSON with exact rationals.

Numbers are integer literals or "p/q" strings; float literals are
rejected so the exactness contract reaches the I/O boundary.  Decimal
strings produced for reports are renderings only and never feed back
into computation.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Optional, Sequence

from .errors import InputError
from .game import Instance
from .ratlp import rat


def _reject_float(text: str):
    raise InputError(
        f"float literal {text!r} rejected: write an integer or a 'p/q' string"
    )


def _number(value, where: str) -> Fraction:
    try:
        return rat(value)
    except InputError as exc:
        raise InputError(f"{where}: {exc}") from None


def _capacity(value, where: str) -> Optional[Fraction]:
    if value == "inf":
        return None
    return _number(value, where)


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text, parse_float=_reject_float)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed instance document: {exc}") from None
    if not isinstance(doc, dict):
        raise InputError("instance document must be a JSON object")
    for key in ("players", "markets", "cost", "demand", "capacity"):
        if key not in doc:
            raise InputError(f"instance document is missing {key!r}")

    players = doc["players"]
    if not isinstance(players, list) or not all(isinstance(p, str) for p in players):
        raise InputError("players must be a list of names")
    if len(set(players)) != len(players):
        raise InputError("player names must be unique")

    markets, price = [], []
    if not isinstance(doc["markets"], list):
        raise InputError("markets must be a list of {name, price} objects")
    for j, entry in enumerate(doc["markets"]):
        if not isinstance(entry, dict) or "name" not in entry or "price" not in entry:
            raise InputError(f"markets[{j}] must be an object with name and price")
        markets.append(entry["name"])
        price.append(_number(entry["price"], f"markets[{j}].price"))
    if len(set(markets)) != len(markets):
        raise InputError("market names must be unique")

    n, m = len(players), len(markets)

    def matrix(key: str):
        raw = doc[key]
        if not isinstance(raw, list) or len(raw) != n:
            raise InputError(f"{key} must have one row per player ({n})")
        rows = []
        for i, row in enumerate(raw):
            if not isinstance(row, list) or len(row) != m:
                raise InputError(f"{key}[{i}] must list {m} market values")
            rows.append(
                tuple(_number(v, f"{key}[{i}][{j}]") for j, v in enumerate(row))
            )
        return tuple(rows)

    raw_cap = doc["capacity"]
    if not isinstance(raw_cap, list) or len(raw_cap) != n:
        raise InputError(f"capacity must list one value per player ({n})")
    capacity = tuple(
        _capacity(v, f"capacity[{i}]") for i, v in enumerate(raw_cap)
    )

    return Instance(
        tuple(players), tuple(markets), tuple(price),
        matrix("cost"), matrix("demand"), capacity,
    )


def parse_instance(path: str) -> Instance:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read instance file: {exc}") from None
    return loads_instance(text)


def _encode(value: Fraction):
    return int(value) if value.denominator == 1 else str(value)


def dumps_instance(inst: Instance) -> str:
    doc = {
        "players": list(inst.players),
        "markets": [
            {"name": name, "price": _encode(p)}
            for name, p in zip(inst.markets, inst.price)
        ],
        "cost": [[_encode(v) for v in row] for row in inst.cost],
        "demand": [[_encode(v) for v in row] for row in inst.demand],
        "capacity": ["inf" if q is None else _encode(q) for q in inst.capacity],
    }
    return json.dumps(doc, indent=2) + "\n"


def parse_allocation(path: str, players: Sequence[str]) -> tuple[Fraction, ...]:
    """Read {"allocation": {...}} keyed by player name, or a plain list."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh, parse_float=_reject_float)
    except OSError as exc:
        raise InputError(f"cannot read allocation file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed allocation document: {exc}") from None
    if isinstance(doc, dict) and "allocation" in doc:
        doc = doc["allocation"]
    if isinstance(doc, dict):
        missing = [p for p in players if p not in doc]
        extra = [p for p in doc if p not in players]
        if missing or extra:
            raise InputError(
                f"allocation players do not match the instance "
                f"(missing {missing!r}, unknown {extra!r})"
            )
        return tuple(_number(doc[p], f"allocation[{p}]") for p in players)
    if isinstance(doc, list):
        if len(doc) != len(players):
            raise InputError(
                f"allocation lists {len(doc)} values for {len(players)} players"
            )
        return tuple(_number(v, f"allocation[{i}]") for i, v in enumerate(doc))
    raise InputError("allocation document must be a mapping or a list")


def decimal_string(value: Fraction, digits: int) -> str:
    """Exact half-up decimal rendering with a fixed digit count."""
    if digits < 0:
        raise InputError("precision must be nonnegative")
    sign = "-" if value < 0 else ""
    num, den = abs(value.numerator), value.denominator
    scaled = num * 10**digits
    q, r = divmod(scaled, den)
    if 2 * r >= den:
        q += 1
    text = str(q).rjust(digits + 1, "0")
    if digits == 0:
        return sign + text
    return f"{sign}{text[:-digits]}.{text[-digits:]}"

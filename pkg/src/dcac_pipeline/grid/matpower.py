"""MATPOWER case file reader."""

from __future__ import annotations

import logging
import math
import re
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..exceptions import MalformedCase, UnsupportedCost
from .model import Branch, Bus, BusRole, CostCurve, Generator, NetworkCase

logger = logging.getLogger(__name__)

_BLOCK = re.compile(r"mpc\.(\w+)\s*=\s*\[(.*?)\]\s*;?", re.DOTALL)
_SCALAR = re.compile(r"mpc\.baseMVA\s*=\s*([-+0-9.eE]+)\s*;")
_FUNCTION = re.compile(r"function\s+\w+\s*=\s*(\w+)")

# Minimum column counts of the supported subset
_MIN_COLS = {"bus": 13, "gen": 10, "branch": 11, "gencost": 4}

# gencost MODEL code of the supported polynomial form
_POLYNOMIAL = 2

# MATPOWER BUS_TYPE of an isolated bus
_ISOLATED = 4


def _strip_comments(text: str) -> str:
    return "\n".join(line.split("%", 1)[0] for line in text.splitlines())


def _parse_block(name: str, body: str) -> np.ndarray:
    rows = []
    for raw in re.split(r"[;\n]", body):
        fields = raw.replace(",", " ").split()
        if not fields:
            continue
        try:
            rows.append([float(v) for v in fields])
        except ValueError as e:
            raise MalformedCase(
                f"Non-numeric entry in mpc.{name}: {raw.strip()!r}",
                operation="parse_matpower_case",
                original_error=e,
            ) from e
    if not rows:
        return np.zeros((0, _MIN_COLS.get(name, 0)))
    width = _MIN_COLS.get(name, 0)
    if name != "gencost" and any(len(row) < width for row in rows):
        raise MalformedCase(
            f"mpc.{name} rows need at least {width} columns",
            operation="parse_matpower_case",
        )
    if name == "gencost":
        # rows may differ in length when NCOST varies
        longest = max(len(row) for row in rows)
        rows = [row + [0.0] * (longest - len(row)) for row in rows]
    return np.array(rows, dtype=float)


def _cost_curve(row_index: int, row: np.ndarray) -> CostCurve:
    if len(row) < 4:
        raise MalformedCase(f"gencost row {row_index} is truncated")
    model, ncost = int(row[0]), int(row[3])
    if model != _POLYNOMIAL or ncost > 3:
        raise UnsupportedCost(row_index, model, ncost)
    coeffs = list(row[4 : 4 + ncost])
    if len(coeffs) < ncost:
        raise MalformedCase(f"gencost row {row_index} declares {ncost} coefficients")
    # highest order first; pad to (c2, c1, c0)
    coeffs = [0.0] * (3 - ncost) + coeffs
    try:
        return CostCurve(c2=coeffs[0], c1=coeffs[1], c0=coeffs[2])
    except ValidationError as e:
        raise MalformedCase(
            f"gencost row {row_index} is not convex", original_error=e
        ) from e


def parse_matpower_case(text: str, name: str | None = None) -> NetworkCase:
    """
    Parse MATPOWER case text into a per-unit network model.

    Args:
        text: Content of a MATPOWER ``.m`` case file
        name: Case name, defaults to the function name in the file

    Returns:
        Validated per-unit NetworkCase
    """
    clean = _strip_comments(text)

    base_match = _SCALAR.search(clean)
    if base_match is None:
        raise MalformedCase("mpc.baseMVA is missing", operation="parse_matpower_case")
    base = float(base_match.group(1))
    if base <= 0:
        raise MalformedCase(f"mpc.baseMVA must be positive, got {base}")

    if name is None:
        fn = _FUNCTION.search(clean)
        name = fn.group(1) if fn else "case"

    blocks = {m.group(1): m.group(2) for m in _BLOCK.finditer(clean)}
    for required in ("bus", "gen", "branch", "gencost"):
        if required not in blocks:
            raise MalformedCase(
                f"mpc.{required} block is missing", operation="parse_matpower_case"
            )
    bus_data = _parse_block("bus", blocks["bus"])
    gen_data = _parse_block("gen", blocks["gen"])
    branch_data = _parse_block("branch", blocks["branch"])
    cost_data = _parse_block("gencost", blocks["gencost"])

    if len(cost_data) < len(gen_data):
        raise MalformedCase(
            f"mpc.gencost has {len(cost_data)} rows for {len(gen_data)} generators"
        )

    isolated = {int(row[0]) for row in bus_data if int(row[1]) == _ISOLATED}
    if isolated:
        logger.warning(
            "Case %s: dropping isolated buses %s with their branches and generators",
            name,
            ", ".join(str(b) for b in sorted(isolated)),
        )

    try:
        buses = tuple(
            Bus(
                id=int(row[0]),
                role=BusRole.from_matpower(int(row[1])),
                p_d=row[2] / base,
                q_d=row[3] / base,
                gs=row[4] / base,
                bs=row[5] / base,
                vm_init=row[7],
                va_init=math.radians(row[8]),
                v_max=row[11],
                v_min=row[12],
            )
            for row in bus_data
            if int(row[0]) not in isolated
        )
        generators = tuple(
            Generator(
                bus=int(row[0]),
                p_g=row[1] / base,
                q_g=row[2] / base,
                q_max=row[3] / base,
                q_min=row[4] / base,
                v_setpoint=row[5],
                in_service=row[7] > 0,
                p_max=row[8] / base,
                p_min=row[9] / base,
                # reactive cost rows, if present, follow the first ng rows
                cost=_cost_curve(k + 1, cost_data[k]),
            )
            for k, row in enumerate(gen_data)
            if int(row[0]) not in isolated
        )
        branches = tuple(
            Branch(
                from_bus=int(row[0]),
                to_bus=int(row[1]),
                r=row[2],
                x=row[3],
                b_charge=row[4],
                rate_a=row[5] / base,
                tap=row[8],
                shift=math.radians(row[9]),
                in_service=row[10] > 0,
            )
            for row in branch_data
            if int(row[0]) not in isolated and int(row[1]) not in isolated
        )
        case = NetworkCase(
            name=name,
            base_mva=base,
            buses=buses,
            branches=branches,
            generators=generators,
        )
    except ValidationError as e:
        raise MalformedCase(
            f"Case {name} failed validation",
            operation="parse_matpower_case",
            original_error=e,
        ) from e

    logger.info("Parsed case %s", case.summary())
    return case


def load_case(path: str | Path) -> NetworkCase:
    """Read and parse a MATPOWER case file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MalformedCase(
            f"Cannot read case file {path}", operation="load_case", original_error=e
        ) from e
    fn = _FUNCTION.search(text)
    return parse_matpower_case(text, name=fn.group(1) if fn else path.stem)

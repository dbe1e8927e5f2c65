"""Externally solved reference dispatch."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..exceptions import ReferenceMismatch
from ..grid.model import NetworkCase

logger = logging.getLogger(__name__)


class ReferenceGenerator(BaseModel):
    """One generator entry of a reference file."""

    bus: int
    index: int = Field(ge=1, description="1-based row in the case generator table")
    pg_mw: float


class ReferenceFile(BaseModel):
    """On-disk reference layout."""

    case: str
    generators: list[ReferenceGenerator]
    cost: float = Field(gt=0, description="Reference generation cost, $/h")


class ReferenceDispatch(BaseModel):
    """Per-unit ground-truth dispatch and its cost."""

    model_config = ConfigDict(frozen=True)

    p_g_ref: tuple[float, ...]
    cost_ref: float
    source: str
    in_service: tuple[bool, ...] | None = None

    @property
    def p_g(self) -> np.ndarray:
        return np.asarray(self.p_g_ref)

    @property
    def mask(self) -> np.ndarray:
        if self.in_service is None:
            return np.ones(len(self.p_g_ref), dtype=bool)
        return np.asarray(self.in_service, dtype=bool)


def reference_from_file(data: ReferenceFile, case: NetworkCase, source: str) -> ReferenceDispatch:
    """Map a parsed reference onto the generators of ``case``."""
    arr = case.arrays
    p_g = np.zeros(arr.n_gen)
    seen = np.zeros(arr.n_gen, dtype=bool)
    for entry in data.generators:
        k = entry.index - 1
        if k >= arr.n_gen:
            raise ReferenceMismatch(
                f"Reference generator {entry.index} not in case {case.name} "
                f"({arr.n_gen} generators)",
                operation="load_reference_dispatch",
            )
        if entry.bus != int(arr.bus_ids[arr.gen_bus[k]]):
            raise ReferenceMismatch(
                f"Reference generator {entry.index} is at bus {entry.bus}, "
                f"case has it at bus {arr.bus_ids[arr.gen_bus[k]]}",
                operation="load_reference_dispatch",
            )
        p_g[k] = entry.pg_mw / arr.base_mva
        seen[k] = True

    missing = np.flatnonzero(arr.gen_on & ~seen)
    if missing.size:
        raise ReferenceMismatch(
            f"Reference misses in-service generators {', '.join(str(k + 1) for k in missing)}",
            operation="load_reference_dispatch",
        )
    if data.case != case.name:
        logger.warning("Reference names case %s, pairing it with %s", data.case, case.name)

    return ReferenceDispatch(
        p_g_ref=tuple(np.where(arr.gen_on, p_g, 0.0)),
        cost_ref=data.cost,
        source=source,
        in_service=tuple(bool(on) for on in arr.gen_on),
    )


def load_reference_dispatch(path: str | Path, case: NetworkCase) -> ReferenceDispatch:
    """
    Load a reference dispatch JSON for ``case``.

    The file holds ``{"case", "generators": [{"bus", "index", "pg_mw"}], "cost"}``
    with generator indices counted from 1 in case order.

    Raises:
        ReferenceMismatch: Unreadable file, non-positive cost or generators that
            do not match the case
    """
    path = Path(path)
    try:
        data = ReferenceFile.model_validate(json.loads(path.read_text()))
    except OSError as e:
        raise ReferenceMismatch(
            f"Cannot read reference {path}", operation="load_reference_dispatch", original_error=e
        ) from e
    except (json.JSONDecodeError, ValidationError) as e:
        raise ReferenceMismatch(
            f"Invalid reference {path}", operation="load_reference_dispatch", original_error=e
        ) from e

    reference = reference_from_file(data, case, source=str(path))
    logger.info("Loaded reference dispatch %s: cost %.2f $/h", path, reference.cost_ref)
    return reference

import csv
import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import BaseModel

from .arrays import Vector
from .simulator import HybridTrajectory
from .simulator import ResetEvent

logger = logging.getLogger(__name__)

_GRID_END_FRACTION = 1e-9


def _trajectory_width(trajectory: HybridTrajectory) -> int:
    dims = [trajectory.initial_state.x.shape[0]]
    dims.extend(arc.dim for arc in trajectory.arcs)
    dims.extend(event.x_plus.shape[0] for event in trajectory.events)
    return max(dims)


def _row(t: float, mode: str, x: Vector, *, width: int, event_flag: int) -> list[Any]:
    padded: list[Any] = [float(value) for value in x]
    padded.extend([""] * (width - len(padded)))
    return [float(t), mode, *padded, event_flag]


def trajectory_rows(trajectory: HybridTrajectory, *, sample_step: float | None = None) -> list[list[Any]]:
    """Rows of (t, mode, x_1..x_max, event_flag); event rows hold the post-reset state.

    Without ``sample_step`` the arc knots are emitted; otherwise each arc is resampled on a uniform grid.
    """
    width = _trajectory_width(trajectory)
    initial = trajectory.initial_state
    rows = [_row(initial.t, initial.mode, initial.x, width=width, event_flag=0)]
    for item in trajectory.timeline():
        if isinstance(item, ResetEvent):
            rows.append(_row(item.t, item.target, item.x_plus, width=width, event_flag=1))
            continue
        if sample_step is None:
            times = item.knots_t[1:]
        else:
            grid = np.arange(item.t_start + sample_step, item.t_end, sample_step)
            # arcs that are a whole number of steps long would repeat t_end up to rounding
            if grid.size and item.t_end - grid[-1] <= _GRID_END_FRACTION * sample_step:
                grid = grid[:-1]
            times = np.append(grid, item.t_end)
        rows.extend(_row(float(t), item.mode, item.state(float(t)), width=width, event_flag=0) for t in times)
    return rows


def write_trajectory_csv(trajectory: HybridTrajectory, path: Path, *, sample_step: float | None = None) -> None:
    width = _trajectory_width(trajectory)
    header = ["t", "mode", *[f"x_{index + 1}" for index in range(width)], "event_flag"]
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(trajectory_rows(trajectory, sample_step=sample_step))
    logger.info(f"Wrote trajectory with {len(trajectory.events)} event(s) to {path}")


def write_csv(path: Path, header: list[str], rows: list[list[Any]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    logger.info(f"Wrote {len(rows)} row(s) to {path}")


def _float_label(value: float) -> float | str:
    if math.isfinite(value):
        return value
    if math.isnan(value):
        return "nan"
    return "inf" if value > 0 else "-inf"


def to_jsonable(payload: object) -> object:
    """Plain JSON values; non-finite floats become the strings "inf", "-inf" and "nan"."""
    if isinstance(payload, BaseModel):
        return to_jsonable(payload.model_dump(mode="json"))
    if isinstance(payload, dict):
        return {str(key): to_jsonable(value) for key, value in payload.items()}  # pyright: ignore[reportUnknownVariableType]
    if isinstance(payload, list | tuple):
        return [to_jsonable(value) for value in payload]  # pyright: ignore[reportUnknownVariableType]
    if isinstance(payload, np.ndarray):
        return to_jsonable(payload.tolist())
    if isinstance(payload, np.integer):
        return int(payload)
    if isinstance(payload, float | np.floating):
        return _float_label(float(payload))
    return payload


def write_json(path: Path, payload: BaseModel | dict[str, Any] | list[Any]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    _ = path.write_text(json.dumps(to_jsonable(payload), indent=2, allow_nan=False) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")


def event_log(trajectory: HybridTrajectory) -> list[dict[str, Any]]:
    return [event.model_dump(mode="json") for event in trajectory.events]

"""CSV ingestion and bit-stable CSV/JSON emission."""

import json
import logging
import math
import sys
from collections.abc import Mapping, Sequence
from pathlib import Path
from typing import Any

import pandas as pd
from pydantic import BaseModel

from pmkit.engine.schemas import EventScript, TrajectoryPoint
from pmkit.estimation.schemas import CovariateSeries, FailureRecord, LifetimeDataset
from pmkit.shared.errors import ParseError, ValidationFailure

logger = logging.getLogger(__name__)

LIFETIME_COLUMNS = ["farm_id", "unit_id", "event", "age_months"]
COVARIATE_COLUMNS = ["unit_id", "month", "value"]
SCRIPT_COLUMNS = ["unit_id", "failure_age"]
TRAJECTORY_COLUMNS = ["s", "t_star", "planned_count", "action", "replaced_ids", "cost"]
EVENTS = ("failure", "censored")
ID_SEPARATOR = ";"
FLOAT_FORMAT = ".17g"

_POSITIVE_INT = r"[1-9][0-9]*"


def _line(index: int) -> int:
    """File line of a data row (the header is line 1)."""
    return int(index) + 2


def _read_table(path: Path | str, columns: list[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.is_file():
        raise ValidationFailure(f"File not found: {path}", path=str(path))
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True)
    except pd.errors.EmptyDataError as exc:
        raise ParseError(f"{path} is empty", path=str(path), line=1) from exc
    except pd.errors.ParserError as exc:
        raise ParseError(f"Malformed CSV in {path}: {exc}", path=str(path)) from exc
    if list(frame.columns) != columns:
        raise ParseError(
            f"{path}: header must be '{','.join(columns)}', got '{','.join(map(str, frame.columns))}'",
            path=str(path),
            line=1,
        )
    for column in columns:
        blank = frame.index[frame[column].str.strip() == ""]
        if len(blank):
            raise _cell_error(path, blank[0], column, "is empty")
    return frame


def _cell_error(path: Path | str, index: Any, column: str, problem: str) -> ParseError:
    line = _line(index)
    return ParseError(f"{path}:{line}: column '{column}' {problem}", path=str(path), line=line, column=column)


def _positive_ints(path: Path | str, frame: pd.DataFrame, column: str) -> pd.Series:
    valid = frame[column].str.fullmatch(_POSITIVE_INT)
    if not valid.all():
        index = frame.index[~valid][0]
        raise _cell_error(path, index, column, f"must be a positive integer, got '{frame.at[index, column]}'")
    return frame[column].astype("int64")


def parse_lifetimes_csv(path: Path | str) -> LifetimeDataset:
    """Read failures and censored ages from ``farm_id,unit_id,event,age_months`` rows.

    Raises:
        ParseError: Wrong header, unknown event, non-positive age or duplicate row; the
            error names the file line and column.
    """
    frame = _read_table(path, LIFETIME_COLUMNS)
    known = frame["event"].isin(EVENTS)
    if not known.all():
        index = frame.index[~known][0]
        event = frame.at[index, "event"]
        raise _cell_error(path, index, "event", f"must be one of {'|'.join(EVENTS)}, got '{event}'")
    ages = _positive_ints(path, frame, "age_months")
    duplicated = frame.duplicated(keep="first")
    if duplicated.any():
        index = frame.index[duplicated][0]
        raise ParseError(
            f"{path}:{_line(index)}: duplicate record for unit '{frame.at[index, 'unit_id']}'",
            path=str(path),
            line=_line(index),
            column="unit_id",
        )
    failed = frame["event"] == "failure"
    failures = [
        FailureRecord(unit_id=unit_id, farm_id=farm_id, failure_age=int(age))
        for farm_id, unit_id, age in zip(frame["farm_id"][failed], frame["unit_id"][failed], ages[failed], strict=True)
    ]
    dataset = LifetimeDataset(failures=failures, censored_ages=[int(age) for age in ages[~failed]])
    logger.info("Read %d failures and %d censored units from %s", len(failures), len(dataset.censored_ages), path)
    return dataset


def parse_covariates_csv(path: Path | str) -> dict[str, CovariateSeries]:
    """Read one gap-free monthly series per unit from ``unit_id,month,value`` rows.

    Rows may come in any order.

    Raises:
        ParseError: Wrong header, malformed value, repeated month or a gap; a gap names
            the unit and its first missing month.
    """
    frame = _read_table(path, COVARIATE_COLUMNS)
    months = _positive_ints(path, frame, "month")
    values = pd.to_numeric(frame["value"], errors="coerce")
    finite = values.notna() & values.abs().ne(math.inf)
    if not finite.all():
        index = frame.index[~finite][0]
        raise _cell_error(path, index, "value", f"must be a finite number, got '{frame.at[index, 'value']}'")
    table = pd.DataFrame({"unit_id": frame["unit_id"], "month": months, "value": values})
    repeated = table.duplicated(subset=["unit_id", "month"], keep="first")
    if repeated.any():
        index = table.index[repeated][0]
        unit_id, month = table.at[index, "unit_id"], table.at[index, "month"]
        raise _cell_error(path, index, "month", f"repeats month {month} of '{unit_id}'")

    series: dict[str, CovariateSeries] = {}
    for unit_id, rows in table.sort_values(["unit_id", "month"], kind="stable").groupby("unit_id", sort=True):
        unit_months = rows["month"].to_numpy()
        steps = unit_months[1:] - unit_months[:-1]
        if (steps != 1).any():
            missing = int(unit_months[:-1][steps != 1][0] + 1)
            raise ParseError(
                f"{path}: covariates of '{unit_id}' have a gap at month {missing}",
                path=str(path),
                unit_id=str(unit_id),
                month=missing,
            )
        series[str(unit_id)] = CovariateSeries(
            turbine_id=str(unit_id), start_month=int(unit_months[0]), values=tuple(rows["value"].tolist())
        )
    return series


def parse_script_csv(path: Path | str, covariates: Mapping[str, CovariateSeries] | None = None) -> EventScript:
    """Read successive failure ages per unit from ``unit_id,failure_age`` rows.

    Row order within a unit gives the order of installed gearboxes.
    """
    frame = _read_table(path, SCRIPT_COLUMNS)
    ages = _positive_ints(path, frame, "failure_age")
    failure_ages: dict[str, list[int]] = {}
    for unit_id, age in zip(frame["unit_id"], ages, strict=True):
        failure_ages.setdefault(unit_id, []).append(int(age))
    return EventScript(failure_ages=failure_ages, covariates=dict(covariates or {}))


def attach_covariates(ds: LifetimeDataset, covariates: Mapping[str, CovariateSeries]) -> LifetimeDataset:
    """Return ``ds`` with each failure record carrying the series of its unit, if any."""
    failures = [
        record.model_copy(update={"covariates": covariates.get(record.unit_id)}) for record in ds.failures
    ]
    return LifetimeDataset(failures=failures, censored_ages=ds.censored_ages)


def trajectory_frame(points: Sequence[TrajectoryPoint]) -> pd.DataFrame:
    """Return the replanning trajectory as a table with one row per review."""
    return pd.DataFrame(
        {
            "s": pd.array([point.s for point in points], dtype="Int64"),
            "t_star": pd.array([point.t_star for point in points], dtype="Int64"),
            "planned_count": pd.array([point.planned_count for point in points], dtype="Int64"),
            "action": [point.action.value for point in points],
            "replaced_ids": [ID_SEPARATOR.join(point.replaced_ids) for point in points],
            "cost": [format_float(point.cost) for point in points],
        },
        columns=TRAJECTORY_COLUMNS,
    )


def trajectory_csv(points: Sequence[TrajectoryPoint]) -> str:
    """Render the trajectory CSV with LF line endings."""
    return trajectory_frame(points).to_csv(index=False, lineterminator="\n")


def format_float(value: float) -> str:
    """Render a float with 17 significant digits, keeping a decimal point or exponent."""
    text = format(value, FLOAT_FORMAT)
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


def _plain(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return _plain(value.model_dump(mode="python"))
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return {str(key): _plain(item) for key, item in value.items()}
    if isinstance(value, Sequence) and not isinstance(value, str):
        return [_plain(item) for item in value]
    return value


def dumps_json(value: Any) -> str:
    """Render ``value`` as one line of JSON.

    Floats keep their shortest exact representation, so they parse back bit for bit.
    Non-finite floats become ``null``.
    """
    return json.dumps(_plain(value), ensure_ascii=False, allow_nan=False)


def emit(text: str, output: Path | str | None = None) -> None:
    """Write ``text`` to ``output``, or to stdout when no path (or ``-``) is given."""
    if not text.endswith("\n"):
        text += "\n"
    if output is None or str(output) == "-":
        sys.stdout.write(text)
        return
    Path(output).write_text(text, encoding="utf-8", newline="\n")

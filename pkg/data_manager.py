"""
Module for reading and writing the repository's data files: trace,
rectification, profile, statistics and duration CSVs, and assembly-spec /
design-target JSON documents.
"""
import json
import logging
import re
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError

from analysis import CurvatureProfile
from assembly import AssemblyError, AssemblySpec, RoleTarget, SegmentSpec, SubArc, UnknownGenusError
from compare import DurationRecord, ProfileStats
from free_model import FreeGeometry, FreeModelError
from utils.formatting import CSV_FLOAT_FORMAT

logger = logging.getLogger(__name__)

TRACE_COLUMNS = ["trial_id", "point_index", "x", "y"]
RECTIFICATION_COLUMNS = ["trial_id", "src_x", "src_y", "dst_x", "dst_y"]
PROFILE_COLUMNS = ["trial_id", "arc_fraction", "curvature", "valid"]
STATS_COLUMNS = ["group", "arc_fraction", "mean", "std", "n", "valid"]
DURATION_COLUMNS = ["trial_id", "frame_count", "fps"]


class DataManagerError(Exception):
    """Base exception for data manager errors"""
    pass


class FileOperationError(DataManagerError):
    """Exception raised for file operation errors"""
    pass


class SchemaError(DataManagerError):
    """Exception raised when a JSON document violates its schema"""

    def __init__(self, message: str, path: str):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class MalformedRowError(DataManagerError):
    """Exception raised for a CSV row that cannot be parsed"""

    def __init__(self, message: str, line: Optional[int]):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


# ---------------------------------------------------------------- JSON schema

class SubArcDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    sign: Literal[-1, 0, 1]
    fraction: float = Field(gt=0)


class SegmentDocument(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    label: str = Field(min_length=1)
    L0_m: float = Field(gt=0)
    R0_m: float = Field(gt=0)
    alpha0_deg: float = Field(gt=0, lt=90)
    lambda_: float = Field(1.0, alias="lambda", ge=0, le=1)
    sign_pattern: List[SubArcDocument] = Field(min_length=1)
    role: Optional[Literal["head", "mid", "tail"]] = None


class AssemblyDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    genus: str
    segments: List[SegmentDocument] = Field(min_length=1)


class RoleTargetDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    curvature_per_m: float = Field(ge=0)
    L0_m: Optional[float] = Field(None, gt=0)
    sign_pattern: Optional[List[SubArcDocument]] = None
    label: Optional[str] = None


DesignTargets = Dict[Literal["head", "mid", "tail"], Union[RoleTargetDocument, float]]
_design_targets_adapter = TypeAdapter(DesignTargets)


def format_location(loc: Iterable[Any]) -> str:
    """('segments', 1, 'lambda') -> 'segments[1].lambda'"""
    path = ""
    for part in loc:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def _schema_error(e: ValidationError) -> SchemaError:
    first = e.errors()[0]
    return SchemaError(first.get("msg", str(e)), format_location(first.get("loc", ())))


def read_json_file(file_path: str) -> Any:
    """
    Read data from a JSON file

    Args:
        file_path: Path to the JSON file

    Returns:
        The decoded document

    Raises:
        FileOperationError: If file cannot be read or parsed
    """
    try:
        with open(file_path, 'r', encoding='utf-8') as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        logger.error(f"Failed to parse JSON from {file_path}: {str(e)}")
        raise FileOperationError(f"Failed to parse JSON in {file_path}: {str(e)}") from e
    except OSError as e:
        logger.error(f"Failed to read file {file_path}: {str(e)}")
        raise FileOperationError(f"Failed to read file {file_path}: {str(e)}") from e


def write_json_file(file_path: str, data: Any) -> None:
    """
    Write a JSON document with stable formatting

    Raises:
        FileOperationError: If file cannot be written
    """
    try:
        with open(file_path, 'w', encoding='utf-8', newline='\n') as f:
            json.dump(data, f, indent=2, sort_keys=True)
            f.write("\n")
        logger.info(f"Wrote {file_path}")
    except OSError as e:
        logger.error(f"Failed to write to file {file_path}: {str(e)}")
        raise FileOperationError(f"Failed to write to file {file_path}: {str(e)}") from e


def parse_assembly_document(data: Any) -> AssemblySpec:
    """
    Validate a decoded assembly-spec document and build the AssemblySpec.

    Raises:
        SchemaError: With the JSON path of the first violation
    """
    try:
        document = AssemblyDocument.model_validate(data)
    except ValidationError as e:
        raise _schema_error(e) from e

    segments = []
    for index, seg in enumerate(document.segments):
        try:
            geom = FreeGeometry.from_degrees(seg.L0_m, seg.R0_m, seg.alpha0_deg)
            pattern = tuple(SubArc(arc.sign, arc.fraction) for arc in seg.sign_pattern)
            segments.append(SegmentSpec(seg.label, geom, seg.lambda_, pattern, seg.role))
        except (FreeModelError, AssemblyError) as e:
            raise SchemaError(str(e), f"segments[{index}]") from e
    try:
        return AssemblySpec(document.genus, tuple(segments))
    except UnknownGenusError as e:
        raise SchemaError(str(e), "genus") from e
    except AssemblyError as e:
        raise SchemaError(str(e), "segments") from e


def assembly_to_document(spec: AssemblySpec) -> Dict[str, Any]:
    """Serializable form of an AssemblySpec, the inverse of parse_assembly_document"""
    segments = []
    for segment, role in zip(spec.segments, spec.roles):
        segments.append({
            "label": segment.label,
            "role": role,
            "L0_m": segment.geom.relaxed_length,
            "R0_m": segment.geom.relaxed_radius,
            "alpha0_deg": segment.geom.fiber_angle_deg,
            "lambda": segment.inflation_fraction,
            "sign_pattern": [{"sign": arc.sign, "fraction": arc.fraction} for arc in segment.sign_pattern],
        })
    return {"genus": spec.genus, "segments": segments}


def load_assembly_spec(file_path: str) -> AssemblySpec:
    return parse_assembly_document(read_json_file(file_path))


def save_assembly_spec(file_path: str, spec: AssemblySpec) -> None:
    write_json_file(file_path, assembly_to_document(spec))


def parse_design_targets(data: Any) -> Dict[str, RoleTarget]:
    """
    Validate a design-target document: role -> curvature or role -> object.

    Raises:
        SchemaError: With the JSON path of the first violation
    """
    try:
        parsed = _design_targets_adapter.validate_python(data)
    except ValidationError as e:
        raise _schema_error(e) from e

    targets = {}
    for role, value in parsed.items():
        if isinstance(value, RoleTargetDocument):
            pattern = None
            if value.sign_pattern is not None:
                pattern = tuple(SubArc(arc.sign, arc.fraction) for arc in value.sign_pattern)
            targets[role] = RoleTarget(value.curvature_per_m, value.L0_m, pattern, value.label)
        else:
            if value < 0:
                raise SchemaError("curvature must be >= 0", role)
            targets[role] = RoleTarget(float(value))
    if not targets:
        raise SchemaError("at least one role target is required", "")
    return targets


def load_design_targets(file_path: str) -> Dict[str, RoleTarget]:
    return parse_design_targets(read_json_file(file_path))


# ---------------------------------------------------------------- CSV

def _read_csv(file_path: str, required: Sequence[str]) -> pd.DataFrame:
    try:
        frame = pd.read_csv(file_path, dtype=str, keep_default_na=False, encoding="utf-8")
    except FileNotFoundError as e:
        logger.error(f"CSV file {file_path} does not exist")
        raise FileOperationError(f"CSV file {file_path} does not exist") from e
    except pd.errors.EmptyDataError as e:
        raise MalformedRowError(f"{file_path} is empty; expected header {','.join(required)}", 1) from e
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise MalformedRowError(f"{file_path}: {str(e)}", int(match.group(1)) if match else None) from e
    except OSError as e:
        raise FileOperationError(f"Failed to read {file_path}: {str(e)}") from e

    frame.columns = [column.strip() for column in frame.columns]
    missing = [column for column in required if column not in frame.columns]
    if missing:
        raise MalformedRowError(f"{file_path}: header lacks columns {missing}; expected {','.join(required)}", 1)
    logger.info(f"Read {len(frame)} rows from {file_path}")
    return frame


def _numeric_column(frame: pd.DataFrame, column: str, file_path: str, integer: bool = False,
                    allow_blank: bool = False) -> pd.Series:
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce")
    bad = values.isna() | ~np.isfinite(values.fillna(0.0))
    if allow_blank:
        bad &= raw != ""
    if integer:
        bad |= values.notna() & (values != values.round())
    if bad.any():
        position = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedRowError(f"{file_path}: column {column!r} has invalid value {frame[column].iloc[position]!r}",
                                position + 2)
    return values


def _trial_ids(frame: pd.DataFrame, file_path: str) -> pd.Series:
    ids = frame["trial_id"].str.strip()
    empty = np.flatnonzero((ids == "").to_numpy())
    if empty.size:
        raise MalformedRowError(f"{file_path}: empty trial_id", int(empty[0]) + 2)
    return ids


def read_trace_csv(file_path: str) -> Dict[str, np.ndarray]:
    """
    Read traced centerline points grouped by trial.

    Returns:
        trial_id -> (n, 2) array ordered by point_index (head to tail)

    Raises:
        FileOperationError: If the file cannot be read
        MalformedRowError: With the line number of the first bad row
    """
    frame = _read_csv(file_path, TRACE_COLUMNS)
    ids = _trial_ids(frame, file_path)
    index = _numeric_column(frame, "point_index", file_path, integer=True)
    x = _numeric_column(frame, "x", file_path)
    y = _numeric_column(frame, "y", file_path)

    table = pd.DataFrame({"trial_id": ids, "point_index": index.astype("int64"), "x": x, "y": y})
    duplicated = np.flatnonzero(table.duplicated(["trial_id", "point_index"]).to_numpy())
    if duplicated.size:
        row = int(duplicated[0])
        raise MalformedRowError(f"{file_path}: duplicate point_index {table['point_index'].iloc[row]} "
                                f"in trial {table['trial_id'].iloc[row]!r}", row + 2)

    traces = {}
    for trial_id, rows in table.groupby("trial_id", sort=True):
        rows = rows.sort_values("point_index", kind="stable")
        traces[str(trial_id)] = rows[["x", "y"]].to_numpy(dtype=float)
    return traces


def read_rectification_csv(file_path: str) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """
    Read point correspondences for rectification, grouped by trial.

    Returns:
        trial_id -> (src, dst) arrays; trial_id "*" applies to every trial without its own rows
    """
    frame = _read_csv(file_path, RECTIFICATION_COLUMNS)
    ids = _trial_ids(frame, file_path)
    columns = {column: _numeric_column(frame, column, file_path) for column in RECTIFICATION_COLUMNS[1:]}
    table = pd.DataFrame({"trial_id": ids, **columns})
    pairs = {}
    for trial_id, rows in table.groupby("trial_id", sort=True):
        pairs[str(trial_id)] = (rows[["src_x", "src_y"]].to_numpy(dtype=float),
                                rows[["dst_x", "dst_y"]].to_numpy(dtype=float))
    return pairs


def read_profile_csv(file_path: str) -> List[CurvatureProfile]:
    """
    Read per-trial curvature profiles written by the analyze command.

    Raises:
        MalformedRowError: With the line number of the first bad row
    """
    frame = _read_csv(file_path, PROFILE_COLUMNS)
    ids = _trial_ids(frame, file_path)
    fraction = _numeric_column(frame, "arc_fraction", file_path)
    valid = _numeric_column(frame, "valid", file_path, integer=True)
    curvature = _numeric_column(frame, "curvature", file_path, allow_blank=True)

    bad_flag = np.flatnonzero(~valid.isin([0, 1]).to_numpy())
    if bad_flag.size:
        raise MalformedRowError(f"{file_path}: valid must be 0 or 1", int(bad_flag[0]) + 2)
    blank_valid = np.flatnonzero((curvature.isna() & (valid == 1)).to_numpy())
    if blank_valid.size:
        raise MalformedRowError(f"{file_path}: valid row without curvature", int(blank_valid[0]) + 2)

    table = pd.DataFrame({"trial_id": ids, "arc_fraction": fraction, "curvature": curvature,
                          "valid": valid.astype(bool)})
    profiles = []
    for trial_id, rows in table.groupby("trial_id", sort=True):
        flags = rows["valid"].to_numpy()
        values = np.where(flags, rows["curvature"].to_numpy(dtype=float), np.nan)
        profiles.append(CurvatureProfile(rows["arc_fraction"].to_numpy(dtype=float), values, flags, str(trial_id)))
    return profiles


def read_duration_csv(file_path: str) -> List[DurationRecord]:
    """Read thrash durations as frame counts at a frame rate"""
    frame = _read_csv(file_path, DURATION_COLUMNS)
    ids = _trial_ids(frame, file_path)
    frames = _numeric_column(frame, "frame_count", file_path, integer=True)
    fps = _numeric_column(frame, "fps", file_path)
    records = []
    for row, (trial_id, count, rate) in enumerate(zip(ids, frames, fps)):
        if count < 1 or rate <= 0:
            raise MalformedRowError(f"{file_path}: frame_count must be >= 1 and fps > 0", row + 2)
        records.append(DurationRecord(trial_id, int(count), float(rate)))
    return records


def write_rows_csv(file_path: str, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """
    Write rows with fixed column order, %.9g floats and '\\n' line endings

    Raises:
        FileOperationError: If file cannot be written
    """
    frame = pd.DataFrame(list(rows), columns=list(columns))
    try:
        frame.to_csv(file_path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n",
                     na_rep="", encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to write to file {file_path}: {str(e)}")
        raise FileOperationError(f"Failed to write to file {file_path}: {str(e)}") from e
    logger.info(f"Wrote {len(frame)} rows to {file_path}")


def write_trace_csv(file_path: str, traces: Dict[str, np.ndarray]) -> None:
    rows = []
    for trial_id in sorted(traces):
        for index, (x, y) in enumerate(np.asarray(traces[trial_id], dtype=float)):
            rows.append((trial_id, index, float(x), float(y)))
    write_rows_csv(file_path, TRACE_COLUMNS, rows)


def write_profile_csv(file_path: str, profiles: Sequence[CurvatureProfile]) -> None:
    rows = []
    for profile in sorted(profiles, key=lambda p: p.trial_id):
        for fraction, value, flag in zip(profile.arc_fraction, profile.curvature, profile.valid):
            rows.append((profile.trial_id, float(fraction), float(value) if flag else np.nan, int(flag)))
    write_rows_csv(file_path, PROFILE_COLUMNS, rows)


def write_stats_csv(file_path: str, stats: Sequence[ProfileStats]) -> None:
    rows = []
    for item in sorted(stats, key=lambda s: s.group):
        for fraction, mean, std, flag in zip(item.arc_fraction, item.mean, item.std, item.valid):
            rows.append((item.group, float(fraction), float(mean) if flag else np.nan,
                         float(std) if flag else np.nan, item.n_trials, int(flag)))
    write_rows_csv(file_path, STATS_COLUMNS, rows)

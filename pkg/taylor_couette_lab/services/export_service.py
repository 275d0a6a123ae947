import csv
import io
import json
from pathlib import Path
from typing import Any, Iterable, Literal, Optional, Sequence

import numpy as np
from loguru import logger
from pydantic import BaseModel

from ..config import Settings, get_settings
from ..models import (
    Annulus,
    ExperimentRecord,
    Field,
    Grid,
    IterationRecord,
    PressureField,
    ResidualReport,
    SweepSummary,
)

COMPONENTS = ("v_r", "v_theta", "v_z", "p")
SNAPSHOT_VERSION = 1

class ExportService:
    """CSV and JSON writers for run artifacts. Output carries no timestamps."""

    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()
        self.float_digits = self.settings.float_digits
        self.max_json_size = 64 * 1024 * 1024
        self.max_json_depth = 32

    def format_value(self, value: Any) -> str:

        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            return f"{float(value):.{self.float_digits}g}"
        if value is None:
            return ""
        return str(value)

    def safe_dump_json(self, data: dict[str, Any], indent: int = 2) -> str:

        depth = self._json_depth(data)
        if depth > self.max_json_depth:
            raise ValueError(f"Data nesting too deep: {depth} levels (max: {self.max_json_depth})")

        content = json.dumps(data, ensure_ascii=False, indent=indent, sort_keys=True) + "\n"
        size = len(content.encode("utf-8"))
        if size > self.max_json_size:
            raise ValueError(f"Serialized JSON too large: {size} bytes (max: {self.max_json_size})")
        return content

    def safe_load_json(self, content: str) -> dict[str, Any]:

        size = len(content.encode("utf-8"))
        if size > self.max_json_size:
            raise ValueError(f"JSON content too large: {size} bytes (max: {self.max_json_size})")
        try:
            data = json.loads(content)
        except json.JSONDecodeError as e:
            raise ValueError(f"Invalid JSON format: {e}")
        if not isinstance(data, dict):
            raise ValueError("Top-level JSON value must be an object")
        depth = self._json_depth(data)
        if depth > self.max_json_depth:
            raise ValueError(f"JSON nesting too deep: {depth} levels (max: {self.max_json_depth})")
        return data

    def write_json(self, path: Path, data: dict[str, Any]) -> Path:

        return self._write_text(path, self.safe_dump_json(data))

    def read_json(self, path: Path) -> dict[str, Any]:

        return self.safe_load_json(path.read_text(encoding="utf-8"))

    def write_csv(self, path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([self.format_value(value) for value in row])
        return self._write_text(path, buffer.getvalue())

    def export(
        self,
        records: Sequence[BaseModel],
        fmt: Literal["csv", "json"],
        path: Path,
        record_type: type[BaseModel] = ExperimentRecord,
        config: Optional[dict[str, Any]] = None
    ) -> Path:

        if fmt == "json":
            document: dict[str, Any] = {"records": [record.model_dump(mode="json") for record in records]}
            if config is not None:
                document["config"] = config
            return self.write_json(path, document)
        if fmt != "csv":
            raise ValueError(f"Unknown export format: {fmt}")
        if record_type is ExperimentRecord:
            return self.write_records(path, records)  # type: ignore[arg-type]
        header = list(record_type.model_fields)
        return self.write_csv(path, header, ([getattr(r, name) for name in header] for r in records))

    def write_history(self, path: Path, history: Sequence[IterationRecord]) -> Path:

        header = ["iteration", "residual_linf", "divergence_linf", "pseudo_time_step"]
        rows = (
            [rec.iteration, rec.residual_linf, rec.divergence_linf, rec.pseudo_time_step]
            for rec in history
        )
        return self.write_csv(path, header, rows)

    def write_records(self, path: Path, records: Sequence[ExperimentRecord]) -> Path:

        threshold_columns = ["c_p", "c1", "c2", "c_star", "re_bound"]
        scalar_columns = [name for name in ExperimentRecord.model_fields if name != "thresholds"]
        header = scalar_columns + threshold_columns + ["counterexample"]
        rows = (
            [getattr(rec, name) for name in scalar_columns]
            + [getattr(rec.thresholds, name) for name in threshold_columns]
            + [rec.counterexample]
            for rec in records
        )
        return self.write_csv(path, header, rows)

    def summary_document(
        self,
        summary: SweepSummary,
        config: Optional[dict[str, Any]] = None
    ) -> dict[str, Any]:

        document: dict[str, Any] = {"summary": summary.model_dump()}
        if config is not None:
            document["config"] = config
        return document

    def grid_document(self, grid: Grid) -> dict[str, Any]:
        """Annulus and grid sizes in the layout used by snapshots and run sidecars."""

        return {
            "annulus": grid.annulus.model_dump(),
            "grid": {
                "n_r": grid.n_r,
                "n_z": grid.n_z,
                "n_theta": grid.n_theta,
                "z_period": grid.z_period,
            },
        }

    def residual_document(self, report: ResidualReport) -> dict[str, Any]:

        document = report.model_dump()
        document["momentum_linf"] = report.momentum_linf
        document["linf"] = report.linf
        return document

    def write_field_snapshot(
        self,
        field: Field,
        pressure: PressureField,
        directory: Path,
        prefix: str = "field"
    ) -> list[Path]:

        grid = field.grid
        written = []
        for name in COMPONENTS:
            values = pressure.p if name == "p" else getattr(field, name)
            written.append(
                self.write_csv(
                    directory / f"{prefix}_{name}.csv",
                    self._snapshot_header(grid),
                    self._snapshot_rows(grid, name, values),
                )
            )

        meta = {
            "version": SNAPSHOT_VERSION,
            **self.grid_document(grid),
            "theta_walls": list(field.theta_walls),
            "gauge": pressure.gauge,
            "axial_gradient": pressure.axial_gradient,
        }
        written.append(self.write_json(directory / f"{prefix}.json", meta))
        return written

    def read_field_snapshot(self, directory: Path, prefix: str = "field") -> tuple[Field, PressureField]:

        meta_path = directory / f"{prefix}.json"
        meta = self.read_json(meta_path)
        if meta.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"Unsupported snapshot version: {meta.get('version')}")
        try:
            grid = Grid(annulus=Annulus(**meta["annulus"]), **meta["grid"])
            theta_walls = tuple(meta["theta_walls"])
            axial_gradient = meta["axial_gradient"]
            gauge = meta["gauge"]
        except (KeyError, TypeError) as e:
            raise ValueError(f"Malformed snapshot {meta_path}: missing or invalid {e}") from e

        arrays = {}
        for name in COMPONENTS:
            shape = grid.face_shape if name == "v_r" else grid.cell_shape
            arrays[name] = self._read_component(directory / f"{prefix}_{name}.csv", shape, grid)

        field = Field(
            v_r=arrays["v_r"],
            v_theta=arrays["v_theta"],
            v_z=arrays["v_z"],
            grid=grid,
            theta_walls=theta_walls,
        )
        pressure = PressureField(
            p=arrays["p"],
            grid=grid,
            axial_gradient=axial_gradient,
            gauge=gauge,
        )
        return field, pressure

    def _snapshot_header(self, grid: Grid) -> list[str]:

        if grid.axisymmetric:
            return ["i", "j", "r", "z", "value"]
        return ["i", "j", "k", "r", "z", "theta", "value"]

    def _snapshot_rows(self, grid: Grid, name: str, values: np.ndarray) -> Iterable[list[Any]]:

        radii = grid.r_faces if name == "v_r" else grid.r_centers
        heights = grid.z_faces if name == "v_z" else grid.z_centers
        if grid.axisymmetric:
            for i, j in np.ndindex(values.shape):
                yield [i, j, radii[i], heights[j], values[i, j]]
        else:
            theta = grid.theta
            for i, k, j in np.ndindex(values.shape):
                yield [i, j, k, radii[i], heights[j], theta[k], values[i, k, j]]

    def _read_component(self, path: Path, shape: tuple[int, ...], grid: Grid) -> np.ndarray:

        values = np.full(shape, np.nan)
        with path.open(newline="", encoding="utf-8") as handle:
            for line, row in enumerate(csv.DictReader(handle), start=2):
                try:
                    if grid.axisymmetric:
                        index = (int(row["i"]), int(row["j"]))
                    else:
                        index = (int(row["i"]), int(row["k"]), int(row["j"]))
                    if any(not 0 <= n < size for n, size in zip(index, shape)):
                        raise IndexError(f"index {index} outside {shape}")
                    values[index] = float(row["value"])
                except (KeyError, IndexError, TypeError, ValueError) as e:
                    raise ValueError(f"Malformed snapshot {path} at line {line}: {e}") from e
        if np.isnan(values).any():
            raise ValueError(f"Snapshot {path} does not cover the grid")
        return values

    def _write_text(self, path: Path, content: str) -> Path:

        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(content, encoding="utf-8")
        except OSError as e:
            logger.error(f"Failed to write {path}: {e}")
            raise OSError(e.errno, f"Cannot write {path}: {e.strerror}") from e
        logger.info(f"Wrote {path}")
        return path

    def _json_depth(self, obj: Any, depth: int = 0) -> int:

        if depth > self.max_json_depth:
            return depth
        if isinstance(obj, dict):
            return max([self._json_depth(value, depth + 1) for value in obj.values()] + [depth])
        if isinstance(obj, list):
            return max([self._json_depth(item, depth + 1) for item in obj] + [depth])
        return depth

"""Session/dataset types, CSV I/O, and the seeded synthetic base-dataset generator.

The original 450-session HAS dataset is not publicly available, so
``generate_base_dataset`` plants a documented latent MOS function instead:
quality helps, stalls hurt, variance hurts. The exact feature schema is a
reconstruction (the source data lists feature categories only) and is part
of the public CSV contract below.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CsvParseError,
    InvalidArgumentError,
    RowValidationError,
    SchemaMismatchError,
)

CONTENT_TYPES = ("sports", "movie", "news", "animation")
DEVICES = ("phone", "tablet", "tv", "desktop")
ENCODING_PROFILES = ("h264_main", "h264_high", "hevc_main", "av1_main")

BITRATE_MIN_KBPS = 300.0
BITRATE_MAX_KBPS = 20000.0


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # numeric | categorical | target | group | meta


BASE_SCHEMA: tuple[Column, ...] = (
    Column("session_id", "meta"),
    Column("content_type", "categorical"),
    Column("device", "categorical"),
    Column("encoding_profile", "categorical"),
    Column("duration_s", "numeric"),
    Column("bitrate_mean_kbps", "numeric"),
    Column("bitrate_std_kbps", "numeric"),
    Column("vmaf_mean", "numeric"),
    Column("vmaf_std", "numeric"),
    Column("ssim_mean", "numeric"),
    Column("qp_mean", "numeric"),
    Column("stall_duration_s", "numeric"),
    Column("stall_count", "numeric"),
    Column("mos", "target"),
)

AUGMENTED_SCHEMA: tuple[Column, ...] = BASE_SCHEMA + (
    Column("demographic", "categorical"),
    Column("base_session_id", "group"),
)

_INT_COLUMNS = {"session_id", "stall_count", "base_session_id"}
_STRING_COLUMNS = {"content_type", "device", "encoding_profile", "demographic"}


@dataclass(frozen=True)
class StreamingSession:
    """One HAS streaming session: objective features plus the MOS target."""

    session_id: int
    content_type: str
    device: str
    encoding_profile: str
    duration_s: float
    bitrate_mean_kbps: float
    bitrate_std_kbps: float
    vmaf_mean: float
    vmaf_std: float
    ssim_mean: float
    qp_mean: float
    stall_duration_s: float
    stall_count: int
    mos: float

    def invariant_violations(self) -> list[str]:
        out = []
        if self.session_id < 0:
            out.append("session_id < 0")
        if self.duration_s <= 0:
            out.append("duration_s <= 0")
        if self.bitrate_mean_kbps <= 0:
            out.append("bitrate_mean_kbps <= 0")
        if self.bitrate_std_kbps < 0:
            out.append("bitrate_std_kbps < 0")
        if not 0 <= self.vmaf_mean <= 100:
            out.append(f"vmaf_mean {self.vmaf_mean} outside [0,100]")
        if self.vmaf_std < 0:
            out.append("vmaf_std < 0")
        if not 0 <= self.ssim_mean <= 1:
            out.append(f"ssim_mean {self.ssim_mean} outside [0,1]")
        if not 0 <= self.qp_mean <= 51:
            out.append(f"qp_mean {self.qp_mean} outside [0,51]")
        if self.stall_duration_s < 0:
            out.append("stall_duration_s < 0")
        if self.stall_count < 0:
            out.append("stall_count < 0")
        if self.stall_count == 0 and self.stall_duration_s != 0:
            out.append("stall_count = 0 but stall_duration_s != 0")
        if not 0 <= self.mos <= 100:
            out.append(f"mos {self.mos} outside [0,100]")
        return out


@dataclass
class Dataset:
    """Ordered rows plus a column schema and provenance record.

    Rows are plain dicts keyed by schema column names. Instances are treated
    as immutable after construction; derived datasets are new objects.
    """

    schema: tuple[Column, ...]
    rows: list[dict]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.asarray([r[name] for r in self.rows])

    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.schema)

    def subset(self, indices) -> "Dataset":
        return Dataset(
            schema=self.schema,
            rows=[self.rows[i] for i in indices],
            provenance=dict(self.provenance),
        )

    def sessions(self) -> list[StreamingSession]:
        fields = [c.name for c in BASE_SCHEMA]
        return [StreamingSession(**{f: r[f] for f in fields}) for r in self.rows]

    def validate_rows(self) -> None:
        failures = []
        for i, sess in enumerate(self.sessions(), start=1):
            for msg in sess.invariant_violations():
                failures.append((i, msg))
        if failures:
            raise RowValidationError(failures)


def generate_base_dataset(n: int, seed: int) -> Dataset:
    """Sample ``n`` synthetic sessions, deterministic in ``(n, seed)``.

    The MOS is a planted function of the session's own impact factors:
    ``clip(100*quality_boost - 40*rebuff_impact - 15*quality_variance
    + N(0, 2^2), 0, 100)``.
    """
    from .demographics import compute_impact_factors

    if n < 1:
        raise InvalidArgumentError(f"n must be >= 1, got {n}")
    rng = np.random.default_rng(seed)

    u = rng.uniform(0.0, 1.0, n)  # log-uniform quantile, reused as bitrate rank
    bitrate_mean = BITRATE_MIN_KBPS * (BITRATE_MAX_KBPS / BITRATE_MIN_KBPS) ** u
    # Lower clip is 0.5 rather than 0: the latent MOS divides by vmaf_mean.
    vmaf_mean = np.clip(
        100.0 * (1.0 - np.exp(-bitrate_mean / 4000.0)) + rng.normal(0.0, 3.0, n),
        0.5,
        100.0,
    )
    ssim_mean = np.clip(
        0.5 + 0.005 * vmaf_mean + rng.normal(0.0, 0.02, n), 0.0, 1.0
    )
    stall_count = rng.poisson(0.6, n)
    stall_duration = stall_count * rng.exponential(1.5, n)
    bitrate_std = bitrate_mean * rng.uniform(0.02, 0.25, n)
    vmaf_std = vmaf_mean * rng.uniform(0.02, 0.25, n)
    qp_mean = np.clip(51.0 - 40.0 * u + rng.normal(0.0, 2.0, n), 0.0, 51.0)
    duration = rng.uniform(60.0, 600.0, n)
    content = rng.choice(len(CONTENT_TYPES), n)
    device = rng.choice(len(DEVICES), n)
    encoding = rng.choice(len(ENCODING_PROFILES), n)
    mos_noise = rng.normal(0.0, 2.0, n)

    rows = []
    for i in range(n):
        row = {
            "session_id": i,
            "content_type": CONTENT_TYPES[content[i]],
            "device": DEVICES[device[i]],
            "encoding_profile": ENCODING_PROFILES[encoding[i]],
            "duration_s": float(duration[i]),
            "bitrate_mean_kbps": float(bitrate_mean[i]),
            "bitrate_std_kbps": float(bitrate_std[i]),
            "vmaf_mean": float(vmaf_mean[i]),
            "vmaf_std": float(vmaf_std[i]),
            "ssim_mean": float(ssim_mean[i]),
            "qp_mean": float(qp_mean[i]),
            "stall_duration_s": float(stall_duration[i]),
            "stall_count": int(stall_count[i]),
            "mos": 0.0,
        }
        sess = StreamingSession(**row)
        f = compute_impact_factors(sess)
        latent = (
            100.0 * f.quality_boost
            - 40.0 * f.rebuff_impact
            - 15.0 * f.quality_variance
            + mos_noise[i]
        )
        row["mos"] = float(min(max(latent, 0.0), 100.0))
        rows.append(row)

    return Dataset(
        schema=BASE_SCHEMA,
        rows=rows,
        provenance={"source": "synthetic", "seed": int(seed)},
    )


def _format_cell(name: str, value) -> str:
    if name in _STRING_COLUMNS:
        return str(value)
    if name in _INT_COLUMNS:
        return str(int(value))
    return repr(float(value))


def _csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    names = dataset.column_names()
    writer.writerow(names)
    for row in dataset.rows:
        writer.writerow([_format_cell(n, row[n]) for n in names])
    return buf.getvalue()


def write_csv(dataset: Dataset, path) -> None:
    """Emit the dataset in schema column order with round-trip float precision."""
    if len(dataset) == 0:
        raise InvalidArgumentError("cannot write an empty dataset")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(_csv_text(dataset))


def dataset_hash(dataset: Dataset) -> str:
    """SHA-256 of the canonical CSV emission; stable content identity."""
    return hashlib.sha256(_csv_text(dataset).encode("utf-8")).hexdigest()


def read_csv(path) -> Dataset:
    """Ingest a base or augmented CSV, validating schema and row invariants."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatchError("file has no header row") from None
        base_names = [c.name for c in BASE_SCHEMA]
        aug_names = [c.name for c in AUGMENTED_SCHEMA]
        if header == base_names:
            schema = BASE_SCHEMA
        elif header == aug_names:
            schema = AUGMENTED_SCHEMA
        else:
            raise SchemaMismatchError(
                f"header {header!r} matches neither the base nor the augmented schema"
            )
        rows = []
        for i, rec in enumerate(reader, start=1):
            if len(rec) != len(header):
                raise SchemaMismatchError(
                    f"row {i}: expected {len(header)} cells, got {len(rec)}"
                )
            row = {}
            for name, cell in zip(header, rec):
                if name in _STRING_COLUMNS:
                    row[name] = cell
                    continue
                try:
                    row[name] = int(cell) if name in _INT_COLUMNS else float(cell)
                except ValueError:
                    raise CsvParseError(i, name, cell) from None
                if not math.isfinite(float(row[name])):
                    raise CsvParseError(i, name, cell)
            rows.append(row)

    ds = Dataset(schema=schema, rows=rows, provenance={"source": "ingested"})
    ds.validate_rows()
    return ds


def with_provenance(dataset: Dataset, **updates) -> Dataset:
    prov = dict(dataset.provenance)
    prov.update(updates)
    return Dataset(schema=dataset.schema, rows=dataset.rows, provenance=prov)

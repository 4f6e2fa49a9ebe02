"""Dataset generation, schema validation, and CSV round-trips."""

import numpy as np
import pytest

from qoe_forge.data_model import (
    AUGMENTED_SCHEMA,
    BASE_SCHEMA,
    Dataset,
    dataset_hash,
    generate_base_dataset,
    read_csv,
    write_csv,
)
from qoe_forge.errors import (
    CsvParseError,
    InvalidArgumentError,
    RowValidationError,
    SchemaMismatchError,
)

from conftest import make_session


class TestGeneration:
    def test_deterministic_in_seed(self):
        a = generate_base_dataset(50, seed=7)
        b = generate_base_dataset(50, seed=7)
        assert a.rows == b.rows
        assert dataset_hash(a) == dataset_hash(b)

    def test_different_seeds_differ(self):
        a = generate_base_dataset(50, seed=7)
        b = generate_base_dataset(50, seed=8)
        assert dataset_hash(a) != dataset_hash(b)

    def test_shape_and_schema(self, base450):
        assert len(base450) == 450
        assert base450.schema == BASE_SCHEMA
        assert base450.column_names()[0] == "session_id"
        assert base450.column("session_id").tolist() == list(range(450))

    def test_row_invariants_hold(self):
        ds = generate_base_dataset(2000, seed=3)
        ds.validate_rows()  # must not raise

    def test_value_ranges(self, base450):
        assert np.all(base450.column("mos") >= 0)
        assert np.all(base450.column("mos") <= 100)
        br = base450.column("bitrate_mean_kbps")
        assert np.all((br >= 300) & (br <= 20_000))
        vmaf = base450.column("vmaf_mean")
        assert np.all((vmaf > 0) & (vmaf <= 100))

    def test_quality_drives_mos(self, base450):
        # Directional sanity on the planted target.
        mos = base450.column("mos")
        vmaf = base450.column("vmaf_mean")
        stall = base450.column("stall_duration_s")
        assert np.corrcoef(vmaf, mos)[0, 1] > 0.3
        assert np.corrcoef(stall, mos)[0, 1] < -0.1

    def test_rejects_bad_arguments(self):
        with pytest.raises(InvalidArgumentError):
            generate_base_dataset(0, seed=1)


class TestCsv:
    def test_round_trip_rows_equal(self, tmp_path, base450):
        path = tmp_path / "base.csv"
        write_csv(base450, path)
        loaded = read_csv(path)
        assert loaded.schema == BASE_SCHEMA
        assert loaded.rows == base450.rows
        assert dataset_hash(loaded) == dataset_hash(base450)

    def test_round_trip_byte_identical(self, tmp_path, base450):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_csv(base450, p1)
        write_csv(read_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_augmented_round_trip(self, tmp_path, aug2700):
        path = tmp_path / "aug.csv"
        write_csv(aug2700, path)
        loaded = read_csv(path)
        assert loaded.schema == AUGMENTED_SCHEMA
        assert loaded.rows == aug2700.rows

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("session_id,foo\n1,2\n")
        with pytest.raises(SchemaMismatchError):
            read_csv(path)

    def test_unparseable_cell_reports_location(self, tmp_path, base450):
        path = tmp_path / "bad.csv"
        write_csv(base450.subset([0, 1]), path)
        lines = path.read_text().splitlines()
        lines[2] = lines[2].replace(lines[2].split(",")[4], "not_a_number", 1)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(CsvParseError) as exc:
            read_csv(path)
        assert exc.value.row == 2
        assert exc.value.column == "duration_s"

    def test_invariant_violation_rejected(self, tmp_path, base450):
        small = base450.subset([0])
        bad = Dataset(schema=small.schema, rows=[dict(small.rows[0])])
        bad.rows[0]["mos"] = 150.0
        path = tmp_path / "bad.csv"
        write_csv(bad, path)
        with pytest.raises(RowValidationError):
            read_csv(path)


class TestDataset:
    def test_subset_preserves_schema(self, base450):
        sub = base450.subset([3, 1])
        assert sub.schema == base450.schema
        assert sub.column("session_id").tolist() == [3, 1]

    def test_sessions_reconstruct_rows(self, base450):
        sess = base450.sessions()[0]
        assert sess.session_id == base450.rows[0]["session_id"]
        assert sess.mos == base450.rows[0]["mos"]

    def test_invariant_violations_listed(self):
        bad = make_session(mos=-1.0, stall_count=0, stall_duration_s=1.0)
        msgs = bad.invariant_violations()
        assert any("mos" in m for m in msgs)
        assert any("stall_count" in m for m in msgs)
        assert make_session().invariant_violations() == []

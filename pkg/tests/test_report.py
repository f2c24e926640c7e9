"""
Unit tests for report rendering and the JSON side files.
"""

import pytest
import numpy as np

from src.core.report import (
    KNN_LABEL,
    ReportRow,
    format_accuracy,
    format_parameters,
    render_network_table,
    render_results_table,
    save_report,
)
from src.errors import UsageError
from src.utils.json_writer import append_jsonl, load_json, load_jsonl, save_json, write_jsonl


def grid_rows():
    return [
        ReportRow("dist", True, "k=4", "power", 80.5),
        ReportRow("dist", True, "k=4", "entropy", 90.125),
        ReportRow("dist", False, "k=4", "entropy", 70.0),
        ReportRow("rand", True, "p=0.3", "power", None, error="diverged"),
        ReportRow(KNN_LABEL, None, "", "power", 50.0),
    ]


class TestFormatting:
    """Test number formatting."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (12.345, "12.34"),
            (0.125, "0.12"),
            (2.675, "2.68"),
            (100, "100.00"),
            (97.5, "97.50"),
            (None, "-"),
        ],
    )
    def test_accuracy_half_even(self, value, expected):
        """Test two decimals with round half to even."""
        assert format_accuracy(value) == expected

    def test_parameters(self):
        """Test counts in thousands."""
        assert format_parameters(943528) == "944k"
        assert format_parameters(722088) == "722k"
        assert format_parameters(999) == "999"
        assert format_parameters(None) == "-"


class TestReportRow:
    """Test result rows."""

    def test_percentage_range(self):
        """Test accuracies outside [0, 100] raise ValueError."""
        with pytest.raises(ValueError):
            ReportRow("dist", True, "k=4", "power", 100.5)

    def test_failed_row(self):
        """Test error rows report failure."""
        row = ReportRow("corr", False, "k=4", "entropy", None, error="boom")
        assert row.failed
        assert row.accuracy_text == "-"
        assert row.key() == ("corr", False, "k=4")

    def test_to_dict_without_time(self):
        """Test the wall time can be left out."""
        row = ReportRow("dist", True, "k=4", "power", 50.0, wall_time_s=3.2)
        assert row.to_dict()["wall_time_s"] == 3.2
        assert "wall_time_s" not in row.to_dict(include_time=False)


class TestResultsTable:
    """Test the accuracy grid."""

    def test_layout(self):
        """Test header, marks, feature columns and the baseline line."""
        lines = render_results_table(grid_rows()).splitlines()
        assert [part.strip() for part in lines[0].split("|")] == [
            "Graph", "Inter-band", "Density", "Power", "Entropy",
        ]
        first = [part.strip() for part in lines[2].split("|")]
        assert first == ["dist", "o", "k=4", "80.50", "90.12"]
        second = [part.strip() for part in lines[3].split("|")]
        assert second == ["dist", "x", "k=4", "", "70.00"]
        knn = [line for line in lines if line.startswith("k-nearest neighbors")]
        assert len(knn) == 1
        assert "50.00" in knn[0]

    def test_separators_between_graphs(self):
        """Test a rule separates graph families and the baseline."""
        lines = render_results_table(grid_rows()).splitlines()
        rules = [i for i, line in enumerate(lines) if line and set(line) == {"-"}]
        assert len(rules) == 3
        assert lines[rules[1] + 1].startswith("rand")

    def test_failed_cells_listed(self):
        """Test failed cells show a dash and an error line."""
        text = render_results_table(grid_rows())
        rand_line = [line for line in text.splitlines() if line.startswith("rand")][0]
        assert rand_line.split("|")[3].strip() == "-"
        assert "! rand o p=0.3 power: diverged" in text


class TestNetworkTable:
    """Test the network comparison table."""

    def test_rows(self):
        """Test parameter counts and percent accuracies."""
        text = render_network_table(
            [
                ("net1", ReportRow("dist", True, "k=4", "entropy", 72.346, num_parameters=722088)),
                ("net2", ReportRow("dist", True, "k=4", "entropy", None, num_parameters=943528)),
            ]
        )
        lines = text.splitlines()
        assert [part.strip() for part in lines[0].split("|")] == [
            "Network type", "#parameter", "Accuracy",
        ]
        assert [part.strip() for part in lines[2].split("|")] == ["net1", "722k", "72.35%"]
        assert [part.strip() for part in lines[3].split("|")] == ["net2", "944k", "-"]


class TestSaveReport:
    """Test writing report files."""

    def test_text_and_json(self, tmp_path):
        """Test both files are written and the JSON holds every row."""
        rows = grid_rows()
        text = render_results_table(rows)
        text_path, json_path = save_report(text, rows, tmp_path)
        assert text_path.read_text(encoding="utf-8") == text
        records = load_json(json_path)["rows"]
        assert len(records) == len(rows)
        assert records[3]["error"] == "diverged"

    def test_named_rows(self, tmp_path):
        """Test network rows keep their names."""
        row = ReportRow("dist", True, "k=4", "entropy", 60.0)
        _, json_path = save_report("table\n", [("net3", row)], tmp_path, stem="networks")
        assert json_path.name == "networks.json"
        assert load_json(json_path)["rows"][0]["name"] == "net3"

    def test_refuses_overwrite(self, tmp_path):
        """Test an existing report needs overwrite=True."""
        rows = grid_rows()
        save_report("a\n", rows, tmp_path)
        with pytest.raises(UsageError):
            save_report("b\n", rows, tmp_path)
        text_path, _ = save_report("b\n", rows, tmp_path, overwrite=True)
        assert text_path.read_text(encoding="utf-8") == "b\n"


class TestJsonWriter:
    """Test JSON and JSON-lines helpers."""

    def test_numpy_values(self, tmp_path):
        """Test numpy scalars and arrays are written as plain JSON."""
        path = save_json({"b": np.int64(3), "a": np.arange(3)}, tmp_path / "sub" / "x.json")
        assert load_json(path) == {"a": [0, 1, 2], "b": 3}
        assert path.read_text(encoding="utf-8").index('"a"') < path.read_text().index('"b"')

    def test_refuses_overwrite(self, tmp_path):
        """Test save_json refuses to replace a file."""
        path = save_json({}, tmp_path / "x.json")
        with pytest.raises(UsageError):
            save_json({}, path)

    def test_jsonl(self, tmp_path):
        """Test writing, appending and reading JSON lines."""
        path = write_jsonl([{"epoch": 0}, {"epoch": 1}], tmp_path / "log.jsonl")
        append_jsonl({"epoch": 2}, path)
        assert load_jsonl(path) == [{"epoch": 0}, {"epoch": 1}, {"epoch": 2}]
        assert path.read_text(encoding="utf-8").splitlines()[0] == '{"epoch":0}'

    def test_invalid_json(self, tmp_path):
        """Test malformed content raises ValueError."""
        path = tmp_path / "bad.json"
        path.write_text("{oops", encoding="utf-8")
        with pytest.raises(ValueError):
            load_json(path)

    def test_missing_file(self, tmp_path):
        """Test a missing file raises FileNotFoundError."""
        with pytest.raises(FileNotFoundError):
            load_json(tmp_path / "absent.json")

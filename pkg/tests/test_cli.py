import csv
from pathlib import Path

import pytest

import labjson
from workbench.cli import main
from workbench.manifest import MANIFEST_NAME


def _manifest(root: Path) -> dict[str, object]:
    return labjson.loads((root / MANIFEST_NAME).read_bytes())


def _listed(root: Path) -> set[str]:
    manifest = _manifest(root)
    return {entry["path"] for entry in manifest["artifacts"]}  # type: ignore[index]


class TestConfigHandling:
    def test_config_reference(self, tmp_path: Path) -> None:
        out = tmp_path / "reference.toml"
        assert main(["config-reference", "--output", str(out)]) == 0
        text = out.read_text()
        for section in ("[run]", "[model]", "[eht]", "[zne]", "[gfunction]"):
            assert section in text

    def test_errors_point_at_lines(
        self, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        config = tmp_path / "lab.toml"
        config.write_text('[model]\nL = "x"\n\n[eht]\nwindow = 3\n')
        with pytest.raises(SystemExit) as info:
            main(["oracle", "--config", str(config), "--out-dir", str(tmp_path)])
        assert info.value.code == 2
        err = capsys.readouterr().err
        assert f"{config}:2:" in err
        assert f"{config}:5:" in err

    def test_empty_pipeline_list(self, tmp_path: Path) -> None:
        assert main(["run", "--out-dir", str(tmp_path)]) == 2

    def test_unknown_pipeline(self, tmp_path: Path) -> None:
        config = tmp_path / "lab.toml"
        config.write_text('[run]\npipelines = ["oracle", "plots"]\n')
        assert main(["run", "--config", str(config), "--out-dir", str(tmp_path)]) == 2
        assert not (tmp_path / "oracle").exists()


class TestCommands:
    def test_prepare_dry_run(self, tmp_path: Path) -> None:
        args = ["prepare", "--L", "8", "--boundary", "obc", "--dry-run", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        root = tmp_path / "prepare"
        circuit = labjson.loads((root / "circuit-L8.json").read_bytes())
        assert circuit["schema"] == "circuit/1"
        assert circuit["num_sites"] == 8
        assert circuit["boundary"] == "obc"
        manifest = _manifest(root)
        assert manifest["complete"] is True
        assert _listed(root) == {"circuit-L8.json"}

    def test_rerun_replaces_listed_artifacts_only(self, tmp_path: Path) -> None:
        args = ["prepare", "--L", "6", "--dry-run", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        stray = tmp_path / "prepare" / "notes.txt"
        stray.write_text("keep me")
        assert main(args) == 0
        assert stray.read_text() == "keep me"
        assert _listed(tmp_path / "prepare") == {"circuit-L6.json"}

    def test_oracle_is_deterministic(self, tmp_path: Path) -> None:
        args = ["oracle", "--L", "6", "--levels", "2", "--no-cache", "--out-dir", str(tmp_path)]
        assert main(args) == 0
        first = (tmp_path / "oracle" / "oracle.json").read_bytes()
        assert main(args) == 0
        assert (tmp_path / "oracle" / "oracle.json").read_bytes() == first
        document = labjson.loads(first)
        assert len(document["energies"]) == 2
        assert document["exact"] is True

    def test_entropy(self, tmp_path: Path) -> None:
        assert main(["entropy", "--L", "10", "--no-cache", "--out-dir", str(tmp_path)]) == 0
        document = labjson.loads((tmp_path / "entropy" / "entropy.json").read_bytes())
        assert [row["l"] for row in document["profile"]] == list(range(1, 10))

    def test_gfunction_then_plot_data(self, tmp_path: Path) -> None:
        args = ["gfunction", "--L", "8", "--mode", "exact", "--no-cache"]
        args += ["--out-dir", str(tmp_path)]
        assert main(args) == 0
        document = labjson.loads((tmp_path / "gfunction" / "gfunction.json").read_bytes())
        (result,) = document["results"]
        assert result["L"] == 8
        assert result["g"] > 1

        plot_args = ["emit-plotdata", "--target", "g-scaling", "--out-dir", str(tmp_path)]
        assert main(plot_args) == 0
        with (tmp_path / "emit-plotdata" / "g-scaling.csv").open() as file:
            rows = list(csv.DictReader(file))
        assert list(rows[0]) == ["L", "g", "g_err"]
        assert rows[0]["L"] == "8"

    def test_plot_data_with_missing_inputs(self, tmp_path: Path) -> None:
        assert main(["emit-plotdata", "--out-dir", str(tmp_path)]) == 1
        manifest = _manifest(tmp_path / "emit-plotdata")
        assert manifest["complete"] is False
        assert str(manifest["stages"]["plotdata"]).startswith("failed")  # type: ignore[index]

import json

import pytest

from segbench.cli import main, parse_predictor_spec


class TestPredictorSpecParsing:
    def test_bare_kind(self):
        name, handle = parse_predictor_spec("threshold_model")
        assert name == "threshold_model"
        assert handle.kind == "threshold_model"

    def test_named_with_params(self):
        name, handle = parse_predictor_spec("rg=region_growing:tolerance=1.5,connectivity=6")
        assert name == "rg"
        assert handle.kind == "region_growing"
        assert handle.params["tolerance"] == 1.5
        assert handle.params["connectivity"] == 6

    def test_external_command_with_spaces_and_commas(self):
        spec = 'ext=external:command="mytool --fast {input} {output}",timeout_s=5'
        name, handle = parse_predictor_spec(spec)
        assert name == "ext"
        assert handle.params["command"] == "mytool --fast {input} {output}"
        assert handle.params["timeout_s"] == 5

    def test_bad_kind_rejected(self):
        with pytest.raises(ValueError):
            parse_predictor_spec("wizardry:level=9")


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli_ds")
    rc = main(["make-dataset", "--out-dir", str(out), "--n-train", "0", "--n-val", "1", "--n-test", "1", "--seed", "9"])
    assert rc == 0
    return out


class TestCliFlow:
    def test_calibrate_then_evaluate(self, tiny_dataset, tmp_path, capsys):
        out = tmp_path / "run"
        rc = main(
            [
                "calibrate",
                "--manifest", str(tiny_dataset / "manifest.json"),
                "--predictor", "threshold_model",
                "--out-dir", str(out),
            ]
        )
        assert rc == 0
        assert (out / "threshold.json").is_file()
        threshold = json.loads((out / "threshold.json").read_text())["threshold"]
        assert 0.0 < threshold <= 1.0

        rc = main(
            [
                "evaluate",
                "--manifest", str(tiny_dataset / "manifest.json"),
                "--predictor", "rg=region_growing",
                "--predictor", "null=null",
                "--out-dir", str(out),
                "--serial",
            ]
        )
        assert rc == 0  # threshold picked up from out-dir
        assert (out / "report.txt").is_file()
        capsys.readouterr()

        # report subcommand rebuilds the same aggregates from percase.csv
        before = (out / "report.csv").read_bytes()
        assert main(["report", "--out-dir", str(out)]) == 0
        assert (out / "report.csv").read_bytes() == before

    def test_evaluate_exit_2_on_case_failure(self, tiny_dataset, tmp_path, capsys):
        out = tmp_path / "fail"
        rc = main(
            [
                "evaluate",
                "--manifest", str(tiny_dataset / "manifest.json"),
                "--predictor", "bad=external:command=no-such-binary-xyz {input} {output}",
                "--threshold", "0.5",
                "--out-dir", str(out),
            ]
        )
        assert rc == 2
        assert (out / "report.txt").is_file()  # report still written
        capsys.readouterr()

    def test_evaluate_requires_threshold(self, tiny_dataset, tmp_path, capsys):
        rc = main(
            [
                "evaluate",
                "--manifest", str(tiny_dataset / "manifest.json"),
                "--predictor", "null=null",
                "--out-dir", str(tmp_path / "nothresh"),
            ]
        )
        assert rc == 1
        capsys.readouterr()

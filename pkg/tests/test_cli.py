"""Command-line behavior: determinism, formats, exit codes, help."""

from importlib import resources

import pytest

from dcdt.cli import build_parser, main


def run(argv):
    return main(argv)


def read(path):
    return path.read_text(encoding="utf-8")


SMALL = "HC=6,MID=5,VCD=5,PD=5"


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    assert run(["generate", "--seed", "3", "--out", str(out), "--counts", SMALL]) == 0
    return out


class TestGenerate:
    def test_rerun_is_byte_identical(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            assert run(["generate", "--seed", "7", "--out", str(out), "--counts", "HC=3,MID=2"]) == 0
        assert read(a / "strokes.csv") == read(b / "strokes.csv")
        assert read(a / "labels.csv") == read(b / "labels.csv")

    def test_config_overrides_change_output(self, tmp_path):
        cfg = tmp_path / "phen.cfg"
        cfg.write_text("hc.digit_omission_prob=1.0\n", encoding="utf-8")
        out = tmp_path / "o"
        assert run(["generate", "--seed", "7", "--out", str(out), "--counts", "HC=2",
                    "--config", str(cfg)]) == 0
        assert ",digit," not in read(out / "strokes.csv")

    def test_bad_counts_exit_one(self, tmp_path, capsys):
        assert run(["generate", "--seed", "1", "--out", str(tmp_path), "--counts", "HC=x"]) == 1
        assert "error" in capsys.readouterr().err


class TestExtract:
    def test_extract_writes_csv(self, data_dir, tmp_path):
        out = tmp_path / "features.csv"
        assert run(["extract", "--data", str(data_dir), "--out", str(out)]) == 0
        lines = read(out).splitlines()
        assert lines[0].startswith("subject_id,group,")
        assert len(lines) == 1 + 21

    def test_malformed_strokes_exit_one_names_file_and_line(self, tmp_path, capsys):
        bad = tmp_path / "strokes.csv"
        bad.write_text(
            "dcdt-strokes v1\n"
            "subject_id,clock,stroke_id,symbol,digit_value,point_idx,x_cm,y_cm,t_ms\n"
            "s1,command,0,clockface,,0,bad,0.0,0\n",
            encoding="utf-8",
        )
        (tmp_path / "labels.csv").write_text("subject_id,group\ns1,HC\n", encoding="utf-8")
        out = tmp_path / "f.csv"
        assert run(["extract", "--data", str(tmp_path), "--out", str(out)]) == 1
        err = capsys.readouterr().err
        assert "strokes.csv:3" in err


@pytest.fixture(scope="module")
def features_csv(data_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("feat") / "features.csv"
    assert run(["extract", "--data", str(data_dir), "--out", str(out)]) == 0
    return out


class TestRouleauAndSlim:
    def test_rouleau_score_and_fit(self, features_csv, tmp_path):
        scores = tmp_path / "scores.csv"
        assert run(["rouleau", "score", "--features-csv", str(features_csv), "--out", str(scores)]) == 0
        lines = read(scores).splitlines()
        assert lines[0] == "subject_id,group,face_pts,numbers_pts,hands_pts,total,decision"
        assert len(lines) == 22
        params = tmp_path / "fit.params"
        assert run(["rouleau", "fit", "--features-csv", str(features_csv), "--task", "all3",
                    "--out", str(params)]) == 0
        assert "eps1_deg=" in read(params)

    def test_slim_train_and_predict(self, features_csv, tmp_path):
        model = tmp_path / "m.slim"
        assert run(["slim", "train", "--features-csv", str(features_csv), "--task", "all3",
                    "--features", "simplest", "--max-nodes", "150", "--out", str(model)]) == 0
        assert read(model).startswith("slim-model v1\n")
        preds = tmp_path / "p.csv"
        assert run(["slim", "predict", "--features-csv", str(features_csv),
                    "--model", str(model), "--out", str(preds)]) == 0
        assert read(preds).splitlines()[0] == "subject_id,group,score,prediction"


class TestRender:
    def test_reference_sheet_from_cli(self, tmp_path, capsys):
        ref = resources.files("dcdt").joinpath("data/memory_screen.slim")
        out = tmp_path / "sheet.txt"
        with resources.as_file(ref) as path:
            assert run(["render", "--model", str(path), "--out", str(out)]) == 0
        golden = resources.files("dcdt").joinpath("data/memory_screen_sheet.txt").read_text("utf-8")
        assert read(out) == golden
        assert capsys.readouterr().out == golden


class TestEvaluate:
    def test_evaluate_writes_reports(self, data_dir, tmp_path):
        prefix = tmp_path / "report"
        assert run([
            "evaluate", "--data", str(data_dir), "--task", "mid", "--method", "rouleau",
            "--folds", "3", "--inner-folds", "2", "--seed", "7", "--out", str(prefix),
        ]) == 0
        assert (tmp_path / "report.txt").exists()
        csv_lines = read(tmp_path / "report.csv").splitlines()
        assert csv_lines[0] == "task,method,fold,auc"
        assert any(line.split(",")[2] == "mean" for line in csv_lines[1:])


class TestUsage:
    def test_unknown_subcommand_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            run(["frobnicate"])
        assert exc.value.code == 2

    def test_missing_required_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            run(["generate"])
        assert exc.value.code == 2

    def test_help_lists_flags_for_every_subcommand(self, capsys):
        parser = build_parser()
        sub_flags = {
            "generate": ("--seed", "--out", "--counts", "--preset", "--config",
                         "--canvas-radius", "--sample-period"),
            "extract": ("--data", "--out", "--features", "--binarize", "--catalog"),
            "rouleau": ("--features-csv", "--out", "--params", "--task", "--clock"),
            "slim": ("--features-csv", "--out", "--model", "--task", "--features",
                     "--c-minus", "--c0", "--c1", "--coeff-bound", "--intercept-bound",
                     "--max-features", "--max-nodes"),
            "render": ("--model", "--out", "--catalog"),
            "evaluate": ("--data", "--task", "--method", "--features", "--folds",
                         "--inner-folds", "--seed", "--out"),
            "repro": ("--seed", "--out", "--counts", "--folds", "--inner-folds"),
        }
        for name, flags in sub_flags.items():
            with pytest.raises(SystemExit) as exc:
                parser.parse_args([name, "--help"])
            assert exc.value.code == 0
            text = capsys.readouterr().out
            for flag in flags:
                assert flag in text, (name, flag)

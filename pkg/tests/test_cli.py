import json
import os
import subprocess
import sys

import pytest

from edurf import cli, persist
from edurf.corpus import loads_pipe_marked
from edurf.synthetic import generate_corpus


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    corpus = d / "train.txt"
    assert cli.main(["--gen-synthetic", "50", "--seed", "42", "--output", str(corpus)]) == 0
    assert cli.main(["train", "--corpus", str(corpus), "--model", str(d / "m.bin"), "--trees", "30",
                     "--seed", "42"]) == 0
    return d


def run(args, capsys):
    code = cli.main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_synthetic_matches_library(workdir):
    assert loads_pipe_marked((workdir / "train.txt").read_text()) == generate_corpus(50, 42)


def test_train_summary(tmp_path, workdir, capsys):
    code, out, _ = run(["train", "--corpus", str(workdir / "train.txt"), "--model", str(tmp_path / "a.bin"),
                        "--trees", "5", "--seed", "42"], capsys)
    assert code == 0 and (tmp_path / "a.bin").exists()
    lines = dict(line.split(" ", 1) for line in out.splitlines())
    assert json.loads(lines["config"])["trees"] == 5
    assert int(lines["features"]) > 0
    pos, neg = [int(x.split("=")[1]) for x in lines["windows"].split()]
    assert pos > 0 and neg > 0
    assert "positive=" in lines["training"]


def test_identical_config_byte_identical_models(tmp_path, workdir):
    args = ["train", "--corpus", str(workdir / "train.txt"), "--trees", "10", "--seed", "42"]
    assert cli.main(args + ["--model", str(tmp_path / "a.bin")]) == 0
    assert cli.main(args + ["--model", str(tmp_path / "b.bin")]) == 0
    assert (tmp_path / "a.bin").read_bytes() == (tmp_path / "b.bin").read_bytes()


def test_config_file_precedence(tmp_path, workdir, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"trees": 3, "seed": 9, "min_docs": 3}))
    code, out, _ = run(["train", "--corpus", str(workdir / "train.txt"), "--model", str(tmp_path / "m.bin"),
                        "--config", str(cfg), "--seed", "1"], capsys)
    assert code == 0
    config = json.loads(out.splitlines()[0].split(" ", 1)[1])
    assert (config["trees"], config["seed"], config["min_docs"], config["max_depth"]) == (3, 1, 3, 32)
    model = persist.load_model(tmp_path / "m.bin")
    assert model.params.n_trees == 3 and model.space.min_docs == 3
    cfg.write_text(json.dumps({"bogus": 1}))
    code, _, err = run(["train", "--corpus", str(workdir / "train.txt"), "--model", str(tmp_path / "m2.bin"),
                        "--config", str(cfg)], capsys)
    assert code == cli.EXIT_USAGE and "bogus" in err


def test_single_class_exit_code(tmp_path, capsys):
    corpus = tmp_path / "flat.txt"
    corpus.write_text("#doc a\nno boundaries here .\n\n#doc b\nnone here either .\n")
    code, _, err = run(["train", "--corpus", str(corpus), "--model", str(tmp_path / "m.bin")], capsys)
    assert code == cli.EXIT_DATA and "both classes" in err
    assert not (tmp_path / "m.bin").exists()


def test_input_and_output_errors(tmp_path, workdir, capsys):
    code, _, _ = run(["train", "--corpus", str(tmp_path / "missing.txt"), "--model", str(tmp_path / "m.bin")], capsys)
    assert code == cli.EXIT_INPUT
    bad = tmp_path / "bad.txt"
    bad.write_text("no header .\n")
    code, _, err = run(["train", "--corpus", str(bad), "--model", str(tmp_path / "m.bin")], capsys)
    assert code == cli.EXIT_FORMAT and "line 1" in err
    code, _, _ = run(["train", "--corpus", str(workdir / "train.txt"), "--trees", "2",
                      "--model", str(tmp_path / "nowhere" / "m.bin")], capsys)
    assert code == cli.EXIT_OUTPUT
    code, _, _ = run(["train", "--corpus", str(workdir / "train.txt"), "--model", str(tmp_path / "m.bin"),
                      "--max-doc-fraction", "1.5"], capsys)
    assert code == cli.EXIT_USAGE


def test_segment_round_trips_to_gold(tmp_path, workdir):
    gold = (workdir / "train.txt").read_text()
    plain = tmp_path / "plain.txt"
    plain.write_text(gold.replace(" | ", " "))
    out = tmp_path / "out.txt"
    assert cli.main(["segment", "--model", str(workdir / "m.bin"), "--input", str(plain), "--output", str(out)]) == 0
    assert loads_pipe_marked(out.read_text()) == loads_pipe_marked(gold)


def test_segment_records(tmp_path, workdir):
    plain = tmp_path / "p.txt"
    plain.write_text("#doc q\nShares rose , because profits rose sharply .\n")
    out = tmp_path / "r.tsv"
    assert cli.main(["segment", "--model", str(workdir / "m.bin"), "--input", str(plain), "--output", str(out),
                     "--format", "records"]) == 0
    rows = [r.split("\t") for r in out.read_text().splitlines()]
    assert [r[4] for r in rows] == ["Shares rose ,", "because profits rose sharply ."]
    assert rows[0][:4] == ["q", "0", "0", "3"]
    assert 0.5 < float(rows[1][5]) <= 1


def test_segment_empty_input(tmp_path, workdir):
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    out = tmp_path / "o.txt"
    assert cli.main(["segment", "--model", str(workdir / "m.bin"), "--input", str(empty), "--output", str(out)]) == 0
    assert out.read_text() == ""


def test_segment_bad_model(tmp_path, workdir, capsys):
    plain = tmp_path / "p.txt"
    plain.write_text("Hello .\n")
    data = (workdir / "m.bin").read_bytes()
    broken = tmp_path / "broken.bin"
    broken.write_bytes(b"JUNK!" + data[5:])
    code, _, err = run(["segment", "--model", str(broken), "--input", str(plain), "--output", "-"], capsys)
    assert code == cli.EXIT_FORMAT and "magic" in err
    future = tmp_path / "future.bin"
    future.write_bytes(data[:5] + (2).to_bytes(4, "little") + data[9:])
    code, _, err = run(["segment", "--model", str(future), "--input", str(plain), "--output", "-"], capsys)
    assert code == cli.EXIT_FORMAT and "expected 1, found 2" in err


def _kv(out):
    return dict(line.split("=", 1) for line in out.splitlines() if "=" in line and " " not in line)


def test_evaluate_on_training_corpus(workdir, tmp_path, capsys):
    per_doc = tmp_path / "per_doc.tsv"
    code, out, _ = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(workdir / "train.txt"),
                        "--per-doc", str(per_doc)], capsys)
    assert code == 0
    kv = _kv(out)
    assert float(kv["f1"]) >= 0.99
    assert kv["evaluation_set"] == "full"
    assert len(per_doc.read_text().splitlines()) == 51


def test_evaluate_classification_mode(workdir, capsys):
    code, out, _ = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(workdir / "train.txt"),
                        "--classification-mode"], capsys)
    assert code == 0
    line = next(x for x in out.splitlines() if "balanced_set=" in x)
    fields = dict(f.split("=") for f in line.split())
    assert int(fields["positive"]) == int(fields["negative"])
    assert int(fields["balanced_set"]) == 2 * int(fields["positive"])
    assert _kv(out)["evaluation_set"] == "balanced"


def test_evaluate_count_sentence_initial(workdir, capsys):
    _, plain_out, _ = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(workdir / "train.txt")], capsys)
    _, incl_out, _ = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(workdir / "train.txt"),
                          "--count-sentence-initial"], capsys)
    assert int(_kv(incl_out)["tp"]) > int(_kv(plain_out)["tp"])


def test_evaluate_saved_predictions_and_mismatched_ids(tmp_path, workdir, capsys):
    gold = workdir / "train.txt"
    plain = tmp_path / "plain.txt"
    plain.write_text(gold.read_text().replace(" | ", " "))
    pred = tmp_path / "pred.txt"
    assert cli.main(["segment", "--model", str(workdir / "m.bin"), "--input", str(plain), "--output", str(pred)]) == 0
    code, out, _ = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(gold),
                        "--predictions", str(pred)], capsys)
    assert code == 0 and float(_kv(out)["f1"]) >= 0.99
    renamed = tmp_path / "renamed.txt"
    renamed.write_text(pred.read_text().replace("#doc syn00000\n", "#doc elsewhere\n"))
    code, _, err = run(["evaluate", "--model", str(workdir / "m.bin"), "--gold", str(gold),
                        "--predictions", str(renamed)], capsys)
    assert code == cli.EXIT_DATA and "different documents" in err


def test_inspect_features(workdir, capsys):
    code, out, _ = run(["inspect-features", "--model", str(workdir / "m.bin")], capsys)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "key\tregion\tkind\tdoc_freq\tindex"
    model = persist.load_model(workdir / "m.bin")
    assert len(lines) == 1 + len(model.space)
    code, out, _ = run(["inspect-features", "--model", str(workdir / "m.bin"), "--split-counts"], capsys)
    assert out.splitlines()[0].endswith("\tsplits")


def test_help_documents_model_flags():
    out = subprocess.run([sys.executable, "-m", "edurf.cli", "train", "--help"], capture_output=True, text=True,
                         env={**os.environ}).stdout
    for flag in ["--trees", "--max-depth", "--min-leaf", "--features-per-split", "--min-docs",
                 "--max-doc-fraction", "--balance", "--seed", "--threshold", "--config"]:
        assert flag in out


def test_no_command_is_usage_error(capsys):
    assert cli.main([]) == cli.EXIT_USAGE

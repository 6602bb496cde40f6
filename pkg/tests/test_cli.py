import json

import pytest

from scripts.cli import build_parser, main

SMALL_RUN = """\
# tiny corpus and model
size=60
dev_size=6
test_size=6
vocab_size=30
min_chunks=2
max_chunks=3
min_chunk_len=1
max_chunk_len=3
max_len=20
embed_dim=4
hidden_dim=4
preout_dim=4
epochs=1
batch_size=16
lr=0.01
beam=2
"""


@pytest.fixture
def run_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SMALL_RUN, encoding="utf-8")
    return path


def _gen(run_config, out):
    return main(["gen", "--config", str(run_config), "--out", str(out), "--seed", "5"])


def test_gen_writes_identical_files_for_a_seed(run_config, tmp_path, capsys):
    assert _gen(run_config, tmp_path / "a") == 0
    assert capsys.readouterr().out.startswith("pairs=60 train=48 dev=6 test=6")
    assert _gen(run_config, tmp_path / "b") == 0
    for name in ("train.txt", "dev.txt", "test.txt", "src.vocab", "tgt.vocab"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    gen = json.loads((tmp_path / "a" / "gen.json").read_text(encoding="utf-8"))
    assert gen["config"]["seed"] == 5


def test_usage_error_exits_with_two():
    with pytest.raises(SystemExit) as info:
        main(["gen", "--task", "sort"])
    assert info.value.code == 2


def test_run_error_returns_one(tmp_path, capsys):
    assert main(["eval", "--checkpoint", str(tmp_path / "missing.ckpt"), "--out", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_unknown_config_key_returns_one(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("colour=blue\n", encoding="utf-8")
    assert main(["gen", "--config", str(path), "--out", str(tmp_path)]) == 1
    assert "colour" in capsys.readouterr().err


def test_tau_argument():
    args = build_parser().parse_args(["eval", "--checkpoint", "m.ckpt", "--tau", "inf"])
    assert args.tau == float("inf")
    with pytest.raises(SystemExit):
        build_parser().parse_args(["eval", "--checkpoint", "m.ckpt", "--tau", "-1"])


def test_gen_train_sweep_eval_visualize(run_config, tmp_path, capsys):
    out = tmp_path / "run"
    common = ["--config", str(run_config), "--out", str(out)]
    assert _gen(run_config, out) == 0
    assert main(["train", *common, "--attention", "flexible"]) == 0
    ckpt = out / "flexible.ckpt"
    assert ckpt.exists()
    assert (out / "flexible.log.jsonl").exists()
    capsys.readouterr()

    assert main(["sweep", *common, "--checkpoint", str(ckpt), "--taus", "0.8,1.2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].split()[0] == "tau"
    assert lines[-1].startswith("selected tau=")
    selected = lines[-1].split()[1].split("=")[1]
    assert len((out / "sweep.jsonl").read_text(encoding="utf-8").splitlines()) == 4

    assert main(["eval", *common, "--checkpoint", str(ckpt), "--tau", "1.2"]) == 0
    report = json.loads(capsys.readouterr().out.splitlines()[0])
    assert report["tau"] == 1.2
    assert report["avg_window"] <= report["baseline_window"] + 1e-9
    assert (out / "eval.json").exists()
    spans = [json.loads(line)["spans"] for line in (out / "traces.jsonl").read_text(encoding="utf-8").splitlines()]
    sources = [line.split("\t")[0].split() for line in (out / "test.txt").read_text(encoding="utf-8").splitlines()]
    assert len(spans) == len(sources) == 6
    for triples, source in zip(spans, sources):
        assert triples
        for lo, hi, g in triples:
            assert 0 <= lo <= hi < len(source)
            assert 0.0 < g < 1.0

    assert main(["bench", *common, "--checkpoint", str(ckpt)]) == 0
    bench = capsys.readouterr().out.splitlines()
    assert bench[1].startswith(f"tau={selected} ")

    assert main(["visualize", *common, "--checkpoint", str(ckpt), "--sentence", "s1 s2 s3"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert rows and all(len(r.split()[0]) == 3 for r in rows)

import json
import socket
import subprocess
import sys
import time

import numpy as np
import pytest

from simsearch.cli import main

SYN = "synthetic:classes=4,n=120,dim=16,sep=6,seed=3"


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    model = tmp / "model.simmodel"
    log = tmp / "train.csv"
    code = main(
        ["train", "--data", SYN, "--out", str(model), "--log", str(log), "--max-epochs", "6", "--seed", "3"]
    )
    assert code == 0
    emb = tmp / "data.emb1"
    assert main(["export", "--model", str(model), "--data", SYN, "--out", str(emb), "--ts", "1700000000"]) == 0
    index = tmp / "index.simidx"
    assert main(["build", "--emb", str(emb), "--out", str(index)]) == 0
    return tmp, model, log, emb, index


class TestTrain:
    def test_outputs_exist_with_rows(self, trained):
        _, model, log, _, _ = trained
        assert model.exists()
        lines = log.read_text().strip().split("\n")
        assert lines[0] == "epoch,train_loss,val_loss,lr,wall_seconds"
        assert len(lines) >= 2

    def test_same_seed_identical_log_modulo_wall_clock(self, tmp_path, capsys):
        logs = []
        for name in ("a", "b"):
            code, _, _ = run_cli(
                [
                    "train",
                    "--data",
                    SYN,
                    "--out",
                    str(tmp_path / f"{name}.simmodel"),
                    "--log",
                    str(tmp_path / f"{name}.csv"),
                    "--max-epochs",
                    "3",
                    "--seed",
                    "9",
                ],
                capsys,
            )
            assert code == 0
            rows = (tmp_path / f"{name}.csv").read_text().strip().split("\n")
            logs.append([",".join(r.split(",")[:-1]) for r in rows])  # drop wall_seconds
        assert logs[0] == logs[1]
        assert (tmp_path / "a.simmodel").read_bytes() == (tmp_path / "b.simmodel").read_bytes()

    def test_missing_out_is_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["train", "--data", SYN, "--log", "x.csv"])
        assert exc.value.code == 2

    def test_bad_data_is_runtime_error(self, tmp_path, capsys):
        code, _, err = run_cli(
            ["train", "--data", "/nope/missing.csv", "--out", str(tmp_path / "m"), "--log", str(tmp_path / "l")],
            capsys,
        )
        assert code == 1
        assert "error" in err


class TestExportBuildQuery:
    def test_export_deterministic_with_fixed_ts(self, trained, tmp_path, capsys):
        _, model, _, _, _ = trained
        outs = []
        for name in ("x.emb1", "y.emb1"):
            code, _, _ = run_cli(
                ["export", "--model", str(model), "--data", SYN, "--out", str(tmp_path / name), "--ts", "42"],
                capsys,
            )
            assert code == 0
            outs.append((tmp_path / name).read_bytes())
        assert outs[0] == outs[1]

    def test_build_then_query_self(self, trained, capsys):
        _, _, _, emb, index = trained
        from simsearch import read_emb1

        records = read_emb1(emb)
        vec = ",".join(str(x) for x in records[5].vector)
        code, out, _ = run_cli(["query", "--index", str(index), f"--vec={vec}", "-k", "3", "--mode", "exact"], capsys)
        assert code == 0
        hits = json.loads(out)["hits"]
        assert hits[0]["id"] == 5
        assert hits[0]["distance"] < 1e-9

    def test_query_by_id_excludes_self(self, trained, capsys):
        _, _, _, _, index = trained
        code, out, _ = run_cli(["query", "--index", str(index), "--id", "5", "-k", "4"], capsys)
        assert code == 0
        hits = json.loads(out)["hits"]
        assert len(hits) == 4
        assert all(h["id"] != 5 for h in hits)

    def test_query_requires_exactly_one_input(self, trained, capsys):
        _, _, _, _, index = trained
        code, _, err = run_cli(["query", "--index", str(index), "-k", "2"], capsys)
        assert code == 1

    def test_query_deterministic(self, trained, capsys):
        _, _, _, _, index = trained
        vec = ",".join(["0.5"] * 32)  # index holds 32-dim model embeddings
        outs = []
        for _ in range(2):
            code, out, _ = run_cli(["query", "--index", str(index), f"--vec={vec}", "-k", "5"], capsys)
            assert code == 0
            outs.append(out)
        assert outs[0] == outs[1]


class TestBenchEval:
    def test_bench_emits_json_report(self, trained, capsys):
        _, _, _, _, index = trained
        code, out, _ = run_cli(["bench", "--index", str(index), "--queries", "10", "-k", "5"], capsys)
        assert code == 0
        report = json.loads(out)
        assert "median_s" in report and "p99_s" in report
        assert report["n_queries"] == 10

    def test_eval_on_separated_holdout(self, trained, capsys):
        _, _, _, emb, index = trained
        code, out, _ = run_cli(["eval", "--index", str(index), "--emb", str(emb), "-k", "1,5"], capsys)
        assert code == 0
        report = json.loads(out)
        assert set(report["recall_at_k"]) == {"1", "5"}
        assert report["recall_at_k"]["1"] >= 0.9  # trained, well-separated corpus

    def test_scatter_subcommand(self, trained, tmp_path, capsys):
        _, _, _, emb, _ = trained
        out_csv = tmp_path / "scatter.csv"
        code, out, _ = run_cli(["scatter", "--emb", str(emb), "--out", str(out_csv)], capsys)
        assert code == 0
        assert out_csv.read_text().startswith("id,label,x,y")


class TestServe:
    def test_serve_and_healthz(self, trained):
        _, _, _, _, index = trained
        port = None
        for candidate in range(28500, 28600):
            with socket.socket() as s:
                if s.connect_ex(("127.0.0.1", candidate)) != 0:
                    port = candidate
                    break
        assert port is not None
        proc = subprocess.Popen(
            [sys.executable, "-m", "simsearch.cli", "serve", "--index", str(index), "--port", str(port)],
            stdout=subprocess.DEVNULL,
            stderr=subprocess.DEVNULL,
        )
        try:
            import httpx

            deadline = time.time() + 15
            last = None
            while time.time() < deadline:
                try:
                    resp = httpx.get(f"http://127.0.0.1:{port}/healthz", timeout=1.0)
                    last = resp.status_code
                    if last == 200:
                        break
                except httpx.HTTPError:
                    time.sleep(0.2)
            assert last == 200
            stats = httpx.get(f"http://127.0.0.1:{port}/v1/stats", timeout=2.0).json()
            assert stats["count"] == 120
        finally:
            proc.terminate()
            proc.wait(timeout=10)


class TestExitCodes:
    @pytest.mark.parametrize(
        "argv",
        [
            ["train", "--data", SYN],  # missing --out/--log
            ["export", "--model", "m"],  # missing --data/--out
            ["build", "--emb", "e"],  # missing --out
            ["query"],  # missing --index
            ["bench"],
            ["eval", "--index", "i"],
            ["scatter", "--emb", "e"],
            ["not-a-command"],
        ],
    )
    def test_usage_errors_exit_2(self, argv):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2

    @pytest.mark.parametrize(
        "argv",
        [
            ["build", "--emb", "/nope/x.emb1", "--out", "/tmp/y.simidx"],
            ["query", "--index", "/nope/i.simidx", "--id", "1"],
            ["bench", "--index", "/nope/i.simidx"],
            ["eval", "--index", "/nope/i.simidx", "--emb", "/nope/h.emb1"],
            ["export", "--model", "/nope/m.simmodel", "--data", SYN, "--out", "/tmp/z.emb1"],
            ["scatter", "--emb", "/nope/h.emb1", "--out", "/tmp/s.csv"],
        ],
    )
    def test_runtime_errors_exit_1(self, argv, capsys):
        assert main(argv) == 1
        assert "error" in capsys.readouterr().err

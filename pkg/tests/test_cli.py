import csv
import json
import subprocess
import sys

import pytest

from cdcdesigns import load_design, load_scheme
from cdcdesigns.cli import EXIT_OK, EXIT_PARAMS, EXIT_PROTOCOL, EXIT_VERIFY, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def exit_code(*argv):
    """Exit status whether main returns it or argparse raises SystemExit."""
    try:
        return main(list(argv))
    except SystemExit as exc:
        return exc.code


@pytest.fixture
def fano_file(tmp_path, capsys):
    path = tmp_path / "fano.json"
    assert run(capsys, "design", "gen", "--family", "fano", "--out", str(path))[0] == EXIT_OK
    return path


class TestDesign:
    def test_gen_to_stdout(self, capsys):
        code, out, _ = run(capsys, "design", "gen", "--family", "pg", "--p", "3")
        assert code == EXIT_OK
        d = json.loads(out)
        assert len(d["points"]) == 13 and len(d["blocks"]) == 13

    @pytest.mark.parametrize(
        "args",
        [
            ("--family", "tgdd", "--p", "3"),
            ("--family", "sts", "--n", "9"),
            ("--family", "sqs", "--k", "3"),
            ("--family", "complete", "--N", "6", "--M", "3", "--t", "2"),
            ("--family", "search", "--N", "7", "--M", "3", "--t", "2", "--lambda", "1"),
            ("--family", "example-gdd"),
        ],
    )
    def test_gen_then_verify(self, tmp_path, capsys, args):
        path = tmp_path / "d.json"
        assert run(capsys, "design", "gen", *args, "--out", str(path))[0] == EXIT_OK
        code, out, _ = run(capsys, "design", "verify", str(path))
        assert code == EXIT_OK
        assert out.startswith("PASS")

    def test_verify_json(self, fano_file, capsys):
        code, out, _ = run(capsys, "--json", "design", "verify", str(fano_file))
        assert code == EXIT_OK
        assert json.loads(out) == {"passed": True, "violation": None, "K": 7, "r": 3, "M": 3}

    def test_verify_failure_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"points":[1,2,3,4,5,6,7],"blocks":[[1,2,4],[2,3,5]],"t":2,"lambda":1}')
        code, _, err = run(capsys, "design", "verify", str(path))
        assert code == EXIT_VERIFY
        assert "covered 0 times" in err

    def test_sts3_fails_verification(self, tmp_path, capsys):
        path = tmp_path / "s3.json"
        run(capsys, "design", "gen", "--family", "sts", "--n", "3", "--out", str(path))
        assert run(capsys, "design", "verify", str(path))[0] == EXIT_VERIFY

    def test_dual_twice_is_byte_identical(self, fano_file, tmp_path, capsys):
        once, twice = tmp_path / "d1.json", tmp_path / "d2.json"
        assert run(capsys, "design", "dual", str(fano_file), "--out", str(once))[0] == EXIT_OK
        assert run(capsys, "design", "dual", str(once), "--out", str(twice))[0] == EXIT_OK
        assert twice.read_bytes() == fano_file.read_bytes()
        assert load_design(once.read_text()).family == "dual:fano"

    @pytest.mark.parametrize(
        "args",
        [
            ("design", "gen", "--family", "pg", "--p", "6"),
            ("design", "gen", "--family", "pg"),
            ("design", "gen", "--family", "sts", "--n", "8"),
            ("design", "gen"),
            ("design", "verify"),
            ("design", "gen", "--family", "search", "--N", "8", "--M", "3", "--t", "2", "--lambda", "1"),
            ("bogus",),
        ],
    )
    def test_bad_parameters(self, capsys, args):
        assert exit_code(*args) == EXIT_PARAMS

    def test_search_budget(self, capsys):
        code, _, err = run(capsys, "design", "gen", "--family", "search", "--N", "13", "--M", "4", "--t", "2",
                           "--lambda", "1", "--budget", "2")
        assert code == EXIT_PARAMS
        assert "budget" in err


class TestScheme:
    def test_build_and_simulate(self, fano_file, tmp_path, capsys):
        scheme = tmp_path / "s.json"
        code, out, _ = run(capsys, "--json", "scheme", "build", "--theorem", "1", "--design", str(fano_file),
                           "--out", str(scheme))
        assert code == EXIT_OK
        assert json.loads(out)["K"] == 7
        assert load_scheme(scheme.read_text()).params == (7, 3, 3, 7, 7, 3)

        report, transcript = tmp_path / "r.json", tmp_path / "t.json"
        code, out, _ = run(capsys, "simulate", "--scheme", str(scheme), "--mode", "concrete", "--seed", "2",
                           "--report", str(report), "--transcript", str(transcript))
        assert code == EXIT_OK
        assert "21 signals" in out
        rep = json.loads(report.read_text())
        assert rep["load"] == "3/7" and rep["gain"] == "4/1" and rep["passed"]
        assert len(json.loads(transcript.read_text())) == 21

    def test_gdd_pipeline_json(self, tmp_path, capsys):
        d, s = tmp_path / "g.json", tmp_path / "gs.json"
        run(capsys, "design", "gen", "--family", "example-gdd", "--out", str(d))
        assert run(capsys, "scheme", "build", "--theorem", "2", "--design", str(d), "--out", str(s))[0] == EXIT_OK
        code, out, _ = run(capsys, "--json", "simulate", "--scheme", str(s))
        assert code == EXIT_OK
        rep = json.loads(out)
        assert rep["num_signals"] == 18 and rep["load"] == "1/2"

    def test_theorem3_pipeline(self, tmp_path, capsys):
        d, s = tmp_path / "q.json", tmp_path / "qs.json"
        run(capsys, "design", "gen", "--family", "sqs", "--k", "3", "--out", str(d))
        assert run(capsys, "scheme", "build", "--theorem", "3", "--design", str(d), "--out", str(s))[0] == EXIT_OK
        code, out, _ = run(capsys, "--json", "simulate", "--scheme", str(s), "--mode", "concrete")
        assert code == EXIT_OK
        assert json.loads(out)["load"] == "1/4"

    def test_identical_seeds_give_identical_transcripts(self, tmp_path, capsys):
        d, s = tmp_path / "g.json", tmp_path / "gs.json"
        run(capsys, "design", "gen", "--family", "tgdd", "--p", "3", "--out", str(d))
        run(capsys, "scheme", "build", "--theorem", "2", "--design", str(d), "--out", str(s))
        outs = []
        for name in ("a.json", "b.json", "c.json"):
            seed = "9" if name != "c.json" else "10"
            path = tmp_path / name
            run(capsys, "simulate", "--scheme", str(s), "--mode", "concrete", "--random-sender",
                "--seed", seed, "--transcript", str(path))
            outs.append(path.read_bytes())
        assert outs[0] == outs[1]
        assert outs[0] != outs[2]

    def test_theorem2_needs_groups(self, fano_file, capsys):
        assert run(capsys, "scheme", "build", "--theorem", "2", "--design", str(fano_file))[0] == EXIT_PARAMS

    def test_build_from_bad_design(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text('{"points":[1,2,3,4,5,6,7],"blocks":[[1,2,4],[2,3,5]],"t":2,"lambda":1}')
        code, _, err = run(capsys, "scheme", "build", "--theorem", "1", "--design", str(path))
        assert code == EXIT_VERIFY

    def test_strategy_mismatch(self, fano_file, tmp_path, capsys):
        s = tmp_path / "s.json"
        run(capsys, "scheme", "build", "--theorem", "1", "--design", str(fano_file), "--out", str(s))
        assert run(capsys, "simulate", "--scheme", str(s), "--strategy", "3")[0] == EXIT_PARAMS

    def test_protocol_violation_exit_code(self, fano_file, tmp_path, capsys, monkeypatch):
        import cdcdesigns.shuffle as sh

        s = tmp_path / "s.json"
        run(capsys, "scheme", "build", "--theorem", "1", "--design", str(fano_file), "--out", str(s))
        real = sh.deliver

        def lossy(*a, **k):
            tr = real(*a, **k)
            return sh.ShuffleTranscript(tr.signals[1:], tr.T, tr.strategy)

        monkeypatch.setattr(sh, "deliver", lossy)
        code, _, err = run(capsys, "simulate", "--scheme", str(s))
        assert code == EXIT_PROTOCOL
        assert "protocol violation" in err


class TestSweep:
    def test_sweep_csv(self, tmp_path, capsys):
        out = tmp_path / "sweep.csv"
        assert run(capsys, "sweep", "--p-list", "2,3", "--out", str(out))[0] == EXIT_OK
        rows = list(csv.DictReader(out.open()))
        assert [(r["family"], r["p"]) for r in rows] == [("pg", "2"), ("pg", "3"), ("tgdd", "2"), ("tgdd", "3")]
        assert rows[1]["L_measured"] == "6/13"

    def test_compare_table(self, capsys):
        code, out, _ = run(capsys, "compare", "--family", "pg", "--p-list", "2,11", "--no-simulate")
        assert code == EXIT_OK
        assert "66/133" in out

    def test_compare_json(self, capsys):
        code, out, _ = run(capsys, "--json", "compare", "--family", "tgdd", "--p-list", "3")
        rows = json.loads(out)
        assert rows[0]["L_measured"] == "5/9"
        assert rows[0]["published_matches"] is False

    def test_non_prime(self, capsys):
        assert run(capsys, "sweep", "--p-list", "2,4")[0] == EXIT_PARAMS


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cdcdesigns", "design", "gen", "--family", "pg", "--p", "4"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == EXIT_PARAMS
    assert "not prime" in proc.stderr

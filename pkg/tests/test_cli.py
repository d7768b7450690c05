import json

import pytest

from tacstep import data_path
from tacstep.cli import main
from tacstep.harness import Corpus

from conftest import running_server


@pytest.fixture
def corpus_path(tmp_path):
    path = tmp_path / "corpus.json"
    rc = main([
        "corpus", "--seed", "3", "--count", "4", "--max-depth", "2",
        "--branching", "2", "--distractors", "1", "--out", str(path),
    ])
    assert rc == 0
    return path


def test_corpus_subcommand_writes_loadable_file(corpus_path):
    corpus = Corpus.load(corpus_path)
    assert len(corpus.theorems) == 4


def test_eval_subcommand_end_to_end(corpus_path, tmp_path, capsys):
    out = tmp_path / "report.json"
    rc = main([
        "eval", "--corpus", str(corpus_path), "--backend", "edges",
        "--attempts", "1", "--expansion", "8", "--max-iters", "32",
        "--timeout-s", "10", "--out", str(out),
    ])
    assert rc == 0
    printed = capsys.readouterr().out
    assert "Pass rate" in printed
    report = json.loads(out.read_text(encoding="utf-8"))
    assert report["kind"] == "eval"
    assert report["solved"] == report["total"] == 4


def test_eval_rejects_missing_corpus(tmp_path, capsys):
    rc = main(["eval", "--corpus", str(tmp_path / "absent.json")])
    assert rc == 2
    assert "cannot load corpus" in capsys.readouterr().err


def test_bench_and_render_pipeline(tmp_path, capsys):
    out = tmp_path / "latency.json"
    with running_server(backend=f"mock:{data_path('mock_rules.json')}") as (url, _):
        rc = main([
            "bench", "--endpoint", url, "--examples", str(data_path("bench_examples.json")),
            "--n", "1", "--repeats", "1", "--out", str(out),
        ])
    assert rc == 0
    assert "mean=" in capsys.readouterr().out
    rc = main(["render", str(out)])
    assert rc == 0
    assert "Backend" in capsys.readouterr().out


def test_render_rejects_bad_schema(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"schema_version": 99}', encoding="utf-8")
    assert main(["render", str(path)]) == 2
    assert "schema_version" in capsys.readouterr().err


def test_serve_env_overrides(monkeypatch):
    # flags pick up LLMSTEP_-prefixed environment defaults
    monkeypatch.setenv("LLMSTEP_BIND", "127.0.0.1:7171")
    monkeypatch.setenv("LLMSTEP_N", "9")
    import argparse

    from tacstep import cli

    parser = argparse.ArgumentParser()
    sub = parser.add_subparsers()
    cli._add_serve(sub)
    args = parser.parse_args(["serve", "--backend", "mock:x.json"])
    assert args.bind == "127.0.0.1:7171"
    assert args.n == 9
    args = parser.parse_args(["serve", "--backend", "mock:x.json", "--n", "2"])
    assert args.n == 2  # explicit flag wins

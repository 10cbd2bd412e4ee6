"""Tests for the command line interface."""
import json
import shutil
import subprocess
from importlib import resources

import pytest

from dfdscan.cli import _app_name, build_parser, main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_analyze_writes_default_outputs(miniapp_path, tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, stderr = run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out)], capsys
    )
    assert code == 0
    assert stderr == ""
    dfd_path = out / "miniapp.json"
    trace_path = out / "miniapp_traceability.json"
    dot_path = out / "miniapp.dot"
    for p in (dfd_path, trace_path, dot_path):
        assert p.is_file()
        assert str(p) in stdout
    dfd = json.loads(dfd_path.read_text(encoding="utf-8"))
    assert len(dfd["nodes"]) == 6
    traces = json.loads(trace_path.read_text(encoding="utf-8"))
    assert "notification_service" in traces
    assert "6 nodes, 4 flows" in stdout


def test_analyze_json_only(miniapp_path, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out), "--format", "json"],
        capsys,
    )
    assert code == 0
    assert (out / "miniapp.json").is_file()
    assert not (out / "miniapp.dot").exists()


def test_analyze_dot_only(miniapp_path, tmp_path, capsys):
    out = tmp_path / "out"
    code, _, _ = run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out), "--format", "dot"],
        capsys,
    )
    assert code == 0
    assert not (out / "miniapp.json").exists()
    assert (out / "miniapp.dot").is_file()


def test_analyze_png_renders_or_notes(miniapp_path, tmp_path, capsys):
    out = tmp_path / "out"
    code, stdout, _ = run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out), "--format", "png"],
        capsys,
    )
    assert code == 0
    assert (out / "miniapp.dot").is_file()
    if shutil.which("dot"):
        assert (out / "miniapp.png").is_file()
    else:
        assert "skipping PNG" in stdout


def test_unknown_format_is_an_error(miniapp_path, tmp_path, capsys):
    code, _, stderr = run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(tmp_path / "out"),
            "--format",
            "json,xml",
        ],
        capsys,
    )
    assert code == 2
    assert "unknown format" in stderr


def test_missing_directory_is_an_error(tmp_path, capsys):
    code, _, stderr = run_cli(
        ["analyze", "--path", str(tmp_path / "nope"), "--out", str(tmp_path / "out")],
        capsys,
    )
    assert code == 2
    assert "not a directory" in stderr


def test_source_is_required():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["analyze"])
    with pytest.raises(SystemExit):
        build_parser().parse_args(
            ["analyze", "--path", "x", "--repo-url", "https://example.org/y.git"]
        )


def test_app_name_derivation():
    args = build_parser().parse_args(["analyze", "--path", "/tmp/some/app-dir"])
    assert _app_name(args) == "app-dir"
    args = build_parser().parse_args(
        ["analyze", "--repo-url", "https://example.org/org/piggymetrics.git"]
    )
    assert _app_name(args) == "piggymetrics"
    args = build_parser().parse_args(
        ["analyze", "--repo-url", "https://example.org/org/piggymetrics/"]
    )
    assert _app_name(args) == "piggymetrics"


def test_eval_against_own_output_is_perfect(miniapp_path, tmp_path, capsys):
    out1 = tmp_path / "first"
    code, _, _ = run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out1), "--format", "json"],
        capsys,
    )
    assert code == 0
    truth = out1 / "miniapp.json"

    out2 = tmp_path / "second"
    code, stdout, _ = run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(out2),
            "--format",
            "json",
            "--eval-truth",
            str(truth),
        ],
        capsys,
    )
    assert code == 0
    eval_path = out2 / "miniapp_eval.json"
    assert eval_path.is_file()
    result = json.loads(eval_path.read_text(encoding="utf-8"))
    assert result["overall"]["fp"] == 0
    assert result["overall"]["fn"] == 0
    assert result["overall"]["precision"] == 1.0
    assert result["overall"]["recall"] == 1.0
    assert "group" in stdout and "precision" in stdout


def test_eval_truth_bad_file_is_an_error(miniapp_path, tmp_path, capsys):
    bad = tmp_path / "truth.json"
    bad.write_text("{not json", encoding="utf-8")
    code, _, stderr = run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(tmp_path / "out"),
            "--eval-truth",
            str(bad),
        ],
        capsys,
    )
    assert code == 2
    assert "error:" in stderr


def test_custom_rule_files_equal_defaults(miniapp_path, tmp_path, capsys):
    """Copies of the built-in rule files passed via flags reproduce the
    default analysis byte for byte."""
    rules = tmp_path / "rules.json"
    images = tmp_path / "images.txt"
    pkg = resources.files("dfdscan")
    rules.write_text(
        pkg.joinpath("rules", "keyword_rules.json").read_text(encoding="utf-8"),
        encoding="utf-8",
    )
    images.write_text(
        pkg.joinpath("rules", "image_catalog.txt").read_text(encoding="utf-8"),
        encoding="utf-8",
    )

    out_default = tmp_path / "default"
    out_custom = tmp_path / "custom"
    assert run_cli(
        ["analyze", "--path", str(miniapp_path), "--out", str(out_default), "--format", "json"],
        capsys,
    )[0] == 0
    assert run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(out_custom),
            "--format",
            "json",
            "--rules",
            str(rules),
            "--images",
            str(images),
        ],
        capsys,
    )[0] == 0
    assert (out_custom / "miniapp.json").read_bytes() == (
        out_default / "miniapp.json"
    ).read_bytes()


def test_paper_parity_flag_accepted(miniapp_path, tmp_path, capsys):
    code, _, _ = run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(tmp_path / "out"),
            "--format",
            "json",
            "--paper-parity",
        ],
        capsys,
    )
    assert code == 0


def test_bad_repo_url_is_an_error(tmp_path, capsys):
    code, _, stderr = run_cli(
        [
            "analyze",
            "--repo-url",
            "file://%s/no-such-repo.git" % tmp_path,
            "--out",
            str(tmp_path / "out"),
        ],
        capsys,
    )
    assert code == 2
    assert "git" in stderr


@pytest.mark.skipif(shutil.which("git") is None, reason="git not installed")
def test_analyze_local_git_repository(tmp_path, capsys):
    repo = tmp_path / "repo"
    repo.mkdir()
    (repo / "docker-compose.yml").write_text(
        "services:\n  solo:\n    build: ./solo\n", encoding="utf-8"
    )

    def git(*args):
        subprocess.run(
            ["git", "-c", "user.email=t@t", "-c", "user.name=t", *args],
            cwd=repo,
            check=True,
            capture_output=True,
        )

    git("init", "-q")
    git("add", ".")
    git("commit", "-q", "-m", "init")

    out = tmp_path / "out"
    code, stdout, _ = run_cli(
        ["analyze", "--repo-url", "file://%s" % repo, "--out", str(out), "--format", "json"],
        capsys,
    )
    assert code == 0
    assert "(commit " in stdout
    dfd = json.loads((out / "repo.json").read_text(encoding="utf-8"))
    assert [n["name"] for n in dfd["nodes"]] == ["solo"]


def test_verbose_reports_failures(miniapp_path, tmp_path, capsys, monkeypatch):
    from dfdscan.extractors import base

    class Broken(base.Extractor):
        name = "broken"
        phase = "node"

        def run(self, ctx):
            raise RuntimeError("boom")

    real = base.default_extractors
    monkeypatch.setattr(base, "default_extractors", lambda: real() + [Broken()])
    code, stdout, _ = run_cli(
        [
            "analyze",
            "--path",
            str(miniapp_path),
            "--out",
            str(tmp_path / "out"),
            "--format",
            "json",
            "--verbose",
        ],
        capsys,
    )
    assert code == 0
    assert "extractor broken failed" in stdout

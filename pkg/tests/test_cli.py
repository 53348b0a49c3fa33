"""Command-line contract: exit codes, emitted artifacts, determinism."""

import json

import pytest

from ddebif.cli import main


def _write_plan(tmp_path, plan):
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(plan))
    return path


def test_empty_plan_manifest_only(tmp_path):
    plan = _write_plan(tmp_path, {"system": "neuron", "stages": []})
    out = tmp_path / "out"
    assert main(["--out", str(out), "run", str(plan)]) == 0
    produced = sorted(p.name for p in out.iterdir())
    assert "manifest.json" in produced
    assert not [n for n in produced if n.endswith(".branch.json")]


def test_unknown_system_is_validation_error(tmp_path):
    plan = _write_plan(tmp_path, {"system": "nonexistent", "stages": []})
    assert main(["--out", str(tmp_path / "out"), "run", str(plan)]) == 2


def test_missing_stage_reference_is_validation_error(tmp_path):
    plan = _write_plan(tmp_path, {
        "system": "neuron",
        "stages": [{"name": "stab", "kind": "stability", "source": "nothere"}],
    })
    assert main(["--out", str(tmp_path / "out"), "run", str(plan)]) == 2


def test_list_and_describe(capsys):
    assert main(["list-systems"]) == 0
    listed = capsys.readouterr().out
    for name in ("neuron", "sd_demo", "hom_neural"):
        assert name in listed
    assert main(["describe", "neuron"]) == 0
    described = capsys.readouterr().out
    assert "neuron" in described
    assert main(["describe", "nonexistent"]) == 2


@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    base = tmp_path_factory.mktemp("cli")
    plan = {
        "system": "neuron",
        "stages": [{
            "name": "branch1",
            "kind": "stst_branch",
            "parameters": [0.5, -1.0, 1.0, 2.34, 0.2, 0.2, 1.5],
            "x": [0.0, 0.0],
            "free": [4],
            "seeds": [2.34, 2.24],
            "bounds": {"min": [[4, 0.0]], "max": [[4, 5.0]]},
            "steps": 4,
        }],
    }
    path = base / "plan.json"
    path.write_text(json.dumps(plan))
    outs = []
    for tag in ("a", "b"):
        out = base / tag
        assert main(["--out", str(out), "run", str(path)]) == 0
        outs.append(out)
    return outs


def test_branch_json_schema_and_csv_rows(small_run):
    out = small_run[0]
    payload = json.loads((out / "branch1.branch.json").read_text())
    assert payload["kind"] == "stst"
    points = payload["points"]
    assert len(points) >= 4
    csv_lines = (out / "branch1.measures.csv").read_text().strip().splitlines()
    assert len(csv_lines) == len(points) + 1, "one CSV row per branch point"
    manifest = json.loads((out / "manifest.json").read_text())
    assert "branch1" in json.dumps(manifest)


def test_byte_determinism(small_run):
    first, second = small_run
    for path in sorted(first.iterdir()):
        assert (second / path.name).read_bytes() == path.read_bytes(), path.name

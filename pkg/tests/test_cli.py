import json

import pytest

from triminspect import cli, pipeline


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def designs(tmp_path_factory):
    d = tmp_path_factory.mktemp("designs")
    assert cli.main(["gen", "--seed", "1", "--designs", "2", "--out", str(d)]) == 0
    return d


def test_gen_names_and_determinism(tmp_path, capsys):
    code, out, _ = run(capsys, "gen", "--seed", "1", "--designs", "4", "--out", str(tmp_path / "a"))
    assert code == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert names == [f"design_{i:03d}.json" for i in range(4)]
    run(capsys, "gen", "--seed", "1", "--designs", "4", "--out", str(tmp_path / "b"))
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()


def test_gen_rejects_zero(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["gen", "--designs", "0"])
    assert e.value.code == 2


def test_inspect_summary_matches_json(designs, tmp_path, capsys):
    code, out, _ = run(capsys, "inspect", "--die", str(designs / "design_000.json"),
                       "--out", str(tmp_path), "--spots", "5")
    assert code == 0
    rep = json.loads((tmp_path / "design_000_report.json").read_text())
    a = rep["aggregates"]
    for key in ("region_accuracy", "point_accuracy", "mean_rel_error_pct", "pass_rate"):
        assert f"{key}: {a[key]!r}" in out
    rows = pipeline.load_csv(tmp_path / "design_000_report.csv")
    assert len(rows) == 15


def test_inspect_errors(designs, tmp_path, capsys):
    code, _, err = run(capsys, "inspect", "--die", str(designs / "design_000.json"),
                       "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path))
    assert code != 0 and len(err.strip().splitlines()) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"generation": {"n_spots": 0}}')
    code, _, err = run(capsys, "inspect", "--die", str(designs / "design_000.json"),
                       "--config", str(bad), "--out", str(tmp_path))
    assert code != 0 and "bad.json" in err
    code, _, err = run(capsys, "inspect", "--die", str(tmp_path / "none.json"), "--out", str(tmp_path))
    assert code != 0


def test_ablate(designs, tmp_path, capsys):
    out_csv = tmp_path / "abl.csv"
    code, out, _ = run(capsys, "ablate", "--dies", str(designs), "--out", str(out_csv), "--spots", "6")
    assert code == 0
    lines = out_csv.read_text().strip().split("\n")
    assert lines[0] == "design_id,n_sections,with_shortcut,without_shortcut"
    assert len(lines) == 1 + 2 + 1
    for line in lines[1:]:
        _, _, w, wo = line.split(",")
        assert float(w) == 1.0 and float(w) >= float(wo)


def test_ablate_empty_dir(tmp_path, capsys):
    code, _, err = run(capsys, "ablate", "--dies", str(tmp_path))
    assert code != 0 and "no design files" in err


def test_sweep(tmp_path, designs, capsys):
    code, out, _ = run(capsys, "sweep", "--out", str(tmp_path / "g.csv"))
    assert code == 0
    assert out.splitlines()[0] == "mm_per_px,px_circle,gamma,rel_err_pct"
    assert len(out.splitlines()) == 6
    code, out, _ = run(capsys, "sweep", "--kind", "crop", "--die", str(designs / "design_001.json"),
                       "--spans", "300,400", "--spots", "2")
    assert code == 0 and len(out.splitlines()) == 3
    code, _, err = run(capsys, "sweep", "--kind", "crop")
    assert code != 0


def test_detmath_check(capsys):
    code, out, _ = run(capsys, "detmath-check", "--trials", "20")
    assert code == 0
    assert out.strip().splitlines()[-1] == "all 9 properties passed"


@pytest.mark.parametrize("fault", ["smoothl1-branch", "nms-tiebreak", "decode-scale", "cls-grad"])
def test_detmath_check_catches_faults(fault, capsys):
    code, _, err = run(capsys, "detmath-check", "--trials", "20", "--inject-fault", fault)
    assert code != 0 and "failed" in err


def test_report_command(designs, tmp_path, capsys):
    run(capsys, "inspect", "--die", str(designs / "design_001.json"), "--out", str(tmp_path), "--spots", "3")
    code, out, _ = run(capsys, "report", str(tmp_path / "design_001_report.json"))
    assert code == 0 and "aggregates consistent with rows" in out
    code, _, _ = run(capsys, "report", str(tmp_path / "missing.json"))
    assert code != 0

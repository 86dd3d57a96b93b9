import csv
import io
import json

import pytest

from tailgame import concavify, u_example1_samples
from tailgame.cli import main
from tailgame.simulate import stream_seed


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def write_spec(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


EX1_BOARD = {
    "states": ["k1", "k2"],
    "actions_i": ["l", "r", "-"],
    "actions_j": ["l", "r", "-"],
    "prior": [0.5, 0.5],
    "timing": "alternating",
    "dummy_i": "-",
    "dummy_j": "-",
}


# ---------------------------------------------------------------------------
# nrvalue


def test_nrvalue_emits_the_frozen_grid(capsys):
    code, out, _ = run_cli(capsys, "nrvalue", "--spec", "example1", "--mesh", "0.25")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows == [
        ["p", "u"],
        ["0.0", "1.0"],
        ["0.25", "0.25"],
        ["0.5", "0.0"],
        ["0.75", "-0.25"],
        ["1.0", "-1.0"],
    ]


def test_nrvalue_accepts_a_spec_file(capsys, tmp_path):
    spec = write_spec(
        tmp_path, "game.json", {**EX1_BOARD, "payoff": {"kind": "example1"}}
    )
    code, out, _ = run_cli(capsys, "nrvalue", "--spec", spec, "--mesh", "0.5")
    assert code == 0
    rows = list(csv.reader(io.StringIO(out)))
    assert rows[1] == ["0.0", "1.0"] and rows[-1] == ["1.0", "-1.0"]


def test_nrvalue_writes_files(capsys, tmp_path):
    out_dir = tmp_path / "report"
    code, out, err = run_cli(
        capsys,
        "nrvalue",
        "--spec",
        "example1",
        "--mesh",
        "0.25",
        "--out",
        str(out_dir),
    )
    assert code == 0
    assert (out_dir / "nrvalue.csv").read_bytes().decode("utf-8") == out
    assert (out_dir / "nrvalue.png").stat().st_size > 0
    assert "nrvalue.csv" in err and "nrvalue.png" in err


def test_nrvalue_unsupported_family_exits_3(capsys, tmp_path):
    spec = write_spec(
        tmp_path,
        "buchi.json",
        {**EX1_BOARD, "payoff": {"kind": "buchi", "targets": [["l", "-"]]}},
    )
    code, out, err = run_cli(capsys, "nrvalue", "--spec", spec)
    assert code == 3
    assert "error:" in err


def test_nrvalue_three_state_average_has_no_scalar_grid(capsys, tmp_path):
    spec = write_spec(
        tmp_path,
        "avg3.json",
        {
            "states": ["k1", "k2", "k3"],
            "actions_i": ["a", "b"],
            "actions_j": ["x", "y"],
            "prior": [0.4, 0.3, 0.3],
            "timing": "simultaneous",
            "payoff": {
                "kind": "limsup_average",
                "matrices": {
                    "k1": [[1, 0], [0, 1]],
                    "k2": [[0, 1], [1, 0]],
                    "k3": [[0, 0], [0, 0]],
                },
            },
        },
    )
    code, _, err = run_cli(capsys, "nrvalue", "--spec", spec)
    assert code == 3


def test_nrvalue_missing_file_exits_2(capsys, tmp_path):
    code, _, err = run_cli(capsys, "nrvalue", "--spec", str(tmp_path / "nope.json"))
    assert code == 2
    assert "error:" in err


def test_nrvalue_invalid_spec_exits_2(capsys, tmp_path):
    bad = dict(EX1_BOARD)
    bad["actions_i"] = ["l", "l", "-"]
    spec = write_spec(tmp_path, "bad.json", {**bad, "payoff": {"kind": "example1"}})
    code, _, err = run_cli(capsys, "nrvalue", "--spec", spec)
    assert code == 2
    assert "error:" in err


# ---------------------------------------------------------------------------
# cav


def test_cav_from_spec_at_half(capsys):
    code, out, _ = run_cli(capsys, "cav", "--spec", "example1")
    assert code == 0
    report = json.loads(out)
    assert report["p"] == 0.5
    assert report["cav"] == pytest.approx(0.25, abs=1e-9)
    assert report["split"]["weights"] == pytest.approx([0.25, 0.75], abs=1e-9)
    assert report["split"]["posteriors"][0] == pytest.approx([0.0, 1.0], abs=1e-12)
    assert report["split"]["posteriors"][1][0] == pytest.approx(
        2.0 / 3.0, abs=1e-9
    )
    assert report["split"]["values"] == pytest.approx([1.0, 0.0], abs=1e-9)


def test_cav_round_trips_a_samples_file(capsys, tmp_path):
    xs, vs = u_example1_samples(0.05)
    path = tmp_path / "u.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "u"])
        for x, v in zip(xs, vs):
            writer.writerow([repr(x), repr(v)])
    code, out, _ = run_cli(
        capsys, "cav", "--u-csv", str(path), "--p", "0.37"
    )
    assert code == 0
    report = json.loads(out)
    env = concavify(xs, vs)
    assert report["cav"] == pytest.approx(env.evaluate(0.37), abs=1e-9)
    mix = sum(
        w * q[0]
        for w, q in zip(report["split"]["weights"], report["split"]["posteriors"])
    )
    assert mix == pytest.approx(0.37, abs=1e-9)
    avg = sum(
        w * v for w, v in zip(report["split"]["weights"], report["split"]["values"])
    )
    assert avg == pytest.approx(report["cav"], abs=1e-9)


def test_cav_writes_files(capsys, tmp_path):
    out_dir = tmp_path / "cavout"
    code, out, err = run_cli(
        capsys, "cav", "--spec", "example1", "--out", str(out_dir)
    )
    assert code == 0
    on_disk = json.loads((out_dir / "cav.json").read_text())
    assert on_disk == json.loads(out)
    assert (out_dir / "cav.png").stat().st_size > 0


def test_cav_needs_a_source(capsys):
    code, _, err = run_cli(capsys, "cav")
    assert code == 2
    assert "--spec or --u-csv" in err


def test_cav_rejects_out_of_range_query(capsys):
    code, _, err = run_cli(capsys, "cav", "--spec", "example1", "--p", "1.5")
    assert code == 2
    assert "error:" in err


def test_cav_rejects_malformed_samples(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n0.0,1.0\n")
    code, _, err = run_cli(capsys, "cav", "--u-csv", str(path))
    assert code == 2
    path2 = tmp_path / "short.csv"
    path2.write_text("p,u\n0.0,1.0\n")
    code2, _, _ = run_cli(capsys, "cav", "--u-csv", str(path2))
    assert code2 == 2


# ---------------------------------------------------------------------------
# simulate


PURE_R = '{"kind": "stationary", "dist": {"r": 1}}'
PURE_L = '{"kind": "stationary", "dist": {"l": 1}}'


def test_simulate_pure_pair_summary(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate",
        "--spec",
        "example1",
        "--sigma",
        PURE_R,
        "--tau",
        PURE_L,
        "--episodes",
        "5",
        "--horizon",
        "100",
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["episodes"] == 5
    assert summary["exact_fraction"] == 1.0
    assert summary["block_stats"] is None
    for label, entry in summary["per_state"].items():
        assert entry["mean"] == {"k1": -1.0, "k2": 2.0}[label]


def test_simulate_splitting_against_block_response(capsys):
    code, out, _ = run_cli(
        capsys,
        "simulate",
        "--spec",
        "example1",
        "--sigma",
        '{"kind": "splitting"}',
        "--tau",
        '{"kind": "block_response"}',
        "--episodes",
        "4",
        "--horizon",
        "300",
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["exact_fraction"] == 1.0
    assert summary["block_stats"]["oracle_queries_mean"] == 2.0
    # under this split the low state never reveals, so its payoff is pinned
    if "k1" in summary["per_state"]:
        assert summary["per_state"]["k1"]["mean"] == 0.0
    if "k2" in summary["per_state"]:
        assert 0.0 <= summary["per_state"]["k2"]["mean"] <= 1.0


def test_simulate_descriptor_file_and_outputs(capsys, tmp_path):
    sd = tmp_path / "sigma.json"
    sd.write_text('{"kind": "splitting"}')
    out_dir = tmp_path / "sim"
    code, out, err = run_cli(
        capsys,
        "simulate",
        "--spec",
        "example1",
        "--sigma",
        "@" + str(sd),
        "--tau",
        '{"kind": "block_response"}',
        "--episodes",
        "5",
        "--horizon",
        "200",
        "--seed",
        "3",
        "--out",
        str(out_dir),
    )
    assert code == 0
    assert json.loads((out_dir / "summary.json").read_text()) == json.loads(out)
    with open(out_dir / "episodes.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["seed", "k_star", "payoff", "exact", "blocks", "theta_stage"]
    assert len(rows) == 6
    for ep, row in enumerate(rows[1:]):
        assert row[0] == str(stream_seed(3, ep, "nature"))
        assert row[1] in ("k1", "k2")
        assert row[3] == "1"
        if row[5] != "":
            assert row[5] == "1"          # boundary right after the one-move code
            assert row[2] == "1.0"        # revealed branch locks in the vertex value
        else:
            assert row[2] == "0.0"
    assert (out_dir / "beliefs.png").stat().st_size > 0


def test_simulate_rejects_circular_descriptors(capsys):
    code, _, err = run_cli(
        capsys,
        "simulate",
        "--spec",
        "example1",
        "--sigma",
        '{"kind": "example1_exploit"}',
        "--tau",
        '{"kind": "block_response"}',
    )
    assert code == 2
    assert "circular" in err


def test_simulate_rejects_bad_descriptors(capsys):
    code, _, _ = run_cli(
        capsys, "simulate", "--spec", "example1", "--sigma", "{oops", "--tau", PURE_L
    )
    assert code == 2
    code2, _, _ = run_cli(
        capsys, "simulate", "--spec", "example1", "--sigma", "[1]", "--tau", PURE_L
    )
    assert code2 == 2
    code3, _, _ = run_cli(
        capsys,
        "simulate",
        "--spec",
        "example1",
        "--sigma",
        '{"kind": "wat"}',
        "--tau",
        PURE_L,
    )
    assert code3 == 2


def test_simulate_splitting_needs_a_scalar_family(capsys, tmp_path):
    spec = write_spec(
        tmp_path,
        "avg3.json",
        {
            "states": ["k1", "k2", "k3"],
            "actions_i": ["a", "b"],
            "actions_j": ["x", "y"],
            "prior": [0.4, 0.3, 0.3],
            "timing": "simultaneous",
            "payoff": {
                "kind": "limsup_average",
                "matrices": {
                    "k1": [[1, 0], [0, 1]],
                    "k2": [[0, 1], [1, 0]],
                    "k3": [[0, 0], [0, 0]],
                },
            },
        },
    )
    code, _, err = run_cli(
        capsys,
        "simulate",
        "--spec",
        spec,
        "--sigma",
        '{"kind": "splitting"}',
        "--tau",
        '{"kind": "stationary", "dist": {"x": 1}}',
        "--episodes",
        "1",
        "--horizon",
        "16",
    )
    assert code == 3


def test_simulate_average_family_runs(capsys, tmp_path):
    spec = write_spec(
        tmp_path,
        "avg2.json",
        {
            "states": ["k1", "k2"],
            "actions_i": ["a", "b"],
            "actions_j": ["x", "y"],
            "prior": [0.5, 0.5],
            "timing": "simultaneous",
            "payoff": {
                "kind": "limsup_average",
                "matrices": {
                    "k1": [[2, -1], [-1, 1]],
                    "k2": [[0, 0], [0, 0]],
                },
            },
        },
    )
    code, out, _ = run_cli(
        capsys,
        "simulate",
        "--spec",
        spec,
        "--sigma",
        '{"kind": "stationary", "dist": {"a": 1}}',
        "--tau",
        '{"kind": "stationary", "dist": {"x": 1}}',
        "--episodes",
        "3",
        "--horizon",
        "64",
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["exact_fraction"] == 1.0
    for label, entry in summary["per_state"].items():
        assert entry["mean"] == {"k1": 2.0, "k2": 0.0}[label]


# ---------------------------------------------------------------------------
# example1-gap


def test_gap_report_structure(capsys):
    code, out, _ = run_cli(
        capsys, "example1-gap", "--episodes", "2", "--horizon", "300"
    )
    assert code == 0
    report = json.loads(out)
    assert report["variant"] == "example1"
    assert report["p"] == 0.5
    assert [r["tau"] for r in report["panel"]] == [
        "always_r",
        "always_l",
        "l_once_then_r",
        "alternator",
        "random_machine3",
    ]
    assert all(r["exact"] for r in report["panel"])
    assert report["minmax_side_panel_bound"] == 0.5
    assert 0.0 <= report["maxmin_side"] <= 1.0
    assert "panel only" in report["notes"]


def test_gap_density_variant_and_files(capsys, tmp_path):
    out_dir = tmp_path / "gap"
    code, out, _ = run_cli(
        capsys,
        "example1-gap",
        "--variant",
        "example2",
        "--episodes",
        "2",
        "--horizon",
        "200",
        "--out",
        str(out_dir),
    )
    assert code == 0
    report = json.loads(out)
    assert report["variant"] == "example2"
    assert json.loads((out_dir / "gap.json").read_text()) == report
    assert (out_dir / "gap.png").stat().st_size > 0

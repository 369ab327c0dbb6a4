import csv
import json

import numpy as np
import pytest

from subfinsler.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, RunConfig, main
from subfinsler.errors import ConfigError


def run(tmp_path, command, config=None, *extra, name="out"):
    args = [command, "--out", str(tmp_path / name)]
    if config is not None:
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(config))
        args += ["--config", str(path)]
    return main(args + list(extra))


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_check_identities_euclidean(tmp_path):
    assert run(tmp_path, "check-identities", {"samples": 30}) == EXIT_PASS
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert summary["pass"] and summary["rng"]
    assert all(s["pass"] for s in summary["suites"])


def test_check_identities_anisotropic(tmp_path):
    assert run(tmp_path, "check-identities", {"norm_pair": "pnorm4_ellipsoid", "m": 2, "k": 2, "samples": 30}) == EXIT_PASS
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    for s in summary["suites"]:
        if s["suite"].startswith(("finabla", "bp")):
            assert float(s["max_rel"]) <= 1e-9


def test_tolerance_failure_exits_1(tmp_path):
    assert run(tmp_path, "check-identities", {"samples": 10, "tolerances": {"default": 1e-20}}) == EXIT_FAIL
    assert not json.loads((tmp_path / "out" / "summary.json").read_text())["pass"]


def test_csv_layout(tmp_path):
    run(tmp_path, "verify-fundamental", {"samples": 5, "m": 2, "k": 1, "cases": [[1, 2]]})
    header, rows = read_csv(tmp_path / "out" / "fundamental_a1_p2.csv")
    assert header == ["suite", "x0", "x1", "x2", "lhs", "rhs", "abs_res", "rel_res"]
    assert len(rows) == 5
    assert all(float(r[-1]) >= 0 for r in rows)


def test_determinism(tmp_path):
    cfg = {"norm_pair": "ellipsoid_pnorm4", "m": 2, "k": 2, "samples": 20, "sigma0": "random", "seed": 99}
    assert run(tmp_path, "verify-yamabe", dict(cfg, convention="md"), name="a") == EXIT_PASS
    assert run(tmp_path, "verify-yamabe", dict(cfg, convention="md"), name="b") == EXIT_PASS
    a, b = tmp_path / "a", tmp_path / "b"
    files = sorted(p.name for p in a.iterdir() if p.name != "header.json")
    assert files == sorted(p.name for p in b.iterdir() if p.name != "header.json")
    for f in files:
        assert (a / f).read_bytes() == (b / f).read_bytes(), f
    assert "timestamp" in json.loads((a / "header.json").read_text())


def test_seed_changes_samples(tmp_path):
    run(tmp_path, "verify-fundamental", {"samples": 5, "cases": [[1, 2]]}, "--seed", "1", name="a")
    run(tmp_path, "verify-fundamental", {"samples": 5, "cases": [[1, 2]]}, "--seed", "2", name="b")
    assert (tmp_path / "a" / "fundamental_a1_p2.csv").read_bytes() != (tmp_path / "b" / "fundamental_a1_p2.csv").read_bytes()


def test_verify_yamabe_md_amplitude_m3_k1(tmp_path):
    cfg = {"m": 3, "k": 1, "epsilon": 1.0, "samples": 50, "convention": "md"}
    assert run(tmp_path, "verify-yamabe", cfg) == EXIT_PASS


def test_verify_yamabe_anisotropic_random_shift(tmp_path):
    cfg = {"norm_pair": "pnorm4_ellipsoid", "m": 2, "k": 2, "epsilon": 0.5, "sigma0": "random",
           "samples": 50, "convention": "md"}
    assert run(tmp_path, "verify-yamabe", cfg) == EXIT_PASS


def test_verify_yamabe_m1_edge(tmp_path):
    # m = 1, k = 1: both amplitude conventions coincide
    assert run(tmp_path, "verify-yamabe", {"m": 1, "k": 1, "samples": 50}) == EXIT_PASS


def test_verify_yamabe_d_amplitude_fails(tmp_path):
    assert run(tmp_path, "verify-yamabe", {"m": 3, "k": 1, "samples": 20}) == EXIT_FAIL
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    main_suite = next(s for s in summary["suites"] if s["suite"] == "yamabe")
    assert float(main_suite["notes"]["lhs_over_rhs"]) == pytest.approx(3.0, rel=1e-10)
    lemmas = [s for s in summary["suites"] if s["suite"].startswith(("lemma", "magic", "intertwining"))]
    assert lemmas and all(s["pass"] for s in lemmas)


@pytest.mark.parametrize(
    "cfg",
    [
        {"cases": [[1, 2]]},
        {"norm_pair": "ellipsoid", "cases": [[2, 3]]},
        {"norm_pair": "pnorm4_ellipsoid", "cases": [[1, "Q"], [1, 3]]},
    ],
)
def test_verify_fundamental(tmp_path, cfg):
    assert run(tmp_path, "verify-fundamental", dict(cfg, samples=30)) == EXIT_PASS


def test_fundamental_log_branch_named(tmp_path):
    run(tmp_path, "verify-fundamental", {"samples": 5, "cases": [[1, "Q"]]})
    assert (tmp_path / "out" / "fundamental_a1_pQ.csv").exists()


def _wulff_points(tmp_path, suite):
    _, rows = read_csv(tmp_path / "out" / f"{suite}.csv")
    return np.array([[float(r[1]), float(r[2])] for r in rows])


def test_wulff_circle(tmp_path):
    assert run(tmp_path, "wulff", {"curve": "phi0", "m": 2}) == EXIT_PASS
    pts = _wulff_points(tmp_path, "wulff_phi0")
    assert len(pts) == 721 and np.array_equal(pts[0], pts[-1])
    assert np.max(np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1)) <= 1e-12


def test_wulff_pnorm4(tmp_path):
    assert run(tmp_path, "wulff", {"curve": "phi0", "m": 2, "norm_pair": "pnorm4_euclidean"}) == EXIT_PASS
    pts = _wulff_points(tmp_path, "wulff_phi0")
    q = 4 / 3
    assert np.max(np.abs(np.sum(np.abs(pts) ** q, axis=1) ** (1 / q) - 1)) <= 1e-9


def test_wulff_theta0_slice(tmp_path):
    assert run(tmp_path, "wulff", {"curve": "theta0", "m": 1, "k": 1}) == EXIT_PASS
    pts = _wulff_points(tmp_path, "wulff_theta0")
    assert np.max(np.abs(pts[:, 0] ** 4 + 16 * pts[:, 1] ** 2 - 1)) <= 1e-9


def test_wulff_needs_two_dimensions(tmp_path):
    assert run(tmp_path, "wulff", {"curve": "phi0", "m": 3}) == EXIT_CONFIG
    assert run(tmp_path, "wulff", {"curve": "theta0", "slice": [0, 0]}) == EXIT_CONFIG


def test_energy_zero(tmp_path):
    assert run(tmp_path, "energy", {"function": "zero", "points_per_axis": 8}) == EXIT_PASS
    values = json.loads((tmp_path / "out" / "summary.json").read_text())["values"]
    assert float(values["energy"]) == 0.0


def test_energy_bump(tmp_path):
    cfg = {"function": "bump", "box_half_width": 1.0, "grading": None, "sigma_grading": None,
           "points_per_axis": 16, "dilations": []}
    assert run(tmp_path, "energy", cfg) == EXIT_PASS
    summary = json.loads((tmp_path / "out" / "summary.json").read_text())
    assert np.isfinite(float(summary["values"]["energy"]))
    ref = next(s for s in summary["suites"] if s["suite"] == "energy_refinement")
    assert float(ref["max_rel"]) <= 1e-2


def test_energy_budget_is_config_error(tmp_path):
    assert run(tmp_path, "energy", {"m": 3, "k": 3, "points_per_axis": 8}) == EXIT_CONFIG


@pytest.mark.parametrize(
    "cfg",
    [
        {"tolerence": {}},
        {"tolerances": {"yamabee": 1e-3}},
        {"tolerances": {"yamabe": -1.0}},
        {"samples": 0},
        {"m": 1.5},
        {"norm_pair": "hexagon"},
        {"convention": "whatever"},
        {"alpha": -1},
    ],
)
def test_config_errors_exit_2(tmp_path, cfg):
    assert run(tmp_path, "check-identities", cfg) == EXIT_CONFIG


def test_parse_errors_exit_2(tmp_path):
    assert main(["no-such-command"]) == EXIT_CONFIG
    assert main(["wulff", "--seed", "abc"]) == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["wulff", "--config", str(bad), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["wulff", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_run_config_from_dict():
    cfg = RunConfig.from_dict({"m": 3, "tolerances": {"default": 1e-3, "yamabe": 1e-9}})
    assert cfg.tolerance("yamabe") == 1e-9 and cfg.tolerance("bp") == 1e-3
    with pytest.raises(ConfigError):
        RunConfig.from_dict([1, 2])
    with pytest.raises(ConfigError):
        RunConfig.from_dict({"seed": 2**64})

import csv
import io

import numpy as np
import pytest

from bubbletower.cli import main
from bubbletower.errors import InvalidArgument
from bubbletower.suites import (COLUMNS, SUITES, Record, Report, SuiteConfig, fit_order,
                                parse_config_text, run_suite, suite_criteria)


def test_fit_order_exact_and_flat():
    assert fit_order([1, 0.5, 0.25], [1, 1 / 4, 1 / 16]) == pytest.approx(2.0)
    assert fit_order([1, 0.5, 0.25], [3.0, 3.0, 3.0]) == pytest.approx(0.0, abs=1e-12)


def test_fit_order_with_noise_and_exclusions():
    rng = np.random.default_rng(11)
    h = 0.5 ** np.arange(8)
    e = h ** 2 * np.exp(rng.normal(0, 0.05, h.size))
    assert 1.8 <= fit_order(h, e) <= 2.2
    notes = []
    assert fit_order([1, 0.5, 0.25, 0.125], [1, 0.25, 0.0, 1 / 64], notes) == pytest.approx(2.0)
    assert notes and "excluded 1" in notes[0]
    with pytest.raises(InvalidArgument):
        fit_order([1, 0.5, 0.25], [1, -1, 0.1])
    with pytest.raises(InvalidArgument):
        fit_order([1, 0.5], [1, 0.25, 0.1])


def test_config_parsing():
    vals = parse_config_text("""
        # sweep
        dims = 4, 6
        k = 2
        eps-start = 1e-3   # trailing comment
        samples = 50
    """)
    assert vals == {"dims": (4, 6), "ks": (2,), "eps_start": 1e-3, "samples": 50}
    with pytest.raises(InvalidArgument):
        parse_config_text("colour = blue")
    with pytest.raises(InvalidArgument):
        parse_config_text("dims 4")
    with pytest.raises(InvalidArgument):
        parse_config_text("grid = fine")


def test_config_validation():
    with pytest.raises(InvalidArgument):
        SuiteConfig("nonsense")
    with pytest.raises(InvalidArgument):
        SuiteConfig("constants", dims=(9,))
    with pytest.raises(InvalidArgument):
        SuiteConfig("predict", eps_factor=2.0)
    with pytest.raises(InvalidArgument):
        SuiteConfig("robin-solver", grid=8)
    cfg = SuiteConfig("predict", eps_start=1e-3, eps_factor=0.1, eps_count=3)
    np.testing.assert_allclose(cfg.eps_sweep(1.0, 0.5, 9), [1e-3, 1e-4, 1e-5])
    assert cfg.spec_hash == "default"
    assert SuiteConfig("predict", tol=1e-8).spec_hash != "default"


def test_every_suite_scores_its_criteria():
    seen = sorted(c for s in SUITES for c in suite_criteria(s))
    assert seen == list(range(1, 15))


def test_report_csv_is_parseable_and_deterministic(tmp_path):
    cfg = SuiteConfig("predict", eps_count=4, seed=3)
    a, b = run_suite(cfg), run_suite(cfg)
    assert a.csv_text() == b.csv_text()
    rows = list(csv.reader(io.StringIO(a.csv_text())))
    assert tuple(rows[0]) == COLUMNS
    assert all(r[COLUMNS.index("seed")] == "3" for r in rows[1:])
    a.write(tmp_path)
    assert (tmp_path / "predict.csv").read_text() == a.csv_text()
    assert "verdict:" in (tmp_path / "report.txt").read_text()


def test_report_verdict_rules():
    cfg = SuiteConfig("constants")
    ok = Report(cfg, [Record(1, "a", "pass"), Record(1, "b", "info")])
    bad = Report(cfg, [Record(1, "a", "pass"), Record(2, "b", "error", note="boom")])
    assert ok.verdict and ok.criteria() == {1: True}
    assert not bad.verdict and bad.criteria() == {1: True, 2: False}


def test_box_domain_rejected_for_ball_suites():
    with pytest.raises(InvalidArgument):
        run_suite(SuiteConfig("pohozaev", domain="box"))


def test_cli_exit_codes(tmp_path, capsys):
    assert main(["predict", "--quiet", "--eps-count", "4"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("verdict: PASS")
    assert main(["constants", "--dims", "3", "--out", str(tmp_path)]) == 1
    assert (tmp_path / "constants.csv").exists()
    cfg = tmp_path / "run.cfg"
    cfg.write_text("dims = 4\n")
    assert main(["constants", "--config", str(cfg), "--quiet"]) == 0


@pytest.mark.parametrize("argv", [["bogus"], ["constants", "--dims", "x"], ["predict", "--eps-factor", "3"],
                                  ["energy", "--domain", "box"], ["constants", "--config", "/nonexistent"]])
def test_cli_usage_errors(argv):
    with pytest.raises(SystemExit) as exc:
        main(argv)
    assert exc.value.code == 2

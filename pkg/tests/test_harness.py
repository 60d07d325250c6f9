"""Trial harness, CSV export, sweeps, bound comparisons, and the CLI."""
import math

import numpy as np
import pytest

from secopt import (
    ADVERSARY_ORDER,
    CSV_HEADER,
    BatchSummary,
    ParameterError,
    ProtocolConfig,
    TrialOutcome,
    compare_to_bounds,
    default_packing_centers,
    export_csv,
    make_rate_report,
    run_batch,
    summarize,
    sweep_budget,
    trial_seed,
)
from secopt.cli import main as cli_main


def test_csv_header_is_frozen() -> None:
    assert CSV_HEADER == (
        "trial,seed,T,delta_adv,eps_adv,eps,delta,kappa,sigma_or_p,mode,"
        "point_error,function_error,adv_prop_success,adv_pack_success,"
        "adv_post_success,adv_naive_success,queries_used,ms"
    )


def test_trial_seed_derivation() -> None:
    ss = np.random.SeedSequence(123, spawn_key=(5,))
    assert trial_seed(123, 5) == int(ss.generate_state(1, np.uint64)[0])
    assert trial_seed(123, 5) != trial_seed(123, 6)
    assert trial_seed(123, 5) != trial_seed(124, 5)


def test_default_packing_centers_form_a_packing() -> None:
    centers = default_packing_centers(0.04)
    assert centers[0] == 0.04
    assert centers[-1] <= 1.0 - 0.04
    assert np.min(np.diff(centers)) >= 2 * 0.04 - 1e-12


def test_run_batch_matches_across_worker_counts() -> None:
    config = ProtocolConfig(T=4000, overrides={"C0": 2.0})
    serial = run_batch(config, 8, master_seed=99, workers=1)
    pooled = run_batch(config, 8, master_seed=99, workers=2)
    assert export_csv(serial) == export_csv(pooled)
    assert serial.delta_hat == pooled.delta_hat
    assert serial.adv_rates == pooled.adv_rates
    # seed column records the per-trial derivation
    assert serial.outcomes[3].seed == trial_seed(99, 3)


def test_run_batch_validation() -> None:
    config = ProtocolConfig(T=2000)
    with pytest.raises(ParameterError):
        run_batch(config, 0, master_seed=1)
    with pytest.raises(ParameterError):
        run_batch(config, 4, master_seed=1, workers=0)


def test_bisection_batch_always_hits_tolerance() -> None:
    config = ProtocolConfig(T=20000, mode="Bisection", eps=1e-3)
    summary = run_batch(config, 20, master_seed=7)
    assert summary.delta_hat == 0.0
    expected = config.subintervals * math.ceil(math.log2(config.delta_adv / config.eps))
    assert all(o.queries_used == expected for o in summary.outcomes)
    assert all(o.point_error <= config.eps for o in summary.outcomes)


def test_summarize_statistics_by_hand() -> None:
    config = ProtocolConfig(T=2000)
    errs = [0.0005, 0.0005, 0.002, 0.003]
    outcomes = [
        TrialOutcome(
            trial=i, seed=i, point_error=errs[i], function_error=errs[i] ** 2,
            adv_success={k: (k == "proportional" and i == 0) for k in ADVERSARY_ORDER},
            queries_used=2000, ms=4.0,
        )
        for i in range(4)
    ]
    s = summarize(config, outcomes)
    assert s.n_trials == 4
    assert s.delta_hat == 0.5  # two errors at or above eps = 1e-3
    # null standard error at the target rates, used by the --check gates
    assert s.se_delta == pytest.approx(math.sqrt(0.05 * 0.95 / 4), rel=1e-12)
    assert s.se_adv == pytest.approx(math.sqrt(0.1 * 0.9 / 4), rel=1e-12)
    assert s.adv_rates["proportional"] == 0.25
    assert s.adv_rates["uniform_naive"] == 0.0
    assert s.point_quantiles[1] == pytest.approx(0.00125, rel=1e-12)
    assert s.mean_ms == pytest.approx(4.0, rel=1e-12)


def test_export_csv_shape_and_mode_column() -> None:
    config = ProtocolConfig(T=4000, mode="Bisection", eps=1e-3, x_star=0.43)
    summary = run_batch(config, 3, master_seed=11)
    text = export_csv(summary)
    lines = text.strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    for line in lines[1:]:
        cells = line.split(",")
        assert len(cells) == 18
        assert cells[2] == "4000"
        assert cells[9] == "Bisection"
        assert cells[17] == "0"  # wall-time column is zeroed for reproducibility


def test_sweep_guards() -> None:
    config = ProtocolConfig(T=2000)
    with pytest.raises(ParameterError):
        sweep_budget(config, [1000, 2000, 4000], 2, master_seed=1)
    with pytest.warns(UserWarning):
        sweep_budget(config, [1000, 1100, 1200, 1300], 2, master_seed=1)


def test_sweep_fits_decaying_errors() -> None:
    config = ProtocolConfig(overrides={"C0": 2.0})
    result = sweep_budget(config, [2000, 8000, 32000, 256000], 3, master_seed=42)
    assert result.budgets == [2000, 8000, 32000, 256000]
    assert len(result.summaries) == 4
    assert result.fit_point is not None and result.fit_function is not None
    assert result.fit_point.n_points == 4
    assert result.fit_point.slope < -0.1
    assert result.fit_function.slope < result.fit_point.slope  # function decays faster


def _summary_with_median(config: ProtocolConfig, fn_median: float) -> BatchSummary:
    return BatchSummary(
        config=config, n_trials=4, delta_hat=0.0, se_delta=0.0,
        adv_rates={k: 0.0 for k in ADVERSARY_ORDER}, se_adv=0.0,
        point_quantiles=(0.1, 0.2, 0.3), function_quantiles=(0.1, fn_median, 0.3),
        mean_ms=0.0, outcomes=[],
    )


def test_compare_to_bounds_flagging_rules() -> None:
    config = ProtocolConfig(T=64, delta_adv=0.25, eps_adv=0.02)
    report = make_rate_report(
        "convex", T=64, delta_adv=0.25, kappa=2.0,
        eps=1e-3, eps_adv=0.02, delta=0.05, sigma=0.1,
    )
    # budget 16, upper function exponent -1: predicted 0.0625, measured 0.125
    rows = compare_to_bounds([_summary_with_median(config, 0.125)], report)
    assert rows[0].budget == 16.0
    assert rows[0].predicted == pytest.approx(0.0625, rel=1e-12)
    assert rows[0].ratio == pytest.approx(2.0, rel=1e-12)
    assert not rows[0].flagged  # default allowance ln(16)^2 > 2

    at_limit = compare_to_bounds([_summary_with_median(config, 0.125)], report, allowance=2.0)
    assert not at_limit[0].flagged  # equality stays unflagged
    over = compare_to_bounds([_summary_with_median(config, 0.125)], report, allowance=1.9)
    assert over[0].flagged

    exact = compare_to_bounds([_summary_with_median(config, 0.0625)], report, allowance=1.0)
    assert exact[0].ratio == pytest.approx(1.0, rel=1e-12) and not exact[0].flagged

    pt = compare_to_bounds([_summary_with_median(config, 0.125)], report, error_kind="point")
    assert pt[0].predicted == pytest.approx(16.0 ** -0.5, rel=1e-12)
    assert pt[0].measured == 0.2

    with pytest.raises(ParameterError):
        compare_to_bounds([_summary_with_median(config, 0.1)], report, error_kind="both")
    bad = make_rate_report(
        "convex", T=64, delta_adv=0.25, kappa=3.0,
        eps=1e-3, eps_adv=0.02, delta=0.05, sigma=0.1,
    )
    with pytest.raises(ParameterError, match="kappa"):
        compare_to_bounds([_summary_with_median(config, 0.1)], bad)


def test_cli_run_writes_csv(tmp_path, capsys) -> None:
    out = tmp_path / "trials.csv"
    rc = cli_main(["run", "--seed", "7", "-N", "4", "--out", str(out), "--T=4000"])
    assert rc == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 5
    assert "wrote 4 rows" in capsys.readouterr().out


def test_cli_run_check_fails_on_weak_setting(capsys) -> None:
    # stock constants leave the solver idle at T=4000, so accuracy check trips
    rc = cli_main(["run", "--seed", "7", "-N", "4", "--check", "--T=4000"])
    assert rc == 3
    assert "CHECK FAILED" in capsys.readouterr().err


def test_cli_invalid_parameters_exit_2(capsys) -> None:
    rc = cli_main(["run", "--seed", "1", "--delta_adv=0.6"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_cli_scientific_notation_values(tmp_path) -> None:
    # yaml 1.1 reads dotless "1e-4" as a string; the CLI must still accept it
    out = tmp_path / "trials.csv"
    rc = cli_main([
        "run", "--seed", "3", "-N", "2", "--mode=Bisection",
        "--eps=1e-4", "--T=2e3", "--out", str(out),
    ])
    assert rc == 0
    rows = [r.split(",") for r in out.read_text().strip().split("\n")[1:]]
    assert all(r[5] == "0.0001" for r in rows)
    assert all(r[2] == "2000" for r in rows)  # integral floats become ints


def test_cli_non_numeric_value_exits_2(capsys) -> None:
    rc = cli_main(["run", "--seed", "1", "--eps=tiny"])
    assert rc == 2
    assert capsys.readouterr().err.startswith("error:")


def test_cli_missing_file_exits_2(tmp_path, capsys) -> None:
    rc = cli_main(["run", "--seed", "1", "--config", str(tmp_path / "nope.yaml")])
    assert rc == 2
    rc = cli_main([
        "adversary-eval", "--seed", "1",
        "--transcript", str(tmp_path / "nope.txt"), "--x-star", "0.3",
    ])
    assert rc == 2
    err = capsys.readouterr().err
    assert err.count("error:") == 2


def test_cli_malformed_yaml_config_exits_2(tmp_path, capsys) -> None:
    cfg = tmp_path / "broken.yaml"
    cfg.write_text("T: [unclosed\n")
    rc = cli_main(["run", "--seed", "1", "--config", str(cfg)])
    assert rc == 2
    assert "broken.yaml" in capsys.readouterr().err


def test_cli_yaml_config_with_override(tmp_path) -> None:
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("T: 4000\nmode: Bisection\neps: 0.001\nx_star: 0.3\n")
    out = tmp_path / "trials.csv"
    rc = cli_main([
        "run", "--seed", "2", "-N", "2", "--config", str(cfg),
        "--out", str(out), "--T=2000",
    ])
    assert rc == 0
    rows = out.read_text().strip().split("\n")[1:]
    assert all(r.split(",")[2] == "2000" for r in rows)  # override beats the file
    assert all(r.split(",")[9] == "Bisection" for r in rows)


def test_cli_unknown_config_key_exits_2(tmp_path, capsys) -> None:
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("bogus: 1\n")
    rc = cli_main(["run", "--seed", "2", "--config", str(cfg)])
    assert rc == 2
    assert "bogus" in capsys.readouterr().err


def test_cli_sweep_rejects_short_budget_list(capsys) -> None:
    rc = cli_main(["sweep", "--seed", "1", "--budgets", "1000,2000,4000"])
    assert rc == 2


def test_cli_missing_seed_is_a_usage_error() -> None:
    with pytest.raises(SystemExit) as exc:
        cli_main(["run"])
    assert exc.value.code == 2


def test_cli_bounds_table(capsys) -> None:
    rc = cli_main(["bounds", "--eps_adv=0.02"])
    assert rc == 0
    out = capsys.readouterr().out
    lines = out.strip().split("\n")
    assert lines[0] == "setting,quantity,value"
    assert any(ln.startswith("binary,") for ln in lines)
    assert any(ln.startswith("noisy-binary,") for ln in lines)
    assert any(ln.startswith("convex,") for ln in lines)


def test_cli_export_then_adversary_eval(tmp_path, capsys) -> None:
    path = tmp_path / "transcript.txt"
    rc = cli_main([
        "export-transcript", "--seed", "3", "--out", str(path), "--public", "--T=4000",
    ])
    assert rc == 0
    text = path.read_text()
    assert text.startswith("# secopt-transcript")
    capsys.readouterr()
    rc = cli_main([
        "adversary-eval", "--transcript", str(path), "--x-star", "0.5",
        "--seed", "9", "--samples", "200",
    ])
    assert rc == 0
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "strategy,successes,samples,success_rate"
    assert len(out) == 5
    assert all(int(ln.split(",")[2]) == 200 for ln in out[1:])

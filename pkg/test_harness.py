import asyncio
import importlib.util
import json
import math
import os

import numpy as np
import pytest
from fastapi import HTTPException

import main
from harness import (
    NETWORK_PRESETS,
    ExperimentSpec,
    HarnessSettings,
    MeanRow,
    NetworkPreset,
    ResultRow,
    compute_means,
    draw_large_scale,
    generate_channels,
    get_preset,
    load_presets,
    plot_series,
    read_means,
    read_results,
    run_cell,
    run_experiment,
    validate_dumps,
    write_experiment,
    write_means,
    write_plot_series,
    write_results,
)
from harness.router import experiments_endpoint, igsbpo_endpoint, presets_endpoint
from harness.models import ExperimentRequest, IgsbpoRequest
from network import NetworkConfig


def _row(**overrides):
    values = dict(target_sinr_db=0.0, realization=0, algorithm="cb", network_power_w=12.5,
                  total_tx_power_w=3.0, active_bs=3, feasible=True, iterations=1, wall_ms=4.2)
    values.update(overrides)
    return ResultRow(**values)


def _same_rows(left, right):
    assert len(left) == len(right)
    for a, b in zip(left, right):
        da, db = a.model_dump(exclude={"wall_ms"}), b.model_dump(exclude={"wall_ms"})
        for key in da:
            if isinstance(da[key], float) and math.isnan(da[key]):
                assert math.isnan(db[key])
            else:
                assert da[key] == db[key], key


@pytest.fixture
def wired_preset(monkeypatch):
    """3 个有线基站、2 个用户；没有无线回传，小目标下各算法都可行。"""
    station = dict(backhaul="wireline", capacity=140.0, drain_efficiency=0.25, onu_power_active=1.0,
                   initial_power=1.0)
    preset = NetworkPreset(
        name="wired",
        num_users=2,
        access_noise_power=1e-4,
        backhaul_noise_power=1e-4,
        stations=[dict(station, bs_power_active=p) for p in (4.2, 5.2, 6.2)],
    )
    monkeypatch.setitem(NETWORK_PRESETS, "wired", preset)
    return preset


# ---------------------------------------------------------------------------
# 预设
# ---------------------------------------------------------------------------

def test_hybrid12_preset_constants():
    cfg = get_preset("hybrid12").to_config()
    assert (cfg.num_bs, cfg.num_wireline, cfg.num_users) == (12, 6, 4)
    expected = [4.2 + l for l in range(1, 7)] + [l - 5.9 for l in range(7, 13)]
    np.testing.assert_allclose(cfg.relative_power, expected)
    assert cfg.access_noise_power == pytest.approx(1e-4)
    assert cfg.backhaul_noise_power == pytest.approx(1e-4)
    assert set(cfg.wireline_capacity) == {140.0}
    assert get_preset("hybrid12").unused_constants == {"delta": 0.05}


def test_small_preset_has_positive_backhaul_power():
    cfg = get_preset("small").to_config()
    assert (cfg.num_bs, cfg.num_wireline, cfg.num_users) == (6, 3, 2)
    assert np.all(cfg.relative_power > 0)


def test_unknown_preset():
    with pytest.raises(ValueError):
        get_preset("nope")


def test_load_presets_skips_bad_files(tmp_path):
    (tmp_path / "broken.json").write_text("{not json", encoding="utf-8")
    (tmp_path / "partial.json").write_text(json.dumps({"name": "partial"}), encoding="utf-8")
    source = os.path.join(os.path.dirname(__file__), "config", "presets", "small.json")
    with open(source, encoding="utf-8") as f:
        (tmp_path / "small.json").write_text(f.read(), encoding="utf-8")
    assert sorted(load_presets(str(tmp_path))) == ["small"]
    assert load_presets(str(tmp_path / "missing")) == {}


# ---------------------------------------------------------------------------
# 信道生成
# ---------------------------------------------------------------------------

def test_large_scale_partition():
    cfg = get_preset("hybrid12").to_config()
    rng = np.random.Generator(np.random.Philox(key=3))
    large = draw_large_scale(cfg, rng)
    assert large.shape == (12, 4)
    per_bs = large[:, 0]
    for level in (0.051, 0.041, 0.032):
        assert int(np.sum(np.isclose(per_bs, level))) == 4
    assert np.all(large == per_bs[:, None])


def test_large_scale_needs_even_split(make_config):
    cfg = make_config(num_bs=4, num_users=1)
    with pytest.raises(ValueError):
        generate_channels(cfg, 0)


def test_generate_channels_deterministic():
    cfg = get_preset("small").to_config()
    a, b = generate_channels(cfg, 5), generate_channels(cfg, 5)
    np.testing.assert_array_equal(a.access, b.access)
    np.testing.assert_array_equal(a.backhaul, b.backhaul)
    assert a.access.shape == (6, 2) and a.backhaul.shape == (3,)
    assert not np.array_equal(generate_channels(cfg, 6).access, a.access)


def test_small_scale_fading_has_unit_power():
    matrix = tuple(tuple([0.5] * 10) for _ in range(10))
    cfg = NetworkConfig.model_validate({
        **get_preset("small").to_config().model_dump(),
        "num_bs": 10, "num_wireline": 0, "num_users": 10,
        "wireline_capacity": (), "onu_power_active": (), "onu_power_sleep": (),
        "drain_efficiency": (0.25,) * 10, "bs_power_active": (1.0,) * 10, "bs_power_sleep": (0.0,) * 10,
        "initial_bs_power": (1.0,) * 10, "sinr_targets": (1.0,) * 10, "large_scale_matrix": matrix,
    })
    samples = np.concatenate([np.abs(generate_channels(cfg, s).access / 0.5).ravel() ** 2 for s in range(1000)])
    assert samples.size == 100_000
    assert 0.98 <= samples.mean() <= 1.02


# ---------------------------------------------------------------------------
# 结果读写
# ---------------------------------------------------------------------------

def test_write_results_empty_and_single(tmp_path):
    path = tmp_path / "empty.csv"
    write_results([], str(path))
    header = "target_sinr_db,realization,algorithm,network_power_w,total_tx_power_w,active_bs,feasible,iterations,wall_ms"
    assert path.read_text(encoding="utf-8").splitlines() == [header]

    path = tmp_path / "one.csv"
    write_results([_row()], str(path))
    assert len(path.read_text(encoding="utf-8").splitlines()) == 2


def test_results_read_back(tmp_path):
    rows = [_row(network_power_w=1 / 3), _row(realization=1, feasible=False, network_power_w=math.nan,
                                                total_tx_power_w=math.nan, active_bs=0)]
    path = tmp_path / "results.csv"
    write_results(rows, str(path))
    back = read_results(str(path))
    assert back[0].network_power_w == rows[0].network_power_w
    assert back[0].wall_ms == rows[0].wall_ms
    _same_rows(rows, back)


def test_write_results_reports_path(tmp_path):
    target = tmp_path / "missing" / "results.csv"
    with pytest.raises(OSError, match="missing"):
        write_results([_row()], str(target))


def test_tab_separated_tables_read_back(tmp_path):
    rows = [_row(network_power_w=1 / 3), _row(realization=1, algorithm="sp", feasible=False,
                                                network_power_w=math.nan, total_tx_power_w=math.nan)]
    path = tmp_path / "results.tsv"
    write_results(rows, str(path), fmt="tsv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].split("\t")[:3] == ["target_sinr_db", "realization", "algorithm"]
    assert "," not in lines[0]
    _same_rows(rows, read_results(str(path), fmt="tsv"))

    means = compute_means(rows)
    write_means(means, str(tmp_path / "means.tsv"), fmt="tsv")
    assert len(read_means(str(tmp_path / "means.tsv"), fmt="tsv")) == len(means)


def test_unknown_table_format(tmp_path):
    with pytest.raises(ValueError, match="xlsx"):
        write_results([_row()], str(tmp_path / "results.xlsx"), fmt="xlsx")
    assert not (tmp_path / "results.xlsx").exists()


def test_compute_means_counts_infeasible():
    rows = [
        _row(network_power_w=10.0),
        _row(realization=1, network_power_w=14.0),
        _row(realization=2, feasible=False, network_power_w=math.nan, total_tx_power_w=math.nan),
        _row(algorithm="sp", feasible=False, network_power_w=math.nan, total_tx_power_w=math.nan),
    ]
    means = {m.algorithm: m for m in compute_means(rows)}
    assert means["cb"].network_power_w == pytest.approx(12.0)
    assert (means["cb"].feasible_count, means["cb"].infeasible_count) == (2, 1)
    assert math.isnan(means["sp"].network_power_w)


def test_plot_series():
    means = [
        MeanRow(target_sinr_db=0.0, algorithm="cb", network_power_w=20.0, total_tx_power_w=2.0, active_bs=6,
                iterations=1, feasible_count=1, infeasible_count=0),
        MeanRow(target_sinr_db=0.0, algorithm="igsbpo", network_power_w=9.0, total_tx_power_w=1.0, active_bs=2,
                iterations=3, feasible_count=1, infeasible_count=0),
        MeanRow(target_sinr_db=2.0, algorithm="cb", network_power_w=21.0, total_tx_power_w=2.0, active_bs=6,
                iterations=1, feasible_count=1, infeasible_count=0),
    ]
    header, rows = plot_series(means)
    assert header == ["target_sinr_db", "cb", "igsbpo"]
    assert rows[0] == [0.0, 20.0, 9.0]
    assert rows[1][0] == 2.0 and math.isnan(rows[1][2])
    with pytest.raises(ValueError):
        plot_series(means, metric="wall_ms")

    text = write_plot_series(header, rows)
    assert text.splitlines()[0] == "target_sinr_db,cb,igsbpo"
    assert text.splitlines()[1] == "0.0,20.0,9.0"
    assert len(text.splitlines()) == 3


# ---------------------------------------------------------------------------
# 实验调度
# ---------------------------------------------------------------------------

def test_workers_default_to_cpu_count(monkeypatch):
    monkeypatch.delenv("CRAN_WORKERS", raising=False)
    assert HarnessSettings(_env_file=None).workers == (os.cpu_count() or 1)
    monkeypatch.setenv("CRAN_WORKERS", "3")
    assert HarnessSettings(_env_file=None).workers == 3


def test_spec_validation():
    with pytest.raises(ValueError):
        ExperimentSpec(algorithms=["magic"])
    with pytest.raises(ValueError):
        ExperimentSpec(targets_db=[])
    with pytest.raises(ValueError):
        ExperimentSpec(baseline_mode="twice")
    assert ExperimentSpec(algorithms=["cb", "cb", "sp"]).algorithms == ["cb", "sp"]


def test_minimal_experiment():
    spec = ExperimentSpec(preset="small", targets_db=[0.0], realizations=1, algorithms=["cb"], workers=1)
    result = run_experiment(spec)
    assert len(result.rows) == 1 and len(result.means) == 1
    assert result.rows[0].algorithm == "cb"
    assert result.meta["num_wireline"] == 3
    assert result.meta["unused_constants"] == {"delta": 0.05}
    assert result.meta["backhaul_noise_std"] == pytest.approx(0.01)


def test_experiment_is_reproducible():
    spec = ExperimentSpec(preset="small", targets_db=[0.0, 4.0], realizations=2, algorithms=["igsbpo", "cb"],
                          seed=3, workers=1)
    first, second = run_experiment(spec), run_experiment(spec)
    _same_rows(first.rows, second.rows)
    assert [(r.target_sinr_db, r.realization, r.algorithm) for r in first.rows] == sorted(
        (r.target_sinr_db, r.realization, r.algorithm) for r in first.rows
    )


def test_parallel_matches_serial():
    base = dict(preset="small", targets_db=[2.0], realizations=3, algorithms=["cb", "sp"], seed=9)
    serial = run_experiment(ExperimentSpec(**base, workers=1))
    parallel = run_experiment(ExperimentSpec(**base, workers=2))
    _same_rows(serial.rows, parallel.rows)


def test_iterated_baseline_label():
    spec = ExperimentSpec(preset="small", targets_db=[0.0], realizations=1, algorithms=["cb"],
                          baseline_mode="iterated", workers=1)
    assert [r.algorithm for r in run_experiment(spec).rows] == ["cb+bh"]


def test_crashing_algorithm_only_aborts_its_cell(monkeypatch):
    import harness.services as services

    def explode(*args, **kwargs):
        raise ZeroDivisionError("boom")

    monkeypatch.setattr(services, "coordinated_beamforming", explode)
    cfg = get_preset("small").to_config()
    ch = generate_channels(cfg, 0)
    row, dump = run_cell("cb", cfg, ch, 0.0, 0)
    assert not row.feasible and dump is None
    assert math.isnan(row.network_power_w)


def test_write_and_validate_experiment(tmp_path, wired_preset):
    spec = ExperimentSpec(preset="wired", targets_db=[0.0], realizations=2, algorithms=["igsbpo", "cb", "gs"],
                          workers=1, dump_solutions=True)
    result = run_experiment(spec)
    assert all(row.feasible for row in result.rows)
    assert len(result.dumps) == spec.realizations * len(spec.algorithms)
    paths = write_experiment(result, str(tmp_path))
    _same_rows(result.rows, read_results(paths["results"]))
    assert len(read_means(paths["means"])) == len(result.means)
    with open(paths["meta"], encoding="utf-8") as f:
        meta = json.load(f)
    assert meta["network"]["num_bs"] == 3
    assert validate_dumps(str(tmp_path)) == []


# ---------------------------------------------------------------------------
# HTTP 与命令行
# ---------------------------------------------------------------------------

def test_app_routes():
    paths = {route.path for route in main.app.routes}
    assert {"/api/presets", "/api/experiments", "/api/igsbpo"} <= paths


def test_presets_endpoint():
    summaries = asyncio.run(presets_endpoint())
    names = {s.name for s in summaries}
    assert {"hybrid12", "small"} <= names
    assert names == set(NETWORK_PRESETS)


def test_experiments_endpoint():
    response = asyncio.run(experiments_endpoint(ExperimentRequest(preset="small", algorithms=["cb"])))
    assert len(response.rows) == 1
    with pytest.raises(HTTPException) as info:
        asyncio.run(experiments_endpoint(ExperimentRequest(preset="nope")))
    assert info.value.status_code == 404
    with pytest.raises(HTTPException) as info:
        asyncio.run(experiments_endpoint(ExperimentRequest(preset="small", algorithms=["magic"])))
    assert info.value.status_code == 400


def test_igsbpo_endpoint(wired_preset):
    response = asyncio.run(igsbpo_endpoint(IgsbpoRequest(preset="wired", target_db=0.0, seed=1)))
    assert response.iterations == len(response.trace) >= 1
    assert response.feasible
    assert response.network_power is not None and response.network_power > 0
    assert response.active_set
    with pytest.raises(HTTPException) as info:
        asyncio.run(igsbpo_endpoint(IgsbpoRequest(preset="nope")))
    assert info.value.status_code == 404


def _load_cli():
    path = os.path.join(os.path.dirname(__file__), "scripts", "simulate.py")
    spec = importlib.util.spec_from_file_location("simulate_cli", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_cli_run_plotdata_validate(tmp_path, capsys, wired_preset):
    cli = _load_cli()
    out = tmp_path / "out"
    code = cli.main(["run", "--preset", "wired", "--targets-db", "0,2", "--realizations", "1", "--algos", "cb,sp",
                     "--seed", "4", "--out", str(out), "--workers", "1", "--dump-solutions"])
    assert code == 0
    assert (out / "results.csv").exists() and (out / "results.meta.json").exists()

    assert cli.main(["plotdata", str(out / "results.means.csv")]) == 0
    printed = capsys.readouterr().out
    assert "target_sinr_db,cb,sp" in printed

    assert (out / "results.solutions.jsonl").exists()
    assert cli.main(["validate", str(out)]) == 0


def test_cli_spec_file_with_overrides(tmp_path):
    cli = _load_cli()
    spec_path = tmp_path / "spec.json"
    spec_path.write_text(json.dumps({"preset": "small", "realizations": 5, "algorithms": ["cb"]}), encoding="utf-8")
    args = cli.parse_args(["run", "--spec", str(spec_path), "--realizations", "2", "--out", str(tmp_path)])
    spec = cli.build_spec(args)
    assert spec.preset == "small"
    assert spec.realizations == 2
    assert spec.algorithms == ["cb"]


# ---------------------------------------------------------------------------
# 长时间的 Monte Carlo 检查
# ---------------------------------------------------------------------------

@pytest.mark.slow
def test_full_sweep_ordering():
    spec = ExperimentSpec(preset="hybrid12", targets_db=[0.0, 2.0, 4.0, 6.0, 8.0, 10.0], realizations=70,
                          algorithms=["igsbpo", "sp", "cb", "gs"], seed=42)
    result = run_experiment(spec)
    means = {(m.target_sinr_db, m.algorithm): m for m in result.means}
    power = {(r.target_sinr_db, r.realization, r.algorithm): r.network_power_w for r in result.rows if r.feasible}
    rng = np.random.default_rng(0)
    for target in spec.targets_db:
        for algorithm in spec.algorithms:
            cell = means[(target, algorithm)]
            assert cell.feasible_count + cell.infeasible_count == spec.realizations
            assert cell.feasible_count > 0
        assert means[(target, "igsbpo")].network_power_w < means[(target, "sp")].network_power_w
        assert means[(target, "sp")].network_power_w < means[(target, "cb")].network_power_w
        if target >= 4.0:
            assert max(means[(target, "gs")].total_tx_power_w, means[(target, "igsbpo")].total_tx_power_w) < min(
                means[(target, "sp")].total_tx_power_w, means[(target, "cb")].total_tx_power_w
            )
        # 成对 bootstrap：CB 与 I-GSBPO 都可行的实现上，功耗差的 2.5% 分位数仍为正
        diffs = np.array([
            power[(target, r, "cb")] - power[(target, r, "igsbpo")]
            for r in range(spec.realizations)
            if (target, r, "cb") in power and (target, r, "igsbpo") in power
        ])
        assert diffs.size > 0
        resampled = rng.choice(diffs, size=(2000, diffs.size), replace=True).mean(axis=1)
        assert np.percentile(resampled, 2.5) > 0


@pytest.mark.slow
def test_oracle_proximity():
    from harness import oracle_comparison

    report = oracle_comparison("small", target_db=10.0, realizations=20, seed=0)
    assert report.dominance_violations["igsbpo"] == 0
    assert report.mean_gap["igsbpo"] <= 0.10

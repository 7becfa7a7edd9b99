"""
命令行入口：Monte Carlo 仿真与结果处理。

子命令：
  run       按实验描述（JSON 文件 + 命令行覆盖）运行仿真并写出结果
  oracle    小规模实例上与穷举最优对比
  plotdata  把均值表整理成每个算法一列的曲线数据
  validate  复查 results.solutions.jsonl 中的解，有违例时退出码为 1

示例：
  python scripts/simulate.py run --targets-db 0,2,4,6,8,10 --realizations 70 --algos igsbpo,sp,cb,gs --seed 42 --out results/
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

PROJECT_ROOT = Path(__file__).resolve().parent.parent
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

from harness import (  # noqa: E402
    ExperimentSpec,
    get_settings,
    oracle_comparison,
    plot_series,
    read_means,
    run_experiment,
    validate_dumps,
    write_experiment,
    write_plot_series,
)

logger = logging.getLogger("cran_sim.simulate")


def _float_list(text: str) -> List[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _name_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="混合有线/无线回传 CRAN 网络功耗仿真")
    parser.add_argument("--verbose", action="store_true", help="输出 DEBUG 日志")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="运行 Monte Carlo 实验")
    run_p.add_argument("--spec", help="实验描述 JSON 文件，命令行参数覆盖其中字段")
    run_p.add_argument("--preset", help="网络预设名，默认 hybrid12")
    run_p.add_argument("--targets-db", type=_float_list, help="SINR 目标列表（dB），逗号分隔")
    run_p.add_argument("--realizations", type=int, help="每个目标的信道实现数")
    run_p.add_argument("--algos", type=_name_list, help="算法列表：igsbpo,sp,cb,gs,oracle")
    run_p.add_argument("--seed", type=int, help="基础随机种子")
    run_p.add_argument("--out", help="输出目录，默认 CRAN_RESULTS_DIR")
    run_p.add_argument("--workers", type=int, help="并行进程数，默认 CRAN_WORKERS")
    run_p.add_argument("--baseline-mode", choices=("single", "iterated"), help="基线是否嵌入两阶段迭代")
    run_p.add_argument("--dump-solutions", action="store_true", help="写出解的转储供 validate 使用")

    oracle_p = sub.add_parser("oracle", help="与穷举最优对比")
    oracle_p.add_argument("--preset", default="small")
    oracle_p.add_argument("--target-db", type=float, default=10.0)
    oracle_p.add_argument("--realizations", type=int, default=20)
    oracle_p.add_argument("--seed", type=int, default=0)

    plot_p = sub.add_parser("plotdata", help="整理均值表为曲线数据")
    plot_p.add_argument("means_csv")
    plot_p.add_argument("--metric", default="network_power_w",
                        choices=("network_power_w", "total_tx_power_w", "active_bs", "iterations"))
    plot_p.add_argument("--output", help="输出文件，缺省打印到标准输出")

    validate_p = sub.add_parser("validate", help="复查转储的解")
    validate_p.add_argument("results_dir")
    return parser.parse_args(argv)


def build_spec(args: argparse.Namespace) -> ExperimentSpec:
    data = {}
    if args.spec:
        with open(args.spec, "r", encoding="utf-8") as f:
            data = json.load(f)
    overrides = {
        "preset": args.preset,
        "targets_db": args.targets_db,
        "realizations": args.realizations,
        "algorithms": args.algos,
        "seed": args.seed,
        "output_dir": args.out,
        "workers": args.workers,
        "baseline_mode": args.baseline_mode,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.dump_solutions:
        data["dump_solutions"] = True
    data.setdefault("output_dir", get_settings().results_dir)
    return ExperimentSpec.model_validate(data)


def _cmd_run(args: argparse.Namespace) -> int:
    spec = build_spec(args)
    result = run_experiment(spec)
    paths = write_experiment(result, spec.output_dir)
    for mean in result.means:
        print(
            f"{mean.target_sinr_db:6.1f} dB  {mean.algorithm:<10} "
            f"network {mean.network_power_w:10.4f} W  tx {mean.total_tx_power_w:8.4f} W  "
            f"feasible {mean.feasible_count}/{mean.feasible_count + mean.infeasible_count}"
        )
    print(f"结果已写入 {paths['results']}")
    return 0


def _cmd_oracle(args: argparse.Namespace) -> int:
    report = oracle_comparison(args.preset, args.target_db, args.realizations, args.seed)
    print(f"{report.feasible_instances}/{report.instances} instances feasible at {report.target_sinr_db} dB")
    for name, gap in report.mean_gap.items():
        print(f"  {name:<8} mean gap {gap:8.4%}  dominance violations {report.dominance_violations[name]}")
    return 1 if any(report.dominance_violations.values()) else 0


def _cmd_plotdata(args: argparse.Namespace) -> int:
    header, rows = plot_series(read_means(args.means_csv), args.metric)
    text = write_plot_series(header, rows, args.output)
    if not args.output:
        sys.stdout.write(text)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    failures = validate_dumps(args.results_dir)
    for dump, violations in failures:
        for v in violations:
            print(f"{dump.algorithm} {dump.target_sinr_db} dB r={dump.realization}: "
                  f"{v.constraint}[{v.index}] {v.magnitude:.3g} {v.detail}")
    print("OK" if not failures else f"{len(failures)} solutions with violations")
    return 1 if failures else 0


COMMANDS = {
    "run": _cmd_run,
    "oracle": _cmd_oracle,
    "plotdata": _cmd_plotdata,
    "validate": _cmd_validate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = parse_args(argv)
    level = "DEBUG" if args.verbose else get_settings().log_level
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    return COMMANDS[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())

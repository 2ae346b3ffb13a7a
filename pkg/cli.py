#!/usr/bin/env python3
"""
壓縮分類工具組 - 命令列介面

子命令：
    generate  產生高斯量測矩陣或假設訊號檔
    tighten   緊化量測矩陣並輸出前後的框架認證
    certify   認證量測矩陣是否為（等範數）緊框架
    analyze   計算分離比與理論錯誤機率
    simulate  蒙地卡羅掃描，輸出 CSV
    check     以隨機實例驗證緊化不會降低分離比

結束碼：0 成功、2 解析錯誤、3 數值前提不成立、4 模擬中止、5 性質違反
"""
import argparse
import csv
import sys
from typing import Dict, List, Optional

from pydantic import ValidationError

import config
from analysis import error_probability_2ary, q_function, theorem2_gap, union_bound_mary
from classifier import ClassifierKind
from errors import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_PARSE,
    EXIT_SWEEP,
    CompClassError,
    ConfigError,
    PropertyViolation,
)
from frames import FrameCertificate, certify, generate_gaussian, read_matrix, tighten, write_matrix
from log import log
from montecarlo import ExperimentConfig, FrameMode, run_sweep
from signals import derive_seed, generate_hypotheses, read_hypotheses, snr_to_sigma, write_hypotheses

LIST_KEYS = {"n_values", "snr_db_values", "frame_modes"}
CHECK_SHAPES = [(20, 100), (40, 100), (80, 100)]
CHECK_SPARSITY = [1, 5, 10]


def parse_config_text(text: str) -> Dict[str, object]:
    """key=value 設定檔；# 開頭為註解，清單以逗號分隔"""
    values: Dict[str, object] = {}
    fields = set(ExperimentConfig.model_fields)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in fields:
            raise ConfigError(f"config line {lineno}: unknown key {key!r}")
        values[key] = [v.strip() for v in value.split(',') if v.strip()] if key in LIST_KEYS else value
    return values


def read_config_file(filepath: str) -> Dict[str, object]:
    with open(filepath, 'r', encoding='utf-8') as f:
        return parse_config_text(f.read())


def _print_certificate(label: str, cert: FrameCertificate) -> None:
    print(f"[{label}]")
    print(cert.model_dump_json(indent=2))


# ============ 子命令 ============

def cmd_generate(args) -> int:
    if args.what == "matrix":
        phi = generate_gaussian(args.rows, args.cols, args.seed)
        write_matrix(args.out, phi)
        log(f"✓ 已寫入 {args.rows}x{args.cols} 高斯矩陣: {args.out}", "SUCCESS")
    else:
        hypotheses = generate_hypotheses(args.cols, args.k, args.m, args.norm, args.seed)
        write_hypotheses(args.out, hypotheses)
        log(f"✓ 已寫入 {args.m} 個 {args.k}-稀疏訊號: {args.out}", "SUCCESS")
    return EXIT_OK


def cmd_tighten(args) -> int:
    phi = read_matrix(args.matrix_file)
    phi_hat = tighten(phi, args.c, preserve_energy=args.energy_preserving)
    write_matrix(args.out, phi_hat)
    _print_certificate("input", certify(phi))
    _print_certificate("output", certify(phi_hat))
    log(f"✓ 緊化矩陣已寫入 {args.out}", "SUCCESS")
    return EXIT_OK


def cmd_certify(args) -> int:
    _print_certificate("certificate", certify(read_matrix(args.matrix_file)))
    return EXIT_OK


def cmd_analyze(args) -> int:
    phi = read_matrix(args.matrix_file)
    hypotheses = read_hypotheses(args.signals_file)
    sigma = args.sigma if args.sigma is not None else snr_to_sigma(args.snr_db, hypotheses.common_norm)
    print(f"sigma={sigma:.10g}")

    pairs = []
    if hypotheses.m == 2:
        result = error_probability_2ary(phi, hypotheses[0], hypotheses[1], sigma)
        ratio = 2.0 * sigma * result.argument
        print(f"separation_ratio={ratio:.10g}")
        print(f"q_argument={result.argument:.10g}")
        print(f"probability={result.probability:.10g}")
        pairs.append((0, 1, ratio, result.argument))
    else:
        targets = [args.true_index] if args.true_index is not None else range(hypotheses.m)
        for t in targets:
            bound = union_bound_mary(phi, hypotheses, sigma, t)
            print(f"true_index={t} union_bound={bound.probability:.10g} raw_bound={bound.raw_bound:.10g} "
                  f"min_q_argument={bound.argument:.10g}")
            others = [i for i in range(hypotheses.m) if i != t]
            for i, argument in zip(others, bound.arguments):
                pairs.append((t, i, 2.0 * sigma * argument, argument))

    if args.csv:
        with open(args.csv, 'w', encoding='utf-8', newline='') as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["true_index", "other_index", "separation_ratio", "q_argument", "q_term"])
            for t, i, ratio, argument in pairs:
                writer.writerow([t, i, f"{ratio:.10g}", f"{argument:.10g}", f"{q_function(argument):.10g}"])
        log(f"✓ CSV 已寫入 {args.csv}", "SUCCESS")
    return EXIT_OK


def _simulate_config(args) -> ExperimentConfig:
    values: Dict[str, object] = {}
    if args.config:
        values.update(read_config_file(args.config))
    flags = {
        "N": args.cols,
        "k": args.k,
        "m": args.m,
        "n_values": args.rows,
        "snr_db_values": args.snr_db,
        "trials": args.trials,
        "seed": args.seed,
        "classifier_kind": args.classifier,
        "signal_norm": args.signal_norm,
        "tighten_constant": args.tighten_constant,
    }
    if args.frame_mode == "both":
        flags["frame_modes"] = [FrameMode.NON_TIGHT, FrameMode.TIGHTENED]
    elif args.frame_mode:
        flags["frame_modes"] = [args.frame_mode]
    if args.redraw_per_trial:
        flags["redraw_matrix_per_trial"] = True
    values.update({k: v for k, v in flags.items() if v is not None})
    if "seed" not in values:
        raise ConfigError("a seed is required (--seed or seed= in the config file); runs are never wall-clock seeded")
    try:
        return ExperimentConfig(**values)
    except ValidationError as e:
        raise ConfigError(f"invalid experiment config: {e}") from e


def cmd_simulate(args) -> int:
    cfg = _simulate_config(args)
    try:
        result = run_sweep(cfg, workers=args.workers)
    except CompClassError as e:
        log(f"模擬中止: {type(e).__name__}: {e}", "ERROR")
        return EXIT_SWEEP

    if args.out:
        with open(args.out, 'w', encoding='utf-8', newline='') as f:
            result.write_csv(f)
        log(f"✓ CSV 已寫入 {args.out} ({len(result.rows)} 列)", "SUCCESS")
        emit = print
    else:
        result.write_csv(sys.stdout)
        emit = log

    summary = result.ordering_summary()
    if summary.points:
        emit(f"summary: {summary.describe()}")
        for n, snr_db in summary.violations:
            emit(f"  tightened worse than non-tight at n={n} snr_db={snr_db:g}")
    return EXIT_OK


def cmd_check(args) -> int:
    violations = 0
    worst = None
    for i in range(args.instances):
        n, N = CHECK_SHAPES[i % len(CHECK_SHAPES)]
        k = CHECK_SPARSITY[i % len(CHECK_SPARSITY)]
        phi = generate_gaussian(n, N, derive_seed(args.seed, i, 0))
        if args.pre_tightened:
            phi = tighten(phi, 1.0)
        hypotheses = generate_hypotheses(N, k, 2, 1.0, derive_seed(args.seed, i, 1))
        gap = theorem2_gap(phi, hypotheses[0], hypotheses[1])
        ok = gap.satisfied()
        if args.pre_tightened:
            ok = ok and abs(gap.relative_gap) <= config.THEOREM2_SLACK
        if not ok:
            violations += 1
            log(f"違反: instance={i} n={n} k={k} before={gap.ratio_before:.17g} after={gap.ratio_after:.17g}", "ERROR")
        if worst is None or gap.relative_gap > worst:
            worst = gap.relative_gap

    print(f"instances={args.instances}")
    print(f"violations={violations}")
    print(f"worst_relative_gap={'n/a' if worst is None else format(worst, '.3e')}")
    if violations:
        raise PropertyViolation(f"{violations} of {args.instances} instances lost separation after tightening")
    return EXIT_OK


# ============ 參數解析 ============

def _int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


def _seed(text: str) -> int:
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    if value < 0:
        raise argparse.ArgumentTypeError(f"seed must be a non-negative integer, got {value}")
    return value


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e


class _Parser(argparse.ArgumentParser):
    """解析錯誤以 ConfigError 回報，讓 main 統一回傳結束碼 2"""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cli.py", description="Compressive classification toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", help="write a Gaussian matrix or a hypothesis-set file")
    what = p.add_subparsers(dest="what", required=True, parser_class=_Parser)
    g = what.add_parser("matrix")
    g.add_argument("--rows", type=int, required=True)
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--out", required=True)
    g = what.add_parser("hypotheses")
    g.add_argument("--cols", type=int, required=True)
    g.add_argument("-k", type=int, required=True)
    g.add_argument("-m", type=int, required=True)
    g.add_argument("--norm", type=float, default=1.0)
    g.add_argument("--seed", type=_seed, required=True)
    g.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_generate)

    p = sub.add_parser("tighten", help="row-orthogonalize a measurement matrix")
    p.add_argument("matrix_file")
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--energy-preserving", action="store_true", help="use c = (N/n) psi^2")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_tighten)

    p = sub.add_parser("certify", help="frame certificate of a measurement matrix")
    p.add_argument("matrix_file")
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser("analyze", help="theoretical error probability")
    p.add_argument("matrix_file")
    p.add_argument("signals_file")
    noise = p.add_mutually_exclusive_group(required=True)
    noise.add_argument("--sigma", type=float)
    noise.add_argument("--snr-db", type=float)
    p.add_argument("--true-index", type=int)
    p.add_argument("--csv")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("simulate", help="Monte-Carlo sweep, CSV output")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--cols", type=int, help="signal dimension N")
    p.add_argument("--rows", type=_int_list, help="comma-separated n values")
    p.add_argument("--snr-db", type=_float_list, help="comma-separated SNR values in dB")
    p.add_argument("-k", type=int)
    p.add_argument("-m", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=_seed)
    p.add_argument("--frame-mode", choices=["non_tight", "tightened", "both"])
    p.add_argument("--classifier", choices=[k.value for k in ClassifierKind])
    p.add_argument("--signal-norm", type=float)
    p.add_argument("--tighten-constant", type=float)
    p.add_argument("--redraw-per-trial", action="store_true")
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(handler=cmd_simulate)

    p = sub.add_parser("check", help="check that tightening never lowers the separation ratio")
    p.add_argument("--instances", type=int, default=1000)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--pre-tightened", action="store_true")
    p.set_defaults(handler=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except CompClassError as e:
        log(f"{type(e).__name__}: {e}", "ERROR")
        return e.exit_code
    except OSError as e:
        log(f"檔案讀寫失敗: {e}", "ERROR")
        return EXIT_PARSE
    except IndexError as e:
        log(f"索引錯誤: {e}", "ERROR")
        return EXIT_NUMERICAL


if __name__ == '__main__':
    sys.exit(main())

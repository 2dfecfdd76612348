# -*- coding: utf-8 -*-
"""
NSC 명령행 도구
- 데이터셋 생성 → 분류기 학습 → 평가/인증 → 팔시피케이션/적응 을 파일로 이어 실행
- 오류 시 stderr 에 {"error", "message", "command"} JSON 을 쓰고 종료 코드 1

사용 예:
    python main.py generate --model neuron --strategy balanced --n 20000 --seed 7
    python main.py train --data out/neuron_balanced_20000.csv --arch DNN-S
    python main.py eval --classifier out/neuron_DNN-S.json --data out/neuron_uniform_10000.csv
"""

import argparse
import json
import logging
import sys
from dataclasses import replace

import numpy as np
import pandas as pd

from classifiers import CLASSIFIER_NAMES, MODE_ENCODINGS, load_classifier, save_classifier, train_classifier
from constants import SAMPLING_STRATEGIES, adapt_learning_rate
from evaluation import (
    arch_sweep,
    benchmark,
    certify,
    evaluate,
    select_threshold,
    size_sweep,
    threshold_sweep,
)
from experiment import load_config, output_meta, output_path, write_frame_csv, write_json
from falsification import FalsificationEngine, adaptation_loop
from ha_core import HybridAutomaton, describe, in_invariant, in_unsafe, load_model
from plots import (
    plot_adaptation_trace,
    plot_arch_heatmap,
    plot_decision_map,
    plot_threshold_sweep,
    plot_trajectory,
)
from rng import derive_seed, make_rng
from sampling import (
    DatasetGenerator,
    Sample,
    SampleSet,
    concat_datasets,
    load_dataset,
    read_meta,
    save_dataset,
)
from simulation import (
    DETERMINISTIC,
    RANDOM_WALK,
    Label,
    ReversalError,
    reverse_roundtrip_check,
    simulate,
)

logger = logging.getLogger("nsc")


# ==============================================================================
# 공통
# ==============================================================================

def setup_logging(args):
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s [%(levelname)s] %(name)s: %(message)s", force=True)


def _config(args):
    """설정 파일 + 명령행 플래그 (+ NSC_SEED)"""
    overrides = {
        "model": args.model,
        "variant": args.variant,
        "seed": args.seed,
        "output_dir": args.output_dir,
        "jobs": args.jobs,
        "strategy": getattr(args, "strategy", None),
        "arch": getattr(args, "arch", None),
        "mode_encoding": getattr(args, "mode_encoding", None),
        "theta": getattr(args, "theta", None),
        "active_params": getattr(args, "active_params", None),
        "train": {"max_epochs": getattr(args, "max_epochs", None)},
        "ga": {"population": getattr(args, "population", None),
               "generations": getattr(args, "generations", None)},
        "sprt": {k: getattr(args, k, None) for k in ("theta_acc", "theta_fn", "theta_fp", "delta", "alpha", "beta")},
    }
    cfg = load_config(args.config, overrides)
    logger.debug("설정 해시 %s", cfg.config_hash())
    return cfg


def _model(args, cfg, hint=None) -> HybridAutomaton:
    """명령행 --model > 데이터/분류기에 기록된 모델 > 설정 파일 모델"""
    name = cfg.model if args.model is not None or hint is None else hint
    ha = load_model(name, cfg.variant)
    logger.info("모델 %s (%d 모드, 변수 %s)", ha.model_id, len(ha.modes), ", ".join(ha.variables))
    return ha


def _classifier_model_hint(path: str):
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f).get("meta", {}).get("model_id")
    except (OSError, json.JSONDecodeError, AttributeError):
        return None


def _name(args, default: str) -> str:
    return args.name or default


def _samples(ha: HybridAutomaton, samples, strategy: str) -> SampleSet:
    return SampleSet(ha.model_id, tuple(ha.variables), ha.parameter_names, list(samples), {"strategy": strategy})


# ==============================================================================
# 명령
# ==============================================================================

def cmd_generate(args) -> int:
    cfg = _config(args)
    ha = _model(args, cfg)
    n = args.n if args.n is not None else (cfg.test_n if args.split == "test" else cfg.train_n)
    gen = DatasetGenerator(ha, cfg.oracle, cfg.seed, cfg.jobs, active_params=cfg.active_params)
    kwargs = {"T_prime": args.t_prime} if cfg.strategy == "dynamics" else {}
    ds = gen.run(cfg.strategy, n, **kwargs)
    gen.stats.log_summary("데이터셋 생성")
    path = output_path(cfg, _name(args, f"{ha.model_id}_{cfg.strategy}_{n}.csv"))
    save_dataset(ds, path, meta=output_meta(cfg, "generate", oracle_stats=gen.stats.to_dict()))
    print(f"{path}: {ds.counts}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    hint = read_meta(args.data)["model_id"]
    ha = _model(args, cfg, hint)
    train = load_dataset(args.data, ha)
    train_cfg = replace(cfg.train, seed=derive_seed(cfg.seed, "train", cfg.train.seed))
    c, curve = train_classifier(cfg.arch, ha, train, train_cfg, cfg.mode_encoding, args.hidden)
    path = output_path(cfg, _name(args, f"{ha.model_id}_{cfg.arch}.json"))
    meta = output_meta(cfg, "train", model_id=ha.model_id, data=args.data, train_size=len(train),
                       epochs=len(curve), final_mse=curve[-1] if curve else None)
    save_classifier(c, path, meta)
    if curve:
        write_frame_csv(path[:-5] + "_curve.csv", pd.DataFrame({"epoch": range(1, len(curve) + 1), "mse": curve}),
                        meta)
    print(path)
    return 0


def _load_pair(args, cfg, data_path):
    hint = read_meta(data_path)["model_id"]
    ha = _model(args, cfg, hint)
    return ha, load_classifier(args.classifier, ha), load_dataset(data_path, ha)


def cmd_eval(args) -> int:
    cfg = _config(args)
    ha, c, test = _load_pair(args, cfg, args.data)
    report = evaluate(c, test, cfg.theta)
    path = output_path(cfg, _name(args, f"{ha.model_id}_eval.json"))
    write_json(path, {"model_id": ha.model_id, "classifier": args.classifier, "data": args.data,
                      "report": report.to_dict()}, output_meta(cfg, "eval"))
    print(json.dumps(report.formatted(), ensure_ascii=False))
    return 0


def cmd_certify(args) -> int:
    cfg = _config(args)
    ha, c, test = _load_pair(args, cfg, args.data)
    s = cfg.sprt
    results = certify(c, test, cfg.theta, s.theta_acc, s.theta_fn, s.theta_fp, s.delta, s.alpha, s.beta)
    path = output_path(cfg, _name(args, f"{ha.model_id}_certify.json"))
    write_json(path, {"model_id": ha.model_id, "classifier": args.classifier, "data": args.data,
                      "results": [r.to_dict() for r in results]}, output_meta(cfg, "certify"))
    for r in results:
        print(f"{r.label}: {r.decision} (m={r.m})")
    return 0


def cmd_falsify(args) -> int:
    cfg = _config(args)
    ha = _model(args, cfg, _classifier_model_hint(args.classifier))
    c = load_classifier(args.classifier, ha)
    ga = replace(cfg.ga, seed=derive_seed(cfg.seed, "falsify", cfg.ga.seed))
    engine = FalsificationEngine(ha, cfg.oracle, ga, c.feature.active_params)
    result = engine.run(c, cfg.theta)
    engine.stats.log_summary("팔시피케이션")
    meta = output_meta(cfg, "falsify")
    fn_path = output_path(cfg, _name(args, f"{ha.model_id}_fn.csv"))
    save_dataset(_samples(ha, [Sample(s, Label.POSITIVE, "falsification", 0) for s in result.fn_states],
                          "falsification"), fn_path, meta)
    write_json(output_path(cfg, f"{ha.model_id}_falsify.json"),
               {"model_id": ha.model_id, "classifier": args.classifier, "fn_found": len(result.fn_states),
                "fp_found": result.fp_found, "best_fitness": result.best_fitness,
                "evaluations": result.evaluations, "oracle_stats": result.stats.to_dict()}, meta)
    print(f"FN {len(result.fn_states)}개, FP {result.fp_found}개 → {fn_path}")
    return 0


def cmd_adapt(args) -> int:
    cfg = _config(args)
    ha = _model(args, cfg, _classifier_model_hint(args.classifier))
    c = load_classifier(args.classifier, ha)
    test = load_dataset(args.test, ha) if args.test else None
    train = load_dataset(args.train, ha) if args.train else None
    lr = args.lr if args.lr is not None else adapt_learning_rate(ha.model_id)
    ga = replace(cfg.ga, seed=derive_seed(cfg.seed, "adapt", cfg.ga.seed))
    kwargs = {k: v for k, v in (("max_iters", args.max_iters), ("adapt_epochs", args.adapt_epochs)) if v is not None}
    adapted, trace, found = adaptation_loop(c, ha, cfg.oracle, ga, lr, test=test, train=train, **kwargs)

    meta = output_meta(cfg, "adapt", model_id=ha.model_id, learning_rate=lr, converged=trace.converged,
                       iterations=trace.iterations)
    base = output_path(cfg, _name(args, f"{ha.model_id}_{c.arch}_adapted"))
    save_classifier(adapted, base + ".json", meta)
    frame = trace.to_frame()
    write_frame_csv(base + "_trace.csv", frame, meta)
    save_dataset(_samples(ha, found, "falsification"), base + "_fn.csv", meta)
    plot_adaptation_trace(frame, base + "_trace.svg", meta)
    if args.plot_axes:
        x_var, y_var = args.plot_axes
        fn_states = [s.state for s in found]
        plot_decision_map(c, ha, x_var, y_var, base + "_map_before.svg", meta, fn_states=fn_states)
        plot_decision_map(adapted, ha, x_var, y_var, base + "_map_after.svg", meta, fn_states=fn_states)
    status = "수렴" if trace.converged else "미수렴"
    print(f"{status}: {trace.iterations}회 반복, FN {len(found)}개 → {base}.json")
    return 0


def cmd_sweep_threshold(args) -> int:
    cfg = _config(args)
    ha, c, test = _load_pair(args, cfg, args.data)
    sweep = threshold_sweep(c, test)
    selected = select_threshold(sweep, args.max_fn_rate)
    meta = output_meta(cfg, "sweep-threshold", selected_theta=selected)
    base = output_path(cfg, _name(args, f"{ha.model_id}_threshold"))
    write_frame_csv(base + ".csv", sweep, meta)
    plot_threshold_sweep(sweep, base + ".svg", meta, selected)
    print(f"선택된 θ: {selected}")
    return 0


def _train_test(args, cfg):
    ha = _model(args, cfg, read_meta(args.train)["model_id"])
    return ha, load_dataset(args.train, ha), load_dataset(args.test, ha)


def cmd_sweep_arch(args) -> int:
    cfg = _config(args)
    ha, train, test = _train_test(args, cfg)
    arch = cfg.arch if cfg.arch in ("DNN-S", "DNN-R", "SNN") else "DNN-S"
    matrix = arch_sweep(ha, train, test, args.layers, args.neurons, cfg.train, arch)
    meta = output_meta(cfg, "sweep-arch")
    base = output_path(cfg, _name(args, f"{ha.model_id}_arch"))
    write_frame_csv(base + ".csv", matrix.reset_index(), meta)
    plot_arch_heatmap(matrix, base + ".svg", meta)
    print(matrix.to_string())
    return 0


def cmd_sweep_size(args) -> int:
    cfg = _config(args)
    ha, train, test = _train_test(args, cfg)
    frame = size_sweep(ha, train, test, args.sizes, cfg.arch, cfg.train, cfg.seed)
    path = output_path(cfg, _name(args, f"{ha.model_id}_size.csv"))
    write_frame_csv(path, frame, output_meta(cfg, "sweep-size"))
    print(frame.to_string(index=False))
    return 0


def cmd_benchmark(args) -> int:
    cfg = _config(args)
    ha, train, test = _train_test(args, cfg)
    frame = benchmark(ha, train, test, args.kinds, cfg.train)
    path = output_path(cfg, _name(args, f"{ha.model_id}_benchmark.csv"))
    write_frame_csv(path, frame, output_meta(cfg, "benchmark"))
    print(frame[["classifier"] + [c for c in frame.columns if c.endswith("_table")]].to_string(index=False))
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args)
    ha = _model(args, cfg)
    mode = args.mode or ha.mode_ids[0]
    s0 = ha.make_state(mode, args.x)
    T = args.T if args.T is not None else ha.time_bound
    policy = DETERMINISTIC if args.policy == "deterministic" else RANDOM_WALK
    traj = simulate(ha, s0, T, policy, cfg.oracle.integrator, derive_seed(cfg.seed, "simulate"),
                    stop_on_unsafe=not args.through_unsafe)
    frame = traj.to_frame(ha.variables)
    meta = output_meta(cfg, "simulate", model_id=ha.model_id)
    base = output_path(cfg, _name(args, f"{ha.model_id}_trajectory"))
    write_frame_csv(base + ".csv", frame, meta)
    plot_trajectory(frame, ha.variables, base + ".svg", meta, traj.jump_times)
    write_json(base + ".json", {"status": traj.status.value, "status_time": traj.status_time,
                                "jumps": [{"time": j.time, "source": j.source, "target": j.target}
                                          for j in traj.jumps],
                                "final_state": {"mode": traj.final_state.mode, "x": list(traj.final_state.x)}},
               meta)
    print(f"{traj.status.value} (t={traj.status_time:.6g}, 점프 {len(traj.jumps)}회)")
    return 0


def cmd_reverse_check(args) -> int:
    cfg = _config(args)
    ha = _model(args, cfg)
    rng = make_rng(cfg.seed, "reverse-check")
    deviations, failures = [], 0
    while len(deviations) + failures < args.n:
        mode = ha.mode_ids[int(rng.integers(len(ha.mode_ids)))]
        s = ha.make_state(mode, [rng.uniform(lo, hi) for lo, hi in ha.domain(mode)])
        if not in_invariant(ha, s) or in_unsafe(ha, s):
            continue
        try:
            deviations.append(reverse_roundtrip_check(ha, s, args.T, cfg.oracle.integrator))
        except ReversalError as e:
            failures += 1
            logger.debug("역방향 재생 실패 %s: %s", s, e)
    if failures:
        logger.warning("역방향 재생 실패 %d/%d건", failures, args.n)
    dev = np.asarray(deviations)
    summary = {"model_id": ha.model_id, "n": args.n, "failures": failures,
               "max_deviation": float(dev.max()) if dev.size else None,
               "mean_deviation": float(dev.mean()) if dev.size else None,
               "deviations": dev.tolist()}
    path = output_path(cfg, _name(args, f"{ha.model_id}_reverse_check.json"))
    write_json(path, summary, output_meta(cfg, "reverse-check", model=describe(ha)))
    print(f"최대 편차 {summary['max_deviation']}, 실패 {failures}건")
    return 0


def cmd_concat(args) -> int:
    cfg = _config(args)
    ds = concat_datasets([load_dataset(p) for p in args.inputs])
    path = output_path(cfg, _name(args, f"{ds.model_id}_mixed_{len(ds)}.csv"))
    save_dataset(ds, path, meta=output_meta(cfg, "concat", inputs=list(args.inputs)))
    print(f"{path}: {ds.counts}")
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "train": cmd_train,
    "eval": cmd_eval,
    "certify": cmd_certify,
    "falsify": cmd_falsify,
    "adapt": cmd_adapt,
    "sweep-threshold": cmd_sweep_threshold,
    "sweep-arch": cmd_sweep_arch,
    "sweep-size": cmd_sweep_size,
    "benchmark": cmd_benchmark,
    "simulate": cmd_simulate,
    "reverse-check": cmd_reverse_check,
    "concat": cmd_concat,
}


# ==============================================================================
# 파서
# ==============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="실험 설정 JSON")
    common.add_argument("--model", help="번들 모델 이름 또는 모델 JSON 경로")
    common.add_argument("--variant", help="모델 변형 이름")
    common.add_argument("--seed", type=int, help="마스터 시드 (NSC_SEED 가 우선)")
    common.add_argument("--output-dir", dest="output_dir", help="출력 디렉토리")
    common.add_argument("--jobs", type=int, help="작업자 프로세스 수")
    common.add_argument("--name", help="출력 파일 이름")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="nsc", description="하이브리드 오토마톤 도달성 신경망 분류 도구")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_text):
        return sub.add_parser(name, parents=[common], help=help_text)

    p = add("generate", "라벨링된 데이터셋 생성")
    p.add_argument("--strategy", choices=SAMPLING_STRATEGIES)
    p.add_argument("--n", type=int)
    p.add_argument("--split", choices=["train", "test"], default="train", help="--n 이 없을 때 설정의 train_n / test_n 선택")
    p.add_argument("--t-prime", dest="t_prime", type=float, help="dynamics 전략의 시뮬레이션 시간")
    p.add_argument("--active-params", dest="active_params", nargs="*")

    p = add("train", "분류기 학습")
    p.add_argument("--data", required=True)
    p.add_argument("--arch", choices=CLASSIFIER_NAMES)
    p.add_argument("--mode-encoding", dest="mode_encoding", choices=MODE_ENCODINGS)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--hidden", type=int, nargs="+", help="은닉층 크기 목록")

    for name, help_text in (("eval", "테스트 집합 평가"), ("certify", "SPRT 통계적 인증"),
                            ("sweep-threshold", "임계값 스윕")):
        p = add(name, help_text)
        p.add_argument("--classifier", required=True)
        p.add_argument("--data", required=True)
        p.add_argument("--theta", type=float)
        if name == "certify":
            for flag in ("theta-acc", "theta-fn", "theta-fp", "delta", "alpha", "beta"):
                p.add_argument(f"--{flag}", dest=flag.replace("-", "_"), type=float)
        if name == "sweep-threshold":
            p.add_argument("--max-fn-rate", dest="max_fn_rate", type=float, default=0.0)

    for name, help_text in (("falsify", "GA 로 FN 탐색"), ("adapt", "팔시피케이션 기반 적응")):
        p = add(name, help_text)
        p.add_argument("--classifier", required=True)
        p.add_argument("--theta", type=float)
        p.add_argument("--population", type=int)
        p.add_argument("--generations", type=int)
        if name == "adapt":
            p.add_argument("--test")
            p.add_argument("--train")
            p.add_argument("--lr", type=float)
            p.add_argument("--max-iters", dest="max_iters", type=int)
            p.add_argument("--adapt-epochs", dest="adapt_epochs", type=int)
            p.add_argument("--plot-axes", dest="plot_axes", nargs=2, metavar=("X", "Y"))

    for name, help_text in (("sweep-arch", "은닉층 × 뉴런 수 스윕"), ("sweep-size", "학습 크기 스윕"),
                            ("benchmark", "분류기 비교")):
        p = add(name, help_text)
        p.add_argument("--train", required=True)
        p.add_argument("--test", required=True)
        if name == "sweep-arch":
            p.add_argument("--layers", type=int, nargs="+", default=[1, 2, 3, 4, 5])
            p.add_argument("--neurons", type=int, nargs="+", default=[5, 10, 15, 20])
            p.add_argument("--arch", choices=["DNN-S", "DNN-R", "SNN"])
        elif name == "sweep-size":
            p.add_argument("--sizes", type=int, nargs="+", required=True)
            p.add_argument("--arch", choices=CLASSIFIER_NAMES)
        else:
            p.add_argument("--kinds", nargs="+", choices=CLASSIFIER_NAMES, default=list(CLASSIFIER_NAMES))

    p = add("simulate", "궤적 시뮬레이션")
    p.add_argument("--mode")
    p.add_argument("--x", type=float, nargs="+", required=True, help="초기 연속 상태")
    p.add_argument("--T", type=float)
    p.add_argument("--policy", choices=["deterministic", "random_walk"], default="deterministic")
    p.add_argument("--through-unsafe", dest="through_unsafe", action="store_true",
                   help="위험영역에 들어가도 계속 시뮬레이션")

    p = add("reverse-check", "역방향 오토마톤 왕복 검사")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--T", type=float)

    p = add("concat", "데이터셋 이어 붙이기")
    p.add_argument("--inputs", nargs="+", required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args)
    try:
        return COMMANDS[args.command](args)
    except Exception as e:
        logger.debug("오류 상세", exc_info=True)
        error = {"error": type(e).__name__, "message": str(e), "command": args.command}
        print(json.dumps(error, ensure_ascii=False), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

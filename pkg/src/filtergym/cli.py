"""Command-line surface: synth | oracle | run | report.

One JSON configuration file (flat sections named after the owning modules)
drives `run`; command-line flags override file values. Exit codes: 0 success,
1 usage or configuration error, 2 runtime failure. Machine-parseable
failures are printed to stderr as lines starting with `error:`.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys

import numpy as np

from .agents import make_agent
from .detector import (
    DetectorError,
    OracleTable,
    RemoteDetector,
    SurrogateConfig,
    SurrogateDetector,
    build_oracle_table,
)
from .env import (
    MissingOracleEntryError,
    RewardConfig,
    StreamConfig,
    records_from_csv,
    records_to_csv,
    run_round,
)
from .filters import DEFAULT_PARAMS, FilterParams, NoiseKind, apply_noise
from .metrics import accuracy_flags, export_comparison, export_series, export_summary
from .raster import PPMError, Raster, load_ppm, save_ppm
from .sensing import SenseConfig
from .texgen import TexSpec, generate, write_set

USAGE_EXIT = 1
RUNTIME_EXIT = 2


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        _fail(message)
        sys.exit(USAGE_EXIT)


def _fail(message: str) -> None:
    print(f"error: {message}", file=sys.stderr)


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError("config root must be a JSON object")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    value = cfg.get(name, {})
    if not isinstance(value, dict):
        raise ValueError(f"config section {name!r} must be an object")
    return dict(value)


def _build(cls, section: dict, label: str, errors: list[str]):
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        errors.append(f"{label}: {exc}")
        return None


def _parse_noise_mix(raw) -> dict[NoiseKind, float]:
    by_name = {k.value: k for k in NoiseKind}
    mix = {}
    for key, weight in raw.items():
        if key not in by_name:
            raise ValueError(f"unknown noise kind {key!r} (expected one of {sorted(by_name)})")
        mix[by_name[key]] = float(weight)
    return mix


def _load_originals(images_dir: str) -> list[tuple[str, Raster]]:
    if not os.path.isdir(images_dir):
        raise FileNotFoundError(f"images directory not found: {images_dir}")
    paths = sorted(glob.glob(os.path.join(images_dir, "*.ppm")))
    if not paths:
        raise FileNotFoundError(f"no .ppm files in {images_dir}")
    out = []
    for path in paths:
        try:
            out.append((os.path.basename(path), load_ppm(path)))
        except PPMError as exc:
            raise PPMError(f"{path}: {exc}") from exc
    return out


def _make_detector(kind: str, url: str | None, surrogate_cfg: SurrogateConfig, references):
    if kind == "surrogate":
        return SurrogateDetector(dict(references), surrogate_cfg)
    if kind == "remote":
        if not url:
            raise ValueError("remote detector requires a url")
        return RemoteDetector(url)
    raise ValueError(f"unknown detector kind {kind!r} (expected surrogate or remote)")


def cmd_synth(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (OSError, ValueError) as exc:
        _fail(f"config: {exc}")
        return USAGE_EXIT

    kinds = []
    for token in args.kinds.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            kinds.append(NoiseKind(token))
        except ValueError:
            _fail(f"unknown noise kind {token!r}")
            return USAGE_EXIT
    if not kinds:
        _fail("no noise kinds selected")
        return USAGE_EXIT

    errors: list[str] = []
    params = _build(FilterParams, _section(cfg, "filters"), "filters", errors) or DEFAULT_PARAMS
    if errors:
        for e in errors:
            _fail(e)
        return USAGE_EXIT

    try:
        if args.images:
            originals = _load_originals(args.images)
        else:
            section = _section(cfg, "texgen")
            section.update({"count": args.count, "seed": args.seed})
            spec = TexSpec(**section)
            originals = generate(spec)
        os.makedirs(args.out, exist_ok=True)
        written = 0
        for name, img in originals:
            if not args.images:
                save_ppm(img, os.path.join(args.out, name))
            stem = name[:-4] if name.endswith(".ppm") else name
            for kind in kinds:
                save_ppm(apply_noise(img, kind, params), os.path.join(args.out, f"{stem}_{kind.value}.ppm"))
                written += 1
    except (OSError, PPMError, ValueError) as exc:
        _fail(str(exc))
        return RUNTIME_EXIT
    print(f"wrote {written} noisy images for {len(originals)} originals into {args.out}")
    return 0


def cmd_oracle(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (OSError, ValueError) as exc:
        _fail(f"config: {exc}")
        return USAGE_EXIT

    errors: list[str] = []
    surrogate_cfg = _build(SurrogateConfig, _section(cfg, "surrogate"), "surrogate", errors)
    if errors:
        for e in errors:
            _fail(e)
        return USAGE_EXIT

    try:
        originals = _load_originals(args.images)
    except (OSError, PPMError) as exc:
        _fail(str(exc))
        return RUNTIME_EXIT
    try:
        detector = _make_detector(args.detector, args.url, surrogate_cfg, originals)
    except ValueError as exc:
        _fail(str(exc))
        return USAGE_EXIT
    try:
        table = build_oracle_table(originals, detector, jobs=max(1, args.jobs))
        table.save(args.out)
    except DetectorError as exc:
        _fail(str(exc))
        return RUNTIME_EXIT
    except OSError as exc:
        _fail(str(exc))
        return RUNTIME_EXIT
    print(f"wrote {len(table.entries)} oracle entries (brightness_ref={table.brightness_ref!r}) to {args.out}")
    return 0


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args.config)
    except (OSError, ValueError) as exc:
        _fail(f"config: {exc}")
        return USAGE_EXIT

    errors: list[str] = []
    run_section = _section(cfg, "run")
    paths = _section(cfg, "paths")
    agent_section = _section(cfg, "agent")
    stream_section = _section(cfg, "stream")
    sense_section = _section(cfg, "sense")

    agent_kind = args.agent or run_section.get("agent", "qlearn")
    rounds = args.rounds if args.rounds is not None else run_section.get("rounds", 20)
    lenient = bool(run_section.get("lenient_accuracy", False))
    if not isinstance(rounds, int) or rounds < 1:
        errors.append(f"run: rounds must be a positive integer, got {rounds!r}")

    images_dir = args.images or paths.get("images")
    oracle_path = args.oracle or paths.get("oracle")
    log_path = args.log or paths.get("log", "run_log.csv")
    snapshot_path = args.snapshot or paths.get("snapshot")
    if not images_dir:
        errors.append("paths: images directory not configured")
    if not oracle_path:
        errors.append("paths: oracle table path not configured")

    reward_cfg = _build(RewardConfig, _section(cfg, "reward"), "reward", errors)
    params = _build(FilterParams, _section(cfg, "filters"), "filters", errors)
    surrogate_cfg = _build(SurrogateConfig, _section(cfg, "surrogate"), "surrogate", errors)

    if args.seed is not None:
        stream_section["seed"] = args.seed
        agent_section.setdefault("seed", args.seed + 1)
    raw_mix = stream_section.get("noise_mix")
    if raw_mix is not None:
        try:
            stream_section["noise_mix"] = _parse_noise_mix(raw_mix)
        except (AttributeError, TypeError, ValueError) as exc:
            errors.append(f"stream: {exc}")
            stream_section.pop("noise_mix", None)
    stream_cfg = _build(StreamConfig, stream_section, "stream", errors)

    detector_section = _section(cfg, "detector")
    detector_kind = detector_section.get("kind", "surrogate")
    detector_url = detector_section.get("url")

    agent = None
    if agent_kind not in ("linucb", "qlearn"):
        errors.append(f"run: unknown agent kind {agent_kind!r} (expected linucb or qlearn)")
    else:
        try:
            agent = make_agent(agent_kind, **agent_section)
        except (TypeError, ValueError) as exc:
            errors.append(f"agent: {exc}")

    # Sense config depends on brightness_ref from the oracle table; validate
    # the overridable fields now, finish after the table loads.
    if errors:
        for e in errors:
            _fail(e)
        return USAGE_EXIT

    try:
        originals = _load_originals(images_dir)
        oracle = OracleTable.load(oracle_path)
    except (OSError, PPMError, ValueError) as exc:
        _fail(str(exc))
        return RUNTIME_EXIT

    sense_section.setdefault("brightness_ref", oracle.brightness_ref)
    sense_cfg = _build(SenseConfig, sense_section, "sense", errors)
    if errors:
        for e in errors:
            _fail(e)
        return USAGE_EXIT

    missing = [name for name, _ in originals if name not in oracle.entries]
    if missing:
        _fail(f"oracle table missing entries for: {', '.join(missing[:5])}")
        return RUNTIME_EXIT

    try:
        detector = _make_detector(detector_kind, detector_url, surrogate_cfg, originals)
    except ValueError as exc:
        _fail(str(exc))
        return USAGE_EXIT

    rng = np.random.Generator(np.random.PCG64(stream_cfg.seed))
    records = []
    failure: str | None = None
    for round_index in range(1, rounds + 1):
        try:
            records.extend(
                run_round(
                    agent,
                    originals,
                    oracle,
                    detector,
                    round_index=round_index,
                    start_iter=len(records),
                    stream=stream_cfg,
                    reward_cfg=reward_cfg,
                    sense_cfg=sense_cfg,
                    params=params,
                    rng=rng,
                    lenient=lenient,
                )
            )
        except (DetectorError, MissingOracleEntryError) as exc:
            failure = f"round {round_index}: {exc}"
            break

    try:
        with open(log_path, "wb") as fh:
            fh.write(records_to_csv(records))
        if snapshot_path and failure is None:
            with open(snapshot_path, "wb") as fh:
                fh.write(agent.snapshot())
    except OSError as exc:
        _fail(str(exc))
        return RUNTIME_EXIT

    if failure is not None:
        _fail(f"{failure} (partial log flushed to {log_path})")
        return RUNTIME_EXIT

    rewards = [r.reward for r in records]
    flags = accuracy_flags(records, lenient)
    print(f"rounds: {rounds}  iterations: {len(records)}")
    print(f"final running accuracy: {sum(flags) / len(flags):.4f}")
    print(f"final mean reward: {sum(rewards) / len(rewards):.4f}")
    return 0


def cmd_report(args) -> int:
    try:
        with open(args.log, "rb") as fh:
            records = records_from_csv(fh.read())
    except (OSError, ValueError) as exc:
        _fail(f"{args.log}: {exc}")
        return RUNTIME_EXIT
    if not records:
        _fail(f"{args.log}: no records")
        return RUNTIME_EXIT

    stem = args.log[:-4] if args.log.endswith(".csv") else args.log
    summary_path = args.summary or f"{stem}_summary.csv"
    series_path = args.series or f"{stem}_series.csv"
    try:
        with open(summary_path, "wb") as fh:
            fh.write(export_summary(records, args.lenient))
        with open(series_path, "wb") as fh:
            fh.write(export_series(records, args.lenient))
        if args.compare:
            with open(args.compare, "rb") as fh:
                other = records_from_csv(fh.read())
            compare_path = args.out_compare or f"{stem}_compare.csv"
            with open(compare_path, "wb") as fh:
                fh.write(export_comparison(records, other, args.lenient))
            print(f"wrote {summary_path}, {series_path}, {compare_path}")
            return 0
    except (OSError, ValueError) as exc:
        _fail(str(exc))
        return RUNTIME_EXIT
    print(f"wrote {summary_path}, {series_path}")
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(prog="filtergym", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_synth = sub.add_parser("synth", help="generate originals and/or noisy variants")
    p_synth.add_argument("--config", help="JSON config file")
    p_synth.add_argument("--out", required=True, help="output directory")
    p_synth.add_argument("--images", help="directory of original .ppm files (default: texgen)")
    p_synth.add_argument("--count", type=int, default=64, help="texgen image count")
    p_synth.add_argument("--seed", type=int, default=0, help="texgen seed")
    p_synth.add_argument(
        "--kinds", default="blur,dark,white", help="comma-separated noise kinds to apply"
    )
    p_synth.set_defaults(func=cmd_synth)

    p_oracle = sub.add_parser("oracle", help="build the oracle probability table")
    p_oracle.add_argument("--config", help="JSON config file")
    p_oracle.add_argument("--images", required=True, help="directory of original .ppm files")
    p_oracle.add_argument("--out", required=True, help="oracle CSV output path")
    p_oracle.add_argument("--detector", choices=("surrogate", "remote"), default="surrogate")
    p_oracle.add_argument("--url", help="detector service base url (remote)")
    p_oracle.add_argument("--jobs", type=int, default=1, help="parallel detector calls")
    p_oracle.set_defaults(func=cmd_oracle)

    p_run = sub.add_parser("run", help="run the online-learning experiment")
    p_run.add_argument("--config", help="JSON config file")
    p_run.add_argument("--agent", choices=("linucb", "qlearn"), help="override agent kind")
    p_run.add_argument("--rounds", type=int, help="override round count")
    p_run.add_argument("--seed", type=int, help="override stream seed (agent seed becomes seed+1)")
    p_run.add_argument("--images", help="override originals directory")
    p_run.add_argument("--oracle", help="override oracle table path")
    p_run.add_argument("--log", help="override iteration log path")
    p_run.add_argument("--snapshot", help="override agent snapshot path")
    p_run.set_defaults(func=cmd_run)

    p_report = sub.add_parser("report", help="derive summary and series CSVs from a log")
    p_report.add_argument("--log", required=True, help="iteration log CSV")
    p_report.add_argument("--summary", help="summary CSV output path")
    p_report.add_argument("--series", help="running-series CSV output path")
    p_report.add_argument("--compare", help="second log to compare against")
    p_report.add_argument("--out-compare", help="comparison CSV output path")
    p_report.add_argument("--lenient", action="store_true", help="lenient counter-action accuracy")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

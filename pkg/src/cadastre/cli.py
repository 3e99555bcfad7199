"""Command line entry point.

    cadastre generate   build the prompt pool and render the image corpus
    cadastre serve      run the HTTP review service over a corpus
    cadastre assemble   build experiment manifests from reviewed images
    cadastre run        full pipeline: generate, review, assemble, train, report
    cadastre report     re-emit report files from saved experiment artifacts

Exit codes: 0 on success, 1 on a runtime failure, 2 on bad usage or an
unusable config.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, PipelineConfig, config_from_dict, load_raw
from .manifest import load_manifest
from .pipeline import (
    PipelineError,
    build_prompt_pool,
    generate_corpus,
    make_backend,
    materialize_manual_pool,
    oracle_review,
    regenerate_report,
    run_experiment,
    run_pipeline,
)
from .prompts import load_pool, save_pool
from .schema import CadastreError
from .store import ImageStore
from .triage import TriageState


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cadastre",
        description="Synthetic facade imagery: generation, review, experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None,
                       help="TOML config file (defaults apply without one)")
        p.add_argument("--seed", type=int, default=None,
                       help="override the pipeline seed")
        p.add_argument("--backend", choices=("local_stub", "remote_api"),
                       default=None, help="override the generation backend")
        p.add_argument("--out", type=Path, default=None,
                       help="override the output directory")

    p_generate = sub.add_parser(
        "generate", help="build the prompt pool and render the corpus")
    common(p_generate)

    p_serve = sub.add_parser("serve", help="run the HTTP review service")
    common(p_serve)
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--static-dir", type=Path, default=None,
                         help="directory with the review UI build")

    p_assemble = sub.add_parser(
        "assemble", help="build experiment manifests from reviewed images")
    common(p_assemble)
    p_assemble.add_argument("tags", nargs="*",
                            help="experiment tags (default: all configured)")

    p_run = sub.add_parser("run", help="run the full pipeline")
    common(p_run)
    p_run.add_argument("tags", nargs="*",
                       help="experiment tags (default: all configured)")

    p_report = sub.add_parser(
        "report", help="re-emit reports from saved manifests and predictions")
    common(p_report)

    return parser


def _load_config(args: argparse.Namespace) -> PipelineConfig:
    raw = load_raw(args.config) if args.config else {}
    base_dir = args.config.resolve().parent if args.config else Path.cwd()
    if args.seed is not None:
        raw.setdefault("pipeline", {})["seed"] = args.seed
    if args.out is not None:
        raw.setdefault("pipeline", {})["out_dir"] = str(args.out)
    if args.backend is not None:
        raw.setdefault("generation", {})["backend"] = args.backend
    return config_from_dict(raw, base_dir=base_dir)


def _select_plans(config: PipelineConfig, tags: list[str]):
    if not tags:
        return list(config.plans)
    by_tag = {plan.tag: plan for plan in config.plans}
    unknown = [tag for tag in tags if tag not in by_tag]
    if unknown:
        raise ConfigError(
            f"unknown experiment tags: {', '.join(unknown)} "
            f"(configured: {', '.join(by_tag)})"
        )
    return [by_tag[tag] for tag in tags]


def _open_corpus(config: PipelineConfig) -> tuple[ImageStore, TriageState]:
    store_dir = Path(config.out_dir) / "store"
    if not (store_dir / "records.csv").exists():
        raise PipelineError(
            f"no corpus at {store_dir}; run `cadastre generate` first"
        )
    store = ImageStore(store_dir)
    pool = load_pool(store.pool_path, rng_seed=config.seed) \
        if store.pool_path.exists() else build_prompt_pool(config)
    return store, TriageState(store, pool)


def cmd_generate(args: argparse.Namespace, config: PipelineConfig) -> int:
    out_dir = Path(config.out_dir)
    store = ImageStore(out_dir / "store")
    backend = make_backend(config)
    pool = build_prompt_pool(config)
    manual = materialize_manual_pool(config, store)
    batch = generate_corpus(config, pool, backend, store)
    print(f"manual pool: {len(manual)} images")
    print(f"synthetic: {len(batch.completed)} rendered, "
          f"{backend.calls} backend calls, {len(batch.failures)} failures")
    if config.review_mode == "oracle":
        state = TriageState(store, pool)
        reviewed = oracle_review(state, backend, batch)
        stats = state.stats()
        print(f"oracle review: {reviewed} new verdicts, "
              f"{stats.accepted} accepted / {stats.rejected} rejected")
    save_pool(pool, store.pool_path)
    if batch.failures:
        for failure in batch.failures[:5]:
            print(f"  failed {failure.request.prompt_id}: {failure.error}",
                  file=sys.stderr)
        return 1
    print(f"store: {store.root}")
    return 0


def cmd_serve(args: argparse.Namespace, config: PipelineConfig) -> int:
    from .server import serve

    store, state = _open_corpus(config)
    host = args.host or config.serve_host
    port = args.port if args.port is not None else config.serve_port
    print(f"serving review API on http://{host}:{port} (store: {store.root})")
    serve(state, config.token, host=host, port=port,
          static_dir=args.static_dir)
    return 0


def cmd_assemble(args: argparse.Namespace, config: PipelineConfig) -> int:
    store, state = _open_corpus(config)
    manual = [r for r in store.records() if r.provenance == "manual"]
    accepted = state.accepted_synthetic()
    plans = _select_plans(config, args.tags)
    out_dir = Path(config.out_dir)
    for plan in plans:
        artifact = run_experiment(plan, manual, accepted, config, store,
                                  out_dir)
        tallies = artifact.report.per_class
        sizes = ", ".join(
            f"{label}:{t['train'].total}/{t['test'].total}"
            for label, t in tallies.items()
        )
        print(f"{plan.tag}: {artifact.manifest_path} ({sizes})")
    return 0


def cmd_run(args: argparse.Namespace, config: PipelineConfig) -> int:
    _select_plans(config, args.tags)  # reject unknown tags as a usage error
    result = run_pipeline(config, only_tags=args.tags or None)
    stats = result.triage.stats()
    print(f"corpus: {len(result.store)} images, "
          f"{stats.accepted} accepted / {stats.rejected} rejected synthetic")
    for artifact in result.experiments:
        metrics = artifact.evaluation.metrics
        print(f"{artifact.plan.tag}: weighted F1 {metrics.weighted_f1:.3f}, "
              f"AUC {artifact.evaluation.roc_summary.auc:.3f}")
    print(f"report: {result.report_files[0].parent}")
    return 0


def cmd_report(args: argparse.Namespace, config: PipelineConfig) -> int:
    out_dir = Path(config.out_dir)
    experiments_dir = out_dir / "experiments"
    pairs = []
    if experiments_dir.is_dir():
        for exp_dir in sorted(experiments_dir.iterdir()):
            manifest_path = exp_dir / "manifest.txt"
            predictions_path = exp_dir / "predictions.csv"
            if manifest_path.is_file() and predictions_path.is_file():
                pairs.append((load_manifest(manifest_path), predictions_path))
    if not pairs:
        raise PipelineError(
            f"no experiment artifacts under {experiments_dir}; "
            f"run `cadastre run` first"
        )
    written = regenerate_report(pairs, out_dir / "report")
    for path in written:
        print(path)
    return 0


_COMMANDS = {
    "generate": cmd_generate,
    "serve": cmd_serve,
    "assemble": cmd_assemble,
    "run": cmd_run,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CadastreError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1


if __name__ == "__main__":
    sys.exit(main())

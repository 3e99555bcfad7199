"""End-to-end orchestration: corpus, review, assembly, training, report.

A run is a pure function of its config. Every stage draws randomness from
seeds derived off the config seed, the image cache is content addressed,
and review verdicts replay from the decision log, so re-running the same
config is idempotent and a changed seed changes everything downstream.
"""

from __future__ import annotations

import hashlib
import io
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import textures
from .assembler import (
    AssemblyReport,
    assemble_augmented,
    assemble_baseline,
    assemble_mixed,
    assemble_synthetic,
    pool_digest,
    reduce_labels,
    write_assembly_report,
)
from .classifier import PredictionSet, train, predict, write_predictions
from .config import PipelineConfig
from .evaluation import ExperimentEvaluation, evaluate_experiment
from .generation import (
    Backend,
    BatchResult,
    GenerationError,
    StubBackend,
    generate_batch,
)
from .manifest import save_manifest
from .prompts import PromptPool, generate_prompts, promote, save_pool
from .report import emit_report
from .schema import (
    CadastreError,
    DatasetManifest,
    ExperimentPlan,
    HRP_LABELS,
    ImageRecord,
    MANUAL_SIZE,
    URC_LABELS,
)
from .store import ImageStore
from .triage import ReviewDecision, TriageState


class PipelineError(CadastreError):
    pass


@dataclass
class ExperimentArtifacts:
    plan: ExperimentPlan
    manifest_path: Path
    report: AssemblyReport
    predictions: PredictionSet
    evaluation: ExperimentEvaluation


@dataclass
class PipelineResult:
    out_dir: Path
    store: ImageStore
    pool: PromptPool
    triage: TriageState
    experiments: list[ExperimentArtifacts] = field(default_factory=list)
    report_files: list[Path] = field(default_factory=list)

    def experiment(self, tag: str) -> ExperimentArtifacts:
        for artifact in self.experiments:
            if artifact.plan.tag == tag:
                return artifact
        raise PipelineError(f"no experiment tagged {tag!r} in this run")


def make_backend(config: PipelineConfig) -> Backend:
    if config.backend.kind == "local_stub":
        return StubBackend(config.backend, irrelevance=config.irrelevance)
    from .remote import RemoteApiBackend

    return RemoteApiBackend(config.backend)


def _manual_rng(seed: int, label: str, index: int) -> np.random.Generator:
    digest = hashlib.sha256(f"manual\n{label}\n{index}\n{seed}".encode()).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def materialize_manual_pool(config: PipelineConfig,
                            store: ImageStore) -> list[ImageRecord]:
    """Render the curated pool: label-pure textures at the survey size.

    Idempotent: records already in the store are reused, not re-rendered.
    """
    width, height = MANUAL_SIZE
    cities = ("New York City", "Zurich", "Tokyo")
    records: list[ImageRecord] = []
    for label in URC_LABELS:
        count = config.manual_per_label.get(label, 0)
        for i in range(count):
            image_id = f"man-{label}-{i:04d}"
            if image_id in store:
                records.append(store.get(image_id))
                continue
            rng = _manual_rng(config.seed, label, i)
            image = textures.texture_image(label, width, height, rng)
            buf = io.BytesIO()
            image.save(buf, format="PNG", compress_level=3)
            record = ImageRecord(
                id=image_id, path=f"images/{image_id}.png",
                width=width, height=height, label=label,
                provenance="manual", review_status="accepted",
                city_keyword=cities[i % len(cities)],
            )
            store.add(record, buf.getvalue())
            records.append(record)
    return records


def build_prompt_pool(config: PipelineConfig) -> PromptPool:
    pool = PromptPool(rng_seed=config.seed)
    for keywords in config.keywords:
        material_seed = config.seed ^ int.from_bytes(
            hashlib.sha256(keywords.material.encode()).digest()[:4], "big"
        )
        pool.extend(generate_prompts(keywords, config.prompts_per_material,
                                     seed=material_seed))
    return pool


def generate_corpus(config: PipelineConfig, pool: PromptPool,
                    backend: Backend, store: ImageStore) -> BatchResult:
    materials = [k.material for k in config.keywords]
    merged = BatchResult(completed=[], failures=[])
    batch_seed = random.Random(config.seed).getrandbits(32)
    for label in materials:
        count = config.synthetic_per_label.get(label, 0)
        if count < 1:
            continue
        result = generate_batch(pool, [label], count, backend, store,
                                seed=batch_seed)
        merged.completed.extend(result.completed)
        merged.failures.extend(result.failures)
    return merged


def oracle_review(state: TriageState, backend: Backend,
                  batch: BatchResult) -> int:
    """Judge each generated image with the stub's ground truth.

    Accept when the rendered texture matches the target label, reject
    otherwise. Cache hits re-derive the same verdict, so replays are
    no-ops rather than conflicts.
    """
    if not isinstance(backend, StubBackend):
        raise PipelineError("oracle review requires the local stub backend")
    reviewed = 0
    for request, record in batch.completed:
        verdict = ("accepted"
                   if backend.rendered_label(request) == request.target_label
                   else "rejected")
        if state.status_of(record.id) == "pending":
            state.submit_review(ReviewDecision(
                image_id=record.id, verdict=verdict, reviewer="oracle",
            ))
            reviewed += 1
    return reviewed


def _assemble(plan: ExperimentPlan, manual_pool: list[ImageRecord],
              accepted_synthetic: list[ImageRecord]) -> AssemblyReport:
    if plan.kind == "synthetic":
        hrp = [r for r in accepted_synthetic if r.label in HRP_LABELS]
        return assemble_synthetic(hrp, plan)
    label = plan.label_of_interest
    assert label is not None
    manual = reduce_labels(
        [r for r in manual_pool if r.label in URC_LABELS], label)
    synthetic = reduce_labels(
        [r for r in accepted_synthetic if r.label in URC_LABELS], label)
    if plan.kind == "baseline":
        return assemble_baseline(manual, plan)
    if plan.kind == "augmented":
        return assemble_augmented(manual, synthetic, plan)
    return assemble_mixed(manual, synthetic, plan)


def run_experiment(plan: ExperimentPlan, manual_pool: list[ImageRecord],
                   accepted_synthetic: list[ImageRecord],
                   config: PipelineConfig, store: ImageStore,
                   out_dir: Path) -> ExperimentArtifacts:
    report = _assemble(plan, manual_pool, accepted_synthetic)
    exp_dir = out_dir / "experiments" / plan.tag
    exp_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = exp_dir / "manifest.txt"
    save_manifest(report.manifest, manifest_path)
    write_assembly_report(report, exp_dir / "assembly_report.json",
                          input_digests={
                              "manual": pool_digest(manual_pool),
                              "synthetic": pool_digest(accepted_synthetic),
                          })
    handle = train(report.manifest, config.classifier, store.root,
                   bundle_dir=exp_dir / "worker_bundle")
    predictions = predict(handle, report.manifest, store.root)
    write_predictions(predictions, exp_dir / "predictions.csv")
    evaluation = evaluate_experiment(plan.tag, report.manifest, predictions)
    return ExperimentArtifacts(
        plan=plan, manifest_path=manifest_path, report=report,
        predictions=predictions, evaluation=evaluation,
    )


def run_pipeline(config: PipelineConfig,
                 only_tags: Optional[list[str]] = None) -> PipelineResult:
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    store = ImageStore(out_dir / "store")
    backend = make_backend(config)

    pool = build_prompt_pool(config)
    manual_pool = materialize_manual_pool(config, store)
    batch = generate_corpus(config, pool, backend, store)
    if batch.failures:
        sample = "; ".join(f.error for f in batch.failures[:3])
        raise GenerationError(
            f"{len(batch.failures)} generation requests failed ({sample})"
        )

    state = TriageState(store, pool)
    if config.review_mode == "oracle":
        oracle_review(state, backend, batch)
    promote(pool, min_samples=config.promote_min_samples,
            threshold=config.promote_threshold)
    save_pool(pool, store.pool_path)

    plans = list(config.plans)
    if only_tags:
        by_tag = {plan.tag: plan for plan in plans}
        unknown = [tag for tag in only_tags if tag not in by_tag]
        if unknown:
            raise PipelineError(
                f"unknown experiment tags: {', '.join(unknown)} "
                f"(configured: {', '.join(by_tag)})"
            )
        plans = [by_tag[tag] for tag in only_tags]

    accepted = state.accepted_synthetic()
    result = PipelineResult(out_dir=out_dir, store=store, pool=pool,
                            triage=state)
    for plan in plans:
        result.experiments.append(
            run_experiment(plan, manual_pool, accepted, config, store, out_dir)
        )

    report_dir = out_dir / "report"
    result.report_files = emit_report(
        [artifact.evaluation for artifact in result.experiments], report_dir)
    stats_path = report_dir / "triage_stats.json"
    stats_path.write_text(
        json.dumps(state.stats().to_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    result.report_files.append(stats_path)
    return result


def regenerate_report(manifest_predictions: list[tuple[DatasetManifest, Path]],
                      out_dir: Path) -> list[Path]:
    """Re-emit report files from saved manifests and prediction CSVs."""
    from .classifier import ingest_external_predictions

    evaluations = []
    for manifest, predictions_path in manifest_predictions:
        predictions = ingest_external_predictions(
            predictions_path, manifest.schema,
            expected_ids=[r.id for r in manifest.test],
        )
        evaluations.append(evaluate_experiment(
            manifest.experiment_tag or predictions_path.stem,
            manifest, predictions,
        ))
    return emit_report(evaluations, out_dir)

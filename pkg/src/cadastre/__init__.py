"""Synthetic facade imagery for material classification experiments.

The package covers the whole loop: a prompt grammar seeded by material
keywords, image generation behind a content-addressed cache, a reviewable
triage queue with an append-only decision log, experiment assembly over
manual and synthetic pools, a deterministic histogram classifier with an
external-worker escape hatch, and an evaluation/report stage.
"""

from __future__ import annotations

from .assembler import (
    AssemblyError,
    AssemblyReport,
    InsufficientPoolError,
    assemble_augmented,
    assemble_baseline,
    assemble_mixed,
    assemble_synthetic,
    reduce_labels,
)
from .classifier import (
    ModelHandle,
    PredictionSet,
    TrainConfig,
    ingest_external_predictions,
    predict,
    train,
    write_predictions,
)
from .config import ConfigError, PipelineConfig, load_config
from .evaluation import (
    ConfusionMatrix,
    EvaluationError,
    MetricsTable,
    RocCurve,
    RocSummary,
    class_metrics,
    class_roc,
    confusion,
    confusion_from_labels,
    evaluate_experiment,
    experiment_roc_summary,
    roc_curve,
)
from .generation import (
    Backend,
    BackendDescriptor,
    ContentPolicyError,
    GenerationError,
    GenerationRequest,
    IrrelevanceProfile,
    RetryPolicy,
    StubBackend,
    TransportError,
    content_address,
    generate,
    generate_batch,
)
from .manifest import load_manifest, manifest_from_text, manifest_to_text, save_manifest
from .prompts import (
    KeywordSet,
    PromptPool,
    PromptRecord,
    generate_prompts,
    grammar_capacity,
    promote,
    record_outcome,
    sample_prompt,
)
from .schema import (
    CadastreError,
    DatasetManifest,
    ExperimentPlan,
    HRP_LABELS,
    ImageRecord,
    LabelSchema,
    ManifestFormatError,
    URC_LABELS,
    ValidationError,
)
from .store import ImageStore, StoreError
from .triage import (
    ConflictingVerdictError,
    ReviewDecision,
    TriageError,
    TriageState,
    TriageStats,
    UnknownImageError,
)

__version__ = "0.1.0"

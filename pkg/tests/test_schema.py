from __future__ import annotations

import pytest

from cadastre.schema import (
    DatasetManifest,
    ExperimentPlan,
    HRP_LABELS,
    ImageRecord,
    LabelSchema,
    URC_LABELS,
    ValidationError,
    group_by_label,
)
from helpers import make_manual, make_synthetic


def test_urc_schema_order_is_class_id():
    schema = LabelSchema.urc()
    assert schema.labels == ("brick", "stucco", "rustication", "metal",
                             "siding", "wood", "null", "other")
    assert schema.index("brick") == 0
    assert schema.index("other") == 7


def test_hrp_schema():
    assert LabelSchema.hrp().labels == ("stone", "curtain_wall",
                                        "concrete_panels")
    assert HRP_LABELS == ("stone", "curtain_wall", "concrete_panels")


def test_reduced_schema_order_and_name():
    schema = LabelSchema.reduced("stucco")
    assert schema.name == "reduced:stucco"
    assert schema.labels == ("null", "other", "stucco")
    assert LabelSchema.reduced("siding").labels == ("null", "other", "siding")


def test_reduced_rejects_other_labels():
    with pytest.raises(ValidationError):
        LabelSchema.reduced("brick")


def test_schema_parse_round_trip():
    for schema in (LabelSchema.urc(), LabelSchema.hrp(),
                   LabelSchema.reduced("siding")):
        assert LabelSchema.parse(schema.name).labels == schema.labels


def test_schema_unknown_label_raises():
    with pytest.raises(ValidationError):
        LabelSchema.urc().index("granite")


def test_synthetic_record_requires_prompt_and_size():
    with pytest.raises(ValidationError):
        ImageRecord(id="a", path="p.png", width=512, height=512,
                    label="stucco", provenance="synthetic",
                    review_status="pending")
    with pytest.raises(ValidationError):
        ImageRecord(id="a", path="p.png", width=400, height=600,
                    label="stucco", provenance="synthetic",
                    review_status="pending", prompt_id="x")


def test_manual_record_constraints():
    with pytest.raises(ValidationError):
        ImageRecord(id="a", path="p.png", width=400, height=600,
                    label="stucco", provenance="manual",
                    review_status="pending")
    with pytest.raises(ValidationError):
        ImageRecord(id="a", path="p.png", width=512, height=512,
                    label="stucco", provenance="manual",
                    review_status="accepted")
    with pytest.raises(ValidationError):
        ImageRecord(id="a", path="p.png", width=400, height=600,
                    label="stucco", provenance="manual",
                    review_status="accepted", prompt_id="x")


def test_manifest_rejects_leakage_and_names_the_record():
    schema = LabelSchema.reduced("stucco")
    rec = make_manual("stucco", 1)
    with pytest.raises(ValidationError, match="man-stucco-0001"):
        DatasetManifest(schema=schema, train=(rec,), test=(rec,),
                        seed=1, experiment_tag="t")


def test_manifest_rejects_unknown_label():
    schema = LabelSchema.reduced("stucco")
    with pytest.raises(ValidationError, match="brick"):
        DatasetManifest(schema=schema, train=(make_manual("brick"),),
                        test=(), seed=1, experiment_tag="t")


def test_manifest_rejects_unreviewed_synthetic():
    schema = LabelSchema.reduced("stucco")
    with pytest.raises(ValidationError, match="pending"):
        DatasetManifest(
            schema=schema, train=(make_synthetic("stucco", status="pending"),),
            test=(), seed=1, experiment_tag="t",
        )


def test_manifest_seed_must_be_u64():
    schema = LabelSchema.reduced("stucco")
    for bad in (-1, 2**64):
        with pytest.raises(ValidationError):
            DatasetManifest(schema=schema, train=(), test=(),
                            seed=bad, experiment_tag="t")
    DatasetManifest(schema=schema, train=(), test=(),
                    seed=2**64 - 1, experiment_tag="t")


def test_plan_kinds_and_tags():
    plan = ExperimentPlan(kind="baseline", seed=1, label_of_interest="stucco")
    assert plan.tag == "baseline-stucco"
    assert plan.schema.name == "reduced:stucco"
    plan = ExperimentPlan(kind="synthetic", seed=1)
    assert plan.tag == "synthetic"
    assert plan.schema.name == "hrp"


def test_plan_label_rules():
    with pytest.raises(ValidationError):
        ExperimentPlan(kind="baseline", seed=1)  # needs a label of interest
    with pytest.raises(ValidationError):
        ExperimentPlan(kind="synthetic", seed=1, label_of_interest="stucco")
    with pytest.raises(ValidationError):
        ExperimentPlan(kind="mixed", seed=1, label_of_interest="brick")


def test_plan_default_targets_match_survey_counts():
    stucco = ExperimentPlan(kind="mixed", seed=1, label_of_interest="stucco")
    siding = ExperimentPlan(kind="mixed", seed=1, label_of_interest="siding")
    synthetic = ExperimentPlan(kind="synthetic", seed=1)
    assert stucco.per_class_targets() == (596, 149)
    assert siding.per_class_targets() == (248, 62)
    assert synthetic.per_class_targets() == (596, 149)


def test_group_by_label_orders_and_rejects():
    schema = LabelSchema.reduced("stucco")
    records = [make_manual("stucco"), make_manual("null"), make_manual("other")]
    buckets = group_by_label(records, schema)
    assert list(buckets) == ["null", "other", "stucco"]
    with pytest.raises(ValidationError):
        group_by_label([make_manual("brick")], schema)


def test_urc_has_eight_labels():
    assert len(URC_LABELS) == 8

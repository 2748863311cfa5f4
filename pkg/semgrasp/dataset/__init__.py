""" Dataset schema, vocabularies, `cage-ds-1` serialization and the
synthetic dataset generator. """
from semgrasp.dataset.records import (
    Context,
    Dataset,
    GraspLabel,
    LabeledGrasp,
    Part,
    PartLabeledObject,
    validate_dataset,
)
from semgrasp.dataset.serialization import FORMAT_VERSION, load_dataset, save_dataset
from semgrasp.dataset.synthetic import (
    AFFORDANCE_RULES,
    DEFAULT_RULES,
    GeneratorConfig,
    Rule,
    RuleTable,
    generate_synthetic,
    is_feasible,
    joint_task_state_rules,
    oracle_label,
)
from semgrasp.dataset.vocabulary import DEFAULT_VOCABULARIES, Vocabularies

__all__ = [
    "AFFORDANCE_RULES",
    "Context",
    "DEFAULT_RULES",
    "DEFAULT_VOCABULARIES",
    "Dataset",
    "FORMAT_VERSION",
    "GeneratorConfig",
    "GraspLabel",
    "LabeledGrasp",
    "Part",
    "PartLabeledObject",
    "Rule",
    "RuleTable",
    "Vocabularies",
    "generate_synthetic",
    "is_feasible",
    "joint_task_state_rules",
    "load_dataset",
    "oracle_label",
    "save_dataset",
    "validate_dataset",
]

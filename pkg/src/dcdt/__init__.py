"""Digital clock-drawing test pipeline.

Stroke-level data model and interchange formats, a seeded synthetic
cohort generator, geometric/temporal feature extraction with a declared
catalog, an operationalized Rouleau scorer, supersparse linear integer
model training with exact small-instance optimization, and a nested
cross-validation AUC harness.  See the ``dcdt`` command-line entry point
for the full pipeline.
"""

from .stroke_model import (
    ClockDrawing,
    ClockKind,
    ClockTest,
    DataFormatError,
    Group,
    PenPoint,
    Stroke,
    SymbolKind,
    SymbolLabel,
    parse_labels,
    parse_strokes,
    serialize_labels,
    serialize_strokes,
    stroke_duration,
    stroke_length,
)
from .synthgen import DEFAULT_PHENOTYPES, GeneratorConfig, PhenotypeParams, generate_dataset, generate_test
from .features import (
    EllipseFit,
    FeatureCatalog,
    FeatureDef,
    binarize,
    default_catalog,
    extract,
    fit_ellipse,
    largest_angular_gap,
)
from .rouleau import RouleauParams, RouleauScore, classify, fit_params, rouleau_total
from .slim import BinaryDataset, SlimConfig, SlimModel, brute_force_train, predict, render, train
from .evaluation import EvalReport, FoldPlan, auc, nested_cv, stratified_kfold

__version__ = "0.1.0"

"""Size and fit prediction with separate customer, product and review pathways."""
from .data import (
    Customer,
    DatasetSplit,
    DataStore,
    FeatureSchema,
    FeatureSpec,
    FitLabel,
    IngestionError,
    LabeledExample,
    Product,
    Review,
    SchemaError,
    Transaction,
    build_dataset,
    derive_label,
    load_data_dir,
    resample_fit,
    split_dataset,
)
from .metrics import confusion_matrix, macro_f1_score
from .model import (
    FitNetClassifier,
    FitNetwork,
    ModelFormatError,
    Prediction,
    SchemaMismatchError,
    load_model,
    make_batch,
    save_model,
)
from .reviews import (
    FitClassifierEncoder,
    HashingEncoder,
    PrecomputedEncoder,
    ProductReviewIndex,
    train_fit_classifier,
)
from .synth import GenConfig, generate
from .training import EvalReport, TrainConfig, compare, evaluate, train

__version__ = "0.1.0"

__all__ = [
    "Customer", "DatasetSplit", "DataStore", "EvalReport", "FeatureSchema", "FeatureSpec",
    "FitClassifierEncoder", "FitLabel", "FitNetClassifier", "FitNetwork", "GenConfig",
    "HashingEncoder", "IngestionError", "LabeledExample", "ModelFormatError",
    "PrecomputedEncoder", "Prediction", "Product", "ProductReviewIndex", "Review", "SchemaError",
    "SchemaMismatchError", "Transaction", "TrainConfig", "build_dataset", "compare",
    "confusion_matrix", "derive_label", "evaluate", "generate", "load_data_dir", "load_model",
    "macro_f1_score", "make_batch", "resample_fit", "save_model", "split_dataset",
    "train", "train_fit_classifier",
]

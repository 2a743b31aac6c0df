"""Speech emotion recognition benchmark harness.

Four-class emotion corpora with speaker-independent session splits, acoustic
(Mel spectrogram, LLD, bag-of-audio-words) and linguistic (hashed TF-IDF)
feature pipelines, linear SVM classifiers scored by unweighted average
recall, WER/CER transcript scoring with a seeded corruption simulator, and
exhaustive majority-vote late fusion over feature-set combinations.
"""
from .boaw import Codebook, boaw_features, learn_codebook, log_tf, quantize
from .classify import (
    ConfusionMatrix,
    PredictionTable,
    Standardizer,
    SvmModel,
    confusion,
    fit_standardizer,
    predict,
    select_C,
    standardize_features,
    train_svm,
    uar,
    uar_of,
)
from .config import FeatureRecipe, RunConfig, load_config, parse_config
from .corpus import (
    LABELS,
    EmotionLabel,
    FeatureSet,
    Manifest,
    SplitRule,
    Utterance,
    load_feature_set,
    load_manifest,
    split_ids,
    write_feature_set,
    write_manifest,
)
from .dsp import (
    LLDFrameSequence,
    MelSpectrogram,
    SpectrogramConfig,
    Waveform,
    delta,
    extract_llds,
    mel_spectrogram,
    read_waveform,
)
from .errors import SerfuseError
from .fusion import (
    Combination,
    FusionResult,
    FusionSummary,
    GroupFilter,
    enumerate_combinations,
    fusion_search,
    majority_vote,
)
from .textfeat import IdfTable, TextFeatConfig, fit_text_features, transform_texts
from .transcripts import (
    AlignmentResult,
    CorruptionPlan,
    align,
    corpus_error_rates,
    corrupt,
    corrupt_corpus,
    normalize,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "Codebook",
    "Combination",
    "ConfusionMatrix",
    "CorruptionPlan",
    "EmotionLabel",
    "FeatureRecipe",
    "FeatureSet",
    "FusionResult",
    "FusionSummary",
    "GroupFilter",
    "IdfTable",
    "LABELS",
    "LLDFrameSequence",
    "Manifest",
    "MelSpectrogram",
    "PredictionTable",
    "RunConfig",
    "SerfuseError",
    "SpectrogramConfig",
    "SplitRule",
    "Standardizer",
    "SvmModel",
    "TextFeatConfig",
    "Utterance",
    "Waveform",
    "align",
    "boaw_features",
    "confusion",
    "corpus_error_rates",
    "corrupt",
    "corrupt_corpus",
    "delta",
    "enumerate_combinations",
    "extract_llds",
    "fit_standardizer",
    "fit_text_features",
    "fusion_search",
    "learn_codebook",
    "load_config",
    "load_feature_set",
    "load_manifest",
    "log_tf",
    "majority_vote",
    "mel_spectrogram",
    "normalize",
    "parse_config",
    "predict",
    "quantize",
    "read_waveform",
    "select_C",
    "split_ids",
    "standardize_features",
    "train_svm",
    "transform_texts",
    "uar",
    "uar_of",
    "write_feature_set",
    "write_manifest",
]

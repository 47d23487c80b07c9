"""Domain-counterfactual text generation.

Corrupt the domain-specific n-grams of a document, reconstruct it toward a
destination domain under a constrained vocabulary, filter the results, and
package originals plus counterfactuals as augmented training data.
"""

from .corpus import (
    CorpusConfig,
    Document,
    DomainRegistry,
    Ngram,
    load_corpus,
    load_domain_corpora,
    make_document,
    ngram_keys,
    ngrams,
    stem_token,
    tokenize,
)
from .corruption import (
    CorruptionConfig,
    Keep,
    MaskedSpan,
    MaskedTemplate,
    Slot,
    mask,
    mask_for_training,
    mask_random,
    masking_rate,
)
from .errors import (
    ConfigurationError,
    CorpusFormatError,
    DomainForgeError,
    FormatError,
    ServiceGenerationError,
    ServiceProtocolError,
    ServiceTransportError,
    UndefinedInputError,
    UnknownNgramError,
    VocabularyViolationError,
)
from .filtering import (
    DomainClassifier,
    FilterConfig,
    FilterVerdict,
    apply_filter,
    load_classifier,
    predict_domain,
    save_classifier,
    train_domain_classifier,
    word_overlap,
)
from .orientation import (
    OrientationDescriptor,
    OrientationSet,
    build_orientations,
    load_orientation_overrides,
    load_orientations,
    sample_training_orientation,
    save_orientations,
)
from .pipeline import (
    MODES,
    AugmentedDataset,
    CounterfactualCandidate,
    GenerationPlan,
    Report,
    augment,
    merge_datasets,
    oracle_match,
    read_dataset_rows,
    report,
    report_from_rows,
    write_dataset,
    write_manifest,
)
from .reconstruct import (
    AllowedVocabulary,
    CooccurrenceIndex,
    FillResult,
    ReconstructorKind,
    ServiceClient,
    admitted_unigrams,
    build_allowed_vocabulary,
    build_cooccurrence,
    build_unconstrained_vocabulary,
    fill_external,
    fill_native,
)
from .stats import (
    StatsConfig,
    StatsSnapshot,
    affinity,
    build_stats,
    load_snapshot,
    masking_score,
    posterior,
    representing_score,
    representing_words,
    save_snapshot,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]

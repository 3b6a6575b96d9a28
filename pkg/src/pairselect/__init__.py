"""pairselect: data selection for parallel corpora.

Scores sentence pairs with lexical (TF-IDF, avgIDF), geometric (distance
from the TF-IDF centroid), statistical (cross-entropy difference) and
externally supplied semantic signals, selects budgeted top-k subsets, and
reports uniqueness/overlap/distribution analyses across methods.
"""

from .analysis import (
    DistributionStats,
    UniquenessReport,
    distribution_stats,
    emit_report,
    overlap_matrix,
    unique_samples,
)
from .corpus import (
    CorpusStats,
    ParallelCorpus,
    Rejection,
    SentencePair,
    TokenizerConfig,
    build_corpus,
    corpus_stats,
    ingest,
    load_corpus,
    normalize,
    save_corpus,
    tokenize,
)
from .errors import ConfigError, InputError, PairselectError, ScorerError
from .external import (
    EmbeddingTable,
    ExternalScoreColumn,
    check_scorer_protocol,
    cosine_similarity,
    load_embeddings,
    load_scores,
    semantic_similarity_scores,
    stream_score,
)
from .fdscore import Centroid, centroid, cosine_fd_score, fd_score, fd_scores
from .lm import (
    NGramLM,
    bilingual_delta,
    cross_entropy,
    load_lm,
    moore_lewis,
    save_lm,
    train_ngram_lm,
)
from .metrics import EditScript, corpus_bleu, levenshtein, ter, ter_script
from .scoretable import ScoreTable, config_fingerprint
from .selection import (
    SelectionResult,
    SplitMix64,
    load_selection,
    random_sample,
    rank,
    save_selection,
    select_top_k,
    top_k,
)
from .tfidf import SparseVector, VocabIndex, avg_idf, idf, mean_tfidf, tfidf, vectorize

__version__ = "0.1.0"

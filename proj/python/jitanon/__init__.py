"""Cluster-guided anonymization of commit-level defect-prediction datasets."""

from ._core import (
    CommitCorpus,
    JitanonError,
    __version__,
    anonymize,
    assign_primary_qid,
    bin_index,
    cluster_corpus,
    cluster_stats,
    compute_ipr,
    derive_seed,
    f1_score,
    fallback_parameters,
    load_corpus,
    run_pipeline,
    run_utility,
    write_corpus_csv,
)

__all__ = [
    "CommitCorpus",
    "JitanonError",
    "__version__",
    "anonymize",
    "assign_primary_qid",
    "bin_index",
    "cluster_corpus",
    "cluster_stats",
    "compute_ipr",
    "derive_seed",
    "f1_score",
    "fallback_parameters",
    "load_corpus",
    "run_pipeline",
    "run_utility",
    "write_corpus_csv",
]

"""Unsupervised part-of-speech induction with a Pitman-Yor lexicon HMM."""

from ._core import (
    Corpus,
    Site,
    extract_classes,
    fit_log_log,
    many_to_one,
    train,
    v_measure,
    zipf_table,
)

__all__ = [
    "Corpus",
    "Site",
    "extract_classes",
    "fit_log_log",
    "many_to_one",
    "train",
    "v_measure",
    "zipf_table",
]

"""Python bindings for the fnd fake news detection toolkit."""

from ._fnd import (
    Error,
    IoError,
    NetworkError,
    NumericalError,
    ValidationError,
    Vocabulary,
    __version__,
    clean_text,
    f1_score,
    metrics,
    oov_rate,
    run_cli,
    softmax,
    split_train_test,
    synthetic_corpus,
    train_vocab,
)

__all__ = [
    "Error",
    "IoError",
    "NetworkError",
    "NumericalError",
    "ValidationError",
    "Vocabulary",
    "__version__",
    "clean_text",
    "f1_score",
    "metrics",
    "oov_rate",
    "run_cli",
    "softmax",
    "split_train_test",
    "synthetic_corpus",
    "train_vocab",
]

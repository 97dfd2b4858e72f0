"""Spectrum-sensing pipeline: band power featurizer, scene simulator, classifiers and GP localization."""

from ._shapr import (
    ConfigError,
    Dataset,
    GaussianProcess,
    IngestError,
    KNN,
    NumericError,
    ParseError,
    RandomForest,
    Split,
    band_average_power,
    band_count,
    cli,
    fit_mle,
    location_holdout_split,
    log_marginal_likelihood,
    receiver_ablation,
    run_experiment,
    stratified_split,
)
from ._shapr import simulate as _simulate

DEFAULT_CATEGORIES = {"auth": 7, "grid-loc": 4, "coord-loc": 20, "activity": 8}


def simulate(task, categories=None, per_category=20, seed=42, noise_db=1.0):
    if categories is None:
        categories = DEFAULT_CATEGORIES[task]
    return _simulate(task, categories, per_category, seed, noise_db)


__all__ = [name for name in dir() if not name.startswith("_")]

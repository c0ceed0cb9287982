"""Income classifiers: graph baselines, Bayesian homophily model, LR and RF."""
from .base import KINDS, ModelError, Prediction, TrainedModel, coin, dump_model, load_model
from .baselines import fit_majority, fit_random, majority_vote, random_select
from .bayes import HomophilyParams, bayes_fit, bayes_posterior, bayes_predict, fit_bayes
from .forest import Tree, rf_fit, rf_predict, rf_scores
from .logistic import lr_fit, lr_predict, lr_scores
from .selection import HyperGrid, grid_search_cv, stratified_folds

__all__ = [
    "KINDS", "ModelError", "Prediction", "TrainedModel", "coin", "dump_model", "load_model",
    "fit_majority", "fit_random", "majority_vote", "random_select",
    "HomophilyParams", "bayes_fit", "bayes_posterior", "bayes_predict", "fit_bayes",
    "Tree", "rf_fit", "rf_predict", "rf_scores",
    "lr_fit", "lr_predict", "lr_scores",
    "HyperGrid", "grid_search_cv", "stratified_folds",
]

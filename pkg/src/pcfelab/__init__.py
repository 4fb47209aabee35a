"""Numerical checks for probabilistic Cauchy functional equations.

f solves PCFE(mu; n) when f(X1 + ... + Xn) has the same law as
f(X1) + ... + f(Xn) for i.i.d. X_i ~ mu.
"""

__version__ = "0.1.0"

from .candidates import (CandidateFunction, LemmaParams, Monotonicity, grid_function, lau_rao_form,
                         lemma_piecewise, linear, pathological_increasing, power, sine_perturbed)
from .measures import Measure, Support, make_exponential, make_gaussian, make_grid_measure, sample_iid
from .report import VerdictReport

__all__ = [
    "CandidateFunction", "LemmaParams", "Monotonicity", "grid_function", "lau_rao_form",
    "lemma_piecewise", "linear", "pathological_increasing", "power", "sine_perturbed",
    "Measure", "Support", "make_exponential", "make_gaussian", "make_grid_measure", "sample_iid",
    "VerdictReport",
]

"""Survey-derived household regression models.

All coefficients are the published estimates.  Covariate names in the
registry are the exact inputs each model expects; transformed inputs are
named for their transform (``log1p_expectation`` is ``ln(expectation + 1)``).

Binary coding follows the survey tables: ``renter`` is 1 for renters (the
substitute and preparedness models), ``owner`` is 1 for owners (expected
outage and self-efficacy).
"""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConfigError

LEVELS = 5

DEFAULT_COEFFICIENTS: dict = {
    # Poisson, log link; mean expected outage in days
    "expected_outage": {
        "intercept": 1.74700,
        "coef": {"log1p_forewarning": 0.30471, "informed": 0.12369, "owner": -0.27720,
                 "elderly": -0.21065, "mobility_issue": -0.51210, "flood_zone": -0.28153},
    },
    # cumulative logit, logit P(Y <= j) = alpha_j + x.beta
    "need": {
        "intercepts": [0.44441, 1.79242, 3.344, 4.992],
        "coef": {"racial_minority": 0.89646, "mobility_issue": -0.51914, "child_under_10": 0.21971,
                 "medical_condition": -0.30319},
    },
    "self_efficacy": {
        "intercepts": [-3.191, -1.792, -0.551, 1.458],
        "coef": {"owner": 0.339, "medical_condition": -0.245, "chronic_disease": -0.237,
                 "social_capital": 0.217},
    },
    "experience": {
        "intercept": 1.371844,
        "coef": {"state_duration": 0.020162, "racial_minority": -0.656271, "elderly": -0.366558,
                 "child_under_10": 0.272127},
    },
    # generator purchase
    "substitute": {
        "intercept": -2.53950,
        "coef": {"income": 0.07416, "renter": -0.93270, "log1p_expectation": 0.48647,
                 "self_efficacy": 0.26128},
    },
    "preparedness": {
        "intercept": 1.89292,
        "coef": {"vehicle_missing": -0.58174, "experience": -1.11299, "elderly": 0.44445,
                 "renter": -0.60578, "forewarning": 0.08802, "supermarket_distance": -0.02362,
                 "self_efficacy": 0.50834},
    },
    # five-level preparedness, used only in ordinal mode; no published values,
    # these are placeholders with the binary model's covariates sign-flipped so
    # a higher propensity moves mass to higher levels
    "preparedness_ordinal": {
        "intercepts": [-1.5, -0.5, 0.5, 1.5],
        "coef": {"vehicle_missing": 0.58174, "experience": 1.11299, "elderly": -0.44445,
                 "renter": 0.60578, "forewarning": -0.08802, "supermarket_distance": 0.02362,
                 "self_efficacy": -0.50834},
        "intercept": 2.3,
    },
    # accelerated failure time, log link; tolerance in days
    "tolerance": {
        "intercept": 1.7762,
        "coef": {"substitute": -0.5130, "need": 0.1827, "prepared": 0.2664},
    },
}


@dataclass
class CoefficientSet:
    models: dict = field(default_factory=lambda: copy.deepcopy(DEFAULT_COEFFICIENTS))

    def __post_init__(self):
        for name, m in self.models.items():
            if "intercepts" in m:
                check_intercepts(m["intercepts"])

    def __getitem__(self, name: str) -> dict:
        try:
            return self.models[name]
        except KeyError:
            raise ConfigError(f"no coefficients for model {name!r}") from None

    @classmethod
    def with_overrides(cls, overrides: dict | None) -> "CoefficientSet":
        """Defaults with per-model fields replaced (``coef`` entries merge)."""
        models = copy.deepcopy(DEFAULT_COEFFICIENTS)
        for name, m in (overrides or {}).items():
            base = models.setdefault(name, {})
            for k, v in m.items():
                if k == "coef" and isinstance(v, dict):
                    base.setdefault("coef", {}).update(v)
                else:
                    base[k] = v
        return cls(models)

    @classmethod
    def load(cls, path) -> "CoefficientSet":
        with open(path) as fh:
            return cls.with_overrides(json.load(fh))

    def to_dict(self) -> dict:
        return copy.deepcopy(self.models)


def check_intercepts(intercepts) -> None:
    a = list(intercepts)
    if len(a) != LEVELS - 1:
        raise ConfigError(f"ordinal model needs {LEVELS - 1} intercepts, got {len(a)}")
    if any(b <= a_ for a_, b in zip(a, a[1:])):
        raise ConfigError(f"ordinal intercepts must be strictly increasing: {a}")


def linear_predictor(model: dict, covariates: dict, intercept: float | None = None):
    """``intercept + sum(beta_k * x_k)``; covariate names must match the model exactly.

    Ordinal models carry no ``intercept`` key, so their predictor is ``x.beta``.
    """
    coef = model["coef"]
    if set(covariates) != set(coef):
        missing = sorted(set(coef) - set(covariates))
        extra = sorted(set(covariates) - set(coef))
        raise ConfigError(f"covariate mismatch: missing {missing}, unexpected {extra}")
    eta = model.get("intercept", 0.0) if intercept is None else intercept
    for name in coef:  # registry order keeps float summation reproducible
        eta = eta + coef[name] * np.asarray(covariates[name], dtype=float)
    return eta


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x


def logistic_response(model: dict, covariates: dict):
    return _scalar(expit(linear_predictor(model, covariates)))


def cumulative_probs(intercepts, eta) -> np.ndarray:
    """``P(Y <= j)`` for j = 1..4, shape ``(..., 4)``."""
    check_intercepts(intercepts)
    a = np.asarray(intercepts, dtype=float)
    return expit(a + np.asarray(eta, dtype=float)[..., None])


def ordinal_pmf(intercepts, eta) -> np.ndarray:
    """Level probabilities for levels 1..5, shape ``(..., 5)``."""
    cum = cumulative_probs(intercepts, eta)
    ones = np.ones(cum.shape[:-1] + (1,))
    zeros = np.zeros(cum.shape[:-1] + (1,))
    return np.diff(np.concatenate([zeros, cum, ones], axis=-1), axis=-1)


def ordinal_sample(intercepts, model: dict, covariates: dict, u):
    """Smallest level j with ``u < P(Y <= j)``, else 5."""
    eta = linear_predictor(model, covariates)
    cum = cumulative_probs(intercepts, eta)
    u = np.asarray(u, dtype=float)
    level = 1 + (u[..., None] >= cum).sum(axis=-1)
    return int(level) if level.ndim == 0 else level


def expected_outage(x_f, x_i=0, x_o=0, x_a=0, x_m=0, x_fz=0, coeffs: CoefficientSet | None = None):
    """Mean expected outage duration (days) from the Poisson model."""
    if np.any(np.asarray(x_f) < 0):
        raise ConfigError("forewarning days must be >= 0")
    m = (coeffs or _DEFAULT)["expected_outage"]
    eta = linear_predictor(m, {"log1p_forewarning": np.log1p(x_f), "informed": x_i, "owner": x_o,
                               "elderly": x_a, "mobility_issue": x_m, "flood_zone": x_fz})
    return _scalar(np.exp(eta))


def tolerance(x_s, x_n, x_p, coeffs: CoefficientSet | None = None, noise=0.0):
    """Mean outage tolerance in days from the AFT model.

    ``noise`` is an additive term on the log scale (0 gives the mean).
    """
    xn = np.asarray(x_n)
    if np.any((xn < 1) | (xn > LEVELS)):
        raise ConfigError("need level must be in 1..5")
    m = (coeffs or _DEFAULT)["tolerance"]
    eta = linear_predictor(m, {"substitute": x_s, "need": x_n, "prepared": x_p})
    return _scalar(np.exp(eta + noise))


def experience_probability(state_duration, racial_minority, elderly, child_under_10,
                           coeffs: CoefficientSet | None = None):
    m = (coeffs or _DEFAULT)["experience"]
    return logistic_response(m, {"state_duration": state_duration, "racial_minority": racial_minority,
                                 "elderly": elderly, "child_under_10": child_under_10})


def substitute_probability(income, renter, expectation, self_efficacy, coeffs: CoefficientSet | None = None):
    m = (coeffs or _DEFAULT)["substitute"]
    return logistic_response(m, {"income": income, "renter": renter,
                                 "log1p_expectation": np.log1p(expectation), "self_efficacy": self_efficacy})


def preparedness_covariates(vehicle_missing, experience, elderly, renter, forewarning,
                            supermarket_distance, self_efficacy) -> dict:
    return {"vehicle_missing": vehicle_missing, "experience": experience, "elderly": elderly,
            "renter": renter, "forewarning": forewarning, "supermarket_distance": supermarket_distance,
            "self_efficacy": self_efficacy}


def preparedness_logit(covariates: dict, coeffs: CoefficientSet | None = None):
    return _scalar(linear_predictor((coeffs or _DEFAULT)["preparedness"], covariates))


def sigmoid(x):
    return _scalar(expit(x))


def logit(p):
    return math.log(p / (1.0 - p))


_DEFAULT = CoefficientSet()

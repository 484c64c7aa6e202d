"""Single-variable polynomial least squares (degrees 1-4) with R² scoring.

Fitting centers and scales the input before building the power basis and
solves the least-squares problem by orthogonalization (SVD via lstsq), never
by normal equations; the coefficients are then mapped back to the original
frame, so ``prediction = sum(c[i] * x**i)`` holds as stated on the model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateDataError, RankDeficiencyError

MAX_DEGREE = 4


@dataclass
class PolyModel:
    degree: int
    coefficients: np.ndarray  # c0..c_degree in the original x frame
    feature_name: str = "x"
    target_name: str = "y"
    train_r2: float = 0.0

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.float64)
        if not 1 <= self.degree <= MAX_DEGREE:
            raise ConfigError(f"degree must be in [1, {MAX_DEGREE}]")
        if self.coefficients.shape != (self.degree + 1,):
            raise ConfigError("coefficient count must be degree + 1")
        if not np.isfinite(self.coefficients).all():
            raise ConfigError("coefficients must be finite")

    def to_json(self) -> dict:
        return {
            "degree": self.degree,
            "coefficients": [float(c) for c in self.coefficients],
            "feature": self.feature_name,
            "target": self.target_name,
            "train_r2": float(self.train_r2),
        }


def _as_vector(v, name):
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1:
        raise ConfigError(f"{name} must be a 1-D vector")
    return a


def fit_poly(x, y, degree: int, feature_name="x", target_name="y") -> PolyModel:
    """Least-squares polynomial fit of the given degree.

    Inputs are standardized internally (degree-4 Vandermonde matrices on raw
    census scales are badly conditioned); reported coefficients are in the
    original frame.
    """
    if not 1 <= degree <= MAX_DEGREE:
        raise ConfigError(f"degree must be in [1, {MAX_DEGREE}], got {degree}")
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.size != y.size:
        raise ConfigError("x and y must have the same length")
    if x.size < degree + 1:
        raise RankDeficiencyError(
            f"need at least {degree + 1} points for degree {degree}, got {x.size}"
        )
    if np.unique(x).size < degree + 1:
        raise RankDeficiencyError(
            f"need at least {degree + 1} distinct x values for degree {degree}"
        )
    mu = x.mean()
    scale = x.std()
    z = (x - mu) / scale
    basis = np.vander(z, N=degree + 1, increasing=True)
    b, *_ = np.linalg.lstsq(basis, y, rcond=None)
    # Compose p(z) with z = (x - mu)/scale to recover original-frame coefficients.
    p = np.polynomial.Polynomial(b)(np.polynomial.Polynomial([-mu / scale, 1.0 / scale]))
    coef = np.zeros(degree + 1)
    coef[: p.coef.size] = p.coef
    model = PolyModel(
        degree=degree,
        coefficients=coef,
        feature_name=feature_name,
        target_name=target_name,
    )
    model.train_r2 = r2_score(y, predict(model, x))
    return model


def predict(model: PolyModel, x) -> np.ndarray:
    """Evaluate the polynomial at x using Horner's nested form."""
    x = np.asarray(x, dtype=np.float64)
    out = np.full_like(x, model.coefficients[-1])
    for c in model.coefficients[-2::-1]:
        out = out * x + c
    return out


def r2_score(observed, predicted) -> float:
    """Coefficient of determination, 1 - SS_res/SS_tot.  May be negative."""
    obs = _as_vector(observed, "observed")
    pred = _as_vector(predicted, "predicted")
    if obs.size != pred.size:
        raise ConfigError("observed and predicted must have the same length")
    if obs.size < 2:
        raise ConfigError("r2_score needs at least 2 observations")
    if np.all(obs == obs[0]):
        raise DegenerateDataError("observed values have zero variance")
    d = obs - obs.mean()
    ss_tot = float(d @ d)
    resid = obs - pred
    return 1.0 - float(resid @ resid) / ss_tot


@dataclass
class ResidualReport:
    residuals: np.ndarray  # observed - predicted, per row
    rmse: float

    def to_json(self) -> dict:
        return {"residuals": [float(r) for r in self.residuals], "rmse": float(self.rmse)}


def residual_report(model: PolyModel, x, y) -> ResidualReport:
    x = _as_vector(x, "x")
    y = _as_vector(y, "y")
    if x.size != y.size:
        raise ConfigError("x and y must have the same length")
    resid = y - predict(model, x)
    return ResidualReport(residuals=resid, rmse=float(np.sqrt(np.mean(resid**2))))


def residual_spread_ratio(fitted, residuals) -> float:
    """Heteroskedasticity diagnostic: residual std in the top fitted-value
    quartile divided by the bottom quartile.  Roughly 1 means even spread;
    inf if the bottom quartile has no spread at all.  Diagnostic only."""
    f = _as_vector(fitted, "fitted")
    r = _as_vector(residuals, "residuals")
    if f.size != r.size or f.size < 4:
        raise ConfigError("spread ratio needs aligned vectors of at least 4 rows")
    q1, q3 = np.quantile(f, [0.25, 0.75])
    lo = float(r[f <= q1].std())
    hi = float(r[f >= q3].std())
    if lo == 0.0:
        return float("inf")
    return hi / lo

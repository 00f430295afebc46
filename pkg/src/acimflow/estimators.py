"""scikit-learn style wrappers around the model and the explorer.

Rows of ``X`` are design points ``(H, W, L, B_adc)``.  The wrappers hold no
logic of their own; they exist so the models drop into sklearn tooling
(``clone``, ``get_params``, scoring helpers).
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .errors import ValidationError
from .explorer import SearchBounds, brute_force_pareto
from .model import DesignPoint, evaluate, snr_total_db
from .nsga2 import DEFAULT_SEED, GaParams, nsga2_explore
from .profile import TechnologyProfile, default_profile

METRIC_NAMES = ("snr_db", "throughput", "energy_per_op", "area_per_bit")


def _points(X) -> list[DesignPoint]:
    arr = np.asarray(X)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValidationError(f"X must have shape (n, 4) holding (H, W, L, B_adc), got {arr.shape}")
    if not np.all(arr == np.round(arr)):
        raise ValidationError("X must hold integers")
    return [DesignPoint(*(int(v) for v in row)) for row in arr]


class AcimPerformanceModel(BaseEstimator):
    """Closed-form metrics; ``predict`` returns one column per metric."""

    def __init__(self, profile: TechnologyProfile | None = None):
        self.profile = profile

    def fit(self, X=None, y=None):
        self.profile_ = self.profile or default_profile()
        self.feature_names_out_ = np.array(METRIC_NAMES)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "profile_")
        rows = [evaluate(p, self.profile_).as_tuple() for p in _points(X)]
        return np.array(rows, dtype=float).reshape(-1, len(METRIC_NAMES))


class SimplifiedSnrRegressor(RegressorMixin, BaseEstimator):
    """``6 B_adc - 10 log10(H/L) + offset`` fitted by least squares.

    Without ``y`` the target is the full SNR model under ``profile``.  The
    fitted ``offset_`` equals ``k4 - 10 log10(k3 / C_o)``.
    """

    def __init__(self, profile: TechnologyProfile | None = None):
        self.profile = profile

    @staticmethod
    def _base(points: list[DesignPoint]) -> np.ndarray:
        return np.array([6.0 * p.B_adc - 10.0 * math.log10(p.N) for p in points])

    def fit(self, X, y=None):
        points = _points(X)
        if not points:
            raise ValidationError("cannot fit on an empty point set")
        if y is None:
            profile = self.profile or default_profile()
            y = [snr_total_db(p, profile) for p in points]
        y = np.asarray(y, dtype=float).ravel()
        if y.shape != (len(points),):
            raise ValidationError(f"y must have {len(points)} values, got {y.shape}")
        self.offset_ = float(np.mean(y - self._base(points)))
        self.max_error_ = float(np.max(np.abs(self._base(points) + self.offset_ - y)))
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "offset_")
        return self._base(_points(X)) + self.offset_


class ParetoExplorer(BaseEstimator):
    """Frontier of one array size; ``predict`` flags frontier membership."""

    def __init__(
        self,
        array_size: int = 16384,
        max_b_adc: int = 8,
        l_min: int = 2,
        l_max: int = 32,
        method: str = "nsga2",
        population: int = 100,
        generations: int = 100,
        seed: int = DEFAULT_SEED,
        profile: TechnologyProfile | None = None,
    ):
        self.array_size = array_size
        self.max_b_adc = max_b_adc
        self.l_min = l_min
        self.l_max = l_max
        self.method = method
        self.population = population
        self.generations = generations
        self.seed = seed
        self.profile = profile

    def fit(self, X=None, y=None):
        bounds = SearchBounds(self.array_size, self.max_b_adc, self.l_min, self.l_max)
        profile = self.profile or default_profile()
        if self.method == "nsga2":
            ga = GaParams(population=self.population, generations=self.generations, seed=self.seed)
            self.frontier_ = nsga2_explore(bounds, profile, ga).sorted()
        elif self.method == "brute_force":
            self.frontier_ = brute_force_pareto(bounds, profile)
        else:
            raise ValidationError(f"method must be 'nsga2' or 'brute_force', got {self.method!r}")
        self.points_ = np.array([e.point.as_tuple() for e in self.frontier_], dtype=np.int64).reshape(-1, 4)
        self.objectives_ = self.frontier_.objective_matrix()
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "frontier_")
        members = self.frontier_.points()
        return np.array([p in members for p in _points(X)], dtype=bool)

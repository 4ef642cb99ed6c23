"""scikit-learn style wrappers around the solvers.

Scheduling has no ``X``/``y``: ``fit`` takes a :class:`ProblemInstance` and
stores the result in ``schedule_``. The point is the familiar parameter
handling (``get_params``/``set_params``/``clone``) for sweeps, not pipeline
composition.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator

from .errors import ValidationError
from .hetero import BottomConfig
from .homo import TopConfig
from .model import ProblemInstance, Schedule
from .oracle import validate_schedule
from .pipeline import solve


def check_instance(instance) -> ProblemInstance:
    """Reject anything that is not a structurally valid instance."""
    if not isinstance(instance, ProblemInstance):
        raise ValidationError("instance", f"expected ProblemInstance, got {type(instance).__name__}")
    instance.validate()
    return instance


class _Scheduler(BaseEstimator):
    mode = "monolithic"

    def _configs(self):
        return None, None

    def fit(self, instance, y=None):
        inst = check_instance(instance)
        bottom, top = self._configs()
        out = solve(inst, self.mode, lam=self.lam, time_limit_s=self.time_limit_s,
                    buffer_fraction=self.buffer_fraction, bottom=bottom, top=top)
        self.status_ = out.status
        self.schedule_: Schedule | None = out.schedule
        self.details_ = out.details
        self.wall_time_s_ = out.wall_time_s
        self.instance_ = inst
        return self

    def predict(self, instance=None) -> Schedule | None:
        return self.schedule_

    def score(self, instance=None, y=None) -> float:
        """Negated objective, so larger is better; -inf if invalid or missing."""
        inst = instance if instance is not None else self.instance_
        if self.schedule_ is None or validate_schedule(inst, self.schedule_):
            return float("-inf")
        return -self.schedule_.objective(self.lam)


class MonolithicScheduler(_Scheduler):
    mode = "monolithic"

    def __init__(self, lam=1.0, time_limit_s=1800.0, buffer_fraction=None):
        self.lam = lam
        self.time_limit_s = time_limit_s
        self.buffer_fraction = buffer_fraction


class BottomScheduler(_Scheduler):
    mode = "bottom"

    def __init__(self, lam=1.0, time_limit_s=1800.0, buffer_fraction=None, max_splits=20, cp_time_limit_s=5.0):
        self.lam = lam
        self.time_limit_s = time_limit_s
        self.buffer_fraction = buffer_fraction
        self.max_splits = max_splits
        self.cp_time_limit_s = cp_time_limit_s

    def _configs(self):
        return BottomConfig(lam=self.lam, max_splits=self.max_splits, cp_time_limit_s=self.cp_time_limit_s,
                            buffer_fraction=self.buffer_fraction), None


class TopScheduler(_Scheduler):
    mode = "top"

    def __init__(self, lam=1.0, time_limit_s=300.0, buffer_fraction=None, delta=16.0, delta_dist=1.0):
        self.lam = lam
        self.time_limit_s = time_limit_s
        self.buffer_fraction = buffer_fraction
        self.delta = delta
        self.delta_dist = delta_dist

    def _configs(self):
        return None, TopConfig(lam=self.lam, delta=self.delta, delta_dist=self.delta_dist,
                               time_budget_s=self.time_limit_s, buffer_fraction=self.buffer_fraction)


class HybridScheduler(_Scheduler):
    mode = "hybrid"

    def __init__(self, lam=1.0, time_limit_s=300.0, buffer_fraction=None, max_splits=20, cp_time_limit_s=5.0,
                 delta=16.0, delta_dist=1.0):
        self.lam = lam
        self.time_limit_s = time_limit_s
        self.buffer_fraction = buffer_fraction
        self.max_splits = max_splits
        self.cp_time_limit_s = cp_time_limit_s
        self.delta = delta
        self.delta_dist = delta_dist

    def _configs(self):
        return (BottomConfig(lam=self.lam, max_splits=self.max_splits, cp_time_limit_s=self.cp_time_limit_s,
                             buffer_fraction=self.buffer_fraction),
                TopConfig(lam=self.lam, delta=self.delta, delta_dist=self.delta_dist,
                          time_budget_s=self.time_limit_s, buffer_fraction=self.buffer_fraction))

"""Operative tuning of the baseline coefficient from one surface probe.

A stochastic-approximation loop corrects the baseline coefficient after
every measurement using the deviation between measured and modelled probe
temperature.  Three step-size rules are available: the plain harmonic
sequence and two sign-driven rules that hold the step while the residual
keeps its sign.
"""

from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import ConfigError

HARMONIC = "harmonic"
SIGN_RESET = "sign-reset"
SIGN_INCREMENT = "sign-increment"
_VARIANTS = (HARMONIC, SIGN_RESET, SIGN_INCREMENT)


@dataclass(frozen=True)
class StepSequence:
    """Step-size rule k_j for the tuning iteration."""

    variant: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.variant not in _VARIANTS:
            raise ConfigError(f"unknown step sequence {self.variant!r}; "
                              f"choose one of {_VARIANTS}")
        if not np.isfinite(self.a) or self.a <= 0:
            raise ConfigError("step sequence coefficient a must be > 0")
        if self.variant == HARMONIC:
            if not np.isfinite(self.b) or self.b < 0:
                raise ConfigError(
                    "harmonic sequence needs b >= 0: a negative b drives the "
                    "first iterations in the wrong direction")
        elif self.b:
            raise ConfigError(f"{self.variant} takes no b coefficient")


@dataclass
class SaState:
    """Mutable state of one tuning loop."""

    alpha: float
    eps_rel: float = 0.005       # stopping vicinity, relative to the iterate
    m: int = 10                  # stopping window length
    eps_abs: float = 0.0         # absolute vicinity overrides eps_rel when set
    j: int = 1
    n: int = 1                   # denominator state of the sign-driven rules
    last_residual: float | None = None
    rejected: int = 0
    history: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("stopping window m must be >= 1")
        if self.eps_abs < 0 or self.eps_rel < 0:
            raise ConfigError("stopping vicinity must be >= 0")
        self.history = deque(self.history, maxlen=self.m + 1)

    @property
    def eps(self) -> float:
        return self.eps_abs if self.eps_abs else self.eps_rel * abs(self.alpha)


def step_size(seq: StepSequence, state: SaState, residual: float) -> float:
    """Step size for the current iteration; updates the denominator state.

    A residual product of exactly zero counts as a sign change.
    """
    if seq.variant == HARMONIC:
        return seq.a / (seq.b + state.j)
    if state.last_residual is not None:
        if state.last_residual * residual <= 0.0:
            state.n = state.j if seq.variant == SIGN_RESET else state.n + 1
    return seq.a / state.n


def sa_step(state: SaState, measured: float, modelled: float, k: float) -> SaState:
    """One correction alpha <- alpha - k * (measured - modelled).

    Non-finite samples are rejected: the iterate is kept, the rejection
    counted, and the step consumes no iteration.
    """
    if k < 0:
        raise ConfigError("step size must be >= 0")
    if not (np.isfinite(measured) and np.isfinite(modelled)):
        state.rejected += 1
        return state
    residual = measured - modelled
    state.alpha = state.alpha - k * residual
    state.last_residual = residual
    state.j += 1
    state.history.append(state.alpha)
    return state


def check_stop(state: SaState) -> bool:
    """True when the last m iterates all sit within eps of the one m back."""
    if len(state.history) < state.m + 1:
        return False
    base = state.history[0]
    eps = state.eps
    return all(abs(base - h) < eps for h in list(state.history)[1:])


@dataclass
class TuningResult:
    status: str                  # "accepted" | "cap" | "diverged"
    alpha: float
    iterations: int
    rejected: int
    trajectory: list             # rows (j, alpha, k, residual, n)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["j", "alpha", "k", "residual", "n"])
            for row in self.trajectory:
                writer.writerow([row[0]] + [f"{v:.10g}" for v in row[1:4]] + [row[4]])
            writer.writerow([])
            writer.writerow(["status", self.status])
            writer.writerow(["final_alpha", f"{self.alpha:.10g}"])
            writer.writerow(["iterations", self.iterations])
            writer.writerow(["rejected", self.rejected])


def run_tuning(model, measurements, seq: StepSequence, alpha0: float, *,
               bounds=None, eps_rel: float = 0.005, eps_abs: float = 0.0,
               m: int = 10, max_iter: int = 500) -> TuningResult:
    """Drive the tuning loop against a stream of measured temperatures.

    `model` is a callable: given the current coefficient it advances the
    forward model by one sampling interval and returns the modelled probe
    temperature.  `measurements` yields the measured temperature at the
    same instants.  The loop stops on window acceptance, the iteration
    cap, or when the iterate leaves `bounds` (default 0.1x .. 10x the
    start value).
    """
    alpha0 = float(alpha0)
    if bounds is None:
        bounds = (0.1 * alpha0, 10.0 * alpha0)
    lo, hi = (min(bounds), max(bounds))
    state = SaState(alpha=alpha0, eps_rel=eps_rel, eps_abs=eps_abs, m=m)
    state.history.append(alpha0)
    trajectory = []
    status = "cap"
    for measured in measurements:
        if state.j > max_iter:
            break
        modelled = float(model(state.alpha))
        if not (np.isfinite(measured) and np.isfinite(modelled)):
            state.rejected += 1
            continue
        residual = float(measured) - modelled
        k = step_size(seq, state, residual)
        j_now = state.j
        sa_step(state, float(measured), modelled, k)
        trajectory.append((j_now, state.alpha, k, residual, state.n))
        if not (lo <= state.alpha <= hi):
            status = "diverged"
            break
        if check_stop(state):
            status = "accepted"
            state.alpha = state.history[0]   # accept the window base value
            break
    return TuningResult(status=status, alpha=state.alpha,
                        iterations=len(trajectory), rejected=state.rejected,
                        trajectory=trajectory)


class ChtcStochasticTuner(BaseEstimator):
    """Estimator wrapper around the operative tuning loop.

    Parameters mirror `run_tuning`; `fit(measurements)` consumes the
    measurement stream and exposes the accepted coefficient as `alpha_`.
    """

    def __init__(self, model=None, variant: str = HARMONIC, a: float = 1.0,
                 b: float = 0.0, alpha0: float = 1.0, bounds=None,
                 eps_rel: float = 0.005, eps_abs: float = 0.0,
                 m: int = 10, max_iter: int = 500):
        self.model = model
        self.variant = variant
        self.a = a
        self.b = b
        self.alpha0 = alpha0
        self.bounds = bounds
        self.eps_rel = eps_rel
        self.eps_abs = eps_abs
        self.m = m
        self.max_iter = max_iter

    def fit(self, X, y=None):
        """Run the loop over the measurement stream X."""
        if self.model is None:
            raise ConfigError("ChtcStochasticTuner needs a forward-model callable")
        seq = StepSequence(self.variant, self.a, self.b)
        result = run_tuning(self.model, np.asarray(X, dtype=float).reshape(-1),
                            seq, self.alpha0, bounds=self.bounds,
                            eps_rel=self.eps_rel, eps_abs=self.eps_abs,
                            m=self.m, max_iter=self.max_iter)
        self.result_ = result
        self.alpha_ = result.alpha
        self.status_ = result.status
        self.n_iter_ = result.iterations
        return self

    def predict(self, X=None):
        if not hasattr(self, "alpha_"):
            raise NotFittedError("call fit before predict")
        return self.alpha_

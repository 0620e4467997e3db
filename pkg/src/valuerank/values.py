"""Domain types and the contextualized scoring pipeline.

A scenario and each of its candidate actions carry a relevance vector in
[-1, 1] over ``m`` value dimensions.  A person carries a raw preference
vector in [0, 1].  Scoring turns these into the ``n x m`` matrix of
contextualized action scores consumed by the ranking backends.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, StructuralError, ValidationError

logger = logging.getLogger(__name__)

DEFAULT_DIMENSIONS: tuple[str, ...] = (
    "curiosity",
    "energy",
    "security",
    "happiness",
    "intimacy",
    "fairness",
)

DEFAULT_STEEPNESS = 10.0
DEFAULT_SUBJECTIVE_WEIGHT = 0.3

ValueVector = tuple[float, ...]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


@dataclass(frozen=True)
class DimensionSet:
    names: tuple[str, ...] = DEFAULT_DIMENSIONS

    def __post_init__(self) -> None:
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise ValidationError("a dimension set needs at least one dimension")
        problems = [f"dimension {k} has an empty name" for k, n in enumerate(names)
                    if not isinstance(n, str) or not n.strip()]
        seen: set[str] = set()
        for n in names:
            if n in seen:
                problems.append(f"duplicate dimension name {n!r}")
            seen.add(n)
        if problems:
            raise ValidationError("; ".join(problems), problems)

    @property
    def m(self) -> int:
        return len(self.names)

    def __len__(self) -> int:
        return len(self.names)

    def label(self, j: int) -> str:
        return self.names[j] if 0 <= j < len(self.names) else f"#{j}"


def check_vector(
    values: Iterable[float],
    low: float,
    high: float,
    *,
    what: str = "score",
    dimensions: DimensionSet | None = None,
    clamp: bool = False,
) -> ValueVector:
    """Validate (or clamp) a score vector against ``[low, high]``.

    Non-finite entries are always rejected, even with ``clamp=True``.
    """
    out = []
    problems = []
    for j, raw in enumerate(values):
        name = dimensions.label(j) if dimensions else f"#{j}"
        try:
            v = float(raw)
        except (TypeError, ValueError):
            problems.append(f"{what} dimension {name}: {raw!r} is not a number")
            continue
        if not math.isfinite(v):
            problems.append(f"{what} dimension {name}: {v!r} is not finite")
            continue
        if v < low or v > high:
            if clamp:
                clipped = min(max(v, low), high)
                logger.warning("clamped %s dimension %s from %r to %r", what, name, v, clipped)
                v = clipped
            else:
                problems.append(f"{what} dimension {name}: {v!r} outside [{low}, {high}]")
        out.append(v)
    if problems:
        raise ValidationError("; ".join(problems), problems)
    return tuple(out)


def check_relevance(values: Iterable[float], **kwargs: Any) -> ValueVector:
    return check_vector(values, -1.0, 1.0, what=kwargs.pop("what", "relevance"), **kwargs)


def preprocess_preferences(raw: Sequence[float], steepness: float = DEFAULT_STEEPNESS) -> ValueVector:
    """Push raw preferences in [0, 1] toward the extremes with a sigmoid.

    >>> preprocess_preferences([0.5])
    (0.5,)
    """
    if not steepness > 0:
        raise ValidationError(f"steepness must be positive, got {steepness!r}")
    p = np.asarray(check_vector(raw, 0.0, 1.0, what="preference"), dtype=np.float64)
    return tuple(float(x) for x in _sigmoid(steepness * (p - 0.5)))


def discrepancy(relevance: float, preference_t: float) -> float:
    """1 - | |relevance| - preference_t |, always in [0, 1]."""
    check_vector([relevance], -1.0, 1.0, what="relevance")
    check_vector([preference_t], 0.0, 1.0, what="transformed preference")
    return 1.0 - abs(abs(relevance) - preference_t)


def blend(objective: float, discrepancy: float, w: float) -> float:
    """Mix the subjective discrepancy (weight ``w``) with the objective score."""
    if not 0.0 <= w <= 1.0:
        raise ValidationError(f"blend weight must be in [0, 1], got {w!r}")
    return discrepancy * w + objective * (1.0 - w)


def contextualize(action_blend: float, scenario_blend: float) -> float:
    """Scale an action's blended score by sigmoid(|scenario blend|)."""
    return action_blend / (1.0 + math.exp(-abs(scenario_blend)))


class Variant(str, enum.Enum):
    FULL = "full"
    ONLY_ACTION = "only_action"
    NO_PREFERENCE = "no_preference"
    NO_SUBJECTIVE = "no_subjective"
    NO_SCENARIO = "no_scenario"

    @classmethod
    def parse(cls, value: "Variant | str") -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            choices = ", ".join(v.value for v in cls)
            raise ConfigurationError(f"unknown variant {value!r}; expected one of {choices}") from None


@dataclass(frozen=True)
class PreferenceProfile:
    raw: ValueVector
    steepness: float = DEFAULT_STEEPNESS
    transformed: ValueVector = field(init=False)

    def __post_init__(self) -> None:
        raw = check_vector(self.raw, 0.0, 1.0, what="preference")
        object.__setattr__(self, "raw", raw)
        object.__setattr__(self, "transformed", preprocess_preferences(raw, self.steepness))

    @property
    def m(self) -> int:
        return len(self.raw)


@dataclass(frozen=True)
class AnnotatedAction:
    id: str
    text: str
    relevance: ValueVector

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "relevance", check_relevance(self.relevance, what=f"action {self.id!r} relevance")
        )


@dataclass(frozen=True)
class AnnotatedScenario:
    id: str
    text: str
    relevance: ValueVector
    actions: tuple[AnnotatedAction, ...]
    agent_count: int | None = None
    provenance: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "relevance", check_relevance(self.relevance, what=f"scenario {self.id!r} relevance")
        )
        actions = tuple(self.actions)
        object.__setattr__(self, "actions", actions)
        problems = []
        if not actions:
            problems.append(f"scenario {self.id!r} has no actions")
        seen: set[str] = set()
        for a in actions:
            if a.id in seen:
                problems.append(f"scenario {self.id!r}: duplicate action id {a.id!r}")
            seen.add(a.id)
            if len(a.relevance) != len(self.relevance):
                problems.append(
                    f"scenario {self.id!r}: action {a.id!r} has {len(a.relevance)} dimensions, "
                    f"scenario has {len(self.relevance)}"
                )
        if self.agent_count is not None and (
            isinstance(self.agent_count, bool) or not isinstance(self.agent_count, int) or self.agent_count < 1
        ):
            problems.append(f"scenario {self.id!r}: agent_count must be a positive integer")
        if problems:
            raise ValidationError("; ".join(problems), problems)

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def m(self) -> int:
        return len(self.relevance)

    @property
    def action_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.actions)

    def action_matrix(self) -> np.ndarray:
        return np.array([a.relevance for a in self.actions], dtype=np.float64).reshape(self.n, self.m)


@dataclass(frozen=True)
class ScoringConfig:
    w_s: float = DEFAULT_SUBJECTIVE_WEIGHT
    w_a: float = DEFAULT_SUBJECTIVE_WEIGHT
    steepness: float = DEFAULT_STEEPNESS
    variant: Variant = Variant.FULL

    def __post_init__(self) -> None:
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        for name in ("w_s", "w_a"):
            w = getattr(self, name)
            if not 0.0 <= w <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {w!r}")
        if not self.steepness > 0:
            raise ConfigurationError(f"steepness must be positive, got {self.steepness!r}")

    def profile(self, raw: Sequence[float]) -> PreferenceProfile:
        return PreferenceProfile(tuple(raw), steepness=self.steepness)

    def as_dict(self) -> dict[str, Any]:
        return {"w_s": self.w_s, "w_a": self.w_a, "steepness": self.steepness, "variant": self.variant.value}


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoreTrace:
    """Every intermediate of the scoring pipeline for one scenario.

    Scenario-level arrays have shape ``(m,)``; action-level arrays ``(n, m)``.
    ``scaling`` is the per-dimension factor actually applied to the action
    blends (all ones when scenario scaling is disabled).
    """

    variant: Variant
    action_ids: tuple[str, ...]
    preferences: np.ndarray
    scenario_objective: np.ndarray
    scenario_discrepancy: np.ndarray
    scenario_blend: np.ndarray
    scaling: np.ndarray
    action_objective: np.ndarray
    action_discrepancy: np.ndarray
    action_blend: np.ndarray
    contextualized: np.ndarray

    _ARRAYS = (
        "preferences",
        "scenario_objective",
        "scenario_discrepancy",
        "scenario_blend",
        "scaling",
        "action_objective",
        "action_discrepancy",
        "action_blend",
        "contextualized",
    )

    @property
    def n(self) -> int:
        return self.contextualized.shape[0]

    @property
    def m(self) -> int:
        return self.contextualized.shape[1]

    def identical(self, other: "ScoreTrace") -> bool:
        """Bitwise equality of every stage."""
        return (
            self.variant == other.variant
            and self.action_ids == other.action_ids
            and all(
                getattr(self, k).tobytes() == getattr(other, k).tobytes()
                and getattr(self, k).shape == getattr(other, k).shape
                for k in self._ARRAYS
            )
        )

    def to_dict(self) -> dict[str, Any]:
        return {"variant": self.variant.value, "action_ids": list(self.action_ids)} | {
            k: getattr(self, k).tolist() for k in self._ARRAYS
        }


def score_scenario(
    scenario: AnnotatedScenario,
    profile: PreferenceProfile,
    config: ScoringConfig | None = None,
) -> ScoreTrace:
    """Compute the contextualized ``n x m`` score matrix with its trace."""
    config = config or ScoringConfig()
    if profile.m != scenario.m:
        raise StructuralError(
            f"profile has {profile.m} dimensions but scenario {scenario.id!r} has {scenario.m}"
        )
    variant = config.variant
    p = np.asarray(profile.transformed, dtype=np.float64)
    rho_s = np.asarray(scenario.relevance, dtype=np.float64)
    rho_a = scenario.action_matrix()

    d_s = 1.0 - np.abs(np.abs(rho_s) - p)
    d_a = 1.0 - np.abs(np.abs(rho_a) - p)

    if variant is Variant.NO_SUBJECTIVE:
        r_s = rho_s.copy()
        r_a = rho_a.copy()
    else:
        r_s = d_s * config.w_s + rho_s * (1.0 - config.w_s)
        r_a = d_a * config.w_a + rho_a * (1.0 - config.w_a)

    if variant is Variant.NO_SCENARIO:
        scaling = np.ones_like(r_s)
        r = r_a.copy()
    else:
        scaling = _sigmoid(np.abs(r_s))
        r = scaling * r_a

    return ScoreTrace(
        variant=variant,
        action_ids=scenario.action_ids,
        preferences=_frozen(p),
        scenario_objective=_frozen(rho_s),
        scenario_discrepancy=_frozen(d_s),
        scenario_blend=_frozen(r_s),
        scaling=_frozen(scaling),
        action_objective=_frozen(rho_a),
        action_discrepancy=_frozen(d_a),
        action_blend=_frozen(r_a),
        contextualized=_frozen(r),
    )

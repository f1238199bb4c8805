"""Monte Carlo runs of the two-detector singlet experiment.

Each run fixes one angle per side and yields one correlation. Pairs are
sampled as: left uniform ±1, then right = -left with probability
cos^2(dtheta/2), otherwise right = +left. That reproduces the joint law
P(s_l, s_r) = (1 - s_l s_r cos dtheta) / 4 exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .core_streams import LEFT_LABELS, RIGHT_LABELS, SpinStream, canonical_angle, normalize_label


class UnsupportedConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SourceConfig:
    n_pairs: int
    theta_left: float
    theta_right: float
    seed: int = 0
    label_left: str = "a"
    label_right: str = "b"
    # Reserved: photon polarization is rejected as unsupported.
    particle: str = "spin"
    # Informational only (the left measurement happens first); no effect on sampling.
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if int(self.n_pairs) != self.n_pairs or self.n_pairs < 1:
            raise ValueError(f"n_pairs must be a positive integer, got {self.n_pairs!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.particle != "spin":
            raise UnsupportedConfigError(f"unsupported particle type {self.particle!r}: only 'spin' is implemented")
        left, right = normalize_label(self.label_left), normalize_label(self.label_right)
        if left not in LEFT_LABELS or right not in RIGHT_LABELS:
            raise ValueError(f"left label must be a or a', right label b or b'; got {left}, {right}")
        object.__setattr__(self, "n_pairs", int(self.n_pairs))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "theta_left", canonical_angle(self.theta_left))
        object.__setattr__(self, "theta_right", canonical_angle(self.theta_right))
        object.__setattr__(self, "label_left", left)
        object.__setattr__(self, "label_right", right)

    def to_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "theta_left": self.theta_left,
            "theta_right": self.theta_right,
            "seed": self.seed,
            "label_left": self.label_left,
            "label_right": self.label_right,
            "particle": self.particle,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceConfig":
        keys = ("n_pairs", "theta_left", "theta_right", "seed", "label_left", "label_right", "particle")
        return cls(**{k: d[k] for k in keys if k in d})


@dataclass(frozen=True, eq=False)
class PairRun:
    left: SpinStream
    right: SpinStream
    config: SourceConfig

    def __post_init__(self):
        if len(self.left) != len(self.right):
            raise ValueError("left and right streams differ in length")

    @property
    def n(self) -> int:
        return len(self.left)

    @property
    def labels(self) -> tuple[str, str]:
        return self.left.label, self.right.label

    def stream(self, label: str) -> SpinStream:
        label = normalize_label(label)
        if self.left.label == label:
            return self.left
        if self.right.label == label:
            return self.right
        raise KeyError(f"run has labels {self.labels}, not {label!r}")

    def partner(self, label: str) -> SpinStream:
        """The stream on the opposite side from ``label``."""
        label = normalize_label(label)
        if self.left.label == label:
            return self.right
        if self.right.label == label:
            return self.left
        raise KeyError(f"run has labels {self.labels}, not {label!r}")

    def __eq__(self, other):
        if not isinstance(other, PairRun):
            return NotImplemented
        return self.left == other.left and self.right == other.right and self.config == other.config


def joint_probability(theta_left: float, theta_right: float, s_left: int, s_right: int) -> float:
    """Singlet joint probability of outcomes (s_left, s_right)."""
    if s_left not in (1, -1) or s_right not in (1, -1):
        raise ValueError("spins must be +1 or -1")
    return (1.0 - s_left * s_right * math.cos(theta_left - theta_right)) / 4.0


def anti_probability(theta_left: float, theta_right: float) -> float:
    """P(right = -left) = cos^2(dtheta / 2)."""
    return math.cos((theta_left - theta_right) / 2.0) ** 2


def singlet_outcomes(u_left: np.ndarray, u_anti: np.ndarray, theta_left: float, theta_right: float):
    """Map two uniform columns onto singlet (left, right) outcomes as int8 arrays."""
    left = np.where(u_left < 0.5, 1, -1).astype(np.int8)
    anti = u_anti < anti_probability(theta_left, theta_right)
    right = np.where(anti, -left, left).astype(np.int8)
    return left, right


def sample_run(config: SourceConfig, threads: int | None = None) -> PairRun:
    u = rng.pair_uniforms(config.seed, rng.SOURCE_STREAM, config.n_pairs, 2, threads)
    left, right = singlet_outcomes(u[:, 0], u[:, 1], config.theta_left, config.theta_right)
    return PairRun(
        SpinStream(left, config.theta_left, config.label_left),
        SpinStream(right, config.theta_right, config.label_right),
        config,
    )


def marginal_check(run: PairRun) -> dict[str, float]:
    n = run.n
    return {
        "left_plus_fraction": run.left.plus_count() / n,
        "right_plus_fraction": run.right.plus_count() / n,
    }


def run_from_streams(left: SpinStream, right: SpinStream, seed: int = 0) -> PairRun:
    """Wrap two externally supplied streams (e.g. read from files) as a run."""
    config = SourceConfig(len(left), left.angle, right.angle, seed, left.label, right.label)
    return PairRun(left, right, config)

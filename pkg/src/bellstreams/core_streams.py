"""±1 data streams and exact evaluation of the Bell identities.

Identity checks work on integer numerators over the common denominator N,
so a verdict never depends on floating point. The inequality evaluators take
real-valued correlations (analytic or empirical) and compare with a fixed
tolerance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

LABELS = ("a", "a'", "b", "b'")
LEFT_LABELS = ("a", "a'")
RIGHT_LABELS = ("b", "b'")
# b' hangs off a in the usual triple; in the mirror, a' hangs off b.
TRIPLE_LABEL_SETS = ({"a", "b", "b'"}, {"a", "a'", "b"})

# Real-valued inequality comparisons only; identity verdicts are exact.
INEQUALITY_EPS = 1e-12

TWO_PI = 2.0 * math.pi


class StreamError(ValueError):
    """Invalid stream contents or incompatible stream shapes."""


def canonical_angle(theta: float) -> float:
    """Map an angle in radians onto [0, 2pi)."""
    t = math.fmod(float(theta), TWO_PI)
    if t < 0.0:
        t += TWO_PI
    if t >= TWO_PI:
        t = 0.0
    return t + 0.0  # drops a negative zero


def normalize_label(label: str) -> str:
    """Accept ``ap``/``bp`` as file-system friendly spellings of a'/b'."""
    label = label.strip()
    alias = {"ap": "a'", "bp": "b'", "a_prime": "a'", "b_prime": "b'"}
    label = alias.get(label, label)
    if label not in LABELS:
        raise StreamError(f"unknown label {label!r}; expected one of {LABELS}")
    return label


def label_slug(label: str) -> str:
    return normalize_label(label).replace("'", "p")


class SpinStream:
    """Immutable list of ±1 outcomes with its detector angle and label."""

    __slots__ = ("_values", "angle", "label")

    def __init__(self, outcomes: Iterable[int] | np.ndarray, angle: float = 0.0, label: str = "a"):
        arr = np.asarray(outcomes if isinstance(outcomes, np.ndarray) else list(outcomes))
        if arr.ndim != 1:
            raise StreamError("outcomes must be one-dimensional")
        if arr.size == 0:
            raise StreamError("a stream must contain at least one outcome")
        if arr.dtype.kind not in "iu":
            if arr.dtype.kind == "f" and np.all(np.isin(arr, (1.0, -1.0))):
                arr = arr.astype(np.int8)
            else:
                raise StreamError("outcomes must be integers +1 or -1")
        bad = (arr != 1) & (arr != -1)
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise StreamError(f"outcome {arr[i]!r} at index {i} is not +1 or -1")
        values = arr.astype(np.int8, copy=True)
        values.flags.writeable = False
        self._values = values
        self.angle = canonical_angle(angle)
        self.label = normalize_label(label)

    @property
    def outcomes(self) -> np.ndarray:
        """Read-only int8 view of the outcomes."""
        return self._values

    def __len__(self) -> int:
        return int(self._values.size)

    def __iter__(self):
        return iter(self._values.tolist())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpinStream):
            return NotImplemented
        return (
            self.label == other.label
            and self.angle == other.angle
            and np.array_equal(self._values, other._values)
        )

    def __hash__(self) -> int:
        return hash((self.label, self.angle, self._values.tobytes()))

    def __repr__(self) -> str:
        head = ",".join("+1" if v > 0 else "-1" for v in self._values[:6].tolist())
        more = ",..." if len(self) > 6 else ""
        return f"SpinStream(label={self.label!r}, angle={self.angle:.6g}, n={len(self)}, [{head}{more}])"

    def __neg__(self) -> "SpinStream":
        return SpinStream(-self._values, self.angle, self.label)

    def take(self, indices: np.ndarray) -> "SpinStream":
        return SpinStream(self._values[np.asarray(indices, dtype=np.intp)], self.angle, self.label)

    def relabel(self, label: str) -> "SpinStream":
        return SpinStream(self._values, self.angle, label)

    def plus_count(self) -> int:
        return int(np.count_nonzero(self._values > 0))


class Provenance(str, enum.Enum):
    SIMULATED_JOINTLY = "simulated-jointly"
    MATCHED_FROM_RUNS = "matched-from-runs"
    CASCADE_RETRODICTED = "cascade-retrodicted"


class AlignedSet:
    """Three or four equal-length streams sharing one row index.

    Row ``i`` of every stream belongs to the same realization, which is what
    lets one value of ``a`` multiply both ``b`` and ``b'``.
    """

    __slots__ = ("_streams", "provenance")

    def __init__(self, streams: Iterable[SpinStream], provenance: Provenance | str):
        streams = list(streams)
        if len(streams) not in (3, 4):
            raise StreamError(f"an aligned set holds 3 or 4 streams, got {len(streams)}")
        labels = [s.label for s in streams]
        if len(set(labels)) != len(labels):
            raise StreamError(f"duplicate labels in aligned set: {labels}")
        if len(streams) == 3 and set(labels) not in TRIPLE_LABEL_SETS:
            raise StreamError(f"triple labels must be {{a, b, b'}} or its mirror {{a, a', b}}, got {labels}")
        lengths = {len(s) for s in streams}
        if len(lengths) != 1:
            raise StreamError(f"aligned streams must share one length, got {sorted(lengths)}")
        self._streams = {s.label: s for s in streams}
        self.provenance = Provenance(provenance)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(self._streams)

    @property
    def n(self) -> int:
        return len(next(iter(self._streams.values())))

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, label: str) -> SpinStream:
        return self._streams[normalize_label(label)]

    def __contains__(self, label: str) -> bool:
        return normalize_label(label) in self._streams

    def __iter__(self):
        return iter(self._streams.values())

    def __repr__(self) -> str:
        return f"AlignedSet(labels={self.labels}, n={self.n}, provenance={self.provenance.value})"

    @property
    def is_triple(self) -> bool:
        return len(self._streams) == 3

    def correlations(self) -> dict[str, CorrelationValue]:
        """All pairwise correlations keyed like ``"ab'"``, in label order."""
        ordered = [lab for lab in LABELS if lab in self._streams]
        out = {}
        for i, x in enumerate(ordered):
            for y in ordered[i + 1:]:
                out[x + y] = correlation(self._streams[x], self._streams[y])
        return out

    def identity(self) -> IdentityVerdict:
        """Evaluate the Bell identity appropriate to this set's labels."""
        if set(self._streams) == {"a", "a'", "b", "b'"}:
            return check_identity4(self["a"], self["a'"], self["b"], self["b'"])
        if set(self._streams) == {"a", "b", "b'"}:
            return check_identity3(self["a"], self["b"], self["b'"])
        if set(self._streams) == {"a", "a'", "b"}:
            # Mirror image: b plays the common factor.
            return check_identity3(self["b"], self["a"], self["a'"])
        raise StreamError(f"no Bell identity defined for labels {self.labels}")


@dataclass(frozen=True)
class CorrelationValue:
    exact_numerator: int
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise StreamError("correlation needs at least one pair")
        if abs(self.exact_numerator) > self.count:
            raise StreamError("|numerator| exceeds count")

    @property
    def value(self) -> float:
        return self.exact_numerator / self.count

    @property
    def exact(self) -> Fraction:
        return Fraction(self.exact_numerator, self.count)

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> dict:
        return {"value": self.value, "exact_numerator": self.exact_numerator, "count": self.count}


@dataclass(frozen=True)
class IdentityVerdict:
    """Exact verdict ``lhs/N <= rhs/N`` for one of the Bell identities."""

    kind: str
    lhs_numerator: int
    rhs_numerator: int
    scale: int

    @property
    def holds(self) -> bool:
        return self.lhs_numerator <= self.rhs_numerator

    @property
    def slack(self) -> Fraction:
        return Fraction(self.rhs_numerator - self.lhs_numerator, self.scale)

    def to_dict(self) -> dict:
        s = self.slack
        return {
            "kind": self.kind,
            "lhs_numerator": self.lhs_numerator,
            "rhs_numerator": self.rhs_numerator,
            "scale": self.scale,
            "holds": self.holds,
            "slack": float(s),
            "slack_exact": {"numerator": s.numerator, "denominator": s.denominator},
        }


@dataclass(frozen=True)
class InequalityEvaluation:
    lhs: float
    rhs: float
    satisfied: bool
    slack: float

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "satisfied": self.satisfied, "slack": self.slack}


def _values(x: SpinStream | np.ndarray) -> np.ndarray:
    return x.outcomes if isinstance(x, SpinStream) else np.asarray(x)


def _same_length(*streams) -> int:
    lengths = [len(s) for s in streams]
    if len(set(lengths)) != 1:
        raise StreamError(f"stream lengths differ: {lengths}")
    if lengths[0] == 0:
        raise StreamError("empty stream")
    return lengths[0]


def _dot(x: np.ndarray, y: np.ndarray) -> int:
    # int64 accumulation: exact for any N below 2**63.
    return int(np.dot(x.astype(np.int64), y.astype(np.int64)))


def correlation(x: SpinStream, y: SpinStream) -> CorrelationValue:
    n = _same_length(x, y)
    return CorrelationValue(_dot(_values(x), _values(y)), n)


def check_identity3(a: SpinStream, b: SpinStream, bp: SpinStream) -> IdentityVerdict:
    """|sum a b' - sum a b| <= N - sum b b', on integers."""
    n = _same_length(a, b, bp)
    av, bv, bpv = _values(a), _values(b), _values(bp)
    lhs = abs(_dot(av, bpv) - _dot(av, bv))
    rhs = n - _dot(bv, bpv)
    return IdentityVerdict("identity3", lhs, rhs, n)


def check_identity4(a: SpinStream, ap: SpinStream, b: SpinStream, bp: SpinStream) -> IdentityVerdict:
    """|sum ab + sum ab'| + |sum a'b - sum a'b'| <= 2N, on integers."""
    n = _same_length(a, ap, b, bp)
    av, apv, bv, bpv = _values(a), _values(ap), _values(b), _values(bp)
    lhs = abs(_dot(av, bv) + _dot(av, bpv)) + abs(_dot(apv, bv) - _dot(apv, bpv))
    return IdentityVerdict("identity4", lhs, 2 * n, n)


def _check_unit(*values: float) -> list[float]:
    out = []
    for v in values:
        v = float(v)
        if not (-1.0 <= v <= 1.0):
            raise ValueError(f"correlation {v!r} outside [-1, 1]")
        out.append(v)
    return out


def _evaluate(lhs: float, rhs: float) -> InequalityEvaluation:
    return InequalityEvaluation(lhs, rhs, lhs <= rhs + INEQUALITY_EPS, rhs - lhs)


def eval_inequality3(cab: float, cabp: float, cbbp: float) -> InequalityEvaluation:
    """|<ab'> - <ab>| <= 1 - <bb'>."""
    cab, cabp, cbbp = _check_unit(cab, cabp, cbbp)
    return _evaluate(abs(cabp - cab), 1.0 - cbbp)


def eval_inequality4(cab: float, cabp: float, capb: float, capbp: float) -> InequalityEvaluation:
    """|<ab> + <ab'>| + |<a'b> - <a'b'>| <= 2."""
    cab, cabp, capb, capbp = _check_unit(cab, cabp, capb, capbp)
    return _evaluate(abs(cab + cabp) + abs(capb - capbp), 2.0)


def negative_cosine(theta_x: float, theta_y: float) -> float:
    """Singlet correlation -cos(theta_x - theta_y)."""
    return -math.cos(theta_x - theta_y)


def negative_cosine_triple(theta_a: float, theta_b: float, theta_bp: float) -> tuple[float, float, float]:
    """(<ab>, <ab'>, <bb'>) when every pair is assumed to follow -cos."""
    return (
        negative_cosine(theta_a, theta_b),
        negative_cosine(theta_a, theta_bp),
        negative_cosine(theta_b, theta_bp),
    )


def negative_cosine_quadruple(
    theta_a: float, theta_ap: float, theta_b: float, theta_bp: float
) -> tuple[float, float, float, float]:
    """(<ab>, <ab'>, <a'b>, <a'b'>) under the -cos law."""
    return (
        negative_cosine(theta_a, theta_b),
        negative_cosine(theta_a, theta_bp),
        negative_cosine(theta_ap, theta_b),
        negative_cosine(theta_ap, theta_bp),
    )


def correlations_to_dict(values: Mapping[str, CorrelationValue]) -> dict:
    return {k: v.to_dict() for k, v in values.items()}

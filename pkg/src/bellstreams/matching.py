"""Data matching: reorder one run so a shared stream lines up with another run.

Two runs measured with a common setting (say ``a``) produce different ``a``
sequences. Reordering the second run until its ``a`` values agree row by row
with the first turns four streams into three aligned ones, ``{a, b, b'}``.
Chaining a second match on ``b`` against an ``(a', b)`` run gives four.

Matching is greedy and stable: walk the reference's shared stream and take
the earliest unused row of the other run with the same value. Entries left
over once a value class runs out are dropped from both runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_streams import (
    AlignedSet,
    CorrelationValue,
    IdentityVerdict,
    InequalityEvaluation,
    Provenance,
    SpinStream,
    correlation,
    eval_inequality4,
    normalize_label,
)
from .singlet_source import PairRun

ANGLE_TOL = 1e-12
QUAD_ORDERS = ("a-first", "b-first")


class MatchError(ValueError):
    pass


class IdentityViolation(AssertionError):
    """Raised when an aligned set fails its Bell identity, which means a bug."""


def greedy_match(reference: np.ndarray, other: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stable FIFO matching of two ±1 sequences.

    Returns ``(ref_idx, other_idx)`` with ``reference[ref_idx] == other[other_idx]``,
    ``ref_idx`` increasing. The k-th +1 of ``reference`` pairs with the k-th +1
    of ``other`` (same for -1) as long as the other side has one left, which is
    exactly what the sequential earliest-unused scan produces.
    """
    reference = np.asarray(reference)
    other = np.asarray(other)
    ref_parts, oth_parts = [], []
    for v in (1, -1):
        r = np.flatnonzero(reference == v)
        o = np.flatnonzero(other == v)
        m = min(r.size, o.size)
        ref_parts.append(r[:m])
        oth_parts.append(o[:m])
    ref_idx = np.concatenate(ref_parts)
    oth_idx = np.concatenate(oth_parts)
    order = np.argsort(ref_idx, kind="stable")
    return ref_idx[order], oth_idx[order]


def _angles_equal(x: float, y: float) -> bool:
    d = abs(x - y)
    return min(d, 2 * math.pi - d) <= ANGLE_TOL


def _require_shared(reference: PairRun, other: PairRun, label: str) -> None:
    for name, run in (("reference", reference), ("other", other)):
        if label not in run.labels:
            raise MatchError(f"{name} run has labels {run.labels}; shared label {label!r} not present")
    ra, oa = reference.stream(label).angle, other.stream(label).angle
    if not _angles_equal(ra, oa):
        raise MatchError(f"angle mismatch on shared label {label!r}: {ra!r} vs {oa!r}")


def _run_key(run: PairRun) -> str:
    return "".join(run.labels)


@dataclass
class MatchResult:
    aligned: AlignedSet | None
    retained: int
    dropped_from_each: dict[str, int]
    retention_fraction: float
    # run key -> original row index feeding each aligned row
    permutation: dict[str, np.ndarray]
    shared_labels: tuple[str, ...] = ()
    order: str | None = None
    identity: IdentityVerdict | None = None

    @property
    def degenerate(self) -> bool:
        return self.retained == 0

    def correlations(self) -> dict[str, CorrelationValue]:
        return {} if self.aligned is None else self.aligned.correlations()

    def to_dict(self, include_permutation: bool = True) -> dict:
        d = {
            "retained": self.retained,
            "dropped_from_each": dict(self.dropped_from_each),
            "retention_fraction": self.retention_fraction,
            "degenerate": self.degenerate,
            "shared_labels": list(self.shared_labels),
            "labels": [] if self.aligned is None else list(self.aligned.labels),
            "provenance": Provenance.MATCHED_FROM_RUNS.value,
            "correlations": {k: v.to_dict() for k, v in self.correlations().items()},
            "identity": None if self.identity is None else self.identity.to_dict(),
        }
        if self.order is not None:
            d["order"] = self.order
        if include_permutation:
            d["permutation"] = {k: v.tolist() for k, v in self.permutation.items()}
        return d


def _assemble(runs: dict[str, PairRun], perm: dict[str, np.ndarray], picks: list[tuple[str, str]],
              shared: tuple[str, ...], order: str | None = None) -> MatchResult:
    """Build the aligned set from ``(run key, label)`` picks under ``perm``."""
    retained = int(next(iter(perm.values())).size)
    n_min = min(r.n for r in runs.values())
    dropped = {k: r.n - retained for k, r in runs.items()}
    if retained == 0:
        return MatchResult(None, 0, dropped, 0.0, perm, shared, order)
    streams = [runs[k].stream(lab).take(perm[k]) for k, lab in picks]
    aligned = AlignedSet(streams, Provenance.MATCHED_FROM_RUNS)
    # Soundness: every run's copy of a shared label must agree row by row.
    for lab in shared:
        copies = [runs[k].stream(lab).take(perm[k]).outcomes for k in perm if lab in runs[k].labels]
        for c in copies[1:]:
            if not np.array_equal(copies[0], c):
                raise AssertionError(f"matched {lab!r} streams disagree")
    return MatchResult(aligned, retained, dropped, retained / n_min, perm, shared, order)


def match_on_label(reference: PairRun, other: PairRun, shared_label: str) -> MatchResult:
    """Reorder ``other`` so its ``shared_label`` stream equals the reference's."""
    label = normalize_label(shared_label)
    _require_shared(reference, other, label)
    rk, ok = _run_key(reference), _run_key(other)
    if rk == ok:
        raise MatchError(f"both runs carry labels {reference.labels}; nothing to complete")
    ref_idx, oth_idx = greedy_match(reference.stream(label).outcomes, other.stream(label).outcomes)
    runs = {rk: reference, ok: other}
    perm = {rk: ref_idx, ok: oth_idx}
    picks = [(rk, label), (rk, reference.partner(label).label), (ok, other.partner(label).label)]
    return _assemble(runs, perm, picks, (label,))


def _check_identity(result: MatchResult) -> MatchResult:
    if result.aligned is not None:
        verdict = result.aligned.identity()
        if not verdict.holds:
            raise IdentityViolation(f"aligned set violates {verdict.kind}: {verdict}")
        result.identity = verdict
    return result


def build_triple(run_ab: PairRun, run_abp: PairRun) -> MatchResult:
    """Align ``(a, b)`` and ``(a, b')`` runs into ``{a, b, b'}``."""
    if set(run_ab.labels) != {"a", "b"}:
        raise MatchError(f"first run must carry (a, b), got {run_ab.labels}")
    if set(run_abp.labels) != {"a", "b'"}:
        raise MatchError(f"second run must carry (a, b'), got {run_abp.labels}")
    return _check_identity(match_on_label(run_ab, run_abp, "a"))


def build_quadruple(run_ab: PairRun, run_abp: PairRun, run_apb: PairRun, order: str = "a-first") -> MatchResult:
    """Align ``(a, b)``, ``(a, b')`` and ``(a', b)`` runs into ``{a, a', b, b'}``.

    The default order matches ``(a, b')`` on ``a`` first, then ``(a', b)`` on
    ``b`` against the already truncated triple. ``order="b-first"`` swaps the
    two stages.
    """
    for run, want in ((run_ab, {"a", "b"}), (run_abp, {"a", "b'"}), (run_apb, {"a'", "b"})):
        if set(run.labels) != want:
            raise MatchError(f"expected a run with labels {sorted(want)}, got {run.labels}")
    if order not in QUAD_ORDERS:
        raise MatchError(f"order must be one of {QUAD_ORDERS}")
    _require_shared(run_ab, run_abp, "a")
    _require_shared(run_ab, run_apb, "b")

    k_ab, k_abp, k_apb = _run_key(run_ab), _run_key(run_abp), _run_key(run_apb)
    a_ref, b_ref = run_ab.stream("a").outcomes, run_ab.stream("b").outcomes
    if order == "a-first":
        r1, o1 = greedy_match(a_ref, run_abp.stream("a").outcomes)
        r2, o2 = greedy_match(b_ref[r1], run_apb.stream("b").outcomes)
        perm = {k_ab: r1[r2], k_abp: o1[r2], k_apb: o2}
    else:
        r1, o1 = greedy_match(b_ref, run_apb.stream("b").outcomes)
        r2, o2 = greedy_match(a_ref[r1], run_abp.stream("a").outcomes)
        perm = {k_ab: r1[r2], k_apb: o1[r2], k_abp: o2}
    runs = {k_ab: run_ab, k_abp: run_abp, k_apb: run_apb}
    picks = [(k_ab, "a"), (k_apb, "a'"), (k_ab, "b"), (k_abp, "b'")]
    return _check_identity(_assemble(runs, perm, picks, ("a", "b"), order))


UNREALIZABLE = "no ±1 data streams can have these correlations"


@dataclass
class OverdeterminationReport:
    induced: CorrelationValue
    direct: CorrelationValue
    others: dict[str, CorrelationValue]
    induced_eval: InequalityEvaluation
    direct_eval: InequalityEvaluation
    notes: list[str] = field(default_factory=list)

    @property
    def difference(self) -> float:
        return self.direct.value - self.induced.value

    def to_dict(self) -> dict:
        return {
            "induced_apbp": self.induced.to_dict(),
            "direct_apbp": self.direct.to_dict(),
            "difference": self.difference,
            "other_correlations": {k: v.to_dict() for k, v in self.others.items()},
            "chsh_with_induced": self.induced_eval.to_dict(),
            "chsh_with_direct": self.direct_eval.to_dict(),
            "notes": list(self.notes),
        }


def overdetermination_report(quad: MatchResult, run_apbp: PairRun) -> OverdeterminationReport:
    """Compare the induced <a'b'> with one measured in a separate run."""
    if quad.aligned is None or quad.aligned.is_triple:
        raise MatchError("overdetermination needs a non-degenerate quadruple match")
    if set(run_apbp.labels) != {"a'", "b'"}:
        raise MatchError(f"direct run must carry (a', b'), got {run_apbp.labels}")
    for lab in ("a'", "b'"):
        qa, ra = quad.aligned[lab].angle, run_apbp.stream(lab).angle
        if not _angles_equal(qa, ra):
            raise MatchError(f"angle mismatch on {lab!r}: {qa!r} vs {ra!r}")
    al = quad.aligned
    cab = correlation(al["a"], al["b"])
    cabp = correlation(al["a"], al["b'"])
    capb = correlation(al["a'"], al["b"])
    induced = correlation(al["a'"], al["b'"])
    direct = correlation(run_apbp.stream("a'"), run_apbp.stream("b'"))
    ind_eval = eval_inequality4(cab.value, cabp.value, capb.value, induced.value)
    dir_eval = eval_inequality4(cab.value, cabp.value, capb.value, direct.value)
    notes = []
    if not dir_eval.satisfied:
        notes.append(f"direct substitution: {UNREALIZABLE}")
    if not ind_eval.satisfied:  # cannot happen for matched data
        notes.append(f"induced substitution: {UNREALIZABLE}")
    return OverdeterminationReport(induced, direct, {"ab": cab, "ab'": cabp, "a'b": capb}, ind_eval, dir_eval, notes)

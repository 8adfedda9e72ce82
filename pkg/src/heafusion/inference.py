"""Analogy-based phase prediction for candidate alloys.

A candidate is compared against every labeled alloy it shares elements
with. Each such host defines a substitution: replace the host elements
missing from the candidate with the candidate elements missing from the
host. The store's belief that those two combinations are substitutable
becomes evidence that the candidate inherits (host positive) or mirrors
(host negative) the host's class. All analogy evidence is pooled with
Dempster's rule and scored by the pignistic probability of the positive
class.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from .alloys import Alloy, Dataset, LabeledAlloy, alloy_masks
from .belief import BinaryMass, pignistic
from .errors import CandidateInTraining, TotalConflict
from .md_evidence import CombinationPair, SimilarityStore

__all__ = [
    "Analogy",
    "Prediction",
    "enumerate_analogies",
    "evidence_from_analogy",
    "predict",
    "predict_batch",
    "classify",
]


@dataclass(frozen=True)
class Analogy:
    """Host alloy plus the substitution (replaced <- replacement) that
    turns it into the candidate."""

    host: LabeledAlloy
    replaced: tuple[str, ...]
    replacement: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.replaced or not self.replacement:
            raise ValueError("substitution sides must be non-empty")
        if set(self.replaced) & set(self.replacement):
            raise ValueError("substitution sides must be disjoint")
        if not set(self.replaced) <= self.host.alloy.element_set:
            raise ValueError("replaced combination must be part of the host")

    def candidate_elements(self) -> frozenset[str]:
        return (self.host.alloy.element_set - set(self.replaced)) | set(self.replacement)


@dataclass(frozen=True)
class Prediction:
    """Combined class mass for a candidate with its pignistic score."""

    candidate: Alloy
    mass: BinaryMass
    score: float
    n_analogies: int

    def __post_init__(self) -> None:
        if abs(self.score - pignistic(self.mass)) > 1e-12:
            raise ValueError("score must equal the pignistic probability of the mass")
        if self.n_analogies < 0:
            raise ValueError("n_analogies must be non-negative")


def _default_max_size(training: Dataset, candidates: Sequence[Alloy]) -> int:
    sizes = [len(la.alloy.elements) for la in training.alloys]
    sizes.extend(len(c.elements) for c in candidates)
    return max(sizes, default=2) - 1


def enumerate_analogies(
    candidate: Alloy, training: Dataset, max_subst_size: int | None = None
) -> list[Analogy]:
    """All substitutions from training hosts onto the candidate, in training
    order. Hosts disjoint from the candidate or nested with it (one set
    containing the other) cannot express a substitution and yield nothing."""
    if max_subst_size is None:
        max_subst_size = _default_max_size(training, [candidate])
    cand = candidate.element_set
    out: list[Analogy] = []
    for la in training.alloys:
        host = la.alloy.element_set
        if host == cand:
            raise CandidateInTraining(f"candidate {candidate} is in the training set")
        if not host & cand:
            continue
        replaced = host - cand
        replacement = cand - host
        if not replaced or not replacement:
            continue
        if max(len(replaced), len(replacement)) > max_subst_size:
            continue
        out.append(Analogy(la, tuple(sorted(replaced)), tuple(sorted(replacement))))
    return out


def evidence_from_analogy(analogy: Analogy, store: SimilarityStore) -> BinaryMass:
    """Class evidence from one substitution: similarity s backs the host's
    class, the rest stays on the frame. Absent pairs are vacuous."""
    s = store.similarity(CombinationPair(analogy.replaced, analogy.replacement))
    if analogy.host.label:
        return BinaryMass(s, 0.0, 1.0 - s)
    return BinaryMass(0.0, s, 1.0 - s)


def _fold_masked(
    cand_mask: int,
    train_masks: Sequence[int],
    train_labels: Sequence[bool],
    sim_view: dict[tuple[int, int], float],
    max_size: int,
) -> tuple[float, float, float, int]:
    """Dempster fold over all analogy evidence for one candidate bitmask."""
    a = b = 0.0
    u = 1.0
    n = 0
    for host_mask, label in zip(train_masks, train_labels):
        inter = host_mask & cand_mask
        if not inter:
            continue
        replaced = host_mask & ~cand_mask
        replacement = cand_mask & ~host_mask
        if not replaced or not replacement:
            continue
        if replaced.bit_count() > max_size or replacement.bit_count() > max_size:
            continue
        n += 1
        key = (replaced, replacement) if replaced < replacement else (replacement, replaced)
        s = sim_view.get(key, 0.0)
        if s == 0.0:
            continue
        if label:
            raw_a = a + u * s
            raw_b = b * (1.0 - s)
        else:
            raw_a = a * (1.0 - s)
            raw_b = b + u * s
        raw_u = u * (1.0 - s)
        # renormalizing by the computed sum (not the algebraic 1 - conflict)
        # keeps the state on the simplex; dividing by the analytic
        # denominator lets rounding drift compound geometrically over long
        # conflicting folds
        total = raw_a + raw_b + raw_u
        if total < 1e-12:
            raise TotalConflict("contradictory certain analogy evidence")
        a, b, u = raw_a / total, raw_b / total, raw_u / total
    return a, b, u, n


def _fold_chunk(
    cand_masks: Sequence[int],
    train_masks: Sequence[int],
    train_labels: Sequence[bool],
    sim_view: dict[tuple[int, int], float],
    max_size: int,
) -> list[tuple[float, float, float, int]]:
    return [_fold_masked(c, train_masks, train_labels, sim_view, max_size) for c in cand_masks]


def predict_batch(
    candidates: Sequence[Alloy],
    training: Dataset,
    store: SimilarityStore,
    max_subst_size: int | None = None,
    jobs: int = 1,
) -> list[Prediction]:
    """Predict many candidates against one training set and store.

    Pure in its inputs; candidates are processed independently, so the
    batch may be chunked across worker processes.
    """
    if max_subst_size is None:
        max_subst_size = _default_max_size(training, candidates)
    training_sets = {la.alloy.elements for la in training.alloys}
    index = training.element_index()
    extra = sorted({e for c in candidates for e in c.elements} - set(training.universe))
    for offset, e in enumerate(extra):
        index[e] = len(training.universe) + offset
    train_masks = alloy_masks((la.alloy for la in training.alloys), index)
    train_labels = [la.label for la in training.alloys]
    sim_view = store.mask_view(index)
    cand_masks = []
    for c in candidates:
        if c.elements in training_sets:
            raise CandidateInTraining(f"candidate {c} is in the training set")
        cand_masks.append(sum(1 << index[e] for e in c.elements))

    jobs = max(1, jobs)
    if jobs == 1 or len(candidates) < 256:  # pool overhead beats small batches
        folded = _fold_chunk(cand_masks, train_masks, train_labels, sim_view, max_subst_size)
    else:
        chunks = [cand_masks[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    _fold_chunk,
                    chunks,
                    [train_masks] * jobs,
                    [train_labels] * jobs,
                    [sim_view] * jobs,
                    [max_subst_size] * jobs,
                )
            )
        folded = [None] * len(candidates)  # type: ignore[list-item]
        for lane, part in enumerate(parts):
            for slot, value in zip(range(lane, len(candidates), jobs), part):
                folded[slot] = value
    out = []
    for candidate, (a, b, u, n) in zip(candidates, folded):
        mass = BinaryMass(a, b, u)
        out.append(Prediction(candidate, mass, pignistic(mass), n))
    return out


def predict(
    candidate: Alloy,
    training: Dataset,
    store: SimilarityStore,
    max_subst_size: int | None = None,
) -> Prediction:
    """Single-candidate convenience wrapper around `predict_batch`."""
    return predict_batch([candidate], training, store, max_subst_size)[0]


def classify(p: Prediction, threshold: float = 0.5) -> bool:
    """Positive iff the score strictly exceeds the threshold (ties are
    negative, so the positive class needs positive evidence)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold!r}")
    return p.score > threshold

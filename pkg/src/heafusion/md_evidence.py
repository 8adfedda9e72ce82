"""Substitutability evidence extracted from labeled alloy datasets.

Every pair of alloys that shares elements and differs on both sides is
one piece of evidence about its pair of difference combinations, judged
under the shared elements as context: mass alpha lands on {similar} when
the labels agree and on {dissimilar} when they differ, the rest on the
full frame. Per-pair evidence is pooled with Dempster's rule into a
sparse similarity store.

The pair scan is the hot loop; alloys are folded to integer bitmasks so a
14,950-alloy dataset stays tractable. Because every evidence mass for one
pair takes only two possible values, the scan accumulates (agree, disagree)
counts and the combined mass is materialized in closed form, which is
exactly the associative Dempster fold of the individual pieces.
"""

from __future__ import annotations

import csv
import hashlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .alloys import Dataset, LabeledAlloy, alloy_masks, mask_to_elements
from .belief import BinaryMass, combine, vacuous
from .errors import AlphaOutOfRange, TotalConflict

__all__ = [
    "CombinationPair",
    "ExtractionConfig",
    "SimilarityStore",
    "evidence_from_pair",
    "extract_all",
    "extract_counts",
    "counts_to_store",
    "mass_from_counts",
    "similarity_from_counts",
    "combine_stores",
    "read_store",
    "write_store",
]


@dataclass(frozen=True, order=True)
class CombinationPair:
    """Unordered pair of disjoint element combinations keying evidence.

    Sides are kept as sorted tuples and the smaller side (lexicographically)
    is stored first, so equal pairs compare and hash equal regardless of
    argument order.
    """

    first: tuple[str, ...]
    second: tuple[str, ...]

    def __init__(self, first: Iterable[str], second: Iterable[str]):
        a = tuple(sorted(first))
        b = tuple(sorted(second))
        if not a or not b:
            raise ValueError("both sides of a combination pair must be non-empty")
        if len(set(a)) != len(a) or len(set(b)) != len(b):
            raise ValueError("combination sides must not contain duplicates")
        if set(a) & set(b):
            raise ValueError(f"combination sides must be disjoint, got {a} and {b}")
        if b < a:
            a, b = b, a
        object.__setattr__(self, "first", a)
        object.__setattr__(self, "second", b)

    def __str__(self) -> str:
        return f"({'-'.join(self.first)}, {'-'.join(self.second)})"


@dataclass(frozen=True)
class ExtractionConfig:
    """Extraction parameters: evidence weight alpha, largest side size kept."""

    alpha: float = 0.1
    max_subst_size: int | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.max_subst_size is not None and self.max_subst_size < 1:
            raise ValueError(f"max_subst_size must be >= 1, got {self.max_subst_size}")


@dataclass(frozen=True)
class SimilarityStore:
    """Sparse map from CombinationPair to combined substitutability mass.

    Lookup of an absent pair is vacuous (total uncertainty). Symmetry in
    the two sides is guaranteed by the canonical pair key. Treat as
    immutable once built.
    """

    entries: dict[CombinationPair, BinaryMass] = field(default_factory=dict)

    def get(self, pair: CombinationPair) -> BinaryMass:
        return self.entries.get(pair, vacuous())

    def similarity(self, pair: CombinationPair) -> float:
        return self.entries[pair].m_first if pair in self.entries else 0.0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, pair: CombinationPair) -> bool:
        return pair in self.entries

    def items(self) -> Iterator[tuple[CombinationPair, BinaryMass]]:
        return iter(self.entries.items())

    def mask_view(self, index: Mapping[str, int]) -> dict[tuple[int, int], float]:
        """Similarity (m_first) keyed by bitmask pair for hot-loop lookups.

        Entries naming elements outside the index cannot be reached by any
        substitution within that universe and are skipped.
        """
        view: dict[tuple[int, int], float] = {}
        for pair, mass in self.entries.items():
            try:
                a = sum(1 << index[e] for e in pair.first)
                b = sum(1 << index[e] for e in pair.second)
            except KeyError:
                continue
            view[(a, b) if a < b else (b, a)] = mass.m_first
        return view

    def rows(self) -> list[tuple[str, str, float, float, float]]:
        """Canonical row form used by serialization and hashing."""
        out = []
        for pair in sorted(self.entries):
            m = self.entries[pair]
            out.append(("-".join(pair.first), "-".join(pair.second), m.m_first, m.m_second, m.m_both))
        return out

    def content_hash(self) -> str:
        digest = hashlib.sha256()
        for row in self.rows():
            digest.update(f"{row[0]},{row[1]},{row[2]:.17g},{row[3]:.17g},{row[4]:.17g}\n".encode())
        return digest.hexdigest()


def evidence_from_pair(
    a: LabeledAlloy, b: LabeledAlloy, alpha: float
) -> tuple[CombinationPair, BinaryMass] | None:
    """Single-pair evidence, or None when the pair carries no information.

    None cases: the alloys share no element (no context), are the same set,
    or one contains the other (an empty substitution side).
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    sa, sb = a.alloy.element_set, b.alloy.element_set
    if not sa & sb:
        return None
    ct = sa - sb
    cv = sb - sa
    if not ct or not cv:
        return None
    pair = CombinationPair(ct, cv)
    if a.label == b.label:
        return pair, BinaryMass(alpha, 0.0, 1.0 - alpha)
    return pair, BinaryMass(0.0, alpha, 1.0 - alpha)


def _scan_partition(
    masks: Sequence[int],
    labels: Sequence[bool],
    max_size: int,
    n_partitions: int,
    partition: int,
) -> dict[tuple[int, int], list[int]]:
    """Count (agree, disagree) evidence for outer indices i ≡ partition (mod n)."""
    counts: dict[tuple[int, int], list[int]] = {}
    n = len(masks)
    for i in range(partition, n, n_partitions):
        mi = masks[i]
        li = labels[i]
        for j in range(i + 1, n):
            mj = masks[j]
            if not mi & mj:
                continue
            ct = mi & ~mj
            cv = mj & ~mi
            if not ct or not cv:
                continue
            if ct.bit_count() > max_size or cv.bit_count() > max_size:
                continue
            key = (ct, cv) if ct < cv else (cv, ct)
            slot = counts.get(key)
            if slot is None:
                slot = [0, 0]
                counts[key] = slot
            slot[0 if labels[j] == li else 1] += 1
    return counts


def extract_counts(
    dataset: Dataset,
    max_subst_size: int | None = None,
    jobs: int = 1,
) -> dict[tuple[int, int], tuple[int, int]]:
    """Per-pair (agree, disagree) evidence counts, keyed by bitmask pair.

    The counts are a sufficient statistic for the combined mass at any
    alpha, which is what makes the alpha grid search affordable. The pair
    scan may be partitioned across processes; partial counts merge by
    addition, so the result is independent of partitioning.
    """
    masks = alloy_masks((la.alloy for la in dataset.alloys), dataset.element_index())
    labels = [la.label for la in dataset.alloys]
    if max_subst_size is None:
        max_subst_size = max((len(la.alloy.elements) for la in dataset.alloys), default=2) - 1
    jobs = max(1, jobs)
    if jobs == 1 or len(masks) < 512:  # pool overhead beats small scans
        partials = [_scan_partition(masks, labels, max_subst_size, 1, 0)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            partials = list(
                pool.map(
                    _scan_partition,
                    [masks] * jobs,
                    [labels] * jobs,
                    [max_subst_size] * jobs,
                    [jobs] * jobs,
                    range(jobs),
                )
            )
    merged: dict[tuple[int, int], list[int]] = {}
    for part in partials:
        for key, (agree, disagree) in part.items():
            slot = merged.get(key)
            if slot is None:
                merged[key] = [agree, disagree]
            else:
                slot[0] += agree
                slot[1] += disagree
    return {key: (a, d) for key, (a, d) in merged.items()}


def mass_from_counts(n_agree: int, n_disagree: int, alpha: float) -> BinaryMass:
    """Dempster fold of n_agree agreeing and n_disagree disagreeing pieces.

    Equals combining n_agree copies of (alpha, 0, 1-alpha) with n_disagree
    copies of (0, alpha, 1-alpha) in any order. p and q are the residual
    ignorance of each side; the denominator p + q - p*q is the total
    non-conflicting mass, written this way to stay stable when both sides
    are large.
    """
    if not 0.0 < alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    p = (1.0 - alpha) ** n_agree
    q = (1.0 - alpha) ** n_disagree
    denom = p + q - p * q
    if denom <= 0.0:
        raise TotalConflict(
            f"evidence counts ({n_agree}, {n_disagree}) at alpha={alpha} leave no mass"
        )
    return BinaryMass((1.0 - p) * q / denom, p * (1.0 - q) / denom, p * q / denom)


def similarity_from_counts(n_agree: int, n_disagree: int, alpha: float) -> float:
    """m({similar}) of `mass_from_counts` without building the mass object;
    grid-search hot path."""
    p = (1.0 - alpha) ** n_agree
    q = (1.0 - alpha) ** n_disagree
    denom = p + q - p * q
    if denom <= 0.0:
        raise TotalConflict(
            f"evidence counts ({n_agree}, {n_disagree}) at alpha={alpha} leave no mass"
        )
    return (1.0 - p) * q / denom


def counts_to_store(
    counts: Mapping[tuple[int, int], tuple[int, int]],
    alpha: float,
    universe: Sequence[str],
) -> SimilarityStore:
    entries: dict[CombinationPair, BinaryMass] = {}
    for (mask_a, mask_b), (agree, disagree) in counts.items():
        pair = CombinationPair(mask_to_elements(mask_a, universe), mask_to_elements(mask_b, universe))
        entries[pair] = mass_from_counts(agree, disagree, alpha)
    return SimilarityStore(entries)


def extract_all(dataset: Dataset, config: ExtractionConfig, jobs: int = 1) -> SimilarityStore:
    """Scan all alloy pairs and pool their evidence into a similarity store."""
    counts = extract_counts(dataset, config.max_subst_size, jobs=jobs)
    return counts_to_store(counts, config.alpha, dataset.universe)


def combine_stores(stores: Iterable[SimilarityStore]) -> SimilarityStore:
    """Dempster-combine stores entry-wise over the union of their keys.

    Absent entries are vacuous and contribute nothing; this is the merge
    step for partial stores built from a partitioned pair scan.
    """
    entries: dict[CombinationPair, BinaryMass] = {}
    for store in stores:
        for pair, mass in store.items():
            held = entries.get(pair)
            entries[pair] = mass if held is None else combine(held, mass)
    return SimilarityStore(entries)


def write_store(store: SimilarityStore, path: str | Path) -> None:
    """Serialize a store as CSV; floats carry 17 significant digits so the
    round-trip is bit-exact."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["combo_a", "combo_b", "m_similar", "m_dissimilar", "m_uncertain"])
        for combo_a, combo_b, m_sim, m_dis, m_unc in store.rows():
            writer.writerow([combo_a, combo_b, f"{m_sim:.17g}", f"{m_dis:.17g}", f"{m_unc:.17g}"])


def read_store(path: str | Path) -> SimilarityStore:
    path = Path(path)
    entries: dict[CombinationPair, BinaryMass] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if not row:
                continue
            pair = CombinationPair(row[0].split("-"), row[1].split("-"))
            entries[pair] = BinaryMass(float(row[2]), float(row[3]), float(row[4]))
    return SimilarityStore(entries)

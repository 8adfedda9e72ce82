"""Expert-judgment evidence ingested from structured LLM response files.

Responses are never fetched live: prompts are generated for offline
querying and the normalized answers come back as CSV. Each (pair, domain)
answer maps to a substitutability mass with confidence weight beta; one
similarity store is built per knowledge domain so the fusion step can
weight domains independently.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .belief import BinaryMass, combine
from .errors import BetaOutOfRange, ParseError
from .md_evidence import CombinationPair, SimilarityStore

DEFAULT_DOMAINS: tuple[str, ...] = (
    "CorrosionScience",
    "MaterialsMechanics",
    "Metallurgy",
    "SolidStatePhysics",
    "MaterialsScience",
)

_Q1 = (
    "As an expert in {domain}, do you have sufficient knowledge or data to "
    "assess the substitutability of the element combination {a} with {b} in "
    "equiatomic alloys? Answer Yes or No."
)
_Q2 = (
    "If the answer to the first question is Yes, rate their substitutability "
    "as High, Medium, or Low."
)

_YES_NO = {"yes": True, "no": False}
_RATINGS = ("High", "Medium", "Low")


def default_beta(n_domains: int = len(DEFAULT_DOMAINS)) -> float:
    """Balanced confidence weight: one part per knowledge domain in use.

    Capped at 0.5 so a single-domain run stays inside the open (0, 1)
    interval the mass mapping requires.
    """
    return 1.0 / max(n_domains, 2)


@dataclass(frozen=True)
class LlmConfig:
    """Confidence weight for expert answers."""

    beta: float = default_beta()

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise BetaOutOfRange(f"beta must lie in (0, 1), got {self.beta!r}")


@dataclass(frozen=True)
class LlmResponse:
    """One normalized answer: q1 is the knowledge gate, q2 the rating.

    q2 must be present exactly when q1 is Yes.
    """

    pair: CombinationPair
    domain: str
    q1: bool
    q2: str | None = None

    def __post_init__(self) -> None:
        if not self.domain:
            raise ValueError("domain must be non-empty")
        if self.q1 and self.q2 not in _RATINGS:
            raise ValueError(f"q1=Yes requires a rating in {_RATINGS}, got {self.q2!r}")
        if not self.q1 and self.q2 is not None:
            raise ValueError("q1=No forbids a rating")


def generate_prompts(
    pairs: Sequence[CombinationPair], domains: Sequence[str]
) -> list[dict[str, str]]:
    """One two-question prompt record per (pair, domain), pair-major order."""
    records = []
    for pair in pairs:
        a = "-".join(pair.first)
        b = "-".join(pair.second)
        for domain in domains:
            records.append(
                {
                    "pair_a": a,
                    "pair_b": b,
                    "domain": domain,
                    "question1": _Q1.format(domain=domain, a=a, b=b),
                    "question2": _Q2,
                }
            )
    return records


def write_prompts(records: Iterable[Mapping[str, str]], path: str | Path) -> None:
    """Write prompt records as JSON lines."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(dict(record), sort_keys=True) + "\n")


def parse_responses(path: str | Path, delimiter: str = "-") -> list[LlmResponse]:
    """Load responses from CSV columns element_a,element_b,domain,q1,q2.

    Combination cells may be delimiter-joined multi-element combinations;
    those are accepted with a warning since expert prompts normally cover
    single elements.
    """
    path = Path(path)
    responses: list[LlmResponse] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ParseError(f"{path} is empty")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < 4:
                raise ParseError(f"expected element_a,element_b,domain,q1[,q2], got {row}", lineno)
            side_a = [s.strip() for s in row[0].split(delimiter)]
            side_b = [s.strip() for s in row[1].split(delimiter)]
            try:
                pair = CombinationPair(side_a, side_b)
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            if len(side_a) > 1 or len(side_b) > 1:
                warnings.warn(
                    f"{path}:{lineno}: multi-element combination pair {pair}",
                    stacklevel=2,
                )
            domain = row[2].strip()
            q1_text = row[3].strip().lower()
            if q1_text not in _YES_NO:
                raise ParseError(f"q1 must be Yes or No, got {row[3]!r}", lineno)
            q1 = _YES_NO[q1_text]
            q2_text = row[4].strip() if len(row) > 4 else ""
            q2 = q2_text.capitalize() if q2_text else None
            if q2 is not None and q2 not in _RATINGS:
                raise ParseError(f"q2 must be High, Medium, or Low, got {row[4]!r}", lineno)
            try:
                responses.append(LlmResponse(pair, domain, q1, q2))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
    return responses


def mass_from_response(resp: LlmResponse, beta: float) -> BinaryMass:
    """Map an answer to its mass: No is ignorance; High/Medium/Low commit
    beta toward similar, split, or dissimilar."""
    if not 0.0 < beta < 1.0:
        raise BetaOutOfRange(f"beta must lie in (0, 1), got {beta!r}")
    if not resp.q1:
        return BinaryMass(0.0, 0.0, 1.0)
    if resp.q2 == "High":
        return BinaryMass(beta, 0.0, 1.0 - beta)
    if resp.q2 == "Medium":
        return BinaryMass(beta / 2.0, beta / 2.0, 1.0 - beta)
    return BinaryMass(0.0, beta, 1.0 - beta)


def build_store(
    responses: Iterable[LlmResponse], beta: float
) -> dict[str, SimilarityStore]:
    """One similarity store per domain; repeated answers for the same pair
    within a domain are Dempster-combined."""
    by_domain: dict[str, dict[CombinationPair, BinaryMass]] = {}
    for resp in responses:
        entries = by_domain.setdefault(resp.domain, {})
        mass = mass_from_response(resp, beta)
        held = entries.get(resp.pair)
        entries[resp.pair] = mass if held is None else combine(held, mass)
    return {domain: SimilarityStore(entries) for domain, entries in by_domain.items()}

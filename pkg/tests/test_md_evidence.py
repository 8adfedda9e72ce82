"""Evidence extraction: worked fixtures, count oracle, store round-trips."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heafusion import Alloy, BinaryMass, LabeledAlloy
from heafusion.errors import AlphaOutOfRange
from heafusion.md_evidence import (
    CombinationPair,
    ExtractionConfig,
    combine_stores,
    counts_to_store,
    evidence_from_pair,
    extract_all,
    extract_counts,
    mass_from_counts,
    read_store,
    write_store,
)

from conftest import EXAMPLE_MASS, as_dataset, random_dataset
from oracles import combine_exact, pair_evidence_oracle


def la(elements, label=True):
    return LabeledAlloy(Alloy(elements), label)


class TestCombinationPair:
    def test_canonical_side_order(self):
        assert CombinationPair(("Zn",), ("Cu",)) == CombinationPair(("Cu",), ("Zn",))
        pair = CombinationPair(("Zn", "Ga"), ("Cu",))
        assert pair.first == ("Cu",)
        assert pair.second == ("Ga", "Zn")

    def test_rejects_overlap(self):
        with pytest.raises(ValueError):
            CombinationPair(("Cu", "Zn"), ("Zn",))

    def test_rejects_empty_side(self):
        with pytest.raises(ValueError):
            CombinationPair((), ("Zn",))


class TestEvidenceFromPair:
    def test_agreeing_labels(self):
        got = evidence_from_pair(la("Li Be Na Cu".split()), la("Li Be Na Zn".split()), 0.1)
        assert got == (CombinationPair(("Cu",), ("Zn",)), BinaryMass(0.1, 0.0, 0.9))

    def test_disagreeing_labels(self):
        got = evidence_from_pair(
            la("Li Be Na Cu".split(), True), la("Li Be Na Zn".split(), False), 0.1
        )
        assert got == (CombinationPair(("Cu",), ("Zn",)), BinaryMass(0.0, 0.1, 0.9))

    def test_disjoint_pair_is_uninformative(self):
        assert evidence_from_pair(la("Li Be Na Cu".split()), la("K Ca Sc Zn".split()), 0.1) is None

    def test_nested_pair_is_uninformative(self):
        assert evidence_from_pair(la("Li Be Na".split()), la("Li Be Na Cu".split()), 0.1) is None

    @pytest.mark.parametrize("alpha", [0.0, 1.0, -0.2, 1.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(AlphaOutOfRange):
            evidence_from_pair(la("Li Be".split()), la("Li Na".split()), alpha)


class TestWorkedExamples:
    def test_example1_store_entry(self, example1_dataset):
        store = extract_all(example1_dataset, ExtractionConfig(alpha=0.1))
        mass = store.get(CombinationPair(("Cu",), ("Zn",)))
        for got, want in zip(mass.as_tuple(), EXAMPLE_MASS):
            assert got == pytest.approx(float(want), abs=1e-12)
        # published rounded values within 2e-3
        assert mass.m_first == pytest.approx(0.25, abs=2e-3)
        assert mass.m_second == pytest.approx(0.075, abs=2e-3)
        assert mass.m_both == pytest.approx(0.675, abs=2e-3)

    def test_example2_multi_element_entry(self, example2_dataset):
        store = extract_all(example2_dataset, ExtractionConfig(alpha=0.1))
        mass = store.get(CombinationPair(("Cu",), ("Zn", "Ga")))
        for got, want in zip(mass.as_tuple(), EXAMPLE_MASS):
            assert got == pytest.approx(float(want), abs=1e-12)

    def test_single_alloy_dataset_is_empty(self):
        ds = as_dataset([la("Fe Ni Cr Co".split())])
        assert len(extract_all(ds, ExtractionConfig())) == 0


class TestExtraction:
    def test_symmetric_lookup(self, example1_dataset):
        store = extract_all(example1_dataset, ExtractionConfig(alpha=0.1))
        assert store.get(CombinationPair(("Cu",), ("Zn",))) is store.get(
            CombinationPair(("Zn",), ("Cu",))
        )

    def test_row_order_invariance(self):
        ds = random_dataset(60, universe_size=10, seed=3)
        store = extract_all(ds, ExtractionConfig(alpha=0.2))
        rows = list(ds.alloys)
        random.Random(7).shuffle(rows)
        shuffled = extract_all(ds.with_alloys(rows), ExtractionConfig(alpha=0.2))
        assert set(store.entries) == set(shuffled.entries)
        for pair, mass in store.items():
            other = shuffled.get(pair)
            for a, b in zip(mass.as_tuple(), other.as_tuple()):
                assert a == pytest.approx(b, abs=1e-12)

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_counts_match_brute_force(self, seed):
        ds = random_dataset(120, universe_size=11, seed=seed)
        max_size = 3
        counts = extract_counts(ds, max_subst_size=max_size)
        universe = ds.universe
        by_sides = {}
        for (mask_a, mask_b), (agree, disagree) in counts.items():
            sides = sorted(
                [
                    tuple(sorted(universe[i] for i in range(mask_a.bit_length()) if mask_a >> i & 1)),
                    tuple(sorted(universe[i] for i in range(mask_b.bit_length()) if mask_b >> i & 1)),
                ]
            )
            by_sides[(sides[0], sides[1])] = (agree, disagree)
        oracle = pair_evidence_oracle(
            [(la.alloy.element_set, la.label) for la in ds.alloys], max_size
        )
        assert set(by_sides) == set(oracle)
        for key, pieces in oracle.items():
            assert by_sides[key] == (sum(pieces), len(pieces) - sum(pieces))

    def test_masses_match_exact_fold(self):
        from fractions import Fraction

        ds = random_dataset(60, universe_size=9, seed=5)
        alpha = 0.17
        store = extract_all(ds, ExtractionConfig(alpha=alpha))
        oracle = pair_evidence_oracle(
            [(la.alloy.element_set, la.label) for la in ds.alloys], 3
        )
        a = Fraction(alpha)
        for (first, second), pieces in oracle.items():
            expected = combine_exact(
                [(a, 0, 1 - a) if agree else (0, a, 1 - a) for agree in pieces]
            )
            got = store.get(CombinationPair(first, second))
            for g, w in zip(got.as_tuple(), expected):
                assert g == pytest.approx(float(w), abs=1e-12)

    def test_identical_labels_give_no_dissimilar_mass(self):
        ds = random_dataset(50, universe_size=9, seed=8, positive_rate=1.1)
        store = extract_all(ds, ExtractionConfig(alpha=0.3))
        assert len(store) > 0
        assert all(mass.m_second == 0.0 for _, mass in store.items())

    def test_max_subst_size_filters_pairs(self, example2_dataset):
        store = extract_all(example2_dataset, ExtractionConfig(alpha=0.1, max_subst_size=1))
        assert CombinationPair(("Cu",), ("Zn", "Ga")) not in store


class TestPartitioning:
    def test_jobs_do_not_change_the_store(self):
        # large enough to engage the process pool
        ds = random_dataset(600, universe_size=14, seed=11)
        base = extract_all(ds, ExtractionConfig(alpha=0.1), jobs=1)
        for jobs in (2, 3):
            alt = extract_all(ds, ExtractionConfig(alpha=0.1), jobs=jobs)
            assert alt.content_hash() == base.content_hash()

    def test_dempster_merge_of_partial_stores(self):
        # partial stores built from disjoint row slices, merged pairwise
        ds = random_dataset(80, universe_size=9, seed=13)
        whole = extract_all(ds, ExtractionConfig(alpha=0.1))
        rows = list(ds.alloys)
        # partition the *pair* space: slice i keeps pairs whose first index mod 2 == i
        from heafusion.md_evidence import _scan_partition
        from heafusion.alloys import alloy_masks

        masks = alloy_masks((r.alloy for r in rows), ds.element_index())
        labels = [r.label for r in rows]
        partials = []
        for part in range(2):
            counts = _scan_partition(masks, labels, 3, 2, part)
            partials.append(
                counts_to_store({k: tuple(v) for k, v in counts.items()}, 0.1, ds.universe)
            )
        merged = combine_stores(partials)
        assert set(merged.entries) == set(whole.entries)
        for pair, mass in whole.items():
            for g, w in zip(merged.get(pair).as_tuple(), mass.as_tuple()):
                assert g == pytest.approx(w, abs=1e-12)


class TestCountsClosedForm:
    @given(
        n_agree=st.integers(0, 60),
        n_disagree=st.integers(0, 60),
        alpha=st.floats(0.01, 0.9),
    )
    @settings(max_examples=200)
    def test_matches_exact_fold(self, n_agree, n_disagree, alpha):
        from fractions import Fraction

        a = Fraction(alpha)
        expected = combine_exact(
            [(a, 0, 1 - a)] * n_agree + [(0, a, 1 - a)] * n_disagree
        )
        got = mass_from_counts(n_agree, n_disagree, alpha)
        for g, w in zip(got.as_tuple(), expected):
            assert g == pytest.approx(float(w), abs=1e-12)


class TestSerialization:
    def test_bit_exact_round_trip(self, tmp_path):
        ds = random_dataset(60, universe_size=10, seed=21)
        store = extract_all(ds, ExtractionConfig(alpha=0.123456789))
        path = tmp_path / "store.csv"
        write_store(store, path)
        again = read_store(path)
        assert set(again.entries) == set(store.entries)
        for pair, mass in store.items():
            assert again.get(pair) == mass  # bit-exact
        assert again.content_hash() == store.content_hash()

    def test_header_format(self, tmp_path, example1_dataset):
        store = extract_all(example1_dataset, ExtractionConfig(alpha=0.1))
        path = tmp_path / "store.csv"
        write_store(store, path)
        header = path.read_text().splitlines()[0]
        assert header == "combo_a,combo_b,m_similar,m_dissimilar,m_uncertain"

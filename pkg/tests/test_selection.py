import itertools
import math
import random

import pytest

from pairselect.errors import InputError
from pairselect.selection import (
    SplitMix64,
    load_selection,
    random_sample,
    rank,
    save_selection,
    select_top_k,
    top_k,
)


class TestRank:
    def test_higher_better(self):
        assert rank({0: 1.0, 1: 2.0, 2: 0.5}, "higher_better") == [1, 0, 2]

    def test_ties_break_by_id(self):
        assert rank({3: 7.0, 1: 7.0, 2: 7.0}, "higher_better") == [1, 2, 3]

    def test_lower_better(self):
        assert rank({0: 0.1, 1: 0.9}, "lower_better") == [0, 1]

    def test_incomplete_column(self):
        with pytest.raises(InputError):
            rank({0: 1.0}, "higher_better", ids=[0, 1, 2])

    def test_unknown_direction(self):
        with pytest.raises(ValueError):
            rank({0: 1.0}, "sideways")

    def test_stable_under_duplicates(self):
        scores = {i: float(i % 3) for i in range(30)}
        ranking = rank(scores, "higher_better")
        for a, b in zip(ranking, ranking[1:]):
            assert (scores[a], -a) >= (scores[b], -b) or (
                scores[a] == scores[b] and a < b
            )


class TestTopK:
    def test_prefix(self):
        result = top_k([1, 0, 2], 2, method_name="m")
        assert result.selected == (1, 0)
        assert result.ranking == (1, 0, 2)

    def test_k_zero(self):
        assert top_k([1, 0, 2], 0).selected == ()

    def test_k_beyond_n(self):
        assert top_k([1, 0, 2], 10).selected == (1, 0, 2)

    def test_negative_k(self):
        with pytest.raises(ValueError):
            top_k([0], -1)


class TestSelectTopK:
    def test_matches_full_ranking(self):
        rng = random.Random(1)
        for _ in range(50):
            n = rng.randrange(1, 40)
            scores = {i: rng.uniform(-5, 5) for i in range(n)}
            k = rng.randrange(0, n + 2)
            direction = rng.choice(["higher_better", "lower_better"])
            fast = select_top_k(scores, direction, k)
            slow = top_k(rank(scores, direction), k)
            assert fast.selected == slow.selected

    def test_budget_invariant(self):
        rng = random.Random(2)
        for _ in range(50):
            n = rng.randrange(1, 20)
            k = rng.randrange(0, 25)
            scores = {i: rng.random() for i in range(n)}
            result = select_top_k(scores, "higher_better", k)
            assert len(result.selected) == min(k, n)

    def test_exhaustive_optimality(self):
        rng = random.Random(3)
        for _ in range(100):
            n = rng.randrange(1, 13)
            k = rng.randrange(0, n + 1)
            while True:
                scores = {i: rng.uniform(0, 10) for i in range(n)}
                if len(set(scores.values())) == n:
                    break
            chosen = select_top_k(scores, "higher_better", k).selected
            best = max(
                (sum(scores[i] for i in combo) for combo in itertools.combinations(range(n), k)),
                default=0.0,
            )
            assert sum(scores[i] for i in chosen) == pytest.approx(best, abs=1e-9)

    def test_monotone_transform_invariance(self):
        rng = random.Random(4)
        transforms = [lambda x: 2 * x + 1, lambda x: x**3, math.exp]
        for _ in range(30):
            n = rng.randrange(2, 25)
            while True:
                scores = {i: rng.uniform(-3, 3) for i in range(n)}
                if len(set(scores.values())) == n:
                    break
            k = rng.randrange(0, n + 1)
            base = set(select_top_k(scores, "higher_better", k).selected)
            for g in transforms:
                mapped = {i: g(s) for i, s in scores.items()}
                assert set(select_top_k(mapped, "higher_better", k).selected) == base


class TestSplitMix64:
    def test_known_stream(self):
        # canonical published test vectors for seed 0
        rng = SplitMix64(0)
        first = [rng.next_u64() for _ in range(3)]
        assert first == [
            0xE220A8397B1DCDAF,
            0x6E789E6AA1B965F4,
            0x06C45D188009454F,
        ]

    def test_below_is_unbiased_range(self):
        rng = SplitMix64(42)
        draws = [rng.below(10) for _ in range(10_000)]
        assert set(draws) == set(range(10))

    def test_below_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            SplitMix64(0).below(0)


class TestRandomSample:
    def test_k_equals_n(self):
        result = random_sample(list(range(7)), 7, seed=42)
        assert sorted(result.selected) == list(range(7))

    def test_k_zero(self):
        assert random_sample(list(range(7)), 0, seed=42).selected == ()

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            random_sample(list(range(3)), 4, seed=42)

    def test_deterministic_across_runs(self):
        a = random_sample(list(range(10)), 3, seed=42)
        b = random_sample(list(range(10)), 3, seed=42)
        assert a.selected == b.selected

    def test_seed_changes_sample(self):
        ids = list(range(100))
        assert (
            random_sample(ids, 10, seed=1).selected
            != random_sample(ids, 10, seed=2).selected
        )

    def test_selected_prefix_of_emitted_ranking(self):
        full = random_sample(list(range(20)), 5, seed=9, emit_ranking=True)
        short = random_sample(list(range(20)), 5, seed=9)
        assert full.ranking is not None
        assert full.selected == full.ranking[:5]
        assert full.selected == short.selected
        assert sorted(full.ranking) == list(range(20))

    def test_roughly_uniform(self):
        # every id should be picked sometimes over many seeds
        ids = list(range(8))
        hits = {i: 0 for i in ids}
        for seed in range(400):
            for i in random_sample(ids, 2, seed=seed).selected:
                hits[i] += 1
        total = sum(hits.values())
        for count in hits.values():
            assert abs(count / total - 1 / 8) < 0.05


class TestSerialization:
    def test_roundtrip(self, tmp_path):
        result = select_top_k(
            {0: 1.0, 1: 3.0, 2: 2.0},
            "higher_better",
            2,
            method_name="tfidf",
            flags={"side": "both"},
        )
        path = str(tmp_path / "sel.jsonl")
        save_selection(result, path)
        loaded = load_selection(path)
        assert loaded.selected == result.selected
        assert loaded.method_name == "tfidf"
        assert loaded.k == 2
        assert loaded.flags == {"side": "both"}

    def test_byte_identical_for_identical_inputs(self, tmp_path):
        scores = {i: float((i * 7919) % 103) for i in range(50)}
        p1, p2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
        save_selection(select_top_k(scores, "higher_better", 10, "m"), p1)
        save_selection(select_top_k(scores, "higher_better", 10, "m"), p2)
        assert open(p1, "rb").read() == open(p2, "rb").read()

    def test_truncated_file_detected(self, tmp_path):
        result = random_sample(list(range(5)), 3, seed=1)
        path = str(tmp_path / "sel.jsonl")
        save_selection(result, path)
        lines = open(path, encoding="utf-8").read().splitlines()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines[:-1]) + "\n")
        with pytest.raises(InputError):
            load_selection(path)

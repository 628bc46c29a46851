import math
import statistics

import numpy as np
import pytest
import scipy.stats as sps
from hypothesis import given, settings
from hypothesis import strategies as st

from fluencykit.stats import (
    RatingRecord,
    UndefinedStatisticError,
    average_ranks,
    build_reference_ratings,
    chi2_sf,
    cronbach_alpha,
    f_sf,
    friedman,
    kruskal_wallis,
    partial_f_test,
    pearson_r,
    rmse,
    spearman_rho,
    spearman_test,
    t_sf,
)

# ---------------------------------------------------------------- oracles


def oracle_pearson(x, y):
    n = len(x)
    mx = sum(x) / n
    my = sum(y) / n
    num = sum((a - mx) * (b - my) for a, b in zip(x, y))
    den = math.sqrt(sum((a - mx) ** 2 for a in x) * sum((b - my) ** 2 for b in y))
    return num / den


def oracle_ranks(values):
    n = len(values)
    ranks = [0.0] * n
    for i, v in enumerate(values):
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        ranks[i] = less + (equal + 1) / 2.0
    return ranks


def oracle_spearman(x, y):
    return oracle_pearson(oracle_ranks(x), oracle_ranks(y))


def oracle_alpha(matrix):
    k = len(matrix)
    item_vars = [statistics.variance(row) for row in matrix]
    totals = [sum(col) for col in zip(*matrix)]
    return k / (k - 1) * (1 - sum(item_vars) / statistics.variance(totals))


def oracle_rmse(a, p):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, p)) / len(a))


def oracle_kruskal(groups):
    pooled = [v for g in groups for v in g]
    n = len(pooled)
    ranks = oracle_ranks(pooled)
    h = 0.0
    pos = 0
    for g in groups:
        r = ranks[pos:pos + len(g)]
        pos += len(g)
        h += len(g) * (sum(r) / len(r) - (n + 1) / 2) ** 2
    h *= 12.0 / (n * (n + 1))
    ties = {}
    for v in pooled:
        ties[v] = ties.get(v, 0) + 1
    h /= 1.0 - sum(t ** 3 - t for t in ties.values()) / (n ** 3 - n)
    return h


def oracle_friedman(matrix):
    n = len(matrix)
    k = len(matrix[0])
    ranks = [oracle_ranks(row) for row in matrix]
    col_sums = [sum(ranks[i][j] for i in range(n)) for j in range(k)]
    denom = sum((ranks[i][j] - (k + 1) / 2) ** 2 for i in range(n) for j in range(k))
    num = sum((rj - n * (k + 1) / 2) ** 2 for rj in col_sums)
    return (k - 1) * num / denom if denom else 0.0


# -------------------------------------------------------------- correlation


class TestSpearman:
    def test_identical_ranking(self):
        assert spearman_rho([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_reversed_ranking(self):
        assert spearman_rho([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_no_tie_formula(self):
        # oracle: 1 - 6 * sum d^2 / (n (n^2 - 1)) without ties
        x, y = [1, 2, 3, 4], [2, 1, 4, 3]
        d2 = sum((a - b) ** 2 for a, b in zip(oracle_ranks(x), oracle_ranks(y)))
        expected = 1 - 6 * d2 / (4 * 15)
        assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.6)

    def test_constant_input_signaled(self):
        with pytest.raises(UndefinedStatisticError):
            spearman_rho([1, 1, 1], [1, 2, 3])

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-100, 100).map(lambda v: round(v, 3)),
                    min_size=4, max_size=30),
           st.data())
    def test_monotone_transform_invariance(self, x, data):
        # rounding keeps distinct values >= 1e-3 apart, so exp(v/100) is
        # strictly increasing at float resolution and preserves ties exactly
        if len(set(x)) < 2:
            return
        y = data.draw(st.lists(st.floats(-50, 50).map(lambda v: round(v, 3)),
                               min_size=len(x), max_size=len(x)))
        if len(set(y)) < 2:
            return
        rho1 = spearman_rho(x, y)
        rho2 = spearman_rho([math.exp(v / 100) for v in x], y)
        assert rho1 == pytest.approx(rho2, abs=1e-10)

    def test_pvalue_one_vs_two_tailed(self):
        rng = np.random.default_rng(1)
        x = list(rng.normal(size=20))
        y = [v + rng.normal(0, 0.8) for v in x]
        rho, p1 = spearman_test(x, y, tails=1)
        _, p2 = spearman_test(x, y, tails=2)
        assert p2 == pytest.approx(2 * p1, abs=1e-12)
        assert 0 < p1 < 0.5


class TestPearson:
    def test_affine(self):
        x = [1.0, 2.0, 5.0, 7.0]
        assert pearson_r(x, [2 * v + 1 for v in x]) == pytest.approx(1.0)

    def test_negation(self):
        x = [1.0, 2.0, 5.0, 7.0]
        assert pearson_r(x, [-v for v in x]) == pytest.approx(-1.0)

    def test_affine_invariance_and_sign_flip(self):
        rng = np.random.default_rng(2)
        x = list(rng.normal(size=25))
        y = list(rng.normal(size=25))
        r = pearson_r(x, y)
        assert pearson_r([3 * v + 2 for v in x], y) == pytest.approx(r, abs=1e-12)
        assert pearson_r([-v for v in x], y) == pytest.approx(-r, abs=1e-12)

    def test_constant_signaled(self):
        with pytest.raises(UndefinedStatisticError):
            pearson_r([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])


class TestCronbachAlpha:
    def test_identical_columns_exactly_one(self):
        rng = np.random.default_rng(3)
        row = list(rng.normal(size=40))
        assert cronbach_alpha([row, row]) == pytest.approx(1.0, abs=1e-12)

    def test_independent_noise_near_zero(self):
        rng = np.random.default_rng(4)
        a = cronbach_alpha(rng.normal(size=(2, 10_000)))
        assert abs(a) <= 0.05

    def test_zero_variance_signaled(self):
        with pytest.raises(UndefinedStatisticError):
            cronbach_alpha([[1.0, 1.0], [2.0, 2.0]])


class TestRmse:
    def test_perfect(self):
        assert rmse([1, 2, 3], [1, 2, 3]) == 0.0

    def test_constant_offset(self):
        assert rmse([1, 2, 3], [1.5, 2.5, 3.5]) == pytest.approx(0.5)

    def test_symmetry_and_mean_bound(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=50)
        p = rng.normal(size=50)
        assert rmse(a, p) == pytest.approx(rmse(p, a), abs=1e-15)
        assert rmse(a, p) >= abs(np.mean(a - p)) - 1e-12


class TestKruskalWallis:
    def test_hand_computed_example(self):
        h, p = kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
        # rank means 2, 5, 8 -> H = 7.2
        assert h == pytest.approx(7.2, abs=1e-9)
        assert p == pytest.approx(math.exp(-3.6), abs=1e-9)

    def test_identical_groups(self):
        h, p = kruskal_wallis([[2, 2], [2, 2], [2, 2]])
        assert h == 0.0 and p == 1.0

    def test_monotone_transform_invariance(self):
        groups = [[1, 5, 3], [2, 8, 4], [9, 7, 6]]
        h1, _ = kruskal_wallis(groups)
        h2, _ = kruskal_wallis([[math.exp(v) for v in g] for g in groups])
        assert h1 == pytest.approx(h2, abs=1e-9)

    def test_empty_group_rejected(self):
        with pytest.raises(ValueError):
            kruskal_wallis([[1, 2], []])


class TestFriedman:
    def test_identical_columns(self):
        chi2, p = friedman([[3, 3, 3], [5, 5, 5], [1, 1, 1]])
        assert chi2 == 0.0 and p == 1.0

    def test_strictly_ordered_maximal(self):
        n, k = 6, 4
        matrix = [[j + 0.1 * i for j in range(k)] for i in range(n)]
        chi2, _ = friedman(matrix)
        assert chi2 == pytest.approx(n * (k - 1), abs=1e-9)

    def test_null_simulation_p_above_05(self):
        ok = 0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            _, p = friedman(rng.normal(size=(34, 3)))
            if p > 0.05:
                ok += 1
        assert ok >= 90

    def test_constant_rows_average_ranks(self):
        chi2, p = friedman([[1, 1, 1], [1, 2, 3], [3, 2, 1]])
        assert math.isfinite(chi2) and 0 <= p <= 1


class TestPartialF:
    def test_equal_r2(self):
        f, p = partial_f_test(0.5, 3, 0.5, 4, 100)
        assert f == 0.0 and p == 1.0

    def test_monotone_in_gain(self):
        last_p = 1.1
        for delta in (0.001, 0.01, 0.05, 0.1):
            _, p = partial_f_test(0.5, 3, 0.5 + delta, 4, 10_000)
            assert p < last_p
            last_p = p
        assert last_p < 1e-12

    def test_useful_predictor_detected(self):
        rng = np.random.default_rng(6)
        n = 200
        x1, x2 = rng.normal(size=n), rng.normal(size=n)
        y = x1 + 0.5 * x2 + rng.normal(0, 1.0, n)
        X1 = np.column_stack([np.ones(n), x1])
        X2 = np.column_stack([np.ones(n), x1, x2])
        r2 = []
        for X in (X1, X2):
            beta, *_ = np.linalg.lstsq(X, y, rcond=None)
            resid = y - X @ beta
            r2.append(1 - resid @ resid / ((y - y.mean()) @ (y - y.mean())))
        _, p = partial_f_test(r2[0], 1, r2[1], 2, n)
        assert p < 0.01

    def test_degenerate_r2_one(self):
        with pytest.raises(UndefinedStatisticError):
            partial_f_test(0.9, 2, 1.0, 3, 50)

    def test_validations(self):
        with pytest.raises(ValueError):
            partial_f_test(0.5, 3, 0.6, 3, 100)
        with pytest.raises(ValueError):
            partial_f_test(0.6, 3, 0.5, 4, 100)


class TestTailProbabilities:
    def test_chi2_against_scipy(self):
        for df in (1, 2, 3, 5, 10, 34):
            for x in (0.01, 0.5, 1.8, 7.2, 25.0, 80.0):
                assert chi2_sf(x, df) == pytest.approx(sps.chi2.sf(x, df), abs=1e-10)

    def test_f_against_scipy(self):
        for d1 in (1, 2, 4, 10):
            for d2 in (2, 5, 30, 200):
                for x in (0.1, 1.0, 2.5, 9.0):
                    assert f_sf(x, d1, d2) == pytest.approx(sps.f.sf(x, d1, d2), abs=1e-10)

    def test_t_against_scipy(self):
        for df in (1, 3, 10, 100):
            for x in (-3.0, -0.5, 0.0, 1.7, 4.2):
                assert t_sf(x, df) == pytest.approx(sps.t.sf(x, df), abs=1e-10)


class TestOracleEquivalence:
    """Brute-force direct-definition agreement on seeded random inputs."""

    def test_all_statistics(self):
        rng = np.random.default_rng(100)
        for trial in range(200):
            n = int(rng.integers(4, 40))
            x = list(np.round(rng.normal(size=n), 3))
            y = list(np.round(rng.normal(size=n), 3))
            if len(set(x)) < 2 or len(set(y)) < 2:
                continue
            assert pearson_r(x, y) == pytest.approx(oracle_pearson(x, y), abs=1e-9)
            assert spearman_rho(x, y) == pytest.approx(oracle_spearman(x, y), abs=1e-9)
            assert rmse(x, y) == pytest.approx(oracle_rmse(x, y), abs=1e-9)
        for trial in range(150):
            k = int(rng.integers(2, 6))
            n = int(rng.integers(4, 30))
            m = rng.normal(size=(k, n))
            assert cronbach_alpha(m) == pytest.approx(oracle_alpha(m.tolist()), abs=1e-9)
        for trial in range(150):
            groups = [list(np.round(rng.normal(size=rng.integers(3, 12)), 2))
                      for _ in range(rng.integers(2, 5))]
            pooled = [v for g in groups for v in g]
            if len(set(pooled)) < 2:
                continue
            h, p = kruskal_wallis(groups)
            assert h == pytest.approx(oracle_kruskal(groups), abs=1e-9)
            assert p == pytest.approx(sps.chi2.sf(h, len(groups) - 1), abs=1e-9)
        for trial in range(150):
            m = rng.normal(size=(rng.integers(2, 12), rng.integers(2, 6)))
            chi2, p = friedman(m)
            assert chi2 == pytest.approx(oracle_friedman(m.tolist()), abs=1e-9)
        for trial in range(150):
            p_small = int(rng.integers(1, 4))
            p_big = p_small + int(rng.integers(1, 3))
            n = int(rng.integers(p_big + 2, 300))
            r2_small = float(rng.uniform(0, 0.8))
            r2_big = float(rng.uniform(r2_small, 0.99))
            f, p = partial_f_test(r2_small, p_small, r2_big, p_big, n)
            q = p_big - p_small
            f_oracle = ((r2_big - r2_small) / q) / ((1 - r2_big) / (n - p_big - 1))
            assert f == pytest.approx(f_oracle, abs=1e-9)
            assert p == pytest.approx(sps.f.sf(f_oracle, q, n - p_big - 1), abs=1e-9)


class TestReferenceRatings:
    def records(self, table):
        """table: {rater: {stimulus: (pass1, pass2)}}"""
        out = []
        for rater, per in table.items():
            for stim, (p1, p2) in per.items():
                out.append(RatingRecord(rater, stim, 1, p1))
                out.append(RatingRecord(rater, stim, 2, p2))
        return out

    def test_single_rater_pass_mean(self):
        refs, report = build_reference_ratings(
            self.records({"r1": {"a": (3, 3), "b": (2, 4), "c": (5, 5)}}))
        by_id = {r.stimulus_id: r.value for r in refs}
        assert by_id == {"a": 3.0, "b": 3.0, "c": 5.0}
        assert report["n_raters"] == 1

    def test_three_raters_grand_mean(self):
        refs, _ = build_reference_ratings(self.records({
            "r1": {"a": (2, 2), "b": (1, 1), "c": (4, 4)},
            "r2": {"a": (3, 3), "b": (2, 2), "c": (4, 4)},
            "r3": {"a": (4, 4), "b": (3, 3), "c": (5, 5)},
        }))
        by_id = {r.stimulus_id: r.value for r in refs}
        assert by_id["a"] == pytest.approx(3.0)

    def test_missing_pass_rejected_without_flag(self):
        records = self.records({"r1": {"a": (3, 3), "b": (2, 4), "c": (5, 5)}})
        records.pop()  # drop one pass-2 record
        with pytest.raises(ValueError, match="missing a pass"):
            build_reference_ratings(records)
        refs, _ = build_reference_ratings(records, allow_single_pass=True)
        assert len(refs) == 3

    def test_duplicate_rejected(self):
        records = self.records({"r1": {"a": (3, 3), "b": (2, 4), "c": (5, 5)}})
        records.append(RatingRecord("r1", "a", 1, 4))
        with pytest.raises(ValueError, match="duplicate"):
            build_reference_ratings(records)

    def test_report_structure(self):
        rng = np.random.default_rng(8)
        table = {}
        for rater in ("r1", "r2", "r3"):
            table[rater] = {}
            for i in range(20):
                base = int(rng.integers(1, 6))
                second = int(np.clip(base + rng.integers(-1, 2), 1, 5))
                table[rater][f"s{i:02d}"] = (base, second)
        refs, report = build_reference_ratings(self.records(table))
        assert len(refs) == 20
        assert len(report["intra_rater"]) == 3
        for entry in report["intra_rater"]:
            assert set(entry) >= {"rater_id", "spearman_rho", "cronbach_alpha"}
        assert len(report["inter_rater"]["pairs"]) == 3
        kw = report["inter_rater"]["kruskal_wallis"]
        assert kw["df"] == 2 and 0 <= kw["p"] <= 1
        assert all(1 <= r.value <= 5 for r in refs)

    def test_rating_validation(self):
        with pytest.raises(ValueError):
            RatingRecord("r", "s", 1, 6)
        with pytest.raises(ValueError):
            RatingRecord("r", "s", 3, 4)

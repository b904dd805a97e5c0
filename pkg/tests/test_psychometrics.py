import math
import random

import pytest
from scipy import integrate

from examgraph.errors import (
    DegenerateInput,
    DomainError,
    TooFewParticipants,
    UnbalancedDesign,
    UnknownItem,
)
from examgraph.psychometrics import (
    ResponseMatrix,
    analyze,
    f_survival,
    item_discrimination,
    item_p_value,
    levene_test,
    one_way_anova,
    pairwise_welch_bonferroni,
    reg_incomplete_beta,
    t_survival_two_sided,
    two_way_anova,
)


def beta_quadrature(x, a, b):
    """Quadrature oracle: integrate the beta density directly."""
    ln_norm = math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)
    density = lambda t: math.exp((a - 1) * math.log(t) + (b - 1) * math.log1p(-t)
                                 - ln_norm)
    value, _ = integrate.quad(density, 0.0, x, limit=200)
    return value


def matrix_from_rows(rows, items=None):
    participants = [f"p{i:03d}" for i in range(len(rows))]
    items = items or [f"q{j:02d}" for j in range(len(rows[0]))]
    return ResponseMatrix(participants, items, rows)


# --- item stats ---

def test_p_value_arithmetic():
    matrix = matrix_from_rows([[1], [1], [1], [0]])
    assert item_p_value(matrix, "q00") == 0.75


def test_p_value_all_correct_and_unknown_item():
    matrix = matrix_from_rows([[1], [1]])
    assert item_p_value(matrix, "q00") == 1.0
    with pytest.raises(UnknownItem):
        item_p_value(matrix, "missing")


def test_matrix_validation():
    with pytest.raises(ValueError):
        ResponseMatrix(["p1"], ["q1"], [[1]])  # one participant
    with pytest.raises(ValueError):
        ResponseMatrix(["p1", "p2"], [], [[], []])  # no items
    with pytest.raises(ValueError):
        ResponseMatrix(["p1", "p2"], ["q1"], [[1], [2]])  # non-binary
    with pytest.raises(ValueError):
        ResponseMatrix(["p1", "p1"], ["q1"], [[1], [0]])  # duplicate ids


def test_group_means_reproduce_reported_ordering():
    # Synthetic groups built to sit at the published mean accuracies;
    # the recovered ordering must be Low > ACT ~ Medium > High.
    rng = random.Random(42)
    targets = {"low": 0.82, "act": 0.76, "medium": 0.71, "high": 0.63}
    means = {}
    for label, p in targets.items():
        rows = [[1 if rng.random() < p else 0 for _ in range(30)]
                for _ in range(40)]
        matrix = matrix_from_rows(rows)
        means[label] = sum(item_p_value(matrix, q) for q in matrix.items) / 30
    assert means["low"] > means["act"] > means["medium"] > means["high"]
    assert abs(means["act"] - means["medium"]) < 0.1  # ACT ~ Medium


def test_discrimination_extreme_case():
    # 8 participants; top two answer a battery plus the probe correctly
    rows = []
    for i in range(8):
        score = 1 if i < 2 else 0
        battery = [1] * (7 - i) + [0] * i  # strictly decreasing totals
        rows.append(battery + [score])
    matrix = matrix_from_rows(rows)
    probe = matrix.items[-1]
    assert item_discrimination(matrix, probe, fraction=0.25) == 1.0


def test_discrimination_uniform_item_is_zero():
    rows = [[1, i % 2, (i // 2) % 2] for i in range(8)]
    matrix = matrix_from_rows(rows)
    assert item_discrimination(matrix, matrix.items[0]) == 0.0


def test_discrimination_needs_enough_participants():
    matrix = matrix_from_rows([[1], [0], [1]])
    with pytest.raises(TooFewParticipants):
        item_discrimination(matrix, "q00")
    with pytest.raises(ValueError):
        item_discrimination(matrix_from_rows([[1], [0], [1], [0]]), "q00",
                            fraction=0.6)


def brute_force_discrimination(matrix, item, fraction=0.25):
    totals = {p: sum(r) for p, r in zip(matrix.participants, matrix.rows)}
    ranked = sorted(matrix.participants, key=lambda p: (-totals[p], p))
    k = math.ceil(fraction * len(ranked))
    idx = matrix.items.index(item)
    rows = dict(zip(matrix.participants, matrix.rows))
    top = sum(rows[p][idx] for p in ranked[:k]) / k
    bottom = sum(rows[p][idx] for p in ranked[-k:]) / k
    return top - bottom


def test_discrimination_matches_brute_force_on_random_matrices():
    rng = random.Random(77)
    for _ in range(10):
        rows = [[rng.randint(0, 1) for _ in range(12)] for _ in range(25)]
        matrix = matrix_from_rows(rows)
        for item in matrix.items:
            assert item_discrimination(matrix, item) == \
                brute_force_discrimination(matrix, item)


def test_permutation_invariance():
    rng = random.Random(13)
    rows = [[rng.randint(0, 1) for _ in range(10)] for _ in range(20)]
    matrix = matrix_from_rows(rows)
    order = list(range(20))
    rng.shuffle(order)
    shuffled = ResponseMatrix([matrix.participants[i] for i in order],
                              list(matrix.items),
                              [matrix.rows[i] for i in order])
    for item in matrix.items:
        assert item_p_value(matrix, item) == item_p_value(shuffled, item)
        assert item_discrimination(matrix, item) == \
            item_discrimination(shuffled, item)


# --- one-way ANOVA ---

def test_one_way_hand_example():
    result = one_way_anova([[1, 2, 3], [2, 3, 4], [3, 4, 5]])
    assert result.ss_between == pytest.approx(6.0, abs=1e-12)
    assert result.ss_within == pytest.approx(6.0, abs=1e-12)
    assert result.f_stat == pytest.approx(3.0, abs=1e-12)
    assert (result.df_between, result.df_within) == (2, 6)
    assert 0 < result.p < 1


def test_one_way_identical_groups():
    result = one_way_anova([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
    assert result.f_stat == 0.0
    assert result.p == 1.0


def test_one_way_p_decreases_as_mean_shifts():
    previous = 1.1
    for shift in [0.0, 0.5, 1.0, 2.0, 4.0]:
        groups = [[1.0, 2.0, 3.0, 4.0], [1.0 + shift, 2.0 + shift,
                                         3.0 + shift, 4.0 + shift]]
        p = one_way_anova(groups).p
        assert p < previous or shift == 0.0
        previous = p


def test_one_way_zero_variance_flagged():
    result = one_way_anova([[1.0, 1.0], [2.0, 2.0]])
    assert result.degenerate
    assert math.isinf(result.f_stat)
    assert result.p == 0.0


def test_one_way_preconditions():
    with pytest.raises(DegenerateInput):
        one_way_anova([[1.0, 2.0]])
    with pytest.raises(DegenerateInput):
        one_way_anova([[1.0, 2.0], [1.0]])


def test_one_way_ss_conservation_and_invariances():
    rng = random.Random(101)
    for _ in range(20):
        groups = [[rng.gauss(mu, 1.0) for _ in range(rng.randint(3, 9))]
                  for mu in [0.0, 0.4, 1.1]]
        result = one_way_anova(groups)
        assert result.ss_between + result.ss_within == \
            pytest.approx(result.ss_total, rel=1e-9)
        shifted = one_way_anova([[x + 13.7 for x in g] for g in groups])
        assert shifted.f_stat == pytest.approx(result.f_stat, rel=1e-9)
        scaled = one_way_anova([[x * -2.5 for x in g] for g in groups])
        assert scaled.f_stat == pytest.approx(result.f_stat, rel=1e-9)


# --- two-way ANOVA ---

def brute_force_two_way(cells):
    """Definitional sums of squares for a balanced a x b x n table."""
    a, b, n = len(cells), len(cells[0]), len(cells[0][0])
    allx = [x for row in cells for cell in row for x in cell]
    grand = sum(allx) / len(allx)
    cm = [[sum(c) / n for c in row] for row in cells]
    am = [sum(row) / b for row in cm]
    bm = [sum(cm[i][j] for i in range(a)) / a for j in range(b)]
    ss_a = b * n * sum((m - grand) ** 2 for m in am)
    ss_b = a * n * sum((m - grand) ** 2 for m in bm)
    ss_ab = n * sum((cm[i][j] - am[i] - bm[j] + grand) ** 2
                    for i in range(a) for j in range(b))
    ss_resid = sum((x - cm[i][j]) ** 2 for i in range(a) for j in range(b)
                   for x in cells[i][j])
    ss_total = sum((x - grand) ** 2 for x in allx)
    return ss_a, ss_b, ss_ab, ss_resid, ss_total


def test_two_way_constructed_null_for_factor_b():
    # identical columns within each row: B margins equal, no interaction
    base = [[0.0, 1.0, 2.0], [5.0, 6.0, 7.0]]
    cells = [[list(base[i]) for _ in range(3)] for i in range(2)]
    result = two_way_anova(cells)
    assert result.factor_b.f_stat == pytest.approx(0.0, abs=1e-12)
    assert result.interaction.f_stat == pytest.approx(0.0, abs=1e-12)
    assert result.factor_a.p < 0.01


def test_two_way_matches_brute_force_oracle():
    rng = random.Random(55)
    for _ in range(10):
        a, b, n = rng.randint(2, 4), rng.randint(2, 4), rng.randint(2, 6)
        cells = [[[rng.gauss(i - j, 1.0) for _ in range(n)]
                  for j in range(b)] for i in range(a)]
        result = two_way_anova(cells)
        ss_a, ss_b, ss_ab, ss_resid, ss_total = brute_force_two_way(cells)
        assert result.factor_a.ss == pytest.approx(ss_a, rel=1e-9, abs=1e-12)
        assert result.factor_b.ss == pytest.approx(ss_b, rel=1e-9, abs=1e-12)
        assert result.interaction.ss == pytest.approx(ss_ab, rel=1e-9, abs=1e-12)
        assert result.ss_residual == pytest.approx(ss_resid, rel=1e-9, abs=1e-12)
        assert (result.factor_a.ss + result.factor_b.ss + result.interaction.ss
                + result.ss_residual) == pytest.approx(ss_total, rel=1e-9)
        assert result.df_residual == a * b * (n - 1)


def test_two_way_rejects_unbalanced():
    with pytest.raises(UnbalancedDesign):
        two_way_anova([[[1.0, 2.0], [1.0, 2.0]],
                       [[1.0, 2.0], [1.0, 2.0, 3.0]]])
    with pytest.raises(UnbalancedDesign):
        two_way_anova([[[1.0, 2.0]]])


# --- Levene ---

def test_levene_identical_dispersion():
    result = levene_test([[1.0, 2.0, 3.0], [11.0, 12.0, 13.0]])
    assert result.f_stat == pytest.approx(0.0, abs=1e-12)


def test_levene_detects_scale_difference():
    rng = random.Random(2024)
    tight = [rng.gauss(0, 1) for _ in range(30)]
    wide = [rng.gauss(0, 10) for _ in range(30)]
    result = levene_test([tight, wide])
    assert result.p < 0.05


def test_levene_is_anova_on_median_deviations():
    import statistics

    groups = [[1.0, 4.0, 2.0, 8.0], [3.0, 3.5, 9.0, 0.5]]
    direct = one_way_anova([
        [abs(x - statistics.median(g)) for x in g] for g in groups
    ])
    via_levene = levene_test(groups)
    assert via_levene.f_stat == direct.f_stat
    assert via_levene.p == direct.p


# --- incomplete beta and F tails ---

def test_beta_boundary_and_uniform_identities():
    assert reg_incomplete_beta(0.0, 2.0, 3.0) == 0.0
    assert reg_incomplete_beta(1.0, 2.0, 3.0) == 1.0
    assert reg_incomplete_beta(0.5, 1.0, 1.0) == 0.5
    assert reg_incomplete_beta(0.123, 1.0, 1.0) == 0.123


def test_beta_domain_errors():
    with pytest.raises(DomainError):
        reg_incomplete_beta(-0.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        reg_incomplete_beta(1.1, 1.0, 1.0)
    with pytest.raises(DomainError):
        reg_incomplete_beta(0.5, 0.0, 1.0)
    with pytest.raises(DomainError):
        reg_incomplete_beta(0.5, 1.0, -2.0)


def test_beta_matches_quadrature():
    cases = [(0.3, 2.0, 5.0), (0.5, 0.5, 0.5), (0.9, 4.0, 1.5),
             (0.05, 3.0, 3.0), (0.62, 10.0, 2.0), (0.5, 17.0, 0.5)]
    for x, a, b in cases:
        assert reg_incomplete_beta(x, a, b) == \
            pytest.approx(beta_quadrature(x, a, b), abs=1e-10)


def test_beta_complement_symmetry():
    rng = random.Random(31)
    for _ in range(100):
        x = rng.random()
        a = rng.uniform(0.2, 8)
        b = rng.uniform(0.2, 8)
        total = reg_incomplete_beta(x, a, b) + reg_incomplete_beta(1 - x, b, a)
        assert total == pytest.approx(1.0, abs=1e-10)


def test_f_survival_boundaries_and_monotonicity():
    assert f_survival(0.0, 2, 6) == 1.0
    assert f_survival(math.inf, 2, 6) == 0.0
    previous = 1.0
    for f in [0.5, 1.0, 2.0, 4.0, 8.0]:
        p = f_survival(f, 2, 6)
        assert p < previous
        previous = p
    with pytest.raises(DomainError):
        f_survival(-1.0, 2, 6)
    with pytest.raises(DomainError):
        f_survival(1.0, 0, 6)


def test_f_survival_matches_quadrature():
    for f, d1, d2 in [(3.0, 2, 6), (1.4, 5, 20), (7.7, 3, 12), (0.3, 8, 4)]:
        x = d2 / (d2 + d1 * f)
        expected = beta_quadrature(x, d2 / 2, d1 / 2)
        assert f_survival(f, d1, d2) == pytest.approx(expected, abs=1e-8)


def test_t_survival_consistent_with_f():
    # two-sided t tail equals the F tail with df1=1
    for t, df in [(1.5, 7), (2.2, 20), (0.4, 3)]:
        assert t_survival_two_sided(t, df) == \
            pytest.approx(f_survival(t * t, 1, df), abs=1e-12)


def test_p_values_always_in_unit_interval():
    rng = random.Random(606)
    for _ in range(200):
        f = rng.uniform(0, 50)
        d1 = rng.randint(1, 40)
        d2 = rng.randint(1, 200)
        p = f_survival(f, d1, d2)
        assert 0.0 <= p <= 1.0


# --- pairwise comparisons and the report ---

def test_pairwise_welch_bonferroni_labels_and_adjustment():
    groups = [[1.0, 2.0, 3.0], [1.1, 2.1, 3.1], [8.0, 9.0, 10.0]]
    results = pairwise_welch_bonferroni(groups, ["a", "b", "c"])
    assert len(results) == 3
    for entry in results:
        assert entry["method"] == "bonferroni_welch"
        assert entry["p_adjusted"] == pytest.approx(min(1.0, entry["p"] * 3))
    near = next(e for e in results if e["pair"] == ["a", "b"])
    far = next(e for e in results if e["pair"] == ["a", "c"])
    assert far["p"] < near["p"]


def test_analyze_report_shape():
    rng = random.Random(8)
    rows = [[rng.randint(0, 1) for _ in range(6)] for _ in range(16)]
    matrix = matrix_from_rows(rows)
    groups = {pid: ("even" if i % 2 == 0 else "odd")
              for i, pid in enumerate(matrix.participants)}
    report = analyze(matrix, groups)
    assert report["participants"] == 16
    assert report["items"] == 6
    assert len(report["item_stats"]) == 6
    assert set(report["groups"]) == {"even", "odd"}
    for summary in report["groups"].values():
        assert 0.0 <= summary["mean"] <= 1.0
        assert summary["sd"] >= 0.0
    assert "anova" in report and "levene" in report and "pairwise" in report


def test_csv_round_trip():
    rows = [[1, 0], [0, 1], [1, 1]]
    matrix = matrix_from_rows(rows, items=["item_a", "item_b"])
    text = matrix.to_csv()
    clone = ResponseMatrix.from_csv(text)
    assert clone.participants == matrix.participants
    assert clone.items == matrix.items
    assert clone.rows == matrix.rows
    assert clone.to_csv() == text
    with pytest.raises(ValueError):
        ResponseMatrix.from_csv("wrongheader,q1\np1,1\np2,0\n")

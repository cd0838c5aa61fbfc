#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "fairaffect/detail/rng.hpp"
#include "fairaffect/metrics_expr.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace fairaffect;
using testutil::DemoPlan;
using testutil::make_expr;
using testutil::make_expr_preds;

namespace {

ConfusionMatrix cm_from(const std::vector<std::vector<std::int64_t>>& rows) {
    ConfusionMatrix cm(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) cm.add(i, j, rows[i][j]);
    return cm;
}

ErrorRateMatrix erm_from(const std::vector<std::vector<double>>& rows,
                         const std::vector<bool>& defined) {
    ErrorRateMatrix m;
    m.classes = rows.size();
    m.row_defined = defined;
    for (const auto& row : rows)
        for (double v : row) m.rates.push_back(v);
    return m;
}

}  // namespace

TEST_SUITE("metrics_expr") {

TEST_CASE("confusion_matrix counts truth/prediction pairs") {
    const auto identity = confusion_matrix(std::vector<int>{0, 1}, std::vector<int>{0, 1}, 2);
    CHECK(identity.at(0, 0) == 1);
    CHECK(identity.at(1, 1) == 1);
    CHECK(identity.at(0, 1) == 0);

    const auto cm = confusion_matrix(std::vector<int>{0, 0, 1}, std::vector<int>{1, 0, 1}, 2);
    CHECK(cm.at(0, 0) == 1);
    CHECK(cm.at(0, 1) == 1);
    CHECK(cm.at(1, 0) == 0);
    CHECK(cm.at(1, 1) == 1);
    CHECK(cm.total() == 3);

    CHECK(confusion_matrix({}, {}, 2).total() == 0);
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{0}, std::vector<int>{}, 2), Error);
    CHECK_THROWS_AS(confusion_matrix(std::vector<int>{2}, std::vector<int>{0}, 2), Error);
}

TEST_CASE("f1_per_class handles zero-support classes as absent") {
    const auto perfect = f1_per_class(cm_from({{1, 0}, {0, 1}}));
    CHECK(perfect[0] == 1.0);
    CHECK(perfect[1] == 1.0);

    const auto mixed = f1_per_class(cm_from({{1, 1}, {0, 1}}));
    CHECK(*mixed[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(*mixed[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto absent = f1_per_class(cm_from({{2, 0}, {0, 0}}));
    CHECK(absent[0] == 1.0);
    CHECK(!absent[1].has_value());
}

TEST_CASE("global_f1_expr spec examples") {
    const auto perfect = make_expr({0, 1, 2}, 3);
    CHECK(global_f1_expr(perfect, make_expr_preds({0, 1, 2})) == 1.0);

    const auto dataset = make_expr({0, 0, 1}, 2);
    CHECK(global_f1_expr(dataset, make_expr_preds({1, 0, 1})) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    const auto wrong = make_expr({0, 1}, 2);
    CHECK(global_f1_expr(wrong, make_expr_preds({1, 0})) == 0.0);

    CHECK_THROWS_AS(global_f1_expr(dataset, make_expr_preds({1, 0, 1}), {}), Error);
}

TEST_CASE("normalize_confusion flags unsupported rows") {
    const auto a = normalize_confusion(cm_from({{2, 2}, {0, 4}}));
    CHECK(a.at(0, 0) == 0.5);
    CHECK(a.at(0, 1) == 0.5);
    CHECK(a.at(1, 0) == 0.0);
    CHECK(a.at(1, 1) == 1.0);
    CHECK(a.row_defined[0]);

    const auto b = normalize_confusion(cm_from({{0, 0}, {1, 1}}));
    CHECK(!b.row_defined[0]);
    CHECK(b.at(0, 0) == 0.0);
    CHECK(b.at(1, 0) == 0.5);

    const auto c = normalize_confusion(cm_from({{3, 0}, {0, 5}}));
    CHECK(c.at(0, 0) == 1.0);
    CHECK(c.at(1, 1) == 1.0);
}

TEST_CASE("mad_matrices spec examples") {
    const auto a = erm_from({{1, 0}, {0, 1}}, {true, true});
    CHECK(mad_matrices(a, a) == 0.0);

    const auto flipped = erm_from({{0, 1}, {1, 0}}, {true, true});
    CHECK(mad_matrices(a, flipped) == 1.0);

    const auto mixed = erm_from({{0.5, 0.5}, {0, 1}}, {true, true});
    CHECK(mad_matrices(mixed, a) == doctest::Approx(0.25).epsilon(1e-12));

    // undefined rows contribute zero, divisor stays C^2
    const auto partial = erm_from({{0, 0}, {0, 1}}, {false, true});
    CHECK(mad_matrices(partial, a) == doctest::Approx(0.0).epsilon(1e-12));

    CHECK_THROWS_AS(mad_matrices(a, ErrorRateMatrix{}), Error);
}

TEST_CASE("eop spec examples") {
    // identical per-group behavior -> 0
    const auto same = make_expr({0, 1, 0, 1}, 2, DemoPlan{.race = {0, 0, 1, 1}});
    CHECK(eop(same, make_expr_preds({0, 1, 0, 1}), Attribute::Race) == 0.0);

    // two groups realizing the mad example: group A diag, group B row0 split
    const auto dataset = make_expr({0, 0, 1, 0, 1}, 2, DemoPlan{.race = {0, 0, 0, 1, 1}});
    const auto preds = make_expr_preds({0, 1, 1, 0, 1});
    CHECK(eop(dataset, preds, Attribute::Race) == doctest::Approx(0.25).epsilon(1e-12));

    CHECK_THROWS_AS(eop(same, make_expr_preds({0, 1, 0, 1}), Attribute::Gender),
                    NotAssessable);
}

TEST_CASE("eop over three groups averages the three pairwise MADs") {
    const std::vector<int> race = {0, 0, 1, 1, 2, 2};
    const std::vector<int> truth = {0, 1, 0, 1, 0, 1};
    const std::vector<int> preds = {0, 1, 1, 1, 0, 0};
    const auto dataset = make_expr(truth, 2, DemoPlan{.race = race});
    const double expected = oracle::eop(
        {{{0, 1}, {0, 1}}, {{0, 1}, {1, 1}}, {{0, 1}, {0, 0}}}, 2);
    CHECK(eop(dataset, make_expr_preds(preds), Attribute::Race) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("success_rates and sp spec examples") {
    const auto dataset = make_expr({0, 0, 0, 0}, 2);
    const auto groups = testutil::all_indices(dataset);
    CHECK(success_rates(dataset, make_expr_preds({0, 0, 0, 0}), groups) ==
          std::vector<double>{1.0, 0.0});
    CHECK(success_rates(dataset, make_expr_preds({0, 1, 1, 1}), groups) ==
          std::vector<double>{0.25, 0.75});

    // extreme disparity: group A all class 0, group B all class 1
    const auto split = make_expr({0, 0, 1, 1}, 2, DemoPlan{.race = {0, 0, 1, 1}});
    CHECK(sp(split, make_expr_preds({0, 0, 1, 1}), Attribute::Race) == 1.0);

    // identical prediction distribution per group -> 0
    CHECK(sp(split, make_expr_preds({0, 1, 0, 1}), Attribute::Race) == 0.0);

    CHECK_THROWS_AS(sp(dataset, make_expr_preds({0, 0, 0, 0}), Attribute::Race),
                    NotAssessable);
}

TEST_CASE("local_f1_expr averages subgroup macro-F1") {
    // one subgroup: equals global on it
    const auto single = make_expr({0, 0, 1}, 2);
    const auto preds = make_expr_preds({1, 0, 1});
    CHECK(local_f1_expr(single, preds, Attribute::Race) ==
          doctest::Approx(global_f1_expr(single, preds)).epsilon(1e-12));

    // perfect predictions, any grouping -> 1
    const auto grouped = make_expr({0, 1, 0, 1}, 2, DemoPlan{.race = {0, 0, 1, 1}});
    CHECK(local_f1_expr(grouped, make_expr_preds({0, 1, 0, 1}), Attribute::Race) == 1.0);

    // two subgroups: mean of the two subgroup macro-F1s
    const std::vector<int> truth = {0, 0, 1, 0, 1, 1};
    const std::vector<int> pred = {1, 0, 1, 0, 0, 1};
    const auto dataset = make_expr(truth, 2, DemoPlan{.race = {0, 0, 0, 1, 1, 1}});
    const double expected = 0.5 * (oracle::macro_f1({0, 0, 1}, {1, 0, 1}, 2) +
                                   oracle::macro_f1({0, 1, 1}, {0, 0, 1}, 2));
    CHECK(local_f1_expr(dataset, make_expr_preds(pred), Attribute::Race) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("order and relabeling invariances") {
    detail::SplitMixStream rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const int classes = 2 + static_cast<int>(rng.next_below(3));
        const std::size_t n = 4 + rng.next_below(10);
        std::vector<int> truth(n), pred(n), race(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<int>(rng.next_below(classes));
            pred[i] = static_cast<int>(rng.next_below(classes));
            race[i] = static_cast<int>(rng.next_below(3));
        }

        const auto dataset = make_expr(truth, classes, DemoPlan{.race = race});
        const auto preds = make_expr_preds(pred);
        const double f1 = global_f1_expr(dataset, preds);

        // permuting sample order changes nothing
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), std::mt19937(trial));
        std::vector<int> truth_p(n), pred_p(n), race_p(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth_p[i] = truth[order[i]];
            pred_p[i] = pred[order[i]];
            race_p[i] = race[order[i]];
        }
        const auto permuted = make_expr(truth_p, classes, DemoPlan{.race = race_p});
        const auto preds_p = make_expr_preds(pred_p);
        CHECK(global_f1_expr(permuted, preds_p) == doctest::Approx(f1).epsilon(1e-12));

        // relabeling classes by a fixed permutation changes nothing
        std::vector<int> relabel(classes);
        for (int c = 0; c < classes; ++c) relabel[c] = (c + 1) % classes;
        std::vector<int> truth_r(n), pred_r(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth_r[i] = relabel[truth[i]];
            pred_r[i] = relabel[pred[i]];
        }
        const auto relabeled = make_expr(truth_r, classes, DemoPlan{.race = race});
        const auto preds_r = make_expr_preds(pred_r);
        CHECK(global_f1_expr(relabeled, preds_r) == doctest::Approx(f1).epsilon(1e-12));

        const auto groups = subgroup_index(dataset, Attribute::Race);
        if (groups.size() >= 2) {
            const double eop_value = eop(dataset, preds, Attribute::Race);
            const double sp_value = sp(dataset, preds, Attribute::Race);
            CHECK(eop_value >= 0.0);
            CHECK(eop_value <= 1.0);
            CHECK(sp_value >= 0.0);
            CHECK(sp_value <= 1.0);
            CHECK(eop(permuted, preds_p, Attribute::Race) ==
                  doctest::Approx(eop_value).epsilon(1e-12));
            CHECK(sp(relabeled, preds_r, Attribute::Race) ==
                  doctest::Approx(sp_value).epsilon(1e-12));
        }
    }
}

TEST_CASE("constant predictions give SP = 0") {
    detail::SplitMixStream rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 6 + rng.next_below(8);
        std::vector<int> truth(n), race(n), age(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<int>(rng.next_below(3));
            race[i] = static_cast<int>(rng.next_below(2));
            age[i] = static_cast<int>(rng.next_below(4));
        }
        const auto dataset = make_expr(truth, 3, DemoPlan{.race = race, .age = age});
        const auto constant = make_expr_preds(std::vector<int>(n, 1));
        for (Attribute attribute : {Attribute::Race, Attribute::Age}) {
            if (subgroup_index(dataset, attribute).size() < 2) continue;
            CHECK(sp(dataset, constant, attribute) == 0.0);
        }
    }
}

TEST_CASE("macro F1 matches the exhaustive oracle on every tiny instance") {
    // every (truth, prediction) pair with n <= 6, C = 3 (~600k instances)
    std::size_t mismatches = 0;
    std::size_t instances = 0;
    for (std::size_t n = 1; n <= 6; ++n) {
        std::size_t combos = 1;
        for (std::size_t i = 0; i < n; ++i) combos *= 9;
        std::vector<int> truth(n), pred(n);
        for (std::size_t code = 0; code < combos; ++code) {
            std::size_t rest = code;
            for (std::size_t i = 0; i < n; ++i) {
                truth[i] = static_cast<int>(rest % 3);
                rest /= 3;
                pred[i] = static_cast<int>(rest % 3);
                rest /= 3;
            }
            const double lib = macro_f1(confusion_matrix(truth, pred, 3));
            const double ref = oracle::macro_f1(truth, pred, 3);
            if (std::abs(lib - ref) > 1e-12) ++mismatches;
            ++instances;
        }
    }
    CHECK(instances == 9 + 81 + 729 + 6561 + 59049 + 531441);
    CHECK(mismatches == 0);

    // the dataset-level entry point wired through on random larger cases
    detail::SplitMixStream rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 5 + rng.next_below(2);
        std::vector<int> truth(n), pred(n);
        for (std::size_t i = 0; i < n; ++i) {
            truth[i] = static_cast<int>(rng.next_below(3));
            pred[i] = static_cast<int>(rng.next_below(3));
        }
        const auto dataset = make_expr(truth, 3);
        const auto preds = make_expr_preds(pred);
        CHECK(std::abs(global_f1_expr(dataset, preds) - oracle::macro_f1(truth, pred, 3)) <=
              1e-12);
    }
}

}  // TEST_SUITE

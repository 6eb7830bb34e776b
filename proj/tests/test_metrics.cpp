#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "gcdr/errors.hpp"
#include "gcdr/metrics.hpp"
#include "gcdr/rng.hpp"

using namespace gcdr;

namespace {

// ---- brute-force oracles: direct counting, no shared code with the library ----

double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& labels01) {
    double wins = 0.0;
    long long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels01[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels01[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

// Macro mean of one-vs-rest pairwise AUC; mirrors the library's skip rule
// (class absent from labels, or covering every row). Returns false when every
// class is skipped.
bool oracle_a_auc(const Tensor& scores, const std::vector<int>& labels, double* out) {
    const int k = scores.dim(1);
    double sum = 0.0;
    int used = 0;
    for (int c = 0; c < k; ++c) {
        long long pos = 0;
        for (int l : labels) pos += (l == c);
        if (pos == 0 || pos == static_cast<long long>(labels.size())) continue;
        std::vector<double> col(labels.size());
        std::vector<int> bin(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) {
            col[i] = static_cast<double>(scores.at({static_cast<int>(i), c}));
            bin[i] = labels[i] == c ? 1 : 0;
        }
        sum += pairwise_auc(col, bin);
        ++used;
    }
    if (used == 0) return false;
    *out = sum / used;
    return true;
}

bool oracle_far_frr(const Tensor& scores, const std::vector<int>& labels,
                    const std::vector<double>& thr, double* far_out, double* frr_out) {
    const int k = scores.dim(1);
    double far_sum = 0.0, frr_sum = 0.0;
    int used = 0;
    for (int c = 0; c < k; ++c) {
        long long pos = 0, neg = 0, acc_neg = 0, rej_pos = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const double s = static_cast<double>(scores.at({static_cast<int>(i), c}));
            if (labels[i] == c) {
                ++pos;
                if (s < thr[static_cast<std::size_t>(c)]) ++rej_pos;
            } else {
                ++neg;
                if (s >= thr[static_cast<std::size_t>(c)]) ++acc_neg;
            }
        }
        if (pos == 0 || neg == 0) continue;
        far_sum += static_cast<double>(acc_neg) / static_cast<double>(neg);
        frr_sum += static_cast<double>(rej_pos) / static_cast<double>(pos);
        ++used;
    }
    if (used == 0) return false;
    *far_out = far_sum / used;
    *frr_out = frr_sum / used;
    return true;
}

// Exhaustive scan over the observed scores of each column; lowest threshold
// among FAR+FRR minimizers. Classes without both kinds get 1/k.
std::vector<double> oracle_thresholds(const Tensor& scores, const std::vector<int>& labels) {
    const int k = scores.dim(1);
    std::vector<double> out(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        long long pos = 0;
        for (int l : labels) pos += (l == c);
        if (pos == 0 || pos == static_cast<long long>(labels.size())) {
            out[static_cast<std::size_t>(c)] = 1.0 / static_cast<double>(k);
            continue;
        }
        std::set<double> cands;
        for (std::size_t i = 0; i < labels.size(); ++i)
            cands.insert(static_cast<double>(scores.at({static_cast<int>(i), c})));
        double best_t = 0.0, best_v = 1e18;
        for (double t : cands) {  // std::set iterates ascending: ties keep the lowest
            long long acc_neg = 0, rej_pos = 0, neg = 0;
            for (std::size_t i = 0; i < labels.size(); ++i) {
                const double s = static_cast<double>(scores.at({static_cast<int>(i), c}));
                if (labels[i] == c) {
                    if (s < t) ++rej_pos;
                } else {
                    ++neg;
                    if (s >= t) ++acc_neg;
                }
            }
            const double v = static_cast<double>(acc_neg) / static_cast<double>(neg) +
                             static_cast<double>(rej_pos) / static_cast<double>(pos);
            if (v < best_v) {
                best_v = v;
                best_t = t;
            }
        }
        out[static_cast<std::size_t>(c)] = best_t;
    }
    return out;
}

double oracle_acc1(const Tensor& scores, const std::vector<int>& labels) {
    long long hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int arg = 0;
        for (int c = 1; c < scores.dim(1); ++c)
            if (scores.at({static_cast<int>(i), c}) > scores.at({static_cast<int>(i), arg}))
                arg = c;
        hits += (arg == labels[i]);
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Frequency-table total-variation oracle. Returns false when fewer than two
// domains exist or no (label, domain-pair) has support on both sides.
bool oracle_eo(const std::vector<int>& preds, const std::vector<int>& labels,
               const std::vector<int>& domains, double* out) {
    std::set<int> ys(labels.begin(), labels.end()), zs(domains.begin(), domains.end());
    if (zs.size() < 2) return false;
    std::map<std::pair<int, int>, std::map<int, double>> hist;
    std::map<std::pair<int, int>, double> total;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        hist[{labels[i], domains[i]}][preds[i]] += 1.0;
        total[{labels[i], domains[i]}] += 1.0;
    }
    double sum = 0.0;
    int pairs = 0;
    for (int y : ys)
        for (auto z1 = zs.begin(); z1 != zs.end(); ++z1)
            for (auto z2 = std::next(z1); z2 != zs.end(); ++z2) {
                if (!total.count({y, *z1}) || !total.count({y, *z2})) continue;
                std::set<int> support;
                for (auto& [p, n] : hist[{y, *z1}]) {
                    (void)n;
                    support.insert(p);
                }
                for (auto& [p, n] : hist[{y, *z2}]) {
                    (void)n;
                    support.insert(p);
                }
                double tv = 0.0;
                for (int p : support) {
                    const double p1 =
                        (hist[{y, *z1}].count(p) ? hist[{y, *z1}][p] : 0.0) / total[{y, *z1}];
                    const double p2 =
                        (hist[{y, *z2}].count(p) ? hist[{y, *z2}][p] : 0.0) / total[{y, *z2}];
                    tv += std::abs(p1 - p2);
                }
                sum += 0.5 * tv;
                ++pairs;
            }
    if (pairs == 0) return false;
    *out = sum / pairs;
    return true;
}

Tensor rand_scores(int n, int k, Rng& r) {
    Tensor t({n, k});
    for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = r.uniform_float(0.0f, 1.0f);
    return t;
}

// Labels guaranteed to include at least two distinct classes.
std::vector<int> rand_labels(int n, int k, Rng& r) {
    std::vector<int> labels(static_cast<std::size_t>(n));
    for (int& l : labels) l = r.uniform_int(0, k - 1);
    labels[0] = 0;
    labels[1] = 1;
    return labels;
}

}  // namespace

TEST_CASE("roc_auc worked examples") {
    CHECK(roc_auc({1.0, 1.0, 0.0, 0.0}, {1, 1, 0, 0}) == 1.0);
    CHECK(roc_auc({0.7, 0.7, 0.7, 0.7}, {1, 0, 1, 0}) == 0.5);
    const std::vector<double> s{0.9, 0.4, 0.6, 0.1};
    const std::vector<int> l{1, 0, 1, 0};
    CHECK(roc_auc(s, l) == 1.0);
    CHECK(roc_auc(s, l) == pairwise_auc(s, l));
    CHECK_THROWS_AS(roc_auc({0.5, 0.6}, {1, 1}), MetricError);
}

TEST_CASE("roc_auc is invariant under strictly increasing transforms") {
    Rng r(31);
    for (int rep = 0; rep < 10; ++rep) {
        const int n = r.uniform_int(4, 30);
        std::vector<double> s(static_cast<std::size_t>(n));
        std::vector<int> l(static_cast<std::size_t>(n));
        for (auto& v : s) v = r.uniform();
        for (auto& v : l) v = r.uniform_int(0, 1);
        l[0] = 0;
        l[1] = 1;
        const double base = roc_auc(s, l);
        std::vector<double> e(s), c(s);
        for (auto& v : e) v = std::exp(3.0 * v + 1.0);
        for (auto& v : c) v = v * v * v;
        CHECK(roc_auc(e, l) == doctest::Approx(base).epsilon(1e-12));
        CHECK(roc_auc(c, l) == doctest::Approx(base).epsilon(1e-12));
    }
}

TEST_CASE("a_auc worked examples") {
    // identity score matrix separates every class perfectly
    const int k = 4;
    Tensor id({k, k});
    std::vector<int> labels(k);
    for (int i = 0; i < k; ++i) {
        id.at({i, i}) = 1.0f;
        labels[static_cast<std::size_t>(i)] = i;
    }
    CHECK(a_auc(id, labels) == 1.0);

    // uniform scores tie every pair
    Tensor flat({6, 3});
    flat.fill(0.25f);
    CHECK(a_auc(flat, {0, 1, 2, 0, 1, 2}) == 0.5);

    // absent classes are skipped and reported
    std::vector<int> skipped;
    Rng r(33);
    const Tensor sc = rand_scores(8, 5, r);
    const double v = a_auc(sc, {0, 1, 0, 1, 0, 1, 0, 1}, &skipped);
    CHECK(skipped == std::vector<int>{2, 3, 4});
    double ov = 0.0;
    REQUIRE(oracle_a_auc(sc, {0, 1, 0, 1, 0, 1, 0, 1}, &ov));
    CHECK(v == doctest::Approx(ov).epsilon(1e-12));

    // single-class labels leave nothing to rank
    CHECK_THROWS_AS(a_auc(rand_scores(4, 2, r), std::vector<int>{1, 1, 1, 1}), MetricError);
}

TEST_CASE("far_frr worked examples") {
    Rng r(35);
    const Tensor sc = rand_scores(10, 2, r);
    const std::vector<int> labels{0, 1, 0, 1, 0, 1, 0, 1, 0, 1};

    // threshold 0 accepts everything
    const FarFrr accept = far_frr(sc, labels, {0.0, 0.0});
    CHECK(accept.far == 1.0);
    CHECK(accept.frr == 0.0);

    // thresholds above the score range reject everything
    const FarFrr reject = far_frr(sc, labels, {1.5, 1.5});
    CHECK(reject.far == 0.0);
    CHECK(reject.frr == 1.0);

    // mid thresholds match the counting oracle
    const std::vector<double> thr{0.45, 0.6};
    const FarFrr mid = far_frr(sc, labels, thr);
    double of = 0.0, orr = 0.0;
    REQUIRE(oracle_far_frr(sc, labels, thr, &of, &orr));
    CHECK(mid.far == doctest::Approx(of).epsilon(1e-12));
    CHECK(mid.frr == doctest::Approx(orr).epsilon(1e-12));

    CHECK_THROWS_AS(far_frr(sc, std::vector<int>(10, 0), {0.5, 0.5}), MetricError);
}

TEST_CASE("select_thresholds worked examples") {
    // perfectly separated class reaches FAR = FRR = 0
    Tensor sep({4, 2});
    sep.at({0, 0}) = 0.9f;
    sep.at({1, 0}) = 0.8f;
    sep.at({2, 0}) = 0.2f;
    sep.at({3, 0}) = 0.1f;
    for (int i = 0; i < 4; ++i) sep.at({i, 1}) = 1.0f - sep.at({i, 0});
    const std::vector<int> labels{0, 0, 1, 1};
    const auto thr = select_thresholds(sep, labels);
    const FarFrr ff = far_frr(sep, labels, thr);
    CHECK(ff.far == 0.0);
    CHECK(ff.frr == 0.0);

    // all-identical scores: any threshold gives FAR + FRR = 1; lowest wins
    Tensor same({4, 2});
    same.fill(0.5f);
    const auto thr2 = select_thresholds(same, labels);
    CHECK(thr2[0] == 0.5);
    CHECK(thr2[1] == 0.5);
    const FarFrr ff2 = far_frr(same, labels, thr2);
    CHECK(ff2.combined() == doctest::Approx(1.0).epsilon(1e-12));

    // a class absent from the set falls back to 1/k and is reported
    Rng r(37);
    const Tensor sc = rand_scores(6, 3, r);
    std::vector<int> degenerate;
    const auto thr3 = select_thresholds(sc, {0, 1, 0, 1, 0, 1}, &degenerate);
    CHECK(degenerate == std::vector<int>{2});
    CHECK(thr3[2] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("acc_at_1 worked examples") {
    const int k = 3;
    Tensor id({k, k});
    std::vector<int> labels(k);
    for (int i = 0; i < k; ++i) {
        id.at({i, i}) = 1.0f;
        labels[static_cast<std::size_t>(i)] = i;
    }
    CHECK(acc_at_1(id, labels) == 1.0);

    // argmax never equals the label
    Tensor wrong({2, 2});
    wrong.at({0, 1}) = 1.0f;
    wrong.at({1, 0}) = 1.0f;
    CHECK(acc_at_1(wrong, {0, 1}) == 0.0);

    // ties resolve to the lowest column index
    Tensor tie({1, 3});
    tie.fill(0.5f);
    CHECK(acc_at_1(tie, {0}) == 1.0);
    CHECK(acc_at_1(tie, {1}) == 0.0);
}

TEST_CASE("eo_gap worked examples") {
    // identical prediction behavior across domains
    CHECK(eo_gap({0, 0, 1, 1}, {0, 0, 1, 1}, {1, 2, 1, 2}) == 0.0);

    // same label, disjoint outputs per domain
    CHECK(eo_gap({1, 2, 1, 2}, {0, 0, 0, 0}, {1, 2, 1, 2}) == 1.0);

    // hand-tabulated 3-label 2-domain case
    Rng r(39);
    std::vector<int> preds, labels, domains;
    for (int i = 0; i < 60; ++i) {
        preds.push_back(r.uniform_int(0, 2));
        labels.push_back(r.uniform_int(0, 2));
        domains.push_back(r.uniform_int(0, 1));
    }
    double ov = 0.0;
    REQUIRE(oracle_eo(preds, labels, domains, &ov));
    CHECK(eo_gap(preds, labels, domains) == doctest::Approx(ov).epsilon(1e-12));

    CHECK_THROWS_AS(eo_gap({0, 1}, {0, 1}, {1, 1}), MetricError);

    // unsupported cells are skipped and counted
    int skipped = -1;
    const double v =
        eo_gap({0, 1, 0, 1, 0}, {0, 0, 1, 1, 1}, {1, 2, 1, 2, 2}, &skipped);
    CHECK(v >= 0.0);
    CHECK(skipped == 0);
    int skipped2 = -1;
    // label 1 never appears in domain 1 -> one skipped pair
    (void)eo_gap({0, 1, 1, 1}, {0, 0, 1, 1}, {1, 2, 2, 2}, &skipped2);
    CHECK(skipped2 == 1);
}

TEST_CASE("metric battery agrees with brute-force oracles on random instances") {
    Rng r(41);
    int instances = 0;
    while (instances < 100) {
        const int n = r.uniform_int(5, 50);
        const int k = r.uniform_int(2, 6);
        const Tensor scores = rand_scores(n, k, r);
        const std::vector<int> labels = rand_labels(n, k, r);

        double oracle = 0.0;
        if (oracle_a_auc(scores, labels, &oracle))
            CHECK(std::abs(a_auc(scores, labels) - oracle) <= 1e-9);

        std::vector<double> thr(static_cast<std::size_t>(k));
        for (auto& t : thr) t = r.uniform();
        double of = 0.0, ofr = 0.0;
        if (oracle_far_frr(scores, labels, thr, &of, &ofr)) {
            const FarFrr ff = far_frr(scores, labels, thr);
            CHECK(std::abs(ff.far - of) <= 1e-9);
            CHECK(std::abs(ff.frr - ofr) <= 1e-9);
            CHECK(ff.far >= 0.0);
            CHECK(ff.far <= 1.0);
            CHECK(ff.frr >= 0.0);
            CHECK(ff.frr <= 1.0);
        }

        CHECK(std::abs(acc_at_1(scores, labels) - oracle_acc1(scores, labels)) <= 1e-9);

        const auto sel = select_thresholds(scores, labels);
        const auto want = oracle_thresholds(scores, labels);
        REQUIRE(sel.size() == want.size());
        for (std::size_t c = 0; c < sel.size(); ++c) CHECK(sel[c] == want[c]);

        std::vector<int> preds(static_cast<std::size_t>(n)), domains(static_cast<std::size_t>(n));
        for (auto& p : preds) p = r.uniform_int(0, k - 1);
        for (auto& d : domains) d = r.uniform_int(1, 3);
        domains[0] = 1;
        domains[1] = 2;
        double oe = 0.0;
        if (oracle_eo(preds, labels, domains, &oe)) {
            const double got = eo_gap(preds, labels, domains);
            CHECK(std::abs(got - oe) <= 1e-9);
            CHECK(got >= 0.0);
            CHECK(got <= 1.0);
        }

        const double auc = a_auc(scores, labels);
        CHECK(auc >= 0.0);
        CHECK(auc <= 1.0);
        ++instances;
    }
    CHECK(instances == 100);
}

#include "gcdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "gcdr/errors.hpp"

namespace gcdr {

double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels01) {
    if (scores.size() != labels01.size())
        throw DimensionError("roc_auc: " + std::to_string(scores.size()) + " scores vs " +
                             std::to_string(labels01.size()) + " labels");
    std::int64_t n_pos = 0, n_neg = 0;
    for (int l : labels01) {
        if (l == 1)
            ++n_pos;
        else if (l == 0)
            ++n_neg;
        else
            throw ValueError("roc_auc: labels must be 0 or 1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw MetricError("roc_auc: needs at least one positive and one negative");

    // midrank statistic: AUC = (rank-sum of positives - P(P+1)/2) / (P*N)
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&scores](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels01[order[k]] == 1) pos_rank_sum += midrank;
        i = j + 1;
    }
    const double p = static_cast<double>(n_pos), q = static_cast<double>(n_neg);
    return (pos_rank_sum - p * (p + 1.0) / 2.0) / (p * q);
}

double a_auc(const Tensor& scores, const std::vector<int>& labels, std::vector<int>* skipped) {
    if (scores.rank() != 2)
        throw DimensionError("a_auc: scores must be rank 2, got " + shape_str(scores.shape()));
    const int n = scores.dim(0), k = scores.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw DimensionError("a_auc: label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= k) throw RangeError("a_auc: label outside score columns");
    if (skipped) skipped->clear();
    double sum = 0.0;
    int used = 0;
    std::vector<double> col(static_cast<std::size_t>(n));
    std::vector<int> bin(static_cast<std::size_t>(n));
    for (int c = 0; c < k; ++c) {
        int pos = 0;
        for (int i = 0; i < n; ++i) {
            col[static_cast<std::size_t>(i)] = static_cast<double>(scores.mat()(i, c));
            const int b = labels[static_cast<std::size_t>(i)] == c ? 1 : 0;
            bin[static_cast<std::size_t>(i)] = b;
            pos += b;
        }
        if (pos == 0 || pos == n) {
            if (skipped) skipped->push_back(c);
            continue;
        }
        sum += roc_auc(col, bin);
        ++used;
    }
    if (used == 0) throw MetricError("a_auc: every class skipped (single-class input)");
    return sum / static_cast<double>(used);
}

FarFrr far_frr(const Tensor& scores, const std::vector<int>& labels,
               const std::vector<double>& thresholds) {
    if (scores.rank() != 2)
        throw DimensionError("far_frr: scores must be rank 2");
    const int n = scores.dim(0), k = scores.dim(1);
    if (static_cast<int>(labels.size()) != n) throw DimensionError("far_frr: label count mismatch");
    if (static_cast<int>(thresholds.size()) != k)
        throw DimensionError("far_frr: " + std::to_string(thresholds.size()) +
                             " thresholds for " + std::to_string(k) + " classes");
    for (int l : labels)
        if (l < 0 || l >= k) throw RangeError("far_frr: label outside score columns");
    double far_sum = 0.0, frr_sum = 0.0;
    int used = 0;
    for (int c = 0; c < k; ++c) {
        std::int64_t pos = 0, neg = 0, false_acc = 0, false_rej = 0;
        for (int i = 0; i < n; ++i) {
            const bool is_pos = labels[static_cast<std::size_t>(i)] == c;
            const bool accept = static_cast<double>(scores.mat()(i, c)) >= thresholds[static_cast<std::size_t>(c)];
            if (is_pos) {
                ++pos;
                if (!accept) ++false_rej;
            } else {
                ++neg;
                if (accept) ++false_acc;
            }
        }
        if (pos == 0 || neg == 0) continue;
        far_sum += static_cast<double>(false_acc) / static_cast<double>(neg);
        frr_sum += static_cast<double>(false_rej) / static_cast<double>(pos);
        ++used;
    }
    if (used == 0) throw MetricError("far_frr: no class has both positives and negatives");
    return {far_sum / static_cast<double>(used), frr_sum / static_cast<double>(used)};
}

std::vector<double> select_thresholds(const Tensor& scores, const std::vector<int>& labels,
                                      std::vector<int>* degenerate) {
    if (scores.rank() != 2)
        throw DimensionError("select_thresholds: scores must be rank 2");
    const int n = scores.dim(0), k = scores.dim(1);
    if (static_cast<int>(labels.size()) != n)
        throw DimensionError("select_thresholds: label count mismatch");
    for (int l : labels)
        if (l < 0 || l >= k) throw RangeError("select_thresholds: label outside score columns");
    if (degenerate) degenerate->clear();
    // Classes without both kinds keep the neutral uniform-probability cutoff.
    std::vector<double> out(static_cast<std::size_t>(k), 1.0 / static_cast<double>(k));
    std::vector<std::pair<double, int>> col(static_cast<std::size_t>(n));  // (score, is_pos)
    for (int c = 0; c < k; ++c) {
        std::int64_t pos = 0;
        for (int i = 0; i < n; ++i) {
            const bool is_pos = labels[static_cast<std::size_t>(i)] == c;
            col[static_cast<std::size_t>(i)] = {static_cast<double>(scores.mat()(i, c)),
                                                is_pos ? 1 : 0};
            pos += is_pos;
        }
        const std::int64_t neg = n - pos;
        if (pos == 0 || neg == 0) {
            if (degenerate) degenerate->push_back(c);
            continue;
        }
        std::sort(col.begin(), col.end());
        // threshold t = col[i].first accepts everything with score >= t:
        // FAR = negatives at rank >= first(t) / neg, FRR = positives below / pos
        double best_cost = std::numeric_limits<double>::infinity();
        double best_thr = 0.0;
        std::int64_t pos_below = 0, neg_below = 0;
        std::size_t i = 0;
        while (i < col.size()) {
            std::size_t j = i;
            while (j + 1 < col.size() && col[j + 1].first == col[i].first) ++j;
            const double far = static_cast<double>(neg - neg_below) / static_cast<double>(neg);
            const double frr = static_cast<double>(pos_below) / static_cast<double>(pos);
            const double cost = far + frr;
            if (cost < best_cost) {
                best_cost = cost;
                best_thr = col[i].first;
            }
            for (std::size_t t = i; t <= j; ++t) {
                pos_below += col[t].second;
                neg_below += 1 - col[t].second;
            }
            i = j + 1;
        }
        out[static_cast<std::size_t>(c)] = best_thr;
    }
    return out;
}

double acc_at_1(const Tensor& scores, const std::vector<int>& labels) {
    if (scores.rank() != 2) throw DimensionError("acc_at_1: scores must be rank 2");
    const int n = scores.dim(0), k = scores.dim(1);
    if (static_cast<int>(labels.size()) != n) throw DimensionError("acc_at_1: label count mismatch");
    if (n == 0) throw MetricError("acc_at_1: empty input");
    std::int64_t hits = 0;
    for (int i = 0; i < n; ++i) {
        int arg = 0;
        float best = scores.mat()(i, 0);
        for (int c = 1; c < k; ++c)
            if (scores.mat()(i, c) > best) {
                best = scores.mat()(i, c);
                arg = c;
            }
        if (arg == labels[static_cast<std::size_t>(i)]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n);
}

double eo_gap(const std::vector<int>& preds, const std::vector<int>& labels,
              const std::vector<int>& domains, int* skipped_cells) {
    const std::size_t n = preds.size();
    if (labels.size() != n || domains.size() != n)
        throw DimensionError("eo_gap: preds/labels/domains length mismatch");
    if (n == 0) throw MetricError("eo_gap: empty input");
    std::set<int> domain_values(domains.begin(), domains.end());
    if (domain_values.size() < 2)
        throw MetricError("eo_gap: needs at least two domains, got " +
                          std::to_string(domain_values.size()));

    // (label, domain) -> prediction frequency table
    std::map<std::pair<int, int>, std::map<int, std::int64_t>> cells;
    std::map<std::pair<int, int>, std::int64_t> cell_totals;
    std::set<int> label_values;
    for (std::size_t i = 0; i < n; ++i) {
        const auto key = std::make_pair(labels[i], domains[i]);
        cells[key][preds[i]] += 1;
        cell_totals[key] += 1;
        label_values.insert(labels[i]);
    }

    double tv_sum = 0.0;
    int pairs = 0, skipped = 0;
    for (int y : label_values) {
        for (auto itz = domain_values.begin(); itz != domain_values.end(); ++itz) {
            for (auto itz2 = std::next(itz); itz2 != domain_values.end(); ++itz2) {
                const auto k1 = std::make_pair(y, *itz), k2 = std::make_pair(y, *itz2);
                const auto c1 = cell_totals.find(k1), c2 = cell_totals.find(k2);
                if (c1 == cell_totals.end() || c2 == cell_totals.end()) {
                    ++skipped;
                    continue;
                }
                const auto& f1 = cells[k1];
                const auto& f2 = cells[k2];
                std::set<int> support;
                for (const auto& [p, cnt] : f1) {
                    (void)cnt;
                    support.insert(p);
                }
                for (const auto& [p, cnt] : f2) {
                    (void)cnt;
                    support.insert(p);
                }
                double tv = 0.0;
                for (int p : support) {
                    const auto i1 = f1.find(p), i2 = f2.find(p);
                    const double p1 = i1 == f1.end()
                                          ? 0.0
                                          : static_cast<double>(i1->second) /
                                                static_cast<double>(c1->second);
                    const double p2 = i2 == f2.end()
                                          ? 0.0
                                          : static_cast<double>(i2->second) /
                                                static_cast<double>(c2->second);
                    tv += std::abs(p1 - p2);
                }
                tv_sum += 0.5 * tv;
                ++pairs;
            }
        }
    }
    if (skipped_cells) *skipped_cells = skipped;
    if (pairs == 0) throw MetricError("eo_gap: no supported (label, domain-pair) cell");
    return tv_sum / static_cast<double>(pairs);
}

}  // namespace gcdr

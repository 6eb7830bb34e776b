#pragma once

#include <string>
#include <vector>

#include "gcdr/tensor.hpp"

namespace gcdr {

// Class labels passed to these functions are 0-based column indices into the
// score matrix. All accumulation is f64.

// Area under the ROC curve via the rank statistic: P(s+ > s-) + 0.5 P(tie).
// MetricError unless both a positive and a negative example are present.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels01);

// Macro-average one-vs-rest AUC over score columns. Classes absent from
// `labels` (or covering all rows) are skipped and reported in `skipped`;
// MetricError when every class is skipped.
double a_auc(const Tensor& scores, const std::vector<int>& labels,
             std::vector<int>* skipped = nullptr);

// Per-class acceptance at thresholds: sample i is accepted for class c iff
// scores(i,c) >= thresholds[c]. FAR_c = accepted negatives / negatives,
// FRR_c = rejected positives / positives; macro means over classes with both
// kinds present (MetricError when no class qualifies).
struct FarFrr {
    double far = 0.0;
    double frr = 0.0;
    double combined() const { return far + frr; }
};
FarFrr far_frr(const Tensor& scores, const std::vector<int>& labels,
               const std::vector<double>& thresholds);

// Per-class threshold minimizing FAR_c + FRR_c over the observed scores of
// that column (ties -> lowest threshold). Classes without both a positive and
// a negative fall back to the neutral threshold 1/k and are reported in
// `degenerate`.
std::vector<double> select_thresholds(const Tensor& scores, const std::vector<int>& labels,
                                      std::vector<int>* degenerate = nullptr);

// Top-1 accuracy; argmax ties resolve to the lowest column index.
double acc_at_1(const Tensor& scores, const std::vector<int>& labels);

// Equality-of-odds gap: mean over labels y and unordered domain pairs (z,z')
// of the total-variation distance between P(pred | y, z) and P(pred | y, z').
// Cells with an unsupported (y,z) combination are skipped (count reported via
// `skipped_cells`); MetricError when fewer than two domains are present or no
// pair is supported.
double eo_gap(const std::vector<int>& preds, const std::vector<int>& labels,
              const std::vector<int>& domains, int* skipped_cells = nullptr);

// Evaluation summary for one (variant, stage, epoch, split).
struct MetricsReport {
    double aauc = 0.0;
    double afar = 0.0;
    double afrr = 0.0;
    double acc1 = 0.0;
    bool eo_defined = false;
    double eo = 0.0;
    double combined_error() const { return (afar + afrr) / 2.0; }
};

}  // namespace gcdr

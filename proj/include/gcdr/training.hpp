#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gcdr/metrics.hpp"
#include "gcdr/model.hpp"
#include "gcdr/split.hpp"

namespace gcdr {

// Training recipes. `Full` is the two-stage method; the others remove or
// rewire pieces of it for comparison:
//   Stage1Only   - first stage only, classify with the stage-1 class head
//   SingleBranch - only branch 1 exists; no recombination stage
//   SharedD      - discriminators shared across branches (one per attribute)
//   NoAdvStage1  - stage 1 keeps only the classification terms; stage 2 runs
//   NoAdvAtAll   - additionally trains stage 2 with full backprop through
//                  every additive net (no selective routing)
//   Direct       - plain classifier: trunk + branch 1 + class head
enum class Variant { Full, Stage1Only, SingleBranch, SharedD, NoAdvStage1, NoAdvAtAll, Direct };

Variant variant_from_string(const std::string& s);  // ConfigError on unknown name
std::string variant_name(Variant v);
bool variant_runs_stage2(Variant v);
bool variant_single_branch(Variant v);

struct TrainConfig {
    Variant variant = Variant::Full;
    int batch_size = 64;
    int stage1_epochs = 30;
    int stage2_epochs = 10;
    int disc_steps = 1;   // classify+discriminate steps per scheduling unit
    int adv_steps = 5;    // adversarial steps per scheduling unit
    AdamConfig adam;
    float tau = 0.9f;     // augmentation screening confidence
    std::int64_t n_aug = 0;  // augmentation draws; 0 -> 4x train size
    std::uint64_t seed = 0;
    std::vector<std::pair<int, int>> causal_edges;  // 1-based (cause, effect)
    std::optional<WeightTables> weights;            // unset -> schema defaults
    int eval_batch = 256;

    void check() const;  // ConfigError on out-of-range fields
};

// Uniform access to (features, attribute tuples) by corpus index, for both
// the colored-digit corpus and tabular feature matrices. Non-owning. Tabular
// attribute rows are only read when gathered, so a table may carry empty
// rows for samples no split references (they throw if touched).
class DatasetView {
public:
    static DatasetView from_corpus(const ColorDigitCorpus& corpus);
    static DatasetView from_tabular(const Tensor& features,
                                    const std::vector<std::vector<int>>& attrs,
                                    const AttributeSchema& schema);

    int size() const;
    const AttributeSchema& schema() const;
    InputSpec input() const;
    Tensor gather_x(const std::vector<int>& indices) const;
    std::vector<std::vector<int>> gather_attrs(const std::vector<int>& indices) const;

private:
    const ColorDigitCorpus* corpus_ = nullptr;
    const Tensor* features_ = nullptr;
    const std::vector<std::vector<int>>* attrs_ = nullptr;
    AttributeSchema schema_;
};

struct Batch {
    Tensor x;
    std::vector<std::vector<int>> attrs;
};

// Mean per-term losses of one scheduling unit.
struct Stage1StepResult {
    double classify = 0.0;   // branch heads vs true attributes (CE)
    double disc_fit = 0.0;   // off-diagonal heads fit true attributes (MSE)
    double self_fit = 0.0;   // trunk aligns diagonal heads (MSE)
    double confusion = 0.0;  // branches push off-diagonal heads to flipped targets
};

// One scheduling unit on one mini-batch: `disc_steps` combined
// classification+discriminator updates, then `adv_steps` adversarial updates.
// NumericError (naming the term) on a non-finite loss.
Stage1StepResult stage1_step(ModelGraph& g, const Batch& batch, const TrainConfig& cfg);

// Recombined feature set for the second stage. Entry i holds per-branch donor
// features f[j].row(i), the donor attribute tuple, and whether that tuple was
// observed in training (seen).
struct AugmentedSet {
    std::vector<Tensor> f;                 // per branch: (n, feature)
    std::vector<std::vector<int>> tuples;  // n x (m+1)
    std::vector<char> seen;

    int size() const { return static_cast<int>(seen.size()); }
    int seen_count() const;
};

// Pure recombination: draw n_aug donor tuples (one independent donor index
// per branch), drop draws where any donor's diagonal-head confidence on its
// own attribute falls below tau, and flag tuple membership in train_combos.
// EmptinessError when everything is screened out.
AugmentedSet recombine(const std::vector<Tensor>& features,
                       const std::vector<std::vector<float>>& confidence,
                       const std::vector<std::vector<int>>& attrs,
                       const std::set<std::vector<int>>& train_combos, std::int64_t n_aug,
                       float tau, std::uint64_t seed);

// Evaluate branch features + confidences over the training split and
// recombine. Single-branch recipes cannot augment (ValueError).
AugmentedSet make_augmented(ModelGraph& g, const DatasetView& data,
                            const std::vector<int>& train_indices,
                            const std::set<std::vector<int>>& train_combos,
                            const TrainConfig& cfg);

struct Stage2StepResult {
    double seen_loss = 0.0;
    double unseen_loss = 0.0;
};

// One optimizer step on the augmented items listed in `item_ids`: seen items
// update (classifier heads, own additive net); unseen items update
// (classifier heads, cross-branch additive nets per the prior); the
// full-backprop recipe updates every head and net from both parts.
Stage2StepResult stage2_step(ModelGraph& g, const AugmentedSet& aug,
                             const std::vector<int>& item_ids, const TrainConfig& cfg);

struct MetricRow {
    std::string variant;
    int stage = 1;
    int epoch = 0;
    std::string split;   // "train" | "val" | "test"
    std::string metric;
    double value = 0.0;
};

// Scores on the stage-appropriate class head: stage 1 -> D_(1,1) softmax,
// stage 2 -> R_1 over branch 1's additive code.
Tensor eval_scores(ModelGraph& g, const DatasetView& data, const std::vector<int>& indices,
                   int stage, int eval_batch);

struct TrainResult {
    std::vector<MetricRow> rows;
    MetricsReport final_test;      // metrics of the recipe's last stage
    int final_stage = 1;
    int best_stage1_epoch = 0;
    int best_stage2_epoch = 0;
    ModelGraph graph;
};

// Run the recipe end to end: per-epoch validation rows, best-validation
// parameter selection per stage, final test metrics (including the test-split
// equality-of-odds gap over the parity attribute when defined).
TrainResult train(const DatasetView& data, const GcdrSplit& split, const TrainConfig& cfg);

struct CurvePoint {
    int mark_epoch = 0;
    MetricsReport before;  // stage-1 head at the mark
    MetricsReport after;   // after stage-2 training from that mark
};

// Stage-2 benefit as a function of stage-1 progress: snapshot stage 1 at each
// mark epoch, then train stage 2 from each snapshot and measure test metrics
// before/after. Marks must be within [1, stage1_epochs].
std::vector<CurvePoint> stage2_improvement_curve(const DatasetView& data, const GcdrSplit& split,
                                                 const TrainConfig& cfg,
                                                 const std::vector<int>& marks);

}  // namespace gcdr

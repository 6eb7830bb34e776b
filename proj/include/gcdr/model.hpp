#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcdr/dataset.hpp"
#include "gcdr/optim.hpp"
#include "gcdr/tape.hpp"

namespace gcdr {

struct InputSpec {
    enum class Kind { Image, Vector };
    Kind kind = Kind::Image;
    int c = 3, h = 28, w = 28;  // image
    int d = 16;                 // vector

    static InputSpec image(int c, int h, int w) { return {Kind::Image, c, h, w, 0}; }
    static InputSpec vector(int d) { return {Kind::Vector, 0, 0, 0, d}; }
};

struct ModelWidths {
    int g_hidden = 64;    // branch extractor hidden units
    int feature = 32;     // per-branch feature width
    int t_hidden = 64;    // additive-net hidden units
    int vec_hidden = 128; // vector-input trunk width
};

// Loss-term weight tables. w[j] scales the attribute-classification term of
// branch j; wt[j][jp] scales the discriminator/adversarial term of head
// (j, jp); wp[j] scales the recombination-classification term of branch j.
// Defaults: w[0] = wp[0] = 1, wt[j][0] = 1 for every j, everything else 0.1.
struct WeightTables {
    std::vector<double> w;
    std::vector<std::vector<double>> wt;
    std::vector<double> wp;

    static WeightTables defaults(int count);
    void check(int count) const;  // sizes match, all entries >= 0
};

// Binary mask over branch/head pairs encoding prior cause-effect knowledge.
// lambda[j][jp] = 0 exactly when attribute jp+1 causes attribute j+1; such
// head terms are dropped from the adversarial objectives, and the reverse
// direction prunes cross-branch updates in recombination training.
struct CausalPrior {
    std::vector<std::vector<int>> lambda;  // (m+1)x(m+1) of 0/1

    static CausalPrior all_ones(int count);
    // edges are 1-based (cause, effect) pairs
    static CausalPrior from_edges(int count, const std::vector<std::pair<int, int>>& edges);
    void check(int count) const;  // ValueError on non-0/1 or bad shape
};

// The full parameter graph:
//   trunk P, per-attribute extractors G_j, discriminator heads D_(j,jp)
//   (softmax over attribute jp's values, reading branch j's feature),
//   additive nets T_j and classifier heads R_j over the additive code.
// With `shared_d`, all branches share one discriminator per target attribute.
class ModelGraph {
public:
    ModelGraph(AttributeSchema schema, InputSpec input, ModelWidths widths, std::uint64_t seed,
               bool shared_d = false);

    const AttributeSchema& schema() const { return schema_; }
    const InputSpec& input() const { return input_; }
    const ModelWidths& widths() const { return widths_; }
    bool shared_d() const { return shared_d_; }
    std::uint64_t seed() const { return seed_; }
    int flat_dim() const;  // trunk output width

    ParamSet& params() { return ps_; }
    const ParamSet& params() const { return ps_; }

    WeightTables& weights() { return weights_; }
    const WeightTables& weights() const { return weights_; }

    // ValueError on malformed mask.
    void set_prior(CausalPrior prior);
    const CausalPrior& prior() const { return prior_; }
    // wt with the mask applied to off-diagonal entries.
    std::vector<std::vector<double>> effective_wt() const;
    // 0-based branch sets S_j: jp in S_j unless attribute j+1 causes jp+1.
    std::vector<std::vector<int>> cross_update_sets() const;

    // ---- graph building (node ids on the given tape) ----

    struct Stage1Nodes {
        int fc = -1;             // trunk output
        std::vector<int> f;      // per-branch feature nodes, built on demand
    };
    Stage1Nodes forward_stage1(Tape& t, int x_node);

    // Branch j's feature node G_j(trunk), built once per tape. 0-based.
    int branch_feature(Tape& t, Stage1Nodes& nodes, int j);
    // Discriminator head (j, jp) applied to branch j's feature node. 0-based.
    int d_head(Tape& t, int f_node, int j, int jp);
    // Additive net of branch j. 0-based.
    int t_head(Tape& t, int f_node, int j);
    // Classifier head of branch j over an additive-code node. 0-based.
    int r_head(Tape& t, int u_node, int j);

    // ---- batched evaluation ----

    struct Stage1Eval {
        std::vector<Tensor> f;       // per branch: (B, feature)
        std::vector<Tensor> d_diag;  // per branch: (B, k_j), when requested
    };
    Stage1Eval eval_stage1(const Tensor& x, bool with_diag);

    // Softmax scores of the first-stage class head D_(1,1): (B, k_1).
    Tensor infer_stage1(const Tensor& x);
    // Second-stage scores R_1(T_1(G_1(P(x)))): (B, k_1).
    Tensor infer_stage2(const Tensor& x);
    // R_1(T_1(f_1)) for precomputed branch-1 features.
    Tensor infer_stage2_from_features(const Tensor& f1);

    // ---- parameter groups (ids into params()) ----

    const std::vector<int>& p_ids() const { return p_ids_; }
    const std::vector<int>& g_ids(int j) const;
    const std::vector<int>& d_ids(int j, int jp) const;  // aliased under shared_d
    const std::vector<int>& t_ids(int j) const;
    const std::vector<int>& r_ids(int j) const;

    // ---- checkpointing ----

    void save_checkpoint(const std::string& path) const;
    static ModelGraph load_checkpoint(const std::string& path);
    // SchemaError when the stored schema disagrees with `expected`.
    static ModelGraph load_checkpoint(const std::string& path, const AttributeSchema& expected);

    // Raw parameter snapshot/restore (same graph structure assumed).
    std::vector<Tensor> snapshot_values() const;
    void restore_values(const std::vector<Tensor>& values);

private:
    struct NoInitTag {};
    ModelGraph(AttributeSchema schema, InputSpec input, ModelWidths widths, std::uint64_t seed,
               bool shared_d, NoInitTag);

    void build_params(bool initialize);

    AttributeSchema schema_;
    InputSpec input_;
    ModelWidths widths_;
    std::uint64_t seed_ = 0;
    bool shared_d_ = false;

    ParamSet ps_;
    WeightTables weights_;
    CausalPrior prior_;

    std::vector<int> p_ids_;
    std::vector<std::vector<int>> g_ids_, t_ids_, r_ids_;
    std::vector<std::vector<std::vector<int>>> d_ids_;  // [j][jp]
};

}  // namespace gcdr

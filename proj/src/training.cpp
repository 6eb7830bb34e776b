#include "gcdr/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gcdr/errors.hpp"
#include "gcdr/rng.hpp"

namespace gcdr {

// ---- variant helpers --------------------------------------------------------

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::Full;
    if (s == "stage1-only") return Variant::Stage1Only;
    if (s == "single-branch") return Variant::SingleBranch;
    if (s == "shared-d") return Variant::SharedD;
    if (s == "no-adv-stage1") return Variant::NoAdvStage1;
    if (s == "no-adv-at-all") return Variant::NoAdvAtAll;
    if (s == "direct") return Variant::Direct;
    throw ConfigError("unknown variant '" + s +
                      "' (expected full | stage1-only | single-branch | shared-d | "
                      "no-adv-stage1 | no-adv-at-all | direct)");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::Full: return "full";
        case Variant::Stage1Only: return "stage1-only";
        case Variant::SingleBranch: return "single-branch";
        case Variant::SharedD: return "shared-d";
        case Variant::NoAdvStage1: return "no-adv-stage1";
        case Variant::NoAdvAtAll: return "no-adv-at-all";
        case Variant::Direct: return "direct";
    }
    throw ValueError("variant_name: bad enum value");
}

bool variant_runs_stage2(Variant v) {
    switch (v) {
        case Variant::Full:
        case Variant::SharedD:
        case Variant::NoAdvStage1:
        case Variant::NoAdvAtAll: return true;
        case Variant::Stage1Only:
        case Variant::SingleBranch:
        case Variant::Direct: return false;
    }
    throw ValueError("variant_runs_stage2: bad enum value");
}

bool variant_single_branch(Variant v) {
    return v == Variant::SingleBranch || v == Variant::Direct;
}

// Whether stage 1 keeps the discriminator / confusion terms.
static bool variant_adversarial_stage1(Variant v) {
    switch (v) {
        case Variant::Full:
        case Variant::Stage1Only:
        case Variant::SingleBranch:
        case Variant::SharedD: return true;
        case Variant::NoAdvStage1:
        case Variant::NoAdvAtAll:
        case Variant::Direct: return false;
    }
    throw ValueError("variant_adversarial_stage1: bad enum value");
}

void TrainConfig::check() const {
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (stage1_epochs < 1) throw ConfigError("train config: stage1_epochs must be >= 1");
    if (stage2_epochs < 1) throw ConfigError("train config: stage2_epochs must be >= 1");
    if (disc_steps < 1) throw ConfigError("train config: disc_steps must be >= 1");
    if (adv_steps < 1) throw ConfigError("train config: adv_steps must be >= 1");
    if (!(tau >= 0.0f && tau <= 1.0f)) throw ConfigError("train config: tau must lie in [0,1]");
    if (n_aug < 0) throw ConfigError("train config: n_aug must be >= 0");
    if (eval_batch < 1) throw ConfigError("train config: eval_batch must be >= 1");
    if (!(adam.lr > 0.0f)) throw ConfigError("train config: lr must be positive");
    if (!(adam.beta1 >= 0.0f && adam.beta1 < 1.0f) || !(adam.beta2 >= 0.0f && adam.beta2 < 1.0f))
        throw ConfigError("train config: adam betas must lie in [0,1)");
    if (!(adam.eps > 0.0f)) throw ConfigError("train config: adam eps must be positive");
    for (const auto& e : causal_edges) {
        if (e.first < 1 || e.second < 1 || e.first == e.second)
            throw ConfigError("train config: causal edges need distinct 1-based endpoints");
    }
}

// ---- dataset view -----------------------------------------------------------

DatasetView DatasetView::from_corpus(const ColorDigitCorpus& corpus) {
    DatasetView v;
    v.corpus_ = &corpus;
    v.schema_ = ColorDigitCorpus::schema();
    return v;
}

DatasetView DatasetView::from_tabular(const Tensor& features,
                                      const std::vector<std::vector<int>>& attrs,
                                      const AttributeSchema& schema) {
    if (features.rank() != 2) throw DimensionError("dataset view: features must be rank 2");
    if (features.dim(0) != static_cast<int>(attrs.size()))
        throw DimensionError("dataset view: feature rows and attribute rows disagree");
    DatasetView v;
    v.features_ = &features;
    v.attrs_ = &attrs;
    v.schema_ = schema;
    return v;
}

int DatasetView::size() const {
    return corpus_ ? corpus_->size() : (features_ ? features_->dim(0) : 0);
}

const AttributeSchema& DatasetView::schema() const { return schema_; }

InputSpec DatasetView::input() const {
    if (corpus_) return InputSpec::image(3, corpus_->gray.dim(1), corpus_->gray.dim(2));
    if (features_) return InputSpec::vector(features_->dim(1));
    throw ValueError("dataset view: unbound");
}

Tensor DatasetView::gather_x(const std::vector<int>& indices) const {
    const int n = static_cast<int>(indices.size());
    if (n == 0) throw EmptinessError("dataset view: cannot gather an empty index list");
    for (int i : indices)
        if (i < 0 || i >= size()) throw RangeError("dataset view: index out of range");
    if (corpus_) {
        const int h = corpus_->gray.dim(1), w = corpus_->gray.dim(2);
        Tensor out({n, 3, h, w});
        for (int r = 0; r < n; ++r) {
            const Tensor img = corpus_->materialize(indices[static_cast<std::size_t>(r)]);
            out.mat().row(r) =
                Eigen::Map<const RowVec>(img.mat().data(), static_cast<Eigen::Index>(3) * h * w);
        }
        return out;
    }
    Tensor out({n, features_->dim(1)});
    for (int r = 0; r < n; ++r)
        out.mat().row(r) = features_->mat().row(indices[static_cast<std::size_t>(r)]);
    return out;
}

std::vector<std::vector<int>> DatasetView::gather_attrs(const std::vector<int>& indices) const {
    std::vector<std::vector<int>> out;
    out.reserve(indices.size());
    for (int i : indices) {
        if (i < 0 || i >= size()) throw RangeError("dataset view: index out of range");
        if (corpus_) {
            out.push_back(corpus_->attr_tuple(i));
        } else {
            // Tabular tables may hold unpopulated rows for dropped samples;
            // gathering one is a caller bug.
            const auto& a = (*attrs_)[static_cast<std::size_t>(i)];
            schema_.check_tuple(a);
            out.push_back(a);
        }
    }
    return out;
}

// ---- shared helpers ---------------------------------------------------------

namespace {

// One-hot rows for attribute j (0-based) of each tuple.
Tensor onehot_column(const std::vector<std::vector<int>>& tuples, const std::vector<int>& rows,
                     int j, int k) {
    Tensor t({static_cast<int>(rows.size()), k});
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int a = tuples[static_cast<std::size_t>(rows[r])][static_cast<std::size_t>(j)];
        t.mat()(static_cast<Eigen::Index>(r), a - 1) = 1.0f;
    }
    return t;
}

Tensor onehot_all(const std::vector<std::vector<int>>& tuples, int j, int k) {
    std::vector<int> rows(tuples.size());
    std::iota(rows.begin(), rows.end(), 0);
    return onehot_column(tuples, rows, j, k);
}

Tensor flipped_onehot_all(const std::vector<std::vector<int>>& tuples, int j, int k) {
    Tensor t = onehot_all(tuples, j, k);
    t.mat() = Mat::Ones(t.mat().rows(), t.mat().cols()) - t.mat();
    return t;
}

void append_ids(std::vector<int>& into, const std::vector<int>& ids) {
    into.insert(into.end(), ids.begin(), ids.end());
}

// Rethrow NumericError with the offending loss term named.
template <typename Fn>
auto named_term(const char* term, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const NumericError& e) {
        throw NumericError(std::string(term) + " term: " + e.what());
    }
}

std::vector<int> labels0_of(const std::vector<std::vector<int>>& attrs) {
    std::vector<int> out(attrs.size());
    for (std::size_t i = 0; i < attrs.size(); ++i) out[i] = attrs[i][0] - 1;
    return out;
}

std::vector<int> argmax_rows(const Tensor& scores) {
    std::vector<int> out(static_cast<std::size_t>(scores.dim(0)));
    for (int i = 0; i < scores.dim(0); ++i) {
        int best = 0;
        for (int c = 1; c < scores.dim(1); ++c)
            if (scores.mat()(i, c) > scores.mat()(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

Tensor gather_rows(const Tensor& src, const std::vector<int>& rows) {
    Tensor out({static_cast<int>(rows.size()), src.dim(1)});
    for (std::size_t r = 0; r < rows.size(); ++r)
        out.mat().row(static_cast<Eigen::Index>(r)) = src.mat().row(rows[r]);
    return out;
}

}  // namespace

// ---- stage 1 ----------------------------------------------------------------

Stage1StepResult stage1_step(ModelGraph& g, const Batch& batch, const TrainConfig& cfg) {
    const AttributeSchema& schema = g.schema();
    const int count = schema.count();
    if (batch.x.dim(0) != static_cast<int>(batch.attrs.size()))
        throw DimensionError("stage1 step: batch tensor rows and attribute tuples disagree");
    if (batch.attrs.empty()) throw EmptinessError("stage1 step: empty batch");
    for (const auto& a : batch.attrs) schema.check_tuple(a);

    const bool adversarial = variant_adversarial_stage1(cfg.variant);
    std::vector<int> branches;
    if (variant_single_branch(cfg.variant)) {
        branches = {0};
    } else {
        branches.resize(static_cast<std::size_t>(count));
        std::iota(branches.begin(), branches.end(), 0);
    }

    const WeightTables& wts = g.weights();
    const auto eff = g.effective_wt();

    std::vector<Tensor> hot, flipped;
    for (int jp = 0; jp < count; ++jp) {
        hot.push_back(onehot_all(batch.attrs, jp, schema.k(jp)));
        flipped.push_back(adversarial ? flipped_onehot_all(batch.attrs, jp, schema.k(jp))
                                      : Tensor::scalar(0.0f));
    }

    // Trainable sets. Classification moves the trunk, active branches and
    // their own-attribute heads; discrimination moves only cross heads;
    // self-alignment moves only the trunk; confusion moves trunk + branches.
    std::vector<int> set_classify = g.p_ids();
    std::vector<int> set_disc, set_self = g.p_ids(), set_confusion = g.p_ids();
    std::vector<int> set_branches;
    for (int j : branches) {
        append_ids(set_classify, g.g_ids(j));
        append_ids(set_classify, g.d_ids(j, j));
        append_ids(set_confusion, g.g_ids(j));
        append_ids(set_branches, g.g_ids(j));
        for (int jp = 0; jp < count; ++jp)
            if (jp != j && eff[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] > 0.0)
                append_ids(set_disc, g.d_ids(j, jp));
    }

    Stage1StepResult out;
    for (int s = 0; s < cfg.disc_steps; ++s) {
        Tape t(g.params());
        const int x = t.input(batch.x);
        auto nodes = g.forward_stage1(t, x);
        std::vector<int> terms_c, terms_d;
        for (int j : branches) {
            const int f = g.branch_feature(t, nodes, j);
            const double wj = wts.w[static_cast<std::size_t>(j)];
            if (wj > 0.0)
                terms_c.push_back(named_term("classification", [&] {
                    return cross_entropy(t, g.d_head(t, f, j, j), hot[static_cast<std::size_t>(j)],
                                         wj);
                }));
            for (int jp = 0; adversarial && jp < count; ++jp) {
                if (jp == j) continue;
                const double w2 = eff[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)];
                if (w2 <= 0.0) continue;
                terms_d.push_back(named_term("discriminator-fit", [&] {
                    return mse(t, g.d_head(t, f, j, jp), hot[static_cast<std::size_t>(jp)], w2);
                }));
            }
        }
        g.params().zero_grad();
        if (!terms_c.empty()) {
            const int root = add_scalars(t, terms_c);
            out.classify += t.scalar(root);
            t.backward(root, set_classify);
        }
        if (!terms_d.empty()) {
            const int root = add_scalars(t, terms_d);
            out.disc_fit += t.scalar(root);
            t.backward(root, set_disc);
        }
        adam_step(g.params(), cfg.adam);
    }
    out.classify /= cfg.disc_steps;
    out.disc_fit /= cfg.disc_steps;

    if (adversarial) {
        for (int s = 0; s < cfg.adv_steps; ++s) {
            Tape t(g.params());
            const int x = t.input(batch.x);
            auto nodes = g.forward_stage1(t, x);
            std::vector<int> terms_s, terms_f;
            for (int j : branches) {
                const int f = g.branch_feature(t, nodes, j);
                const double wjj = wts.wt[static_cast<std::size_t>(j)][static_cast<std::size_t>(j)];
                if (wjj > 0.0)
                    terms_s.push_back(named_term("self-alignment", [&] {
                        return mse(t, g.d_head(t, f, j, j), hot[static_cast<std::size_t>(j)], wjj);
                    }));
                for (int jp = 0; jp < count; ++jp) {
                    if (jp == j) continue;
                    const double w4 =
                        eff[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)];
                    if (w4 <= 0.0) continue;
                    terms_f.push_back(named_term("confusion", [&] {
                        return mse(t, g.d_head(t, f, j, jp), flipped[static_cast<std::size_t>(jp)],
                                   w4);
                    }));
                }
            }
            g.params().zero_grad();
            int root_s = -1, root_f = -1;
            if (!terms_s.empty()) {
                root_s = add_scalars(t, terms_s);
                out.self_fit += t.scalar(root_s);
            }
            if (!terms_f.empty()) {
                root_f = add_scalars(t, terms_f);
                out.confusion += t.scalar(root_f);
            }
            if (root_s >= 0 && root_f >= 0) {
                // The trunk takes gradient from both terms, so one traversal
                // of the shared lower graph covers them; branch parameters
                // take gradient from the confusion term alone, through a
                // shallow walk that stops at the branch inputs.
                t.backward(add_scalars(t, {root_s, root_f}), set_self);
                t.backward(root_f, set_branches);
            } else if (root_s >= 0) {
                t.backward(root_s, set_self);
            } else if (root_f >= 0) {
                t.backward(root_f, set_confusion);
            }
            adam_step(g.params(), cfg.adam);
        }
        out.self_fit /= cfg.adv_steps;
        out.confusion /= cfg.adv_steps;
    }
    return out;
}

// ---- stage 2 augmentation ---------------------------------------------------

int AugmentedSet::seen_count() const {
    int n = 0;
    for (char s : seen) n += s != 0;
    return n;
}

AugmentedSet recombine(const std::vector<Tensor>& features,
                       const std::vector<std::vector<float>>& confidence,
                       const std::vector<std::vector<int>>& attrs,
                       const std::set<std::vector<int>>& train_combos, std::int64_t n_aug,
                       float tau, std::uint64_t seed) {
    const int count = static_cast<int>(features.size());
    if (count < 2) throw ValueError("recombine: needs at least two attribute branches");
    if (static_cast<int>(confidence.size()) != count)
        throw DimensionError("recombine: confidence column count disagrees with feature branches");
    const int n = static_cast<int>(attrs.size());
    if (n == 0) throw EmptinessError("recombine: no donor samples");
    for (int j = 0; j < count; ++j) {
        const auto sj = static_cast<std::size_t>(j);
        if (features[sj].rank() != 2 || features[sj].dim(0) != n)
            throw DimensionError("recombine: feature matrix rows disagree with donors");
        if (static_cast<int>(confidence[sj].size()) != n)
            throw DimensionError("recombine: confidence rows disagree with donors");
    }
    for (const auto& a : attrs)
        if (static_cast<int>(a.size()) != count)
            throw DimensionError("recombine: attribute tuple width disagrees with branches");
    if (n_aug < 1) throw ValueError("recombine: draw count must be >= 1");
    if (!(tau >= 0.0f && tau <= 1.0f)) throw RangeError("recombine: tau must lie in [0,1]");

    Rng rng = Rng(seed).fork(0xa06);
    std::vector<std::vector<int>> kept;
    std::vector<int> draw(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < n_aug; ++i) {
        // All donor indices are drawn before screening, so the stream does not
        // depend on which draws survive.
        for (int j = 0; j < count; ++j) draw[static_cast<std::size_t>(j)] = rng.uniform_int(0, n - 1);
        bool ok = true;
        for (int j = 0; j < count && ok; ++j)
            ok = confidence[static_cast<std::size_t>(j)]
                           [static_cast<std::size_t>(draw[static_cast<std::size_t>(j)])] >= tau;
        if (ok) kept.push_back(draw);
    }
    if (kept.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.3f", static_cast<double>(tau));
        throw EmptinessError(std::string("recombine: every draw screened out at tau=") + buf +
                             "; lower tau");
    }

    AugmentedSet out;
    const int kn = static_cast<int>(kept.size());
    out.f.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        out.f.push_back(Tensor::zeros({kn, features[static_cast<std::size_t>(j)].dim(1)}));
    out.tuples.resize(static_cast<std::size_t>(kn));
    out.seen.resize(static_cast<std::size_t>(kn));
    std::vector<int> tuple(static_cast<std::size_t>(count));
    for (int i = 0; i < kn; ++i) {
        const auto& d = kept[static_cast<std::size_t>(i)];
        for (int j = 0; j < count; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            out.f[sj].mat().row(i) = features[sj].mat().row(d[sj]);
            tuple[sj] = attrs[static_cast<std::size_t>(d[sj])][sj];
        }
        out.tuples[static_cast<std::size_t>(i)] = tuple;
        out.seen[static_cast<std::size_t>(i)] = train_combos.count(tuple) ? 1 : 0;
    }
    return out;
}

AugmentedSet make_augmented(ModelGraph& g, const DatasetView& data,
                            const std::vector<int>& train_indices,
                            const std::set<std::vector<int>>& train_combos,
                            const TrainConfig& cfg) {
    if (variant_single_branch(cfg.variant))
        throw ValueError("augmentation requires the multi-branch recipe");
    const AttributeSchema& schema = g.schema();
    const int count = schema.count();
    const int n = static_cast<int>(train_indices.size());
    if (n == 0) throw EmptinessError("augmentation: empty training set");

    std::vector<Tensor> features;
    std::vector<std::vector<float>> conf(static_cast<std::size_t>(count),
                                         std::vector<float>(static_cast<std::size_t>(n)));
    for (int j = 0; j < count; ++j) features.push_back(Tensor::zeros({n, g.widths().feature}));

    for (int start = 0; start < n; start += cfg.eval_batch) {
        const int stop = std::min(n, start + cfg.eval_batch);
        const std::vector<int> chunk(train_indices.begin() + start, train_indices.begin() + stop);
        const Tensor x = data.gather_x(chunk);
        const auto attrs = data.gather_attrs(chunk);
        auto ev = g.eval_stage1(x, true);
        for (int j = 0; j < count; ++j) {
            const auto sj = static_cast<std::size_t>(j);
            for (int r = 0; r < stop - start; ++r) {
                features[sj].mat().row(start + r) = ev.f[sj].mat().row(r);
                const int a = attrs[static_cast<std::size_t>(r)][sj];
                conf[sj][static_cast<std::size_t>(start + r)] = ev.d_diag[sj].mat()(r, a - 1);
            }
        }
    }

    const std::int64_t n_aug = cfg.n_aug > 0 ? cfg.n_aug : static_cast<std::int64_t>(4) * n;
    return recombine(features, conf, data.gather_attrs(train_indices), train_combos, n_aug,
                     cfg.tau, cfg.seed);
}

Stage2StepResult stage2_step(ModelGraph& g, const AugmentedSet& aug,
                             const std::vector<int>& item_ids, const TrainConfig& cfg) {
    const AttributeSchema& schema = g.schema();
    const int count = schema.count();
    if (static_cast<int>(aug.f.size()) != count)
        throw DimensionError("stage2 step: augmented set branch count disagrees with schema");
    if (item_ids.empty()) throw EmptinessError("stage2 step: empty item list");

    std::vector<int> part_seen, part_unseen;
    for (int id : item_ids) {
        if (id < 0 || id >= aug.size()) throw RangeError("stage2 step: item id out of range");
        (aug.seen[static_cast<std::size_t>(id)] ? part_seen : part_unseen).push_back(id);
    }

    const auto& wp = g.weights().wp;
    const auto cross = g.cross_update_sets();
    const bool full_backprop = cfg.variant == Variant::NoAdvAtAll;

    std::vector<int> all_nets;
    if (full_backprop) {
        for (int j = 0; j < count; ++j) {
            append_ids(all_nets, g.t_ids(j));
            append_ids(all_nets, g.r_ids(j));
        }
    }

    Stage2StepResult out;
    g.params().zero_grad();
    for (int part = 0; part < 2; ++part) {
        const auto& ids = part == 0 ? part_seen : part_unseen;
        if (ids.empty()) continue;
        Tape t(g.params());
        std::vector<int> s_nodes(static_cast<std::size_t>(count));
        for (int j = 0; j < count; ++j) {
            const int f_in = t.input(gather_rows(aug.f[static_cast<std::size_t>(j)], ids));
            s_nodes[static_cast<std::size_t>(j)] = g.t_head(t, f_in, j);
        }
        const int u = add_n(t, s_nodes);
        double part_loss = 0.0;
        const char* term = part == 0 ? "recombination-seen" : "recombination-unseen";
        if (full_backprop) {
            std::vector<int> terms;
            for (int j = 0; j < count; ++j) {
                const double w = wp[static_cast<std::size_t>(j)];
                if (w <= 0.0) continue;
                terms.push_back(named_term(term, [&] {
                    return cross_entropy(t, g.r_head(t, u, j),
                                         onehot_column(aug.tuples, ids, j, schema.k(j)), w);
                }));
            }
            if (!terms.empty()) {
                const int root = add_scalars(t, terms);
                part_loss = t.scalar(root);
                t.backward(root, all_nets);
            }
        } else {
            for (int j = 0; j < count; ++j) {
                const double w = wp[static_cast<std::size_t>(j)];
                if (w <= 0.0) continue;
                const int lj = named_term(term, [&] {
                    return cross_entropy(t, g.r_head(t, u, j),
                                         onehot_column(aug.tuples, ids, j, schema.k(j)), w);
                });
                part_loss += t.scalar(lj);
                std::vector<int> trainable = g.r_ids(j);
                if (part == 0) {
                    append_ids(trainable, g.t_ids(j));
                } else {
                    for (int jp : cross[static_cast<std::size_t>(j)])
                        append_ids(trainable, g.t_ids(jp));
                }
                t.backward(lj, trainable);
            }
        }
        (part == 0 ? out.seen_loss : out.unseen_loss) = part_loss;
    }
    adam_step(g.params(), cfg.adam);
    return out;
}

// ---- evaluation -------------------------------------------------------------

Tensor eval_scores(ModelGraph& g, const DatasetView& data, const std::vector<int>& indices,
                   int stage, int eval_batch) {
    if (stage != 1 && stage != 2) throw ValueError("eval: stage must be 1 or 2");
    if (eval_batch < 1) throw RangeError("eval: eval_batch must be >= 1");
    const int n = static_cast<int>(indices.size());
    if (n == 0) throw EmptinessError("eval: no indices");
    Tensor out({n, g.schema().k(0)});
    for (int start = 0; start < n; start += eval_batch) {
        const int stop = std::min(n, start + eval_batch);
        const std::vector<int> chunk(indices.begin() + start, indices.begin() + stop);
        const Tensor x = data.gather_x(chunk);
        const Tensor s = stage == 1 ? g.infer_stage1(x) : g.infer_stage2(x);
        for (int r = 0; r < stop - start; ++r) out.mat().row(start + r) = s.mat().row(r);
    }
    return out;
}

// ---- training drivers -------------------------------------------------------

namespace {

constexpr int kStage2EpochBase = 1000000;  // batch-stream namespace for stage 2

// Domain attribute used for the parity gap; -1 when the schema has only the
// class attribute. Prefers a class-sharing attribute: it varies within each
// label on the evaluation side, so the gap is measurable there, whereas the
// non-sharing attributes are constant per label on each side by split
// construction.
int parity_attr(const AttributeSchema& schema) {
    for (int j = 1; j < schema.count(); ++j)
        if (schema.at(j).class_sharing) return j;
    return schema.count() > 1 ? 1 : -1;
}

MetricsReport scores_report(const Tensor& scores, const std::vector<int>& labels,
                            const std::vector<double>& thresholds) {
    MetricsReport r;
    r.aauc = a_auc(scores, labels);
    const FarFrr ff = far_frr(scores, labels, thresholds);
    r.afar = ff.far;
    r.afrr = ff.frr;
    r.acc1 = acc_at_1(scores, labels);
    return r;
}

void push_report_rows(std::vector<MetricRow>* rows, const std::string& vname, int stage,
                      int epoch, const std::string& split, const MetricsReport& r) {
    if (!rows) return;
    rows->push_back({vname, stage, epoch, split, "aauc", r.aauc});
    rows->push_back({vname, stage, epoch, split, "afar", r.afar});
    rows->push_back({vname, stage, epoch, split, "afrr", r.afrr});
    rows->push_back({vname, stage, epoch, split, "combined", r.combined_error()});
    rows->push_back({vname, stage, epoch, split, "acc1", r.acc1});
    if (r.eo_defined)
        rows->push_back({vname, stage, epoch, split, "eo_gap", r.eo});
}

// Everything fixed across epochs that evaluation needs.
struct EvalPlan {
    std::string vname;
    std::vector<int> sel;          // model-selection indices (val, or train fallback)
    std::vector<int> sel_labels;
    std::string sel_split;         // "val" | "train"
    std::vector<int> test_labels;
    std::vector<int> test_domains;
    int domain_attr = -1;
};

EvalPlan make_eval_plan(const DatasetView& data, const GcdrSplit& split, const TrainConfig& cfg) {
    EvalPlan plan;
    plan.vname = variant_name(cfg.variant);
    if (split.val.empty()) {
        plan.sel = split.train;
        plan.sel_split = "train";
    } else {
        plan.sel = split.val;
        plan.sel_split = "val";
    }
    plan.sel_labels = labels0_of(data.gather_attrs(plan.sel));
    const auto test_attrs = data.gather_attrs(split.test);
    plan.test_labels = labels0_of(test_attrs);
    plan.domain_attr = parity_attr(data.schema());
    if (plan.domain_attr >= 0) {
        plan.test_domains.resize(test_attrs.size());
        for (std::size_t i = 0; i < test_attrs.size(); ++i)
            plan.test_domains[i] = test_attrs[i][static_cast<std::size_t>(plan.domain_attr)];
    }
    return plan;
}

// Validation metrics for model selection; also emitted as per-epoch rows.
MetricsReport selection_eval(ModelGraph& g, const DatasetView& data, const EvalPlan& plan,
                             int stage, int epoch, const TrainConfig& cfg,
                             std::vector<MetricRow>* rows) {
    const Tensor vs = eval_scores(g, data, plan.sel, stage, cfg.eval_batch);
    const auto thr = select_thresholds(vs, plan.sel_labels);
    const MetricsReport rep = scores_report(vs, plan.sel_labels, thr);
    push_report_rows(rows, plan.vname, stage, epoch, plan.sel_split, rep);
    return rep;
}

// Test metrics with selection-set thresholds, plus the domain parity gap on
// the same test predictions.
MetricsReport test_eval(ModelGraph& g, const DatasetView& data, const GcdrSplit& split,
                        const EvalPlan& plan, int stage, int epoch, const TrainConfig& cfg,
                        std::vector<MetricRow>* rows) {
    const Tensor vs = eval_scores(g, data, plan.sel, stage, cfg.eval_batch);
    const auto thr = select_thresholds(vs, plan.sel_labels);
    const Tensor ts = eval_scores(g, data, split.test, stage, cfg.eval_batch);
    MetricsReport rep = scores_report(ts, plan.test_labels, thr);
    if (plan.domain_attr >= 0) {
        const auto preds = argmax_rows(ts);
        try {
            rep.eo = eo_gap(preds, plan.test_labels, plan.test_domains);
            rep.eo_defined = true;
        } catch (const MetricError&) {
            rep.eo_defined = false;
        }
    }
    push_report_rows(rows, plan.vname, stage, epoch, "test", rep);
    return rep;
}

// Stage-1 epochs with best-selection tracking; optionally snapshots parameter
// values after each epoch listed in `marks`.
int run_stage1_epochs(ModelGraph& g, const DatasetView& data, const GcdrSplit& split,
                      const TrainConfig& cfg, const EvalPlan& plan, std::vector<MetricRow>* rows,
                      const std::set<int>* marks,
                      std::map<int, std::vector<Tensor>>* mark_snaps) {
    double best = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    std::vector<Tensor> best_snap;
    for (int epoch = 1; epoch <= cfg.stage1_epochs; ++epoch) {
        const auto batches = make_batches(split.train, cfg.batch_size, cfg.seed, epoch, true);
        Stage1StepResult sums;
        for (const auto& bidx : batches) {
            Batch b{data.gather_x(bidx), data.gather_attrs(bidx)};
            const auto r = stage1_step(g, b, cfg);
            sums.classify += r.classify;
            sums.disc_fit += r.disc_fit;
            sums.self_fit += r.self_fit;
            sums.confusion += r.confusion;
        }
        const double nb = static_cast<double>(batches.size());
        if (rows) {
            rows->push_back({plan.vname, 1, epoch, "train", "loss_classify", sums.classify / nb});
            if (variant_adversarial_stage1(cfg.variant)) {
                rows->push_back(
                    {plan.vname, 1, epoch, "train", "loss_disc_fit", sums.disc_fit / nb});
                rows->push_back(
                    {plan.vname, 1, epoch, "train", "loss_self_fit", sums.self_fit / nb});
                rows->push_back(
                    {plan.vname, 1, epoch, "train", "loss_confusion", sums.confusion / nb});
            }
        }
        const MetricsReport rep = selection_eval(g, data, plan, 1, epoch, cfg, rows);
        if (rep.aauc > best) {
            best = rep.aauc;
            best_epoch = epoch;
            best_snap = g.snapshot_values();
        }
        if (marks && marks->count(epoch)) (*mark_snaps)[epoch] = g.snapshot_values();
    }
    g.restore_values(best_snap);
    return best_epoch;
}

// Stage-2 training from the current stage-1 parameters; leaves g at the
// best-selection stage-2 parameters and returns that epoch.
int run_stage2_epochs(ModelGraph& g, const DatasetView& data, const GcdrSplit& split,
                      const TrainConfig& cfg, const EvalPlan& plan,
                      std::vector<MetricRow>* rows) {
    const AugmentedSet aug = make_augmented(g, data, split.train, split.combos_train, cfg);
    std::vector<int> items(static_cast<std::size_t>(aug.size()));
    std::iota(items.begin(), items.end(), 0);

    double best = -std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    std::vector<Tensor> best_snap;
    for (int epoch = 1; epoch <= cfg.stage2_epochs; ++epoch) {
        const auto batches =
            make_batches(items, cfg.batch_size, cfg.seed, kStage2EpochBase + epoch, true);
        double seen_sum = 0.0, unseen_sum = 0.0;
        for (const auto& bids : batches) {
            const auto r = stage2_step(g, aug, bids, cfg);
            seen_sum += r.seen_loss;
            unseen_sum += r.unseen_loss;
        }
        const double nb = static_cast<double>(batches.size());
        if (rows) {
            rows->push_back({plan.vname, 2, epoch, "train", "loss_seen", seen_sum / nb});
            rows->push_back({plan.vname, 2, epoch, "train", "loss_unseen", unseen_sum / nb});
        }
        const MetricsReport rep = selection_eval(g, data, plan, 2, epoch, cfg, rows);
        if (rep.aauc > best) {
            best = rep.aauc;
            best_epoch = epoch;
            best_snap = g.snapshot_values();
        }
    }
    g.restore_values(best_snap);
    return best_epoch;
}

ModelGraph build_graph(const DatasetView& data, const TrainConfig& cfg) {
    const AttributeSchema& schema = data.schema();
    if (cfg.weights) cfg.weights->check(schema.count());
    ModelGraph g(schema, data.input(), ModelWidths{}, cfg.seed,
                 cfg.variant == Variant::SharedD);
    if (cfg.weights) g.weights() = *cfg.weights;
    if (!cfg.causal_edges.empty())
        g.set_prior(CausalPrior::from_edges(schema.count(), cfg.causal_edges));
    return g;
}

}  // namespace

TrainResult train(const DatasetView& data, const GcdrSplit& split, const TrainConfig& cfg) {
    cfg.check();
    if (split.train.empty()) throw EmptinessError("train: empty training split");
    if (split.test.empty()) throw EmptinessError("train: empty test split");

    ModelGraph g = build_graph(data, cfg);
    const EvalPlan plan = make_eval_plan(data, split, cfg);
    std::vector<MetricRow> rows;

    const int best1 = run_stage1_epochs(g, data, split, cfg, plan, &rows, nullptr, nullptr);
    MetricsReport final_rep = test_eval(g, data, split, plan, 1, best1, cfg, &rows);
    int final_stage = 1;
    int best2 = 0;

    if (variant_runs_stage2(cfg.variant)) {
        best2 = run_stage2_epochs(g, data, split, cfg, plan, &rows);
        final_rep = test_eval(g, data, split, plan, 2, best2, cfg, &rows);
        final_stage = 2;
    }

    return TrainResult{std::move(rows), final_rep, final_stage, best1, best2, std::move(g)};
}

std::vector<CurvePoint> stage2_improvement_curve(const DatasetView& data, const GcdrSplit& split,
                                                 const TrainConfig& cfg,
                                                 const std::vector<int>& marks) {
    cfg.check();
    if (!variant_runs_stage2(cfg.variant))
        throw ConfigError("curve: the recipe has no second stage");
    if (marks.empty()) throw ConfigError("curve: no mark epochs given");
    std::set<int> mark_set;
    for (int m : marks) {
        if (m < 1 || m > cfg.stage1_epochs)
            throw ConfigError("curve: mark epoch " + std::to_string(m) +
                              " outside [1, " + std::to_string(cfg.stage1_epochs) + "]");
        mark_set.insert(m);
    }
    if (split.train.empty()) throw EmptinessError("curve: empty training split");
    if (split.test.empty()) throw EmptinessError("curve: empty test split");

    ModelGraph g = build_graph(data, cfg);
    const EvalPlan plan = make_eval_plan(data, split, cfg);

    std::map<int, std::vector<Tensor>> snaps;
    run_stage1_epochs(g, data, split, cfg, plan, nullptr, &mark_set, &snaps);

    std::vector<CurvePoint> out;
    for (const auto& [epoch, snap] : snaps) {
        g.restore_values(snap);
        // Fresh optimizer per mark: the second stage only ever steps the
        // additive nets and their heads, which must start from clean moments.
        g.params().reset_adam();
        CurvePoint pt;
        pt.mark_epoch = epoch;
        pt.before = test_eval(g, data, split, plan, 1, epoch, cfg, nullptr);
        run_stage2_epochs(g, data, split, cfg, plan, nullptr);
        pt.after = test_eval(g, data, split, plan, 2, epoch, cfg, nullptr);
        out.push_back(std::move(pt));
    }
    return out;
}

}  // namespace gcdr

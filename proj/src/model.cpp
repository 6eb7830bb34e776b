#include "gcdr/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "gcdr/rng.hpp"

namespace gcdr {

namespace {

using nlohmann::json;

constexpr char kCheckpointMagic[8] = {'G', 'C', 'D', 'R', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr int kConv1Out = 16, kConv2Out = 32, kKernel = 5, kPad = 2;

void glorot_fill(Tensor& t, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    const float limit =
        std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
    float* p = t.data();
    for (std::int64_t i = 0; i < t.size(); ++i) p[i] = rng.uniform_float(-limit, limit);
}

}  // namespace

// ---- weight tables ----

WeightTables WeightTables::defaults(int count) {
    WeightTables w;
    w.w.assign(static_cast<std::size_t>(count), 0.1);
    w.wp.assign(static_cast<std::size_t>(count), 0.1);
    w.wt.assign(static_cast<std::size_t>(count),
                std::vector<double>(static_cast<std::size_t>(count), 0.1));
    w.w[0] = 1.0;
    w.wp[0] = 1.0;
    for (int j = 0; j < count; ++j) w.wt[static_cast<std::size_t>(j)][0] = 1.0;
    return w;
}

void WeightTables::check(int count) const {
    const auto c = static_cast<std::size_t>(count);
    if (w.size() != c || wp.size() != c || wt.size() != c)
        throw ValueError("weights: tables must have one entry per attribute");
    for (const auto& row : wt)
        if (row.size() != c) throw ValueError("weights: wt must be square");
    auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
    for (double v : w)
        if (!nonneg(v)) throw ValueError("weights: w entries must be finite and >= 0");
    for (double v : wp)
        if (!nonneg(v)) throw ValueError("weights: wp entries must be finite and >= 0");
    for (const auto& row : wt)
        for (double v : row)
            if (!nonneg(v)) throw ValueError("weights: wt entries must be finite and >= 0");
}

// ---- causal prior ----

CausalPrior CausalPrior::all_ones(int count) {
    CausalPrior p;
    p.lambda.assign(static_cast<std::size_t>(count),
                    std::vector<int>(static_cast<std::size_t>(count), 1));
    return p;
}

CausalPrior CausalPrior::from_edges(int count, const std::vector<std::pair<int, int>>& edges) {
    CausalPrior p = all_ones(count);
    for (const auto& [cause, effect] : edges) {
        if (cause < 1 || cause > count || effect < 1 || effect > count || cause == effect)
            throw ValueError("causal prior: edge (" + std::to_string(cause) + ">" +
                             std::to_string(effect) + ") outside attributes 1.." +
                             std::to_string(count));
        // "cause -> effect": the effect head must not be asked to unlearn its cause
        p.lambda[static_cast<std::size_t>(effect - 1)][static_cast<std::size_t>(cause - 1)] = 0;
    }
    return p;
}

void CausalPrior::check(int count) const {
    const auto c = static_cast<std::size_t>(count);
    if (lambda.size() != c) throw ValueError("causal prior: mask must be square over attributes");
    for (const auto& row : lambda) {
        if (row.size() != c)
            throw ValueError("causal prior: mask must be square over attributes");
        for (int v : row)
            if (v != 0 && v != 1)
                throw ValueError("causal prior: mask entries must be 0 or 1, got " +
                                 std::to_string(v));
    }
}

// ---- graph ----

ModelGraph::ModelGraph(AttributeSchema schema, InputSpec input, ModelWidths widths,
                       std::uint64_t seed, bool shared_d)
    : schema_(std::move(schema)), input_(input), widths_(widths), seed_(seed),
      shared_d_(shared_d) {
    build_params(true);
    weights_ = WeightTables::defaults(schema_.count());
    prior_ = CausalPrior::all_ones(schema_.count());
}

ModelGraph::ModelGraph(AttributeSchema schema, InputSpec input, ModelWidths widths,
                       std::uint64_t seed, bool shared_d, NoInitTag)
    : schema_(std::move(schema)), input_(input), widths_(widths), seed_(seed),
      shared_d_(shared_d) {
    build_params(false);
    weights_ = WeightTables::defaults(schema_.count());
    prior_ = CausalPrior::all_ones(schema_.count());
}

int ModelGraph::flat_dim() const {
    if (input_.kind == InputSpec::Kind::Vector) return widths_.vec_hidden;
    return kConv2Out * (input_.h / 4) * (input_.w / 4);
}

void ModelGraph::build_params(bool initialize) {
    if (input_.kind == InputSpec::Kind::Image) {
        if (input_.c < 1) throw DimensionError("model: image channels must be >= 1");
        if (input_.h % 4 != 0 || input_.w % 4 != 0)
            throw DimensionError("model: image sides must be divisible by 4, got " +
                                 std::to_string(input_.h) + "x" + std::to_string(input_.w));
    } else if (input_.d < 1) {
        throw DimensionError("model: vector width must be >= 1");
    }
    const int count = schema_.count();
    Rng rng = Rng(seed_).fork(0x1417);
    auto dense_pair = [&](const std::string& prefix, int in, int out) {
        Tensor w({in, out});
        if (initialize) glorot_fill(w, in, out, rng);
        ps_.add(prefix + ".W", std::move(w));
        ps_.add(prefix + ".b", Tensor({out}));
    };

    if (input_.kind == InputSpec::Kind::Image) {
        Tensor k1({kConv1Out, input_.c, kKernel, kKernel});
        if (initialize)
            glorot_fill(k1, static_cast<std::int64_t>(input_.c) * kKernel * kKernel,
                        static_cast<std::int64_t>(kConv1Out) * kKernel * kKernel, rng);
        ps_.add("P.conv1.K", std::move(k1));
        ps_.add("P.conv1.b", Tensor({kConv1Out}));
        Tensor k2({kConv2Out, kConv1Out, kKernel, kKernel});
        if (initialize)
            glorot_fill(k2, static_cast<std::int64_t>(kConv1Out) * kKernel * kKernel,
                        static_cast<std::int64_t>(kConv2Out) * kKernel * kKernel, rng);
        ps_.add("P.conv2.K", std::move(k2));
        ps_.add("P.conv2.b", Tensor({kConv2Out}));
    } else {
        dense_pair("P.fc", input_.d, widths_.vec_hidden);
    }
    p_ids_ = ps_.ids_with_prefix("P.");

    g_ids_.resize(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const std::string gp = "G" + std::to_string(j + 1);
        dense_pair(gp + ".h", flat_dim(), widths_.g_hidden);
        dense_pair(gp + ".o", widths_.g_hidden, widths_.feature);
        g_ids_[static_cast<std::size_t>(j)] = ps_.ids_with_prefix(gp + ".");
    }

    d_ids_.assign(static_cast<std::size_t>(count),
                  std::vector<std::vector<int>>(static_cast<std::size_t>(count)));
    if (shared_d_) {
        for (int jp = 0; jp < count; ++jp) {
            const std::string dp = "D." + std::to_string(jp + 1);
            dense_pair(dp, widths_.feature, schema_.k(jp));
            const auto ids = ps_.ids_with_prefix(dp + ".");
            for (int j = 0; j < count; ++j)
                d_ids_[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] = ids;
        }
    } else {
        for (int j = 0; j < count; ++j)
            for (int jp = 0; jp < count; ++jp) {
                const std::string dp =
                    "D" + std::to_string(j + 1) + "." + std::to_string(jp + 1);
                dense_pair(dp, widths_.feature, schema_.k(jp));
                d_ids_[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] =
                    ps_.ids_with_prefix(dp + ".");
            }
    }

    t_ids_.resize(static_cast<std::size_t>(count));
    r_ids_.resize(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const std::string tp = "T" + std::to_string(j + 1);
        dense_pair(tp + ".h", widths_.feature, widths_.t_hidden);
        dense_pair(tp + ".o", widths_.t_hidden, widths_.feature);
        t_ids_[static_cast<std::size_t>(j)] = ps_.ids_with_prefix(tp + ".");
    }
    for (int j = 0; j < count; ++j) {
        const std::string rp = "R" + std::to_string(j + 1);
        dense_pair(rp, widths_.feature, schema_.k(j));
        r_ids_[static_cast<std::size_t>(j)] = ps_.ids_with_prefix(rp + ".");
    }
}

void ModelGraph::set_prior(CausalPrior prior) {
    prior.check(schema_.count());
    prior_ = std::move(prior);
}

std::vector<std::vector<double>> ModelGraph::effective_wt() const {
    const int count = schema_.count();
    auto wt = weights_.wt;
    for (int j = 0; j < count; ++j)
        for (int jp = 0; jp < count; ++jp)
            if (j != jp)
                wt[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] *=
                    prior_.lambda[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)];
    return wt;
}

std::vector<std::vector<int>> ModelGraph::cross_update_sets() const {
    const int count = schema_.count();
    std::vector<std::vector<int>> s(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j)
        for (int jp = 0; jp < count; ++jp) {
            if (jp == j) continue;
            if (prior_.lambda[static_cast<std::size_t>(jp)][static_cast<std::size_t>(j)] == 1)
                s[static_cast<std::size_t>(j)].push_back(jp);
        }
    return s;
}

ModelGraph::Stage1Nodes ModelGraph::forward_stage1(Tape& t, int x_node) {
    Stage1Nodes nodes;
    if (input_.kind == InputSpec::Kind::Image) {
        const Conv2dSpec spec{1, kPad};
        int h = conv2d(t, x_node, t.param("P.conv1.K"), t.param("P.conv1.b"), spec);
        h = maxpool2(t, tanh_of(t, h));
        h = conv2d(t, h, t.param("P.conv2.K"), t.param("P.conv2.b"), spec);
        h = maxpool2(t, tanh_of(t, h));
        nodes.fc = flatten2(t, h);
    } else {
        nodes.fc = dense(t, x_node, t.param("P.fc.W"), t.param("P.fc.b"), Activation::Tanh);
    }
    nodes.f.assign(static_cast<std::size_t>(schema_.count()), -1);
    return nodes;
}

int ModelGraph::branch_feature(Tape& t, Stage1Nodes& nodes, int j) {
    int& cached = nodes.f[static_cast<std::size_t>(j)];
    if (cached >= 0) return cached;
    const std::string gp = "G" + std::to_string(j + 1);
    const int h = dense(t, nodes.fc, t.param(gp + ".h.W"), t.param(gp + ".h.b"),
                        Activation::Tanh);
    cached = dense(t, h, t.param(gp + ".o.W"), t.param(gp + ".o.b"), Activation::None);
    return cached;
}

int ModelGraph::d_head(Tape& t, int f_node, int j, int jp) {
    const std::string dp = shared_d_
                               ? "D." + std::to_string(jp + 1)
                               : "D" + std::to_string(j + 1) + "." + std::to_string(jp + 1);
    return dense(t, f_node, t.param(dp + ".W"), t.param(dp + ".b"), Activation::Softmax);
}

int ModelGraph::t_head(Tape& t, int f_node, int j) {
    const std::string tp = "T" + std::to_string(j + 1);
    const int h = dense(t, f_node, t.param(tp + ".h.W"), t.param(tp + ".h.b"),
                        Activation::Tanh);
    return dense(t, h, t.param(tp + ".o.W"), t.param(tp + ".o.b"), Activation::None);
}

int ModelGraph::r_head(Tape& t, int u_node, int j) {
    const std::string rp = "R" + std::to_string(j + 1);
    return dense(t, u_node, t.param(rp + ".W"), t.param(rp + ".b"), Activation::Softmax);
}

ModelGraph::Stage1Eval ModelGraph::eval_stage1(const Tensor& x, bool with_diag) {
    Tape t(ps_);
    const int x_node = t.input(x);
    Stage1Nodes nodes = forward_stage1(t, x_node);
    Stage1Eval out;
    const int count = schema_.count();
    out.f.reserve(static_cast<std::size_t>(count));
    if (with_diag) out.d_diag.reserve(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const int fj = branch_feature(t, nodes, j);
        out.f.push_back(t.value(fj));
        if (with_diag) out.d_diag.push_back(t.value(d_head(t, fj, j, j)));
    }
    return out;
}

Tensor ModelGraph::infer_stage1(const Tensor& x) {
    Tape t(ps_);
    Stage1Nodes nodes = forward_stage1(t, t.input(x));
    return t.value(d_head(t, branch_feature(t, nodes, 0), 0, 0));
}

Tensor ModelGraph::infer_stage2(const Tensor& x) {
    Tape t(ps_);
    Stage1Nodes nodes = forward_stage1(t, t.input(x));
    const int f1 = branch_feature(t, nodes, 0);
    return t.value(r_head(t, t_head(t, f1, 0), 0));
}

Tensor ModelGraph::infer_stage2_from_features(const Tensor& f1) {
    Tape t(ps_);
    const int f = t.input(f1);
    return t.value(r_head(t, t_head(t, f, 0), 0));
}

const std::vector<int>& ModelGraph::g_ids(int j) const {
    return g_ids_[static_cast<std::size_t>(j)];
}
const std::vector<int>& ModelGraph::d_ids(int j, int jp) const {
    return d_ids_[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)];
}
const std::vector<int>& ModelGraph::t_ids(int j) const {
    return t_ids_[static_cast<std::size_t>(j)];
}
const std::vector<int>& ModelGraph::r_ids(int j) const {
    return r_ids_[static_cast<std::size_t>(j)];
}

// ---- checkpointing ----

void ModelGraph::save_checkpoint(const std::string& path) const {
    json manifest;
    manifest["schema"] = schema_.to_string();
    if (input_.kind == InputSpec::Kind::Image)
        manifest["input"] = {{"kind", "image"}, {"c", input_.c}, {"h", input_.h}, {"w", input_.w}};
    else
        manifest["input"] = {{"kind", "vector"}, {"d", input_.d}};
    manifest["widths"] = {{"g_hidden", widths_.g_hidden},
                          {"feature", widths_.feature},
                          {"t_hidden", widths_.t_hidden},
                          {"vec_hidden", widths_.vec_hidden}};
    manifest["shared_d"] = shared_d_;
    manifest["seed"] = seed_;
    manifest["weights"] = {{"w", weights_.w}, {"wt", weights_.wt}, {"wp", weights_.wp}};
    manifest["lambda"] = prior_.lambda;
    json params = json::array();
    for (int id = 0; id < ps_.size(); ++id)
        params.push_back({{"name", ps_.name(id)}, {"shape", ps_.value(id).shape()}});
    manifest["params"] = std::move(params);

    const std::string text = manifest.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint: " + path);
    out.write(kCheckpointMagic, 8);
    const std::uint32_t version = kCheckpointVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (int id = 0; id < ps_.size(); ++id) {
        const Tensor& v = ps_.value(id);
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
    if (!out) throw FormatError("checkpoint write failed: " + path);
}

ModelGraph ModelGraph::load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0)
        throw FormatError("checkpoint: bad magic");
    std::uint32_t version = 0;
    if (!in.read(reinterpret_cast<char*>(&version), sizeof(version)))
        throw LengthError("checkpoint: truncated version field");
    if (version != kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    std::uint64_t len = 0;
    if (!in.read(reinterpret_cast<char*>(&len), sizeof(len)))
        throw LengthError("checkpoint: truncated manifest length");
    if (len > (1ull << 30)) throw FormatError("checkpoint: corrupt manifest length");
    std::string text(static_cast<std::size_t>(len), '\0');
    if (!in.read(text.data(), static_cast<std::streamsize>(len)))
        throw LengthError("checkpoint: truncated manifest");

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: manifest parse error: ") + e.what());
    }
    try {
        const AttributeSchema schema =
            AttributeSchema::from_string(manifest.at("schema").get<std::string>());
        const json& ji = manifest.at("input");
        InputSpec input;
        if (ji.at("kind") == "image")
            input = InputSpec::image(ji.at("c").get<int>(), ji.at("h").get<int>(),
                                     ji.at("w").get<int>());
        else if (ji.at("kind") == "vector")
            input = InputSpec::vector(ji.at("d").get<int>());
        else
            throw FormatError("checkpoint: unknown input kind");
        const json& jw = manifest.at("widths");
        ModelWidths widths{jw.at("g_hidden").get<int>(), jw.at("feature").get<int>(),
                           jw.at("t_hidden").get<int>(), jw.at("vec_hidden").get<int>()};
        ModelGraph g(schema, input, widths, manifest.at("seed").get<std::uint64_t>(),
                     manifest.at("shared_d").get<bool>(), NoInitTag{});

        WeightTables weights;
        weights.w = manifest.at("weights").at("w").get<std::vector<double>>();
        weights.wt = manifest.at("weights").at("wt").get<std::vector<std::vector<double>>>();
        weights.wp = manifest.at("weights").at("wp").get<std::vector<double>>();
        weights.check(schema.count());
        g.weights_ = std::move(weights);
        CausalPrior prior;
        prior.lambda = manifest.at("lambda").get<std::vector<std::vector<int>>>();
        g.set_prior(std::move(prior));

        const json& jp = manifest.at("params");
        if (static_cast<int>(jp.size()) != g.ps_.size())
            throw SchemaError("checkpoint: stores " + std::to_string(jp.size()) +
                              " parameters, graph has " + std::to_string(g.ps_.size()));
        for (int id = 0; id < g.ps_.size(); ++id) {
            const json& entry = jp.at(static_cast<std::size_t>(id));
            if (entry.at("name").get<std::string>() != g.ps_.name(id))
                throw SchemaError("checkpoint: parameter order mismatch at '" + g.ps_.name(id) +
                                  "'");
            if (entry.at("shape").get<Shape>() != g.ps_.value(id).shape())
                throw SchemaError("checkpoint: shape mismatch for '" + g.ps_.name(id) + "'");
            Tensor& v = g.ps_.value(id);
            if (!in.read(reinterpret_cast<char*>(v.data()),
                         static_cast<std::streamsize>(v.size() * sizeof(float))))
                throw LengthError("checkpoint: truncated payload at '" + g.ps_.name(id) + "'");
        }
        char extra;
        if (in.read(&extra, 1)) throw LengthError("checkpoint: trailing bytes");
        return g;
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: manifest field error: ") + e.what());
    }
}

ModelGraph ModelGraph::load_checkpoint(const std::string& path, const AttributeSchema& expected) {
    ModelGraph g = load_checkpoint(path);
    if (g.schema_.to_string() != expected.to_string())
        throw SchemaError("checkpoint: schema '" + g.schema_.to_string() +
                          "' does not match expected '" + expected.to_string() + "'");
    return g;
}

std::vector<Tensor> ModelGraph::snapshot_values() const {
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(ps_.size()));
    for (int id = 0; id < ps_.size(); ++id) out.push_back(ps_.value(id));
    return out;
}

void ModelGraph::restore_values(const std::vector<Tensor>& values) {
    if (static_cast<int>(values.size()) != ps_.size())
        throw DimensionError("restore: value count mismatch");
    for (int id = 0; id < ps_.size(); ++id) {
        if (!values[static_cast<std::size_t>(id)].same_shape(ps_.value(id)))
            throw DimensionError("restore: shape mismatch for '" + ps_.name(id) + "'");
        ps_.value(id) = values[static_cast<std::size_t>(id)];
    }
}

}  // namespace gcdr

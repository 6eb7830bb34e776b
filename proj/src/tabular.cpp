#include "gcdr/tabular.hpp"

#include <cstring>
#include <fstream>

namespace gcdr {

std::vector<Sample> generate_tabular(int n, const TabularConfig& cfg, std::uint64_t seed) {
    const AttributeSchema& schema = cfg.schema;
    if (schema.count() < 2)
        throw SchemaError("tabular: schema needs a class and at least one domain attribute");
    if (cfg.dim < 1) throw RangeError("tabular: dim must be >= 1");
    if (cfg.noise < 0.0f) throw RangeError("tabular: noise must be >= 0");
    if (cfg.edge_strength < 0.0 || cfg.edge_strength > 1.0)
        throw RangeError("tabular: edge_strength must be in [0,1]");

    std::int64_t combos = 1;
    for (int j = 0; j < schema.count(); ++j) combos *= schema.k(j);
    if (n < combos)
        throw SizeError("tabular: n = " + std::to_string(n) + " smaller than " +
                        std::to_string(combos) + " attribute combinations");

    int cause = -1, effect = -1;
    if (cfg.causal_edge) {
        cause = cfg.causal_edge->first - 1;
        effect = cfg.causal_edge->second - 1;
        if (cause < 0 || cause >= schema.count() || effect < 0 || effect >= schema.count() ||
            cause == effect)
            throw ValueError("tabular: causal edge (" + std::to_string(cause + 1) + "," +
                             std::to_string(effect + 1) + ") outside schema");
    }

    Rng root(seed);
    Rng center_rng = root.fork(1);
    Rng offset_rng = root.fork(2);
    Rng attr_rng = root.fork(3);
    Rng noise_rng = root.fork(4);

    // class centers: k_1 x dim
    std::vector<std::vector<float>> centers(static_cast<std::size_t>(schema.k(0)));
    for (auto& c : centers) {
        c.resize(static_cast<std::size_t>(cfg.dim));
        for (auto& v : c) v = cfg.center_scale * static_cast<float>(center_rng.normal());
    }
    // per domain attribute j, per value: offset vectors
    std::vector<std::vector<std::vector<float>>> offsets(static_cast<std::size_t>(schema.count()));
    for (int j = 1; j < schema.count(); ++j) {
        auto& per_value = offsets[static_cast<std::size_t>(j)];
        per_value.resize(static_cast<std::size_t>(schema.k(j)));
        for (auto& o : per_value) {
            o.resize(static_cast<std::size_t>(cfg.dim));
            for (auto& v : o) v = cfg.offset_scale * static_cast<float>(offset_rng.normal());
        }
    }

    std::vector<Sample> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<int> a(static_cast<std::size_t>(schema.count()));
        // draw causes before effects; all other attributes are independent
        for (int j = 0; j < schema.count(); ++j)
            if (j != effect) a[static_cast<std::size_t>(j)] = attr_rng.uniform_int(1, schema.k(j));
        if (effect >= 0) {
            const int kc = schema.k(effect);
            if (attr_rng.uniform() < cfg.edge_strength) {
                // deterministic value map of the cause
                a[static_cast<std::size_t>(effect)] =
                    ((a[static_cast<std::size_t>(cause)] - 1) % kc) + 1;
            } else {
                a[static_cast<std::size_t>(effect)] = attr_rng.uniform_int(1, kc);
            }
        }
        Sample s;
        s.attrs = a;
        s.x = Tensor({cfg.dim});
        float* x = s.x.data();
        const auto& center = centers[static_cast<std::size_t>(a[0] - 1)];
        for (int d = 0; d < cfg.dim; ++d) x[d] = center[static_cast<std::size_t>(d)];
        for (int j = 1; j < schema.count(); ++j) {
            const auto& o = offsets[static_cast<std::size_t>(j)]
                                   [static_cast<std::size_t>(a[static_cast<std::size_t>(j)] - 1)];
            for (int d = 0; d < cfg.dim; ++d) x[d] += o[static_cast<std::size_t>(d)];
        }
        for (int d = 0; d < cfg.dim; ++d)
            x[d] += cfg.noise * static_cast<float>(noise_rng.normal());
        out.push_back(std::move(s));
    }
    return out;
}

Tensor stack_features(const std::vector<Sample>& samples) {
    if (samples.empty()) throw EmptinessError("tabular: no samples to stack");
    const int dim = static_cast<int>(samples[0].x.size());
    Tensor out({static_cast<int>(samples.size()), dim});
    float* dst = out.data();
    for (const auto& s : samples) {
        if (static_cast<int>(s.x.size()) != dim)
            throw DimensionError("tabular: inconsistent feature widths");
        std::copy(s.x.data(), s.x.data() + dim, dst);
        dst += dim;
    }
    return out;
}

std::vector<std::vector<int>> stack_attrs(const std::vector<Sample>& samples) {
    std::vector<std::vector<int>> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.attrs);
    return out;
}

void write_features(const std::string& path, const Tensor& features) {
    if (features.rank() != 2)
        throw DimensionError("features: must be rank 2, got " + shape_str(features.shape()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write features: " + path);
    const char magic[8] = {'G', 'C', 'D', 'R', 'F', 'E', 'A', '1'};
    out.write(magic, 8);
    const std::uint32_t dims[2] = {static_cast<std::uint32_t>(features.dim(0)),
                                   static_cast<std::uint32_t>(features.dim(1))};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    out.write(reinterpret_cast<const char*>(features.data()),
              static_cast<std::streamsize>(features.size() * sizeof(float)));
    if (!out) throw FormatError("feature write failed: " + path);
}

Tensor read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open features: " + path);
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "GCDRFEA1", 8) != 0)
        throw FormatError("features: bad magic in " + path);
    std::uint32_t dims[2];
    if (!in.read(reinterpret_cast<char*>(dims), sizeof(dims)))
        throw LengthError("features: truncated header in " + path);
    if (dims[0] == 0 || dims[1] == 0) throw FormatError("features: zero dimension");
    Tensor out({static_cast<int>(dims[0]), static_cast<int>(dims[1])});
    if (!in.read(reinterpret_cast<char*>(out.data()),
                 static_cast<std::streamsize>(out.size() * sizeof(float))))
        throw LengthError("features: truncated payload in " + path);
    char extra;
    if (in.read(&extra, 1)) throw LengthError("features: trailing bytes in " + path);
    return out;
}

}  // namespace gcdr

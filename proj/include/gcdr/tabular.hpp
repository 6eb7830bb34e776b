#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "gcdr/dataset.hpp"

namespace gcdr {

// Synthetic vector dataset: x = class_center(a_1) + sum_j domain_offset(j, a_j)
// + noise * N(0, I). Attribute values are drawn uniformly unless a causal edge
// (cause, effect) is given, in which case the effect attribute copies a fixed
// mapping of the cause with probability `edge_strength` and is uniform
// otherwise. Attribute numbers are 1-based.
struct TabularConfig {
    AttributeSchema schema;
    int dim = 16;
    float center_scale = 2.0f;
    float offset_scale = 1.5f;
    float noise = 0.5f;
    double edge_strength = 0.7;
    std::optional<std::pair<int, int>> causal_edge;  // (cause, effect), 1-based
};

// SizeError when n is smaller than the number of attribute combinations;
// ValueError for a malformed causal edge.
std::vector<Sample> generate_tabular(int n, const TabularConfig& cfg, std::uint64_t seed);

// Stack sample features into one (n, dim) tensor.
Tensor stack_features(const std::vector<Sample>& samples);
std::vector<std::vector<int>> stack_attrs(const std::vector<Sample>& samples);

// Little-endian f32 feature matrix persistence (row-major, shape header).
void write_features(const std::string& path, const Tensor& features);
Tensor read_features(const std::string& path);

}  // namespace gcdr

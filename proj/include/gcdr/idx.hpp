#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcdr/tensor.hpp"

namespace gcdr {

// IDX binary container (big-endian header; u8 payload).
//   images: magic 0x00000803, dims (count, rows, cols)
//   labels: magic 0x00000801, dims (count)
struct IdxContent {
    enum Kind { Images, Labels } kind = Images;
    Tensor images;                // (n, h, w), values k/255 in [0,1]
    std::vector<int> labels;      // n entries, raw bytes
};

// Parse a full IDX byte stream. FormatError on bad magic/rank; LengthError
// when the payload does not match the declared dimensions.
IdxContent parse_idx(const std::vector<std::uint8_t>& bytes);

// Serializers producing byte streams parse_idx() round-trips exactly.
// Image values must be multiples of 1/255 in [0,1].
std::vector<std::uint8_t> serialize_idx_images(const Tensor& images);
std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels);

std::vector<std::uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace gcdr

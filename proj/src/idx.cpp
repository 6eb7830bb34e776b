#include "gcdr/idx.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gcdr {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803u;
constexpr std::uint32_t kLabelsMagic = 0x00000801u;

std::uint32_t read_u32_be(const std::vector<std::uint8_t>& b, std::size_t off) {
    if (off + 4 > b.size()) throw LengthError("idx: truncated header");
    return (static_cast<std::uint32_t>(b[off]) << 24) |
           (static_cast<std::uint32_t>(b[off + 1]) << 16) |
           (static_cast<std::uint32_t>(b[off + 2]) << 8) | static_cast<std::uint32_t>(b[off + 3]);
}

void write_u32_be(std::vector<std::uint8_t>& b, std::uint32_t v) {
    b.push_back(static_cast<std::uint8_t>(v >> 24));
    b.push_back(static_cast<std::uint8_t>(v >> 16));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
    b.push_back(static_cast<std::uint8_t>(v));
}

}  // namespace

IdxContent parse_idx(const std::vector<std::uint8_t>& bytes) {
    const std::uint32_t magic = read_u32_be(bytes, 0);
    IdxContent out;
    if (magic == kImagesMagic) {
        const std::uint32_t n = read_u32_be(bytes, 4);
        const std::uint32_t h = read_u32_be(bytes, 8);
        const std::uint32_t w = read_u32_be(bytes, 12);
        if (n == 0 || h == 0 || w == 0) throw FormatError("idx: zero dimension in image header");
        const std::size_t want = static_cast<std::size_t>(n) * h * w;
        if (bytes.size() != 16 + want)
            throw LengthError("idx: image payload is " + std::to_string(bytes.size() - 16) +
                              " bytes, header requires " + std::to_string(want));
        out.kind = IdxContent::Images;
        out.images = Tensor({static_cast<int>(n), static_cast<int>(h), static_cast<int>(w)});
        float* p = out.images.data();
        for (std::size_t i = 0; i < want; ++i)
            p[i] = static_cast<float>(bytes[16 + i]) / 255.0f;
        return out;
    }
    if (magic == kLabelsMagic) {
        const std::uint32_t n = read_u32_be(bytes, 4);
        if (n == 0) throw FormatError("idx: zero dimension in label header");
        if (bytes.size() != 8 + n)
            throw LengthError("idx: label payload is " + std::to_string(bytes.size() - 8) +
                              " bytes, header requires " + std::to_string(n));
        out.kind = IdxContent::Labels;
        out.labels.resize(n);
        for (std::uint32_t i = 0; i < n; ++i) out.labels[i] = bytes[8 + i];
        return out;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "0x%08x", magic);
    throw FormatError(std::string("idx: unknown magic ") + buf);
}

std::vector<std::uint8_t> serialize_idx_images(const Tensor& images) {
    if (images.rank() != 3)
        throw DimensionError("idx: images must be rank 3 (n,h,w), got " +
                             shape_str(images.shape()));
    std::vector<std::uint8_t> out;
    out.reserve(16 + static_cast<std::size_t>(images.size()));
    write_u32_be(out, kImagesMagic);
    write_u32_be(out, static_cast<std::uint32_t>(images.dim(0)));
    write_u32_be(out, static_cast<std::uint32_t>(images.dim(1)));
    write_u32_be(out, static_cast<std::uint32_t>(images.dim(2)));
    const float* p = images.data();
    for (std::int64_t i = 0; i < images.size(); ++i) {
        const float v = p[i];
        if (!(v >= 0.0f && v <= 1.0f))
            throw RangeError("idx: image value outside [0,1]");
        out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
    }
    return out;
}

std::vector<std::uint8_t> serialize_idx_labels(const std::vector<int>& labels) {
    if (labels.empty()) throw EmptinessError("idx: no labels to serialize");
    std::vector<std::uint8_t> out;
    out.reserve(8 + labels.size());
    write_u32_be(out, kLabelsMagic);
    write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
    for (int v : labels) {
        if (v < 0 || v > 255) throw RangeError("idx: label outside [0,255]");
        out.push_back(static_cast<std::uint8_t>(v));
    }
    return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write file: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("write failed: " + path);
}

}  // namespace gcdr

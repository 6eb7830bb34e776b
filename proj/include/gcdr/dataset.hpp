#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gcdr/rng.hpp"
#include "gcdr/tensor.hpp"

namespace gcdr {

// One attribute: display name, cardinality k >= 2, and whether its class
// groups may be shared across domains (exempt from the disjointness rule).
struct AttributeSpec {
    std::string name;
    int k = 2;
    bool class_sharing = false;
};

// Attribute list; index 0 is always the classification target. Attribute
// numbers in error messages and configs are 1-based (1 = class).
struct AttributeSchema {
    std::vector<AttributeSpec> attrs;

    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<AttributeSpec> a);

    int count() const { return static_cast<int>(attrs.size()); }  // m + 1
    int m() const { return count() - 1; }
    int k(int j) const { return attrs[static_cast<std::size_t>(j)].k; }  // j is 0-based here
    const AttributeSpec& at(int j) const { return attrs[static_cast<std::size_t>(j)]; }

    // Throws ValueError when tuple size or any value is out of range.
    void check_tuple(const std::vector<int>& a) const;

    std::string to_string() const;                       // "digit:10,bg:10,fg:10s"
    static AttributeSchema from_string(const std::string& s);
};

// One example: features plus its 1-based attribute tuple (a_1 .. a_{m+1}).
struct Sample {
    Tensor x;
    std::vector<int> attrs;
};

// ---- colorization ----

struct Rgb {
    float r, g, b;
};

// Versioned color table: 10 background + 10 foreground colors, components in
// [0,1], chosen for mutual separation. Indices are 1-based.
struct Palette {
    int version = 1;
    std::array<Rgb, 10> bg;
    std::array<Rgb, 10> fg;
};

const Palette& default_palette();

// gray:(h,w) in [0,1] -> (3,h,w): pixel = g*fg + (1-g)*bg, per channel.
// RangeError for color indices outside [1,10].
Tensor colorize(const Tensor& gray, int bg_index, int fg_index, const Palette& palette);

// ---- built-in digit glyphs ----

// Deterministic seven-segment-style digit raster, 28x28 in [0,1], with jitter,
// stroke-thickness, intensity and noise variation driven by (seed, index).
Tensor synth_glyph(int digit, std::uint64_t seed, std::int64_t index);

// Corpus of `count` glyphs with uniformly drawn digit labels.
void synth_glyph_corpus(int count, std::uint64_t seed, Tensor& images_out,
                        std::vector<int>& digits_out);

// ---- colored-digit corpus ----

// Grayscale digits plus per-index color assignments; pixels are materialized
// on demand so only the slices actually used are ever colorized.
struct ColorDigitCorpus {
    Tensor gray;                           // (n, 28, 28)
    std::vector<int> digits;               // 0..9
    std::vector<std::array<int, 2>> colors;  // {bg, fg}, 1-based
    const Palette* palette = &default_palette();

    int size() const { return static_cast<int>(digits.size()); }
    std::vector<int> attr_tuple(int i) const;   // {digit+1, bg, fg}
    Tensor materialize(int i) const;            // (3, 28, 28)

    static AttributeSchema schema();            // digit:10, bg:10, fg:10 (sharing)
};

// Assign background and foreground color indices independently and uniformly
// (seeded); split builders later select the combinations they keep.
ColorDigitCorpus make_color_digit_corpus(Tensor gray, std::vector<int> digits,
                                         std::uint64_t seed);

// ---- batching ----

// Deterministic mini-batch index stream: contents depend only on (indices,
// batch_size, seed, epoch). The final short batch is kept. RangeError when
// batch_size < 1.
std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           std::uint64_t seed, int epoch, bool shuffle);

}  // namespace gcdr

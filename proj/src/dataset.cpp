#include "gcdr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gcdr {

// ---- schema ----

AttributeSchema::AttributeSchema(std::vector<AttributeSpec> a) : attrs(std::move(a)) {
    if (attrs.empty()) throw ValueError("schema: needs at least the class attribute");
    for (const auto& s : attrs) {
        if (s.name.empty()) throw ValueError("schema: empty attribute name");
        if (s.name.find_first_of(",:") != std::string::npos)
            throw ValueError("schema: attribute name '" + s.name + "' contains ',' or ':'");
        if (s.k < 2)
            throw ValueError("schema: attribute '" + s.name + "' needs cardinality >= 2, got " +
                             std::to_string(s.k));
    }
}

void AttributeSchema::check_tuple(const std::vector<int>& a) const {
    if (static_cast<int>(a.size()) != count())
        throw ValueError("attribute tuple has " + std::to_string(a.size()) + " entries, schema '" +
                         to_string() + "' requires " + std::to_string(count()));
    for (int j = 0; j < count(); ++j) {
        const int v = a[static_cast<std::size_t>(j)];
        if (v < 1 || v > k(j))
            throw ValueError("attribute " + std::to_string(j + 1) + " ('" + at(j).name +
                             "') value " + std::to_string(v) + " outside [1," +
                             std::to_string(k(j)) + "]");
    }
}

std::string AttributeSchema::to_string() const {
    std::string out;
    for (int j = 0; j < count(); ++j) {
        if (j) out += ",";
        out += at(j).name + ":" + std::to_string(k(j));
        if (at(j).class_sharing) out += "s";
    }
    return out;
}

AttributeSchema AttributeSchema::from_string(const std::string& s) {
    std::vector<AttributeSpec> specs;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= item.size())
            throw ValueError("schema: bad attribute spec '" + item + "' (want name:k or name:ks)");
        AttributeSpec spec;
        spec.name = item.substr(0, colon);
        std::string num = item.substr(colon + 1);
        if (!num.empty() && num.back() == 's') {
            spec.class_sharing = true;
            num.pop_back();
        }
        std::size_t pos = 0;
        try {
            spec.k = std::stoi(num, &pos);
        } catch (const std::exception&) {
            throw ValueError("schema: bad cardinality in '" + item + "'");
        }
        if (pos != num.size()) throw ValueError("schema: bad cardinality in '" + item + "'");
        specs.push_back(std::move(spec));
    }
    return AttributeSchema(std::move(specs));
}

// ---- palette / colorization ----

const Palette& default_palette() {
    static const Palette p = [] {
        Palette q;
        q.version = 1;
        q.bg = {Rgb{0.16f, 0.65f, 0.27f},   // green
                Rgb{0.96f, 0.55f, 0.75f},   // pink
                Rgb{0.22f, 0.45f, 0.85f},   // blue
                Rgb{0.95f, 0.60f, 0.15f},   // orange
                Rgb{0.55f, 0.30f, 0.75f},   // purple
                Rgb{0.15f, 0.75f, 0.75f},   // cyan
                Rgb{0.90f, 0.85f, 0.20f},   // yellow
                Rgb{0.85f, 0.20f, 0.20f},   // red
                Rgb{0.55f, 0.40f, 0.20f},   // brown
                Rgb{0.60f, 0.60f, 0.60f}};  // gray
        q.fg = {Rgb{0.05f, 0.05f, 0.05f},   // near-black
                Rgb{0.98f, 0.98f, 0.98f},   // white
                Rgb{0.00f, 0.25f, 0.60f},   // navy
                Rgb{0.75f, 0.05f, 0.45f},   // magenta
                Rgb{0.95f, 0.35f, 0.05f},   // vermilion
                Rgb{0.05f, 0.45f, 0.10f},   // dark green
                Rgb{0.98f, 0.80f, 0.05f},   // gold
                Rgb{0.40f, 0.05f, 0.65f},   // violet
                Rgb{0.00f, 0.60f, 0.55f},   // teal
                Rgb{0.50f, 0.25f, 0.05f}};  // chestnut
        return q;
    }();
    return p;
}

Tensor colorize(const Tensor& gray, int bg_index, int fg_index, const Palette& palette) {
    if (gray.rank() != 2)
        throw DimensionError("colorize: gray image must be rank 2, got " +
                             shape_str(gray.shape()));
    if (bg_index < 1 || bg_index > 10)
        throw RangeError("colorize: background index " + std::to_string(bg_index) +
                         " outside [1,10]");
    if (fg_index < 1 || fg_index > 10)
        throw RangeError("colorize: foreground index " + std::to_string(fg_index) +
                         " outside [1,10]");
    const Rgb bg = palette.bg[static_cast<std::size_t>(bg_index - 1)];
    const Rgb fg = palette.fg[static_cast<std::size_t>(fg_index - 1)];
    const int h = gray.dim(0), w = gray.dim(1);
    Tensor out({3, h, w});
    const float* g = gray.data();
    float* o = out.data();
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    const float fgc[3] = {fg.r, fg.g, fg.b};
    const float bgc[3] = {bg.r, bg.g, bg.b};
    for (int c = 0; c < 3; ++c)
        for (std::int64_t i = 0; i < plane; ++i)
            o[c * plane + i] = g[i] * fgc[c] + (1.0f - g[i]) * bgc[c];
    return out;
}

// ---- glyph synthesis ----

namespace {

// Segment layout: 0 top bar, 1 top-right, 2 bottom-right, 3 bottom bar,
// 4 bottom-left, 5 top-left, 6 middle bar.
constexpr int kSegments[10] = {
    0b0111111,  // 0: all but middle
    0b0000110,  // 1
    0b1011011,  // 2
    0b1001111,  // 3
    0b1100110,  // 4
    0b1101101,  // 5
    0b1111101,  // 6
    0b0000111,  // 7
    0b1111111,  // 8
    0b1101111,  // 9
};

struct GlyphCanvas {
    float* px;
    int h, w;
    Rng* rng;
    float base;

    void put(int y, int x) {
        if (y < 0 || y >= h || x < 0 || x >= w) return;
        const float jitter = 1.0f - 0.25f * rng->uniform_float(0.0f, 1.0f);
        px[static_cast<std::int64_t>(y) * w + x] = base * jitter;
    }
    void rect(int y0, int y1, int x0, int x1) {  // inclusive bounds
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) put(y, x);
    }
};

}  // namespace

Tensor synth_glyph(int digit, std::uint64_t seed, std::int64_t index) {
    if (digit < 0 || digit > 9)
        throw RangeError("glyph: digit " + std::to_string(digit) + " outside [0,9]");
    Tensor img({28, 28});
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(index));
    const int dx = rng.uniform_int(-4, 4);
    const int dy = rng.uniform_int(-3, 3);
    const int t = rng.uniform_int(2, 3);
    const float base = rng.uniform_float(0.72f, 1.0f);

    const int x0 = 9 + dx, x1 = x0 + 10;
    const int y0 = 5 + dy, ym = y0 + 8, y1 = y0 + 17;

    GlyphCanvas canvas{img.data(), 28, 28, &rng, base};
    const int segs = kSegments[digit];
    if (segs & (1 << 0)) canvas.rect(y0, y0 + t - 1, x0, x1);            // top
    if (segs & (1 << 1)) canvas.rect(y0, ym, x1 - t + 1, x1);            // top-right
    if (segs & (1 << 2)) canvas.rect(ym, y1, x1 - t + 1, x1);            // bottom-right
    if (segs & (1 << 3)) canvas.rect(y1 - t + 1, y1, x0, x1);            // bottom
    if (segs & (1 << 4)) canvas.rect(ym, y1, x0, x0 + t - 1);            // bottom-left
    if (segs & (1 << 5)) canvas.rect(y0, ym, x0, x0 + t - 1);            // top-left
    if (segs & (1 << 6)) canvas.rect(ym - t / 2, ym - t / 2 + t - 1, x0, x1);  // middle

    // quantize to the 8-bit grid external digit images live on
    float* p = img.data();
    for (std::int64_t i = 0; i < img.size(); ++i)
        p[i] = static_cast<float>(std::lround(p[i] * 255.0f)) / 255.0f;
    return img;
}

void synth_glyph_corpus(int count, std::uint64_t seed, Tensor& images_out,
                        std::vector<int>& digits_out) {
    if (count < 1) throw RangeError("glyph corpus: count must be >= 1");
    images_out = Tensor({count, 28, 28});
    digits_out.resize(static_cast<std::size_t>(count));
    Rng label_rng = Rng(seed).fork(0xd161);
    float* dst = images_out.data();
    for (int i = 0; i < count; ++i) {
        const int digit = label_rng.uniform_int(0, 9);
        digits_out[static_cast<std::size_t>(i)] = digit;
        const Tensor glyph = synth_glyph(digit, seed, i);
        std::copy(glyph.data(), glyph.data() + glyph.size(), dst + static_cast<std::int64_t>(i) * 784);
    }
}

// ---- colored-digit corpus ----

AttributeSchema ColorDigitCorpus::schema() {
    return AttributeSchema({AttributeSpec{"digit", 10, false}, AttributeSpec{"bg", 10, false},
                            AttributeSpec{"fg", 10, true}});
}

std::vector<int> ColorDigitCorpus::attr_tuple(int i) const {
    const auto idx = static_cast<std::size_t>(i);
    return {digits[idx] + 1, colors[idx][0], colors[idx][1]};
}

Tensor ColorDigitCorpus::materialize(int i) const {
    const auto idx = static_cast<std::size_t>(i);
    if (i < 0 || i >= size()) throw RangeError("corpus: index out of range");
    const int h = gray.dim(1), w = gray.dim(2);
    Tensor g({h, w});
    std::copy(gray.data() + static_cast<std::int64_t>(i) * h * w,
              gray.data() + static_cast<std::int64_t>(i + 1) * h * w, g.data());
    return colorize(g, colors[idx][0], colors[idx][1], *palette);
}

ColorDigitCorpus make_color_digit_corpus(Tensor gray, std::vector<int> digits,
                                         std::uint64_t seed) {
    if (gray.rank() != 3)
        throw DimensionError("corpus: images must be rank 3 (n,h,w), got " +
                             shape_str(gray.shape()));
    if (gray.dim(0) != static_cast<int>(digits.size()))
        throw DimensionError("corpus: " + std::to_string(gray.dim(0)) + " images vs " +
                             std::to_string(digits.size()) + " labels");
    for (int d : digits)
        if (d < 0 || d > 9) throw RangeError("corpus: digit label outside [0,9]");
    ColorDigitCorpus corpus;
    corpus.gray = std::move(gray);
    corpus.digits = std::move(digits);
    corpus.palette = &default_palette();
    Rng bg_rng = Rng(seed).fork(0xb6);
    Rng fg_rng = Rng(seed).fork(0xf6);
    corpus.colors.resize(corpus.digits.size());
    for (auto& c : corpus.colors) {
        c[0] = bg_rng.uniform_int(1, 10);
        c[1] = fg_rng.uniform_int(1, 10);
    }
    return corpus;
}

// ---- batching ----

std::vector<std::vector<int>> make_batches(const std::vector<int>& indices, int batch_size,
                                           std::uint64_t seed, int epoch, bool shuffle) {
    if (batch_size < 1)
        throw RangeError("batches: batch size must be >= 1, got " + std::to_string(batch_size));
    std::vector<int> order = indices;
    if (shuffle) {
        Rng rng = Rng(seed).fork(0xba7c4).fork(static_cast<std::uint64_t>(epoch));
        rng.shuffle(order);
    }
    std::vector<std::vector<int>> out;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(batch_size));
        out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(pos),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return out;
}

}  // namespace gcdr

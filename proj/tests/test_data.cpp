#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <vector>

#include "gcdr/dataset.hpp"
#include "gcdr/errors.hpp"
#include "gcdr/idx.hpp"
#include "gcdr/rng.hpp"
#include "gcdr/split.hpp"
#include "gcdr/tabular.hpp"

using namespace gcdr;

namespace {

bool tensors_equal(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), static_cast<std::size_t>(a.size()) * sizeof(float)) == 0;
}

std::vector<std::uint8_t> image_fixture() {
    return {0, 0, 8, 3,  // images magic 0x00000803
            0, 0, 0, 1,  // one image
            0, 0, 0, 2,  // 2 rows
            0, 0, 0, 2,  // 2 cols
            0, 255, 0, 255};
}

std::vector<std::uint8_t> label_fixture() {
    return {0, 0, 8, 1,  // labels magic 0x00000801
            0, 0, 0, 3,  // three labels
            5, 0, 9};
}

// Populate the cached combination/group fields exactly as the split builders
// do, so hand-constructed splits isolate the violation under test instead of
// also tripping the bookkeeping cross-check.
void fill_cache(GcdrSplit& s, const std::vector<std::vector<int>>& attrs,
                const AttributeSchema& schema) {
    s.combos_train.clear();
    s.combos_test.clear();
    s.groups_train.clear();
    s.groups_test.clear();
    for (int i : s.train) s.combos_train.insert(attrs[static_cast<std::size_t>(i)]);
    for (int i : s.eval_indices()) s.combos_test.insert(attrs[static_cast<std::size_t>(i)]);
    auto groups = [&](const std::vector<int>& side,
                      std::map<std::pair<int, int>, std::set<int>>& out) {
        for (int i : side) {
            const auto& a = attrs[static_cast<std::size_t>(i)];
            for (int j = 1; j < schema.count(); ++j) {
                if (schema.at(j).class_sharing) continue;
                out[{j, a[static_cast<std::size_t>(j)]}].insert(a[0]);
            }
        }
    };
    groups(s.train, s.groups_train);
    groups(s.eval_indices(), s.groups_test);
}

bool has_issue(const ValidationReport& r, const std::string& check) {
    return std::any_of(r.issues.begin(), r.issues.end(),
                       [&check](const ValidationIssue& i) { return i.check == check; });
}

}  // namespace

TEST_CASE("idx fixtures parse to known contents") {
    const IdxContent img = parse_idx(image_fixture());
    CHECK(img.kind == IdxContent::Images);
    REQUIRE(img.images.shape() == Shape{1, 2, 2});
    CHECK(img.images.at({0, 0, 0}) == 0.0f);
    CHECK(img.images.at({0, 0, 1}) == 1.0f);
    CHECK(img.images.at({0, 1, 0}) == 0.0f);
    CHECK(img.images.at({0, 1, 1}) == 1.0f);

    const IdxContent lab = parse_idx(label_fixture());
    CHECK(lab.kind == IdxContent::Labels);
    CHECK(lab.labels == std::vector<int>{5, 0, 9});
}

TEST_CASE("idx rejects bad magic and truncation") {
    CHECK_THROWS_AS(parse_idx({0xDE, 0xAD, 0xBE, 0xEF, 0, 0, 0, 1}), FormatError);

    auto short_img = image_fixture();
    short_img.pop_back();
    CHECK_THROWS_AS(parse_idx(short_img), LengthError);

    auto long_img = image_fixture();
    long_img.push_back(7);
    CHECK_THROWS_AS(parse_idx(long_img), LengthError);

    auto short_lab = label_fixture();
    short_lab.pop_back();
    CHECK_THROWS_AS(parse_idx(short_lab), LengthError);

    CHECK_THROWS_AS(parse_idx({0, 0, 8}), LengthError);  // header cut mid-magic
}

TEST_CASE("idx serialization round-trips bit-exactly") {
    Rng r(17);
    // byte domain: parse then re-serialize returns the original stream
    std::vector<std::uint8_t> bytes{0, 0, 8, 3, 0, 0, 0, 3, 0, 0, 0, 5, 0, 0, 0, 4};
    for (int i = 0; i < 3 * 5 * 4; ++i)
        bytes.push_back(static_cast<std::uint8_t>(r.uniform_int(0, 255)));
    const IdxContent parsed = parse_idx(bytes);
    CHECK(serialize_idx_images(parsed.images) == bytes);

    // tensor domain: serialize then parse returns the same floats
    const IdxContent again = parse_idx(serialize_idx_images(parsed.images));
    CHECK(tensors_equal(again.images, parsed.images));

    std::vector<int> labels(23);
    for (auto& l : labels) l = r.uniform_int(0, 255);
    CHECK(parse_idx(serialize_idx_labels(labels)).labels == labels);

    // file I/O preserves the stream
    const std::string path = "idx_roundtrip.tmp";
    write_file_bytes(path, bytes);
    CHECK(read_file_bytes(path) == bytes);

    CHECK_THROWS_AS(serialize_idx_labels({-1}), RangeError);
    CHECK_THROWS_AS(serialize_idx_labels({256}), RangeError);
    Tensor bad({1, 1, 1});
    bad.fill(1.5f);
    CHECK_THROWS_AS(serialize_idx_images(bad), RangeError);
}

TEST_CASE("colorize worked examples") {
    const Palette& pal = default_palette();

    Tensor zero({4, 3});
    const Tensor as_bg = colorize(zero, 3, 7, pal);
    REQUIRE(as_bg.shape() == Shape{3, 4, 3});
    for (int h = 0; h < 4; ++h)
        for (int w = 0; w < 3; ++w) {
            CHECK(as_bg.at({0, h, w}) == pal.bg[2].r);
            CHECK(as_bg.at({1, h, w}) == pal.bg[2].g);
            CHECK(as_bg.at({2, h, w}) == pal.bg[2].b);
        }

    Tensor one({2, 2});
    one.fill(1.0f);
    const Tensor as_fg = colorize(one, 3, 7, pal);
    for (int h = 0; h < 2; ++h)
        for (int w = 0; w < 2; ++w) {
            CHECK(as_fg.at({0, h, w}) == pal.fg[6].r);
            CHECK(as_fg.at({1, h, w}) == pal.fg[6].g);
            CHECK(as_fg.at({2, h, w}) == pal.fg[6].b);
        }

    // g = 0.5 between black background and white foreground -> mid gray
    Palette bw;
    bw.bg[0] = {0.0f, 0.0f, 0.0f};
    bw.fg[0] = {1.0f, 1.0f, 1.0f};
    Tensor half({2, 2});
    half.fill(0.5f);
    const Tensor mid = colorize(half, 1, 1, bw);
    for (std::int64_t i = 0; i < mid.size(); ++i) CHECK(mid.data()[i] == 0.5f);

    CHECK_THROWS_AS(colorize(zero, 0, 5, pal), RangeError);
    CHECK_THROWS_AS(colorize(zero, 11, 5, pal), RangeError);
    CHECK_THROWS_AS(colorize(zero, 5, 0, pal), RangeError);
    CHECK_THROWS_AS(colorize(zero, 5, 11, pal), RangeError);
}

TEST_CASE("colorize is affine in the gray intensity") {
    const Palette& pal = default_palette();
    Rng r(23);
    Tensor gray({6, 5});
    for (std::int64_t i = 0; i < gray.size(); ++i) gray.data()[i] = r.uniform_float(0.0f, 1.0f);
    Tensor zeros({6, 5});
    Tensor ones({6, 5});
    ones.fill(1.0f);

    for (float alpha : {0.25f, 0.7f, 1.0f}) {
        Tensor scaled({6, 5});
        for (std::int64_t i = 0; i < gray.size(); ++i) scaled.data()[i] = alpha * gray.data()[i];
        const Tensor got = colorize(scaled, 4, 9, pal);
        const Tensor at_g = colorize(gray, 4, 9, pal);
        const Tensor at_0 = colorize(zeros, 4, 9, pal);
        for (std::int64_t i = 0; i < got.size(); ++i) {
            const float want = alpha * at_g.data()[i] + (1.0f - alpha) * at_0.data()[i];
            CHECK(std::abs(got.data()[i] - want) <= 1e-6f);
        }

        // constant-intensity form: alpha blends the two palette extremes
        Tensor flat({6, 5});
        flat.fill(alpha);
        const Tensor got_flat = colorize(flat, 4, 9, pal);
        const Tensor at_1 = colorize(ones, 4, 9, pal);
        for (std::int64_t i = 0; i < got_flat.size(); ++i) {
            const float want = alpha * at_1.data()[i] + (1.0f - alpha) * at_0.data()[i];
            CHECK(std::abs(got_flat.data()[i] - want) <= 1e-6f);
        }
    }
}

TEST_CASE("glyph generator is deterministic and varied") {
    const Tensor a = synth_glyph(7, 14, 3);
    const Tensor b = synth_glyph(7, 14, 3);
    CHECK(tensors_equal(a, b));
    REQUIRE(a.shape() == Shape{28, 28});
    for (std::int64_t i = 0; i < a.size(); ++i) {
        CHECK(a.data()[i] >= 0.0f);
        CHECK(a.data()[i] <= 1.0f);
    }
    CHECK_FALSE(tensors_equal(a, synth_glyph(7, 14, 4)));
    CHECK_FALSE(tensors_equal(a, synth_glyph(7, 15, 3)));
    CHECK_FALSE(tensors_equal(a, synth_glyph(1, 14, 3)));

    Tensor im1, im2;
    std::vector<int> d1, d2;
    synth_glyph_corpus(50, 9, im1, d1);
    synth_glyph_corpus(50, 9, im2, d2);
    CHECK(tensors_equal(im1, im2));
    CHECK(d1 == d2);
    REQUIRE(im1.shape() == Shape{50, 28, 28});
    std::set<int> seen(d1.begin(), d1.end());
    CHECK(*seen.begin() >= 0);
    CHECK(*seen.rbegin() <= 9);
    CHECK(seen.size() >= 5);  // 50 uniform draws cover at least half the digits
}

TEST_CASE("color corpus assigns colors reproducibly") {
    Tensor gray;
    std::vector<int> digits;
    synth_glyph_corpus(40, 11, gray, digits);
    const ColorDigitCorpus c1 = make_color_digit_corpus(gray, digits, 5);
    const ColorDigitCorpus c2 = make_color_digit_corpus(gray, digits, 5);
    const ColorDigitCorpus c3 = make_color_digit_corpus(gray, digits, 6);
    REQUIRE(c1.size() == 40);
    CHECK(c1.colors == c2.colors);
    CHECK(c1.colors != c3.colors);

    for (int i = 0; i < c1.size(); ++i) {
        const auto t = c1.attr_tuple(i);
        REQUIRE(t.size() == 3);
        CHECK(t[0] == digits[static_cast<std::size_t>(i)] + 1);
        CHECK(t[1] == c1.colors[static_cast<std::size_t>(i)][0]);
        CHECK(t[2] == c1.colors[static_cast<std::size_t>(i)][1]);
    }

    // materialization is exactly the colorization of the gray slice
    Tensor slice({28, 28});
    for (int h = 0; h < 28; ++h)
        for (int w = 0; w < 28; ++w) slice.at({h, w}) = gray.at({12, h, w});
    const Tensor direct = colorize(slice, c1.colors[12][0], c1.colors[12][1], *c1.palette);
    CHECK(tensors_equal(c1.materialize(12), direct));

    const AttributeSchema schema = ColorDigitCorpus::schema();
    CHECK(schema.to_string() == "digit:10,bg:10,fg:10s");
    CHECK(schema.m() == 2);
    CHECK(schema.at(2).class_sharing);
}

TEST_CASE("color-digit split reproduces reference counts at full scale") {
    Tensor gray;
    std::vector<int> digits;
    synth_glyph_corpus(70000, 14, gray, digits);
    const ColorDigitCorpus corpus = make_color_digit_corpus(gray, digits, 14);
    std::vector<std::vector<int>> attrs;
    attrs.reserve(static_cast<std::size_t>(corpus.size()));
    for (int i = 0; i < corpus.size(); ++i) attrs.push_back(corpus.attr_tuple(i));

    const AttributeSchema schema = ColorDigitCorpus::schema();
    SplitOptions opt;
    opt.val_fraction = 0.1;
    opt.seed = 14;
    const GcdrSplit split = build_color_digit_split(attrs, schema, 1, 2, 60000, opt);

    // reference scale ±1%
    const int train_n = static_cast<int>(split.train.size());
    const int eval_n = static_cast<int>(split.test.size() + split.val.size());
    CHECK(std::abs(train_n - 5970) <= 60);
    CHECK(std::abs(eval_n - 1003) <= 10);

    // frozen exact sizes for this corpus seed: any drift is a regression
    CHECK(train_n == 6002);
    CHECK(split.test.size() == 904);
    CHECK(split.val.size() == 100);

    const ValidationReport report = validate_gcdr(split, schema, attrs);
    CHECK(report.ok());
    CHECK(report.checked_combos_train > 0);
    CHECK(report.checked_combos_test > 0);

    // group/background pairing: classes 1-5 with bg 1 and 6-10 with bg 2 in
    // train, swapped on the evaluation side
    for (int i : split.train) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        CHECK(a[1] == (a[0] <= 5 ? 1 : 2));
    }
    for (int i : split.eval_indices()) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        CHECK(a[1] == (a[0] <= 5 ? 2 : 1));
    }

    // (class, bg) projections never cross sides
    std::set<std::pair<int, int>> proj_train, proj_eval;
    for (int i : split.train)
        proj_train.insert({attrs[static_cast<std::size_t>(i)][0], attrs[static_cast<std::size_t>(i)][1]});
    for (int i : split.eval_indices())
        proj_eval.insert({attrs[static_cast<std::size_t>(i)][0], attrs[static_cast<std::size_t>(i)][1]});
    for (const auto& p : proj_train) CHECK(proj_eval.count(p) == 0);

    // reproducibility: the same inputs give the same index lists
    const GcdrSplit rerun = build_color_digit_split(attrs, schema, 1, 2, 60000, opt);
    CHECK(rerun.train == split.train);
    CHECK(rerun.test == split.test);
    CHECK(rerun.val == split.val);

    CHECK_THROWS_AS(build_color_digit_split(attrs, schema, 3, 3, 60000, opt), ValueError);
}

TEST_CASE("tabular split pairs classes with cyclically shifted domains") {
    AttributeSchema schema({{"class", 4}, {"domain", 4}});
    TabularConfig cfg;
    cfg.schema = schema;
    const auto samples = generate_tabular(400, cfg, 21);
    const auto attrs = stack_attrs(samples);
    SplitOptions opt;
    opt.seed = 21;
    const GcdrSplit split = build_tabular_split(attrs, schema, opt);

    CHECK(validate_gcdr(split, schema, attrs).ok());
    CHECK(!split.train.empty());
    CHECK(!split.test.empty());
    CHECK(!split.val.empty());
    for (int i : split.train) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        CHECK(a[1] == ((a[0] - 1) % 4) + 1);
    }
    for (int i : split.eval_indices()) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        CHECK(a[1] == (a[0] % 4) + 1);
    }
}

TEST_CASE("validator rejects constructed violation families") {
    AttributeSchema schema({{"class", 3}, {"bg", 3}});
    // corpus: every (class, bg) combination once
    std::vector<std::vector<int>> attrs;
    for (int c = 1; c <= 3; ++c)
        for (int d = 1; d <= 3; ++d) attrs.push_back({c, d});
    // rows: 0:(1,1) 1:(1,2) 2:(1,3) 3:(2,1) 4:(2,2) 5:(2,3) 6:(3,1) 7:(3,2) 8:(3,3)

    // clean baseline: class c trains in domain c, evaluates in domain c%3+1
    GcdrSplit clean;
    clean.train = {0, 4, 8};
    clean.test = {1, 5};
    clean.val = {6};
    fill_cache(clean, attrs, schema);
    CHECK(validate_gcdr(clean, schema, attrs).ok());

    // family 1: train and eval share an index
    GcdrSplit ix = clean;
    ix.test.push_back(0);
    fill_cache(ix, attrs, schema);
    const auto r1 = validate_gcdr(ix, schema, attrs);
    CHECK_FALSE(r1.ok());
    CHECK(has_issue(r1, "index-overlap"));

    // family 2: a full attribute tuple appears on both sides (distinct corpus
    // rows carrying the same tuple, so only the combination rule is violated)
    GcdrSplit combo = clean;
    attrs.push_back({1, 1});  // row 9 duplicates row 0's tuple
    combo.test = {9};
    combo.val = {};
    fill_cache(combo, attrs, schema);
    const auto r2 = validate_gcdr(combo, schema, attrs);
    CHECK_FALSE(r2.ok());
    CHECK(has_issue(r2, "combination-overlap"));
    CHECK_FALSE(has_issue(r2, "group-overlap"));
    attrs.pop_back();

    // family 3: one class under two domains of a non-sharing attribute,
    // within the training side
    GcdrSplit grp = clean;
    grp.train = {0, 1, 4, 8};  // class 1 under bg 1 and bg 2
    grp.test = {5};            // row 1 moved to train, keep the sides disjoint
    fill_cache(grp, attrs, schema);
    const auto r3 = validate_gcdr(grp, schema, attrs);
    CHECK_FALSE(r3.ok());
    CHECK_FALSE(has_issue(r3, "index-overlap"));
    CHECK_FALSE(has_issue(r3, "combination-overlap"));
    REQUIRE(has_issue(r3, "group-overlap"));
    std::string detail;
    for (const auto& i : r3.issues)
        if (i.check == "group-overlap") detail = i.detail;
    CHECK(detail.find("bg") != std::string::npos);       // attribute name
    CHECK(detail.find("class 1") != std::string::npos);  // offending class
    CHECK(detail.find("1") != std::string::npos);        // both domains
    CHECK(detail.find("2") != std::string::npos);

    // the same pattern on a class-sharing attribute is not a violation
    AttributeSchema sharing({{"class", 3}, {"bg", 3, true}});
    GcdrSplit shared = clean;
    shared.train = {0, 1, 4, 8};
    fill_cache(shared, attrs, sharing);
    CHECK(validate_gcdr(shared, sharing, attrs).ok());

    // out-of-range index short-circuits with a report, not a crash
    GcdrSplit oob = clean;
    oob.train.push_back(99);
    const auto r4 = validate_gcdr(oob, schema, attrs);
    CHECK_FALSE(r4.ok());
    CHECK(has_issue(r4, "index-range"));
}

TEST_CASE("tabular generator is deterministic and respects the causal edge") {
    AttributeSchema schema({{"class", 4}, {"d1", 3}, {"d2", 3}});
    TabularConfig cfg;
    cfg.schema = schema;

    const auto a = generate_tabular(200, cfg, 31);
    const auto b = generate_tabular(200, cfg, 31);
    const auto c = generate_tabular(200, cfg, 32);
    REQUIRE(a.size() == 200);
    CHECK(stack_attrs(a) == stack_attrs(b));
    CHECK(tensors_equal(stack_features(a), stack_features(b)));
    CHECK_FALSE(tensors_equal(stack_features(a), stack_features(c)));
    for (const auto& s : a) {
        schema.check_tuple(s.attrs);
        CHECK(s.x.all_finite());
    }

    CHECK_THROWS_AS(generate_tabular(20, cfg, 31), SizeError);  // 36 combinations
    TabularConfig badedge = cfg;
    badedge.causal_edge = {2, 2};
    CHECK_THROWS_AS(generate_tabular(200, badedge, 31), ValueError);
    badedge.causal_edge = {2, 9};
    CHECK_THROWS_AS(generate_tabular(200, badedge, 31), ValueError);
}

TEST_CASE("domain attributes are independent without an edge and coupled with one") {
    AttributeSchema schema({{"class", 4}, {"d1", 3}, {"d2", 3}});
    TabularConfig cfg;
    cfg.schema = schema;
    const int n = 10000;

    // plug-in mutual information between the two domain attributes
    auto mutual_information = [n](const std::vector<std::vector<int>>& attrs) {
        std::map<std::pair<int, int>, double> joint;
        std::map<int, double> m1, m2;
        for (const auto& a : attrs) {
            joint[{a[1], a[2]}] += 1.0;
            m1[a[1]] += 1.0;
            m2[a[2]] += 1.0;
        }
        double mi = 0.0;
        for (const auto& [uv, cnt] : joint) {
            const double pj = cnt / n;
            const double pu = m1[uv.first] / n;
            const double pv = m2[uv.second] / n;
            mi += pj * std::log(pj / (pu * pv));
        }
        return mi;
    };

    const auto indep = stack_attrs(generate_tabular(n, cfg, 41));
    CHECK(mutual_information(indep) < 0.05);

    // edge: second domain attribute drives the first (70/30 mixture)
    TabularConfig edged = cfg;
    edged.causal_edge = {3, 2};  // cause = d2, effect = d1 (schema positions)
    const auto coupled = stack_attrs(generate_tabular(n, edged, 41));

    // conditional law of d1 given d2 = v vs the d1 marginal, in total variation
    std::map<int, double> marginal;
    std::map<int, std::map<int, double>> cond;
    std::map<int, double> cond_n;
    for (const auto& a : coupled) {
        marginal[a[1]] += 1.0;
        cond[a[2]][a[1]] += 1.0;
        cond_n[a[2]] += 1.0;
    }
    double max_tv = 0.0;
    for (const auto& [v, hist] : cond) {
        double tv = 0.0;
        for (int u = 1; u <= 3; ++u) {
            const double pc = (hist.count(u) ? hist.at(u) : 0.0) / cond_n[v];
            const double pm = marginal[u] / n;
            tv += std::abs(pc - pm);
        }
        max_tv = std::max(max_tv, 0.5 * tv);
    }
    CHECK(max_tv >= 0.2);
    CHECK(mutual_information(coupled) > 0.05);
}

TEST_CASE("manifest round-trips through its file format") {
    AttributeSchema schema({{"class", 4}, {"domain", 4}});
    TabularConfig cfg;
    cfg.schema = schema;
    const auto samples = generate_tabular(400, cfg, 51);
    const auto attrs = stack_attrs(samples);
    SplitOptions opt;
    opt.seed = 51;
    const GcdrSplit split = build_tabular_split(attrs, schema, opt);

    ManifestHeader header;
    header.dataset = "tabular";
    header.schema = schema;
    header.split_seed = 51;
    header.extra["gen_seed"] = "51";
    header.extra["edge"] = "none";
    const Manifest m = make_manifest(header, split, attrs);

    const std::string path = "manifest_roundtrip.tmp";
    write_manifest(path, m);
    const Manifest back = read_manifest(path);

    CHECK(back.header.dataset == "tabular");
    CHECK(back.header.schema.to_string() == schema.to_string());
    CHECK(back.header.split_seed == 51);
    CHECK(back.header.get("gen_seed") == "51");
    CHECK(back.header.get_or("missing", "fallback") == "fallback");
    CHECK_THROWS_AS(back.header.get("missing"), LookupError);

    CHECK(back.split.train == split.train);
    CHECK(back.split.test == split.test);
    CHECK(back.split.val == split.val);
    CHECK(back.split.combos_train == split.combos_train);
    CHECK(back.split.combos_test == split.combos_test);
    CHECK(back.split.groups_train == split.groups_train);
    CHECK(back.split.groups_test == split.groups_test);

    for (int i : split.train) CHECK(back.attrs_of(i) == attrs[static_cast<std::size_t>(i)]);
    CHECK_THROWS_AS(back.attrs_of(100000), LookupError);

    // the reloaded split still satisfies every constraint
    std::vector<std::vector<int>> dense(attrs.size());
    for (std::size_t r = 0; r < back.indices.size(); ++r)
        dense[static_cast<std::size_t>(back.indices[r])] = back.attrs[r];
    for (std::size_t i = 0; i < dense.size(); ++i)
        if (dense[i].empty()) dense[i] = attrs[i];  // unreferenced rows
    CHECK(validate_gcdr(back.split, back.header.schema, dense).ok());
}

TEST_CASE("feature matrix file round-trips") {
    Rng r(61);
    Tensor f({7, 5});
    for (std::int64_t i = 0; i < f.size(); ++i) f.data()[i] = r.uniform_float(-3.0f, 3.0f);
    const std::string path = "features_roundtrip.tmp";
    write_features(path, f);
    CHECK(tensors_equal(read_features(path), f));
    CHECK_THROWS_AS(read_features("does_not_exist.tmp"), FormatError);
}

TEST_CASE("batch stream covers examples") {
    const std::vector<int> idx{10, 11, 12, 13, 14, 15, 16, 17, 18, 19};
    const auto plain = make_batches(idx, 4, 7, 0, false);
    REQUIRE(plain.size() == 3);
    CHECK(plain[0] == std::vector<int>{10, 11, 12, 13});
    CHECK(plain[1] == std::vector<int>{14, 15, 16, 17});
    CHECK(plain[2] == std::vector<int>{18, 19});

    const auto s1 = make_batches(idx, 4, 7, 3, true);
    const auto s2 = make_batches(idx, 4, 7, 3, true);
    CHECK(s1 == s2);
    CHECK(s1 != make_batches(idx, 4, 7, 4, true));
    REQUIRE(s1.size() == 3);
    CHECK(s1[0].size() == 4);
    CHECK(s1[1].size() == 4);
    CHECK(s1[2].size() == 2);

    std::vector<int> flat;
    for (const auto& b : s1) flat.insert(flat.end(), b.begin(), b.end());
    std::sort(flat.begin(), flat.end());
    CHECK(flat == idx);

    CHECK_THROWS_AS(make_batches(idx, 0, 7, 0, true), RangeError);
}

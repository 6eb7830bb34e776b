#include "gcdr/split.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "gcdr/rng.hpp"

namespace gcdr {

namespace {

// Build (attribute, domain) -> class-group map for one side of a split.
std::map<std::pair<int, int>, std::set<int>> side_groups(
    const std::vector<int>& side, const std::vector<std::vector<int>>& attrs,
    const AttributeSchema& schema) {
    std::map<std::pair<int, int>, std::set<int>> groups;
    for (int i : side) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        for (int j = 1; j < schema.count(); ++j) {
            if (schema.at(j).class_sharing) continue;
            groups[{j, a[static_cast<std::size_t>(j)]}].insert(a[0]);
        }
    }
    return groups;
}

std::set<std::vector<int>> side_combos(const std::vector<int>& side,
                                       const std::vector<std::vector<int>>& attrs) {
    std::set<std::vector<int>> combos;
    for (int i : side) combos.insert(attrs[static_cast<std::size_t>(i)]);
    return combos;
}

void check_attr_table(const std::vector<std::vector<int>>& attrs, const AttributeSchema& schema) {
    for (const auto& a : attrs) schema.check_tuple(a);
}

// Move a seeded val_fraction share of `eval` into `val`.
void carve_validation(std::vector<int>& eval, std::vector<int>& val, double val_fraction,
                      std::uint64_t seed) {
    if (val_fraction < 0.0 || val_fraction >= 1.0)
        throw RangeError("split: val_fraction must be in [0,1)");
    const int n_val = static_cast<int>(std::lround(val_fraction * static_cast<double>(eval.size())));
    if (n_val == 0) return;
    std::vector<int> order = eval;
    Rng rng = Rng(seed).fork(0x7a1);
    rng.shuffle(order);
    std::set<int> chosen(order.begin(), order.begin() + n_val);
    std::vector<int> kept;
    kept.reserve(eval.size() - chosen.size());
    for (int i : eval)
        (chosen.count(i) ? val : kept).push_back(i);
    eval = std::move(kept);
}

void finalize_split(GcdrSplit& split, const std::vector<std::vector<int>>& attrs,
                    const AttributeSchema& schema) {
    split.combos_train = side_combos(split.train, attrs);
    std::vector<int> eval_side = split.eval_indices();
    split.combos_test = side_combos(eval_side, attrs);
    split.groups_train = side_groups(split.train, attrs, schema);
    split.groups_test = side_groups(eval_side, attrs, schema);
}

}  // namespace

std::vector<int> GcdrSplit::eval_indices() const {
    std::vector<int> out;
    out.reserve(test.size() + val.size());
    out.insert(out.end(), test.begin(), test.end());
    out.insert(out.end(), val.begin(), val.end());
    std::sort(out.begin(), out.end());
    return out;
}

GcdrSplit build_color_digit_split(const std::vector<std::vector<int>>& attrs,
                                  const AttributeSchema& schema, int bg_a, int bg_b,
                                  int portion_boundary, const SplitOptions& opt) {
    if (schema.count() < 2 || schema.k(0) != 10)
        throw SchemaError("color-digit split: schema must start with a 10-class attribute");
    if (bg_a < 1 || bg_a > schema.k(1) || bg_b < 1 || bg_b > schema.k(1))
        throw RangeError("color-digit split: background indices outside schema range");
    if (bg_a == bg_b) throw ValueError("color-digit split: bg_a and bg_b must differ");
    const int n = static_cast<int>(attrs.size());
    if (portion_boundary < 0 || portion_boundary > n)
        throw RangeError("color-digit split: portion boundary outside [0,n]");
    check_attr_table(attrs, schema);

    GcdrSplit split;
    split.seed = opt.seed;
    std::vector<int> eval_side;
    for (int i = 0; i < n; ++i) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        const bool low_digit = a[0] <= 5;  // classes 1..5
        const int bg = a[1];
        const int train_bg = low_digit ? bg_a : bg_b;
        const int eval_bg = low_digit ? bg_b : bg_a;
        if (i < portion_boundary) {
            if (bg == train_bg) split.train.push_back(i);
        } else {
            if (bg == eval_bg) eval_side.push_back(i);
        }
    }
    split.test = std::move(eval_side);
    carve_validation(split.test, split.val, opt.val_fraction, opt.seed);
    finalize_split(split, attrs, schema);
    return split;
}

GcdrSplit build_tabular_split(const std::vector<std::vector<int>>& attrs,
                              const AttributeSchema& schema, const SplitOptions& opt) {
    if (schema.m() < 1)
        throw SchemaError("tabular split: schema needs at least one domain attribute");
    bool any_grouped = false;
    for (int j = 1; j < schema.count(); ++j)
        if (!schema.at(j).class_sharing) any_grouped = true;
    if (!any_grouped)
        throw SchemaError("tabular split: every domain attribute is class-sharing");
    check_attr_table(attrs, schema);

    GcdrSplit split;
    split.seed = opt.seed;
    std::vector<int> eval_side;
    // Each class is paired with exactly one domain value per side; the test
    // pairing is the train pairing cyclically shifted by one, so the two
    // sides share no tuple and each side's class groups stay disjoint.
    // Samples matching neither pairing are dropped.
    for (int i = 0; i < static_cast<int>(attrs.size()); ++i) {
        const auto& a = attrs[static_cast<std::size_t>(i)];
        bool train_side = true, test_side = true;
        for (int j = 1; j < schema.count(); ++j) {
            if (schema.at(j).class_sharing) continue;
            const int got = a[static_cast<std::size_t>(j)];
            if (got != ((a[0] - 1) % schema.k(j)) + 1) train_side = false;
            if (got != (a[0] % schema.k(j)) + 1) test_side = false;
        }
        if (train_side)
            split.train.push_back(i);
        else if (test_side)
            eval_side.push_back(i);
    }
    split.test = std::move(eval_side);
    carve_validation(split.test, split.val, opt.val_fraction, opt.seed);
    finalize_split(split, attrs, schema);
    return split;
}

// ---- validation ----

std::string ValidationReport::to_string() const {
    std::ostringstream os;
    os << "combinations: " << checked_combos_train << " train, " << checked_combos_test
       << " eval\n";
    if (ok()) {
        os << "all checks passed\n";
    } else {
        for (const auto& issue : issues) os << issue.check << ": " << issue.detail << "\n";
    }
    return os.str();
}

ValidationReport validate_gcdr(const GcdrSplit& split, const AttributeSchema& schema,
                               const std::vector<std::vector<int>>& attrs) {
    ValidationReport report;
    auto issue = [&report](const std::string& check, const std::string& detail) {
        report.issues.push_back({check, detail});
    };

    const int n = static_cast<int>(attrs.size());
    auto check_indices = [&](const std::vector<int>& side, const char* name) {
        for (int i : side)
            if (i < 0 || i >= n)
                issue("index-range", std::string(name) + " index " + std::to_string(i) +
                                         " outside corpus [0," + std::to_string(n) + ")");
    };
    check_indices(split.train, "train");
    check_indices(split.test, "test");
    check_indices(split.val, "val");
    if (!report.ok()) return report;

    // attribute tuples of every referenced sample (unreferenced corpus rows
    // are not the split's concern)
    for (const auto* side : {&split.train, &split.test, &split.val}) {
        for (int i : *side) {
            try {
                schema.check_tuple(attrs[static_cast<std::size_t>(i)]);
            } catch (const ValueError& e) {
                issue("attribute-range", "index " + std::to_string(i) + ": " + e.what());
                return report;
            }
        }
    }

    // pairwise index disjointness
    std::set<int> train_set(split.train.begin(), split.train.end());
    std::set<int> test_set(split.test.begin(), split.test.end());
    std::set<int> val_set(split.val.begin(), split.val.end());
    auto overlap = [&issue](const std::set<int>& a, const std::set<int>& b, const char* what) {
        for (int i : a)
            if (b.count(i)) {
                issue("index-overlap",
                      std::string(what) + " share index " + std::to_string(i));
                return;
            }
    };
    overlap(train_set, test_set, "train/test");
    overlap(train_set, val_set, "train/val");
    overlap(test_set, val_set, "test/val");

    // combination disjointness across sides
    const std::vector<int> eval_side = split.eval_indices();
    const auto train_combos = side_combos(split.train, attrs);
    const auto eval_combos = side_combos(eval_side, attrs);
    report.checked_combos_train = static_cast<int>(train_combos.size());
    report.checked_combos_test = static_cast<int>(eval_combos.size());
    for (const auto& c : train_combos) {
        if (eval_combos.count(c)) {
            std::string tup;
            for (std::size_t j = 0; j < c.size(); ++j)
                tup += (j ? "," : "") + std::to_string(c[j]);
            issue("combination-overlap", "tuple (" + tup + ") appears in both train and eval");
        }
    }

    // class-group disjointness per non-sharing domain attribute, per side
    auto check_groups = [&](const std::vector<int>& side, const char* side_name) {
        const auto groups = side_groups(side, attrs, schema);
        for (int j = 1; j < schema.count(); ++j) {
            if (schema.at(j).class_sharing) continue;
            std::map<int, int> class_to_domain;
            for (const auto& [key, classes] : groups) {
                if (key.first != j) continue;
                for (int cls : classes) {
                    auto [it, inserted] = class_to_domain.emplace(cls, key.second);
                    if (!inserted && it->second != key.second)
                        issue("group-overlap",
                              std::string(side_name) + ": attribute " + std::to_string(j + 1) +
                                  " ('" + schema.at(j).name + "') class " + std::to_string(cls) +
                                  " appears under domains " + std::to_string(it->second) +
                                  " and " + std::to_string(key.second));
                }
            }
        }
    };
    check_groups(split.train, "train");
    check_groups(eval_side, "eval");

    // cached bookkeeping consistent with recomputation
    if (split.combos_train != train_combos)
        issue("bookkeeping", "cached train combination set disagrees with recomputation");
    if (split.combos_test != eval_combos)
        issue("bookkeeping", "cached eval combination set disagrees with recomputation");
    if (split.groups_train != side_groups(split.train, attrs, schema))
        issue("bookkeeping", "cached train class groups disagree with recomputation");
    if (split.groups_test != side_groups(eval_side, attrs, schema))
        issue("bookkeeping", "cached eval class groups disagree with recomputation");

    return report;
}

// ---- manifest ----

std::string ManifestHeader::get(const std::string& key) const {
    auto it = extra.find(key);
    if (it == extra.end()) throw LookupError("manifest: missing header key '" + key + "'");
    return it->second;
}

std::string ManifestHeader::get_or(const std::string& key, const std::string& fallback) const {
    auto it = extra.find(key);
    return it == extra.end() ? fallback : it->second;
}

const std::vector<int>& Manifest::attrs_of(int index) const {
    const auto it = std::lower_bound(indices.begin(), indices.end(), index);
    if (it == indices.end() || *it != index)
        throw LookupError("manifest: index " + std::to_string(index) + " not present");
    return attrs[static_cast<std::size_t>(it - indices.begin())];
}

Manifest make_manifest(ManifestHeader header, const GcdrSplit& split,
                       const std::vector<std::vector<int>>& attrs) {
    Manifest m;
    m.header = std::move(header);
    m.split = split;
    std::vector<std::pair<int, int>> role_of;  // (index, 0 train / 1 test / 2 val)
    for (int i : split.train) role_of.emplace_back(i, 0);
    for (int i : split.test) role_of.emplace_back(i, 1);
    for (int i : split.val) role_of.emplace_back(i, 2);
    std::sort(role_of.begin(), role_of.end());
    m.indices.reserve(role_of.size());
    m.attrs.reserve(role_of.size());
    for (const auto& [idx, role] : role_of) {
        (void)role;
        m.indices.push_back(idx);
        m.attrs.push_back(attrs[static_cast<std::size_t>(idx)]);
    }
    return m;
}

void write_manifest(const std::string& path, const Manifest& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write manifest: " + path);
    out << "# gcdr-split\tv1\n";
    out << "# dataset\t" << m.header.dataset << "\n";
    out << "# schema\t" << m.header.schema.to_string() << "\n";
    out << "# split_seed\t" << m.header.split_seed << "\n";
    for (const auto& [k, v] : m.header.extra) out << "# " << k << "\t" << v << "\n";

    std::map<int, const char*> role;
    for (int i : m.split.train) role[i] = "train";
    for (int i : m.split.test) role[i] = "test";
    for (int i : m.split.val) role[i] = "val";
    if (role.size() != m.indices.size())
        throw ValueError("manifest: split membership disagrees with row table");
    for (std::size_t row = 0; row < m.indices.size(); ++row) {
        const int idx = m.indices[row];
        auto it = role.find(idx);
        if (it == role.end()) throw ValueError("manifest: row index missing from split");
        out << idx << "\t" << it->second << "\t";
        const auto& a = m.attrs[row];
        for (std::size_t j = 0; j < a.size(); ++j) out << (j ? "," : "") << a[j];
        out << "\n";
    }
    if (!out) throw FormatError("manifest write failed: " + path);
}

Manifest read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open manifest: " + path);
    Manifest m;
    bool saw_magic = false, saw_schema = false;
    std::string line;
    int lineno = 0;
    std::vector<std::pair<int, int>> rows;  // (index, role)
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = "manifest line " + std::to_string(lineno);
        if (line[0] == '#') {
            std::string body = line.substr(1);
            if (!body.empty() && body[0] == ' ') body.erase(0, 1);
            const auto tab = body.find('\t');
            if (tab == std::string::npos) throw FormatError(where + ": malformed header");
            const std::string key = body.substr(0, tab);
            const std::string value = body.substr(tab + 1);
            if (key == "gcdr-split") {
                if (value != "v1") throw FormatError(where + ": unsupported version '" + value + "'");
                saw_magic = true;
            } else if (key == "dataset") {
                m.header.dataset = value;
            } else if (key == "schema") {
                m.header.schema = AttributeSchema::from_string(value);
                saw_schema = true;
            } else if (key == "split_seed") {
                m.header.split_seed = std::stoull(value);
            } else {
                m.header.extra[key] = value;
            }
            continue;
        }
        if (!saw_magic) throw FormatError("manifest: missing '# gcdr-split' header");
        if (!saw_schema) throw FormatError("manifest: schema header must precede rows");
        std::istringstream row(line);
        std::string idx_s, role_s, attrs_s;
        if (!std::getline(row, idx_s, '\t') || !std::getline(row, role_s, '\t') ||
            !std::getline(row, attrs_s))
            throw FormatError(where + ": want index<TAB>role<TAB>attributes");
        int idx = 0;
        try {
            std::size_t pos = 0;
            idx = std::stoi(idx_s, &pos);
            if (pos != idx_s.size()) throw std::invalid_argument("");
        } catch (const std::exception&) {
            throw FormatError(where + ": bad index '" + idx_s + "'");
        }
        int role;
        if (role_s == "train")
            role = 0;
        else if (role_s == "test")
            role = 1;
        else if (role_s == "val")
            role = 2;
        else
            throw FormatError(where + ": unknown role '" + role_s + "'");
        std::vector<int> tuple;
        std::stringstream as(attrs_s);
        std::string item;
        while (std::getline(as, item, ',')) {
            try {
                std::size_t pos = 0;
                tuple.push_back(std::stoi(item, &pos));
                if (pos != item.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw FormatError(where + ": bad attribute value '" + item + "'");
            }
        }
        try {
            m.header.schema.check_tuple(tuple);
        } catch (const ValueError& e) {
            throw FormatError(where + ": " + e.what());
        }
        rows.emplace_back(idx, role);
        m.indices.push_back(idx);
        m.attrs.push_back(std::move(tuple));
        switch (role) {
            case 0: m.split.train.push_back(idx); break;
            case 1: m.split.test.push_back(idx); break;
            default: m.split.val.push_back(idx); break;
        }
    }
    if (!saw_magic) throw FormatError("manifest: missing '# gcdr-split' header");
    if (m.indices.empty()) throw EmptinessError("manifest: no rows");
    for (std::size_t i = 1; i < m.indices.size(); ++i)
        if (m.indices[i] <= m.indices[i - 1])
            throw FormatError("manifest: row indices must be strictly increasing");
    m.split.seed = m.header.split_seed;

    // rebuild bookkeeping from rows (manifest indices are corpus indices, but
    // the attrs table here covers only manifest rows: map index -> row)
    std::vector<std::vector<int>> dense;
    const int max_index = m.indices.back();
    dense.resize(static_cast<std::size_t>(max_index) + 1);
    for (std::size_t i = 0; i < m.indices.size(); ++i)
        dense[static_cast<std::size_t>(m.indices[i])] = m.attrs[i];
    GcdrSplit& s = m.split;
    s.combos_train = side_combos(s.train, dense);
    s.combos_test = side_combos(s.eval_indices(), dense);
    s.groups_train = side_groups(s.train, dense, m.header.schema);
    s.groups_test = side_groups(s.eval_indices(), dense, m.header.schema);
    return m;
}

}  // namespace gcdr

#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gcdr/dataset.hpp"

namespace gcdr {

// Index-level description of a train/test partition satisfying the
// disjoint-combination recognition constraints:
//   * no attribute tuple appears on both sides (C_train ∩ C_eval = ∅, where
//     eval = test ∪ val)
//   * for every non-class-sharing domain attribute, the class groups attached
//     to its domain values are pairwise disjoint, separately within the train
//     side and within the eval side.
// `val` holds indices moved out of the test side for model selection; train,
// test and val are pairwise disjoint.
struct GcdrSplit {
    std::vector<int> train, test, val;
    std::set<std::vector<int>> combos_train, combos_test;
    // (attribute j [0-based, >= 1], domain value) -> class values present
    std::map<std::pair<int, int>, std::set<int>> groups_train, groups_test;
    std::uint64_t seed = 0;

    std::vector<int> eval_indices() const;  // test ∪ val, ascending
};

struct SplitOptions {
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
};

// Colored-digit split. Corpus indices below `portion_boundary` form the
// candidate pool for training, the rest for evaluation. Digit classes 1..5
// pair with background bg_a and classes 6..10 with bg_b on the train side;
// the eval side uses the swapped pairing; everything else is dropped.
// Foreground is class-sharing and unconstrained. A seeded val_fraction share
// of the eval side is moved to validation.
GcdrSplit build_color_digit_split(const std::vector<std::vector<int>>& attrs,
                                  const AttributeSchema& schema, int bg_a, int bg_b,
                                  int portion_boundary, const SplitOptions& opt);

// Tabular split: for every non-class-sharing domain attribute j, class y
// trains in domain ((y-1) mod k_j) + 1 and is tested in the cyclically
// shifted domain (y mod k_j) + 1; tuples matching neither pairing on every
// such attribute are dropped.
GcdrSplit build_tabular_split(const std::vector<std::vector<int>>& attrs,
                              const AttributeSchema& schema, const SplitOptions& opt);

// ---- validation ----

struct ValidationIssue {
    std::string check;   // "index-overlap" | "combination-overlap" | "group-overlap" | ...
    std::string detail;  // names the offending attribute / class / domains
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;
    int checked_combos_train = 0;
    int checked_combos_test = 0;
    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

// Re-derives every constraint from (attrs, split membership); the split's own
// cached combo/group fields are cross-checked too.
ValidationReport validate_gcdr(const GcdrSplit& split, const AttributeSchema& schema,
                               const std::vector<std::vector<int>>& attrs);

// ---- split manifest (TSV) ----

// Header lines `# key<TAB>value`, then `index<TAB>role<TAB>a_1,...,a_{m+1}`
// rows (roles: train/test/val; val rows also count as test).
struct ManifestHeader {
    std::string dataset;                       // "color-digits" | "tabular"
    AttributeSchema schema;
    std::uint64_t split_seed = 0;
    std::map<std::string, std::string> extra;  // generator settings, palette, ...

    std::string get(const std::string& key) const;                  // LookupError if absent
    std::string get_or(const std::string& key, const std::string& fallback) const;
};

struct Manifest {
    ManifestHeader header;
    GcdrSplit split;
    std::vector<int> indices;                  // all indices mentioned, ascending
    std::vector<std::vector<int>> attrs;       // attrs[i] belongs to indices[i]
    const std::vector<int>& attrs_of(int index) const;  // LookupError if absent
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

// Build a manifest in memory from split + full attribute table.
Manifest make_manifest(ManifestHeader header, const GcdrSplit& split,
                       const std::vector<std::vector<int>>& attrs);

}  // namespace gcdr

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gcdr/config.hpp"
#include "gcdr/split.hpp"
#include "gcdr/tabular.hpp"
#include "gcdr/training.hpp"

namespace gcdr {

// Full argv-level entry point: `gcdr <command> [--config FILE] [--key value]...`
// Commands: generate, train, ablate, curve, validate, help. Library errors are
// reported on stderr; the exit code is 0 only when the command succeeded and
// every requested validation passed.
int run_cli(const std::vector<std::string>& args);

int cmd_generate(const RunConfig& cfg);
int cmd_train(const RunConfig& cfg);
int cmd_ablate(const RunConfig& cfg);
int cmd_curve(const RunConfig& cfg);
int cmd_validate(const RunConfig& cfg);

const std::vector<KeyDoc>& keys_generate();
const std::vector<KeyDoc>& keys_train();
const std::vector<KeyDoc>& keys_ablate();
const std::vector<KeyDoc>& keys_curve();
const std::vector<KeyDoc>& keys_validate();

std::string cli_help();

// A dataset reconstructed from a split manifest: the backing storage plus a
// non-owning DatasetView over it. Keep the struct alive while the view is.
struct LoadedDataset {
    Manifest manifest;
    ColorDigitCorpus corpus;                  // color-digits datasets
    Tensor features;                          // tabular datasets
    std::vector<std::vector<int>> attrs;      // dense, by corpus index
    bool is_tabular = false;

    DatasetView view() const;
    const GcdrSplit& split() const { return manifest.split; }
    const AttributeSchema& schema() const { return manifest.header.schema; }
};

std::unique_ptr<LoadedDataset> load_dataset(const std::string& manifest_path);

// Output root: --out_dir / config, else $GCDR_OUT_ROOT, else ./gcdr-out.
std::string resolve_out_dir(const RunConfig& cfg);

}  // namespace gcdr

#pragma once

#include <string>
#include <vector>

namespace gcdr {

// One metrics record. Serialized as
//   run_id,variant,stage,epoch,split,metric,value
// with `value` printed as %.6f and LF line endings, so identical runs produce
// byte-identical files.
struct CsvRow {
    std::string run_id;
    std::string variant;
    int stage = 1;
    int epoch = 0;
    std::string split;
    std::string metric;
    double value = 0.0;
};

void write_metrics_csv(const std::string& path, const std::vector<CsvRow>& rows);
std::vector<CsvRow> read_metrics_csv(const std::string& path);  // FormatError on bad rows

}  // namespace gcdr

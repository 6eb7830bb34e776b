#include "gcdr/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "gcdr/errors.hpp"

namespace gcdr {

namespace {

constexpr const char* kHeader = "run_id,variant,stage,epoch,split,metric,value";

void check_field(const std::string& field, const char* what) {
    for (char c : field)
        if (c == ',' || c == '\n' || c == '\r')
            throw FormatError(std::string("metrics csv: ") + what +
                              " may not contain commas or line breaks: '" + field + "'");
}

int parse_int_field(const std::string& v, const char* what, const std::string& path, int line) {
    std::size_t pos = 0;
    int out = 0;
    try {
        out = std::stoi(v, &pos);
    } catch (const std::exception&) {
        pos = std::string::npos;
    }
    if (pos != v.size())
        throw FormatError(path + ":" + std::to_string(line) + ": bad " + what + " '" + v + "'");
    return out;
}

}  // namespace

void write_metrics_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    std::ofstream out(path, std::ios::binary);  // binary: LF endings everywhere
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << kHeader << "\n";
    char value[64];
    for (const auto& r : rows) {
        check_field(r.run_id, "run id");
        check_field(r.variant, "variant");
        check_field(r.split, "split");
        check_field(r.metric, "metric");
        std::snprintf(value, sizeof(value), "%.6f", r.value);
        out << r.run_id << ',' << r.variant << ',' << r.stage << ',' << r.epoch << ','
            << r.split << ',' << r.metric << ',' << value << "\n";
    }
    if (!out) throw FormatError("write failure on '" + path + "'");
}

std::vector<CsvRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw FormatError(path + ": unexpected header '" + line + "'");
    std::vector<CsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 7)
            throw FormatError(path + ":" + std::to_string(line_no) + ": expected 7 fields, got " +
                              std::to_string(fields.size()));
        CsvRow r;
        r.run_id = fields[0];
        r.variant = fields[1];
        r.stage = parse_int_field(fields[2], "stage", path, line_no);
        r.epoch = parse_int_field(fields[3], "epoch", path, line_no);
        r.split = fields[4];
        r.metric = fields[5];
        std::size_t pos = 0;
        try {
            r.value = std::stod(fields[6], &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != fields[6].size())
            throw FormatError(path + ":" + std::to_string(line_no) + ": bad value '" + fields[6] +
                              "'");
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace gcdr

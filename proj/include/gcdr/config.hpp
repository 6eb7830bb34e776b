#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gcdr {

// One documented config key: name, default shown in help ("" = none), doc.
struct KeyDoc {
    std::string key;
    std::string default_value;
    std::string doc;
};

// Flat `key = value` run configuration. Sources, in increasing precedence:
// built-in defaults (per command), config file, command-line `--key value`
// overrides. Keys outside the command's documented set are rejected.
class RunConfig {
public:
    static RunConfig load(const std::optional<std::string>& config_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides,
                          const std::vector<KeyDoc>& allowed);

    bool has(const std::string& key) const;

    std::string str(const std::string& key) const;  // ConfigError when absent
    std::string str_or(const std::string& key, const std::string& fallback) const;
    std::int64_t int_or(const std::string& key, std::int64_t fallback) const;
    double num_or(const std::string& key, double fallback) const;
    bool bool_or(const std::string& key, bool fallback) const;  // true/false/1/0
    std::uint64_t seed() const;                     // mandatory

    // "key = value" lines, sorted by key: the fully resolved configuration.
    std::string echo() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::int64_t parse_int(const std::string& key) const;
    double parse_num(const std::string& key) const;

    std::map<std::string, std::string> values_;
};

// Parse one comma-separated list of integers ("1,5,30"); ConfigError naming
// `what` on bad syntax.
std::vector<int> parse_int_list(const std::string& text, const std::string& what);

// Parse causal edges "2>1" or "2>1;3>2" (cause>effect, 1-based).
std::vector<std::pair<int, int>> parse_edge_list(const std::string& text);

}  // namespace gcdr

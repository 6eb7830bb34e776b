#include "gcdr/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "gcdr/errors.hpp"

namespace gcdr {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool key_ok(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return true;
}

}  // namespace

RunConfig RunConfig::load(const std::optional<std::string>& config_path,
                          const std::vector<std::pair<std::string, std::string>>& overrides,
                          const std::vector<KeyDoc>& allowed) {
    std::set<std::string> known;
    RunConfig cfg;
    for (const auto& kd : allowed) {
        known.insert(kd.key);
        if (!kd.default_value.empty()) cfg.values_[kd.key] = kd.default_value;
    }

    if (config_path) {
        std::ifstream in(*config_path);
        if (!in) throw ConfigError("cannot open config file '" + *config_path + "'");
        std::string line;
        int line_no = 0;
        std::set<std::string> seen;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string stripped = trim(line);
            if (stripped.empty() || stripped[0] == '#') continue;
            const std::size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError(*config_path + ":" + std::to_string(line_no) +
                                  ": expected 'key = value'");
            const std::string key = trim(stripped.substr(0, eq));
            const std::string value = trim(stripped.substr(eq + 1));
            if (!key_ok(key))
                throw ConfigError(*config_path + ":" + std::to_string(line_no) +
                                  ": malformed key '" + key + "'");
            if (!known.count(key))
                throw ConfigError(*config_path + ":" + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
            if (!seen.insert(key).second)
                throw ConfigError(*config_path + ":" + std::to_string(line_no) +
                                  ": duplicate key '" + key + "'");
            cfg.values_[key] = value;
        }
    }

    for (const auto& [key, value] : overrides) {
        if (!key_ok(key)) throw ConfigError("malformed option key '" + key + "'");
        if (!known.count(key)) throw ConfigError("unknown option '--" + key + "'");
        cfg.values_[key] = value;
    }
    return cfg;
}

bool RunConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string RunConfig::str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required setting '" + key + "'");
    return it->second;
}

std::string RunConfig::str_or(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t RunConfig::parse_int(const std::string& key) const {
    const std::string v = str(key);
    std::size_t pos = 0;
    std::int64_t out = 0;
    try {
        out = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': expected an integer, got '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("setting '" + key + "': expected an integer, got '" + v + "'");
    return out;
}

double RunConfig::parse_num(const std::string& key) const {
    const std::string v = str(key);
    std::size_t pos = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("setting '" + key + "': expected a number, got '" + v + "'");
    }
    if (pos != v.size())
        throw ConfigError("setting '" + key + "': expected a number, got '" + v + "'");
    return out;
}

std::int64_t RunConfig::int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? parse_int(key) : fallback;
}

double RunConfig::num_or(const std::string& key, double fallback) const {
    return has(key) ? parse_num(key) : fallback;
}

bool RunConfig::bool_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("setting '" + key + "': expected true/false/1/0, got '" + v + "'");
}

std::uint64_t RunConfig::seed() const {
    if (!has("seed")) throw ConfigError("missing required setting 'seed'");
    const std::string v = str("seed");
    std::size_t pos = 0;
    std::uint64_t out = 0;
    try {
        out = std::stoull(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("setting 'seed': expected a non-negative integer, got '" + v + "'");
    }
    if (pos != v.size() || (!v.empty() && v[0] == '-'))
        throw ConfigError("setting 'seed': expected a non-negative integer, got '" + v + "'");
    return out;
}

std::string RunConfig::echo() const {
    std::ostringstream out;
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
    return out.str();
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string v = trim(item);
        std::size_t pos = 0;
        int n = 0;
        try {
            n = std::stoi(v, &pos);
        } catch (const std::exception&) {
            throw ConfigError(what + ": expected a comma-separated integer list, got '" + text +
                              "'");
        }
        if (pos != v.size())
            throw ConfigError(what + ": expected a comma-separated integer list, got '" + text +
                              "'");
        out.push_back(n);
    }
    if (out.empty())
        throw ConfigError(what + ": expected a comma-separated integer list, got '" + text + "'");
    return out;
}

std::vector<std::pair<int, int>> parse_edge_list(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    if (trim(text).empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const std::string v = trim(item);
        const std::size_t gt = v.find('>');
        if (gt == std::string::npos)
            throw ConfigError("causal edges: expected 'cause>effect' entries, got '" + v + "'");
        const std::string a = trim(v.substr(0, gt));
        const std::string b = trim(v.substr(gt + 1));
        std::size_t pa = 0, pb = 0;
        int cause = 0, effect = 0;
        try {
            cause = std::stoi(a, &pa);
            effect = std::stoi(b, &pb);
        } catch (const std::exception&) {
            throw ConfigError("causal edges: expected 'cause>effect' entries, got '" + v + "'");
        }
        if (pa != a.size() || pb != b.size() || cause < 1 || effect < 1 || cause == effect)
            throw ConfigError("causal edges: expected distinct 1-based 'cause>effect', got '" +
                              v + "'");
        out.emplace_back(cause, effect);
    }
    return out;
}

}  // namespace gcdr

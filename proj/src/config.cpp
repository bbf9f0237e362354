#include "pcfc/config.hpp"

#include "pcfc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace pcfc {

namespace {

std::string trim(std::string s) {
    const auto ws = " \t\r\n";
    const auto b = s.find_first_not_of(ws);
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_scalar(const std::string& key, const std::string& text) {
    T v{};
    const std::string t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw ConfigError("key '" + key + "': cannot parse '" + t + "'");
    return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text) {
    std::vector<T> out;
    std::istringstream ls(text);
    std::string item;
    while (std::getline(ls, item, ',')) out.push_back(parse_scalar<T>(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < v.size(); ++i) out << (i ? ", " : "") << v[i];
    return out.str();
}

using Setter = std::function<void(Config&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"window_px", [](Config& c, auto& k, auto& v) { c.window_px = parse_scalar<int>(k, v); }},
        {"divisions", [](Config& c, auto& k, auto& v) { c.divisions = parse_scalar<int>(k, v); }},
        {"vf", [](Config& c, auto& k, auto& v) { c.vf = parse_scalar<double>(k, v); }},
        {"radius_px", [](Config& c, auto& k, auto& v) { c.radius_px = parse_scalar<double>(k, v); }},
        {"min_gap_px", [](Config& c, auto& k, auto& v) { c.min_gap_px = parse_scalar<double>(k, v); }},
        {"grid_m", [](Config& c, auto& k, auto& v) { c.grid_m = parse_scalar<int>(k, v); }},
        {"amplitude_psi", [](Config& c, auto& k, auto& v) { c.amplitude_psi = parse_scalar<double>(k, v); }},
        {"alpha", [](Config& c, auto& k, auto& v) { c.alpha = parse_list<double>(k, v); }},
        {"epsilon", [](Config& c, auto& k, auto& v) { c.epsilon = parse_scalar<double>(k, v); }},
        {"k", [](Config& c, auto& k, auto& v) { c.k = parse_list<std::size_t>(k, v); }},
        {"split", [](Config& c, auto& k, auto& v) { c.split = parse_scalar<double>(k, v); }},
        {"seeds", [](Config& c, auto& k, auto& v) { c.seeds = parse_list<std::uint64_t>(k, v); }},
        {"validation_seed", [](Config& c, auto& k, auto& v) { c.validation_seed = parse_scalar<std::uint64_t>(k, v); }},
        {"split_seed", [](Config& c, auto& k, auto& v) { c.split_seed = parse_scalar<std::uint64_t>(k, v); }},
        {"perturb_seed", [](Config& c, auto& k, auto& v) { c.perturb_seed = parse_scalar<std::uint64_t>(k, v); }},
        {"threads", [](Config& c, auto& k, auto& v) { c.threads = parse_scalar<unsigned>(k, v); }},
        {"min_accuracy", [](Config& c, auto& k, auto& v) { c.min_accuracy = parse_scalar<double>(k, v); }},
        {"converge_windows", [](Config& c, auto& k, auto& v) { c.converge_windows = parse_list<int>(k, v); }},
        {"converge_divisions", [](Config& c, auto& k, auto& v) { c.converge_divisions = parse_list<int>(k, v); }},
        {"converge_models", [](Config& c, auto& k, auto& v) { c.converge_models = parse_scalar<int>(k, v); }},
    };
    return table;
}

void require(bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(std::string("key '") + key + "': " + what);
}

}  // namespace

void Config::validate() const {
    require(window_px > 0, "window_px", "must be positive");
    require(divisions >= 2, "divisions", "must be >= 2");
    require(vf >= 0.0 && vf < 1.0, "vf", "must lie in [0, 1)");
    require(radius_px >= 1.0, "radius_px", "must be >= 1");
    require(min_gap_px >= 0.0, "min_gap_px", "must be >= 0");
    require(grid_m >= 3 && grid_m % 2 == 1, "grid_m", "must be an odd integer >= 3");
    require(amplitude_psi > 0.0, "amplitude_psi", "must be positive");
    require(!alpha.empty(), "alpha", "must not be empty");
    for (double a : alpha) require(a > 0.0 && a < 1.0, "alpha", "values must lie in (0, 1)");
    require(epsilon >= 0.0, "epsilon", "must be >= 0");
    require(!k.empty(), "k", "must not be empty");
    for (auto v : k) require(v >= 1, "k", "values must be positive");
    require(split > 0.0 && split < 1.0, "split", "must lie in (0, 1)");
    require(!seeds.empty(), "seeds", "must not be empty");
    std::set<std::uint64_t> uniq(seeds.begin(), seeds.end());
    require(uniq.size() == seeds.size(), "seeds", "must be distinct");
    require(min_accuracy >= 0.0 && min_accuracy <= 100.0, "min_accuracy", "must lie in [0, 100]");
    for (int w : converge_windows) require(w > 0, "converge_windows", "values must be positive");
    for (int d : converge_divisions) require(d >= 2, "converge_divisions", "values must be >= 2");
    require(converge_models >= 1, "converge_models", "must be >= 1");
}

Config parse_config(std::istream& in) {
    Config c;
    std::set<std::string> seen;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters().find(key);
        if (it == setters().end())
            throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (!seen.insert(key).second)
            throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        try {
            it->second(c, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

Config load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    return parse_config(in);
}

std::string to_text(const Config& c) {
    std::ostringstream out;
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    out << "window_px = " << c.window_px << '\n'
        << "divisions = " << c.divisions << '\n'
        << "vf = " << c.vf << '\n'
        << "radius_px = " << c.radius_px << '\n'
        << "min_gap_px = " << c.min_gap_px << '\n'
        << "grid_m = " << c.grid_m << '\n'
        << "amplitude_psi = " << c.amplitude_psi << '\n'
        << "alpha = " << join(c.alpha) << '\n'
        << "epsilon = " << c.epsilon << '\n'
        << "k = " << join(c.k) << '\n'
        << "split = " << c.split << '\n'
        << "seeds = " << join(c.seeds) << '\n'
        << "validation_seed = " << c.validation_seed << '\n'
        << "split_seed = " << c.split_seed << '\n'
        << "perturb_seed = " << c.perturb_seed << '\n'
        << "threads = " << c.threads << '\n'
        << "min_accuracy = " << c.min_accuracy << '\n'
        << "converge_windows = " << join(c.converge_windows) << '\n'
        << "converge_divisions = " << join(c.converge_divisions) << '\n'
        << "converge_models = " << c.converge_models << '\n';
    return out.str();
}

}  // namespace pcfc

#include "maneuverlab/config.hpp"

#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "maneuverlab/error.hpp"

namespace mlab {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    errno = 0;
    const double d = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
    }
    return d;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    const std::string t = trim(v);
    char* end = nullptr;
    errno = 0;
    const unsigned long long u = std::strtoull(t.c_str(), &end, 10);
    if (t.empty() || t[0] == '-' || end != t.c_str() + t.size() || errno == ERANGE) {
        throw ConfigError("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    }
    return u;
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

Setter size_field(std::size_t TrainConfig::*f) {
    return [f](TrainConfig& c, const std::string& k, const std::string& v) { c.*f = parse_uint(k, v); };
}

Setter double_field(double TrainConfig::*f) {
    return [f](TrainConfig& c, const std::string& k, const std::string& v) { c.*f = parse_double(k, v); };
}

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table{
        {"window", size_field(&TrainConfig::window)},
        {"repr_size", size_field(&TrainConfig::repr_size)},
        {"global_size", size_field(&TrainConfig::global_size)},
        {"lr", double_field(&TrainConfig::lr)},
        {"batch", size_field(&TrainConfig::batch)},
        {"epochs", size_field(&TrainConfig::epochs)},
        {"pu_weight", double_field(&TrainConfig::pu_weight)},
        {"reg_weight", double_field(&TrainConfig::reg_weight)},
        {"kl_weight", double_field(&TrainConfig::kl_weight)},
        {"adf_threshold", double_field(&TrainConfig::adf_threshold)},
        {"priors", [](TrainConfig& c, const std::string&, const std::string& v) { c.priors = split_list(v); }},
        {"prior_scales",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             c.prior_scales.clear();
             for (const auto& item : split_list(v)) {
                 c.prior_scales.push_back(parse_double(k, item));
             }
         }},
        {"seed", [](TrainConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); }},
        {"neighborhood_cap", size_field(&TrainConfig::neighborhood_cap)},
        {"tuples_per_anchor", size_field(&TrainConfig::tuples_per_anchor)},
        {"kernel_size", size_field(&TrainConfig::kernel_size)},
        {"conv_widths",
         [](TrainConfig& c, const std::string& k, const std::string& v) {
             const auto items = split_list(v);
             if (items.size() != 3) {
                 throw ConfigError("config: 'conv_widths' expects three comma-separated integers");
             }
             for (std::size_t i = 0; i < 3; ++i) {
                 c.conv_widths[i] = parse_uint(k, items[i]);
             }
         }},
        {"decoder_hidden", size_field(&TrainConfig::decoder_hidden)},
        {"disc_hidden", size_field(&TrainConfig::disc_hidden)},
        {"dropout", double_field(&TrainConfig::dropout)},
        {"train_split", double_field(&TrainConfig::train_split)},
        {"label_window", size_field(&TrainConfig::label_window)},
        {"probe_epochs", size_field(&TrainConfig::probe_epochs)},
        {"clusters", size_field(&TrainConfig::clusters)},
    };
    return table;
}

const std::map<std::string, std::string>& aliases() {
    static const std::map<std::string, std::string> table{
        {"W_t", "window"}, {"M", "repr_size"},  {"m", "global_size"}, {"kappa", "batch"},
        {"w_t", "pu_weight"}, {"lambda", "reg_weight"}, {"B", "kl_weight"}, {"ADF", "adf_threshold"},
    };
    return table;
}

std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        os << (i ? "," : "") << v[i];
    }
    return os.str();
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) {
            k.push_back(name);
        }
        return k;
    }();
    return keys;
}

void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value) {
    std::string name = trim(key);
    if (auto it = aliases().find(name); it != aliases().end()) {
        name = it->second;
    }
    for (const auto& [k, set] : setters()) {
        if (k == name) {
            set(cfg, k, trim(value));
            return;
        }
    }
    std::string valid;
    for (const auto& k : config_keys()) {
        valid += (valid.empty() ? "" : ", ") + k;
    }
    throw ConfigError("config: unknown key '" + name + "'; valid keys: " + valid);
}

void apply_config_text(TrainConfig& cfg, const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
        }
        apply_config_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    }
}

void TrainConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
    if (window == 0 || repr_size == 0 || global_size == 0 || batch == 0) {
        fail("window, repr_size, global_size and batch must be positive");
    }
    if (global_size > repr_size) {
        fail("global_size (m) must not exceed repr_size (M)");
    }
    if (!(lr > 0.0)) {
        fail("lr must be positive");
    }
    if (!(kl_weight >= 0.0 && kl_weight <= 1.0)) {
        fail("kl_weight (B) must be in [0, 1]");
    }
    if (!(pu_weight >= 0.0 && pu_weight <= 1.0)) {
        fail("pu_weight (w_t) must be in [0, 1]");
    }
    if (!(reg_weight >= 0.0)) {
        fail("reg_weight (lambda) must be non-negative");
    }
    if (!(adf_threshold > 0.0 && adf_threshold < 1.0)) {
        fail("adf_threshold must be in (0, 1)");
    }
    if (priors.empty() || prior_scales.empty()) {
        fail("priors and prior_scales must be non-empty");
    }
    for (const auto& p : priors) {
        if (p != "RBF" && p != "Matern32") {
            fail("unknown prior kernel '" + p + "' (expected RBF or Matern32)");
        }
    }
    for (double s : prior_scales) {
        if (!(s > 0.0)) {
            fail("prior scales must be positive");
        }
    }
    if (repr_size < priors.size() * prior_scales.size()) {
        fail("repr_size must be at least the number of priors (kernels x scales)");
    }
    if (kernel_size == 0 || conv_widths[0] == 0 || conv_widths[1] == 0 || conv_widths[2] == 0) {
        fail("kernel_size and conv_widths must be positive");
    }
    if (1 + (kernel_size - 1) * 7 > window) {
        fail("encoder receptive field exceeds the window");
    }
    if (tuples_per_anchor == 0) {
        fail("tuples_per_anchor must be positive");
    }
    if (decoder_hidden == 0 || disc_hidden == 0) {
        fail("hidden sizes must be positive");
    }
    if (!(dropout >= 0.0 && dropout < 1.0)) {
        fail("dropout must be in [0, 1)");
    }
    if (!(train_split > 0.0 && train_split < 1.0)) {
        fail("train_split must be in (0, 1)");
    }
    if (label_window == 0 || clusters == 0) {
        fail("label_window and clusters must be positive");
    }
}

std::string TrainConfig::to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "window=" << window << '\n'
       << "repr_size=" << repr_size << '\n'
       << "global_size=" << global_size << '\n'
       << "lr=" << lr << '\n'
       << "batch=" << batch << '\n'
       << "epochs=" << epochs << '\n'
       << "pu_weight=" << pu_weight << '\n'
       << "reg_weight=" << reg_weight << '\n'
       << "kl_weight=" << kl_weight << '\n'
       << "adf_threshold=" << adf_threshold << '\n';
    os << "priors=";
    for (std::size_t i = 0; i < priors.size(); ++i) {
        os << (i ? "," : "") << priors[i];
    }
    os << '\n'
       << "prior_scales=" << join_doubles(prior_scales) << '\n'
       << "seed=" << seed << '\n'
       << "neighborhood_cap=" << neighborhood_cap << '\n'
       << "tuples_per_anchor=" << tuples_per_anchor << '\n'
       << "kernel_size=" << kernel_size << '\n'
       << "conv_widths=" << conv_widths[0] << ',' << conv_widths[1] << ',' << conv_widths[2] << '\n'
       << "decoder_hidden=" << decoder_hidden << '\n'
       << "disc_hidden=" << disc_hidden << '\n'
       << "dropout=" << dropout << '\n'
       << "train_split=" << train_split << '\n'
       << "label_window=" << label_window << '\n'
       << "probe_epochs=" << probe_epochs << '\n'
       << "clusters=" << clusters << '\n';
    return os.str();
}

void write_config_meta(std::map<std::string, std::string>& meta, const TrainConfig& cfg) {
    std::istringstream in(cfg.to_text());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        meta["config." + line.substr(0, eq)] = line.substr(eq + 1);
    }
}

TrainConfig load_config(const std::optional<std::filesystem::path>& path,
                        const std::vector<std::pair<std::string, std::string>>& overrides) {
    TrainConfig cfg;
    if (const char* env = std::getenv("MANEUVERLAB_SEED"); env && *env) {
        cfg.seed = parse_uint("MANEUVERLAB_SEED", env);
    }
    if (path) {
        std::ifstream in(*path);
        if (!in) {
            throw ConfigError("config: cannot open " + path->string());
        }
        std::stringstream buf;
        buf << in.rdbuf();
        apply_config_text(cfg, buf.str());
    }
    for (const auto& [k, v] : overrides) {
        apply_config_value(cfg, k, v);
    }
    cfg.validate();
    return cfg;
}

}  // namespace mlab

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace mlab {

/// Training and evaluation hyper-parameters shared by both frameworks.
struct TrainConfig {
    std::size_t window = 19;          // W_t
    std::size_t repr_size = 16;       // M
    std::size_t global_size = 2;      // m
    double lr = 0.001;
    std::size_t batch = 5;            // kappa
    std::size_t epochs = 30;
    double pu_weight = 0.05;          // w_t
    double reg_weight = 0.8;          // lambda
    double kl_weight = 0.01;          // B
    double adf_threshold = 0.01;
    std::vector<std::string> priors{"RBF", "Matern32"};
    std::vector<double> prior_scales{2.0, 1.0, 0.5, 0.25};
    std::uint64_t seed = 0;

    std::size_t neighborhood_cap = 5;
    std::size_t tuples_per_anchor = 1;  // TNC passes over the anchors per epoch
    std::size_t kernel_size = 3;
    std::array<std::size_t, 3> conv_widths{8, 16, 16};
    std::size_t decoder_hidden = 32;
    std::size_t disc_hidden = 32;
    double dropout = 0.5;
    double train_split = 0.8;
    std::size_t label_window = 250;
    std::size_t probe_epochs = 200;
    std::size_t clusters = 4;

    /// Throws ConfigError on out-of-range values.
    void validate() const;
    /// Canonical key=value lines in a fixed order; used for hashing.
    [[nodiscard]] std::string to_text() const;
};

/// Every accepted key (canonical names; aliases such as M, m, B are also accepted).
[[nodiscard]] const std::vector<std::string>& config_keys();

/// Sets one key. Unknown keys raise ConfigError listing the valid keys.
void apply_config_value(TrainConfig& cfg, const std::string& key, const std::string& value);

/// Parses `key = value` lines; '#' starts a comment.
void apply_config_text(TrainConfig& cfg, const std::string& text);

/**
 * Resolves a configuration. Precedence, lowest first: defaults,
 * MANEUVERLAB_SEED, the file, then `overrides` in order. The result is
 * validated.
 */
[[nodiscard]] TrainConfig load_config(const std::optional<std::filesystem::path>& path,
                                      const std::vector<std::pair<std::string, std::string>>& overrides = {});

/// Stores the resolved config as `config.<key>` checkpoint meta entries.
void write_config_meta(std::map<std::string, std::string>& meta, const TrainConfig& cfg);

}  // namespace mlab

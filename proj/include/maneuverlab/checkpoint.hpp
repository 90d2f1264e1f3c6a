#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "maneuverlab/optim.hpp"

namespace mlab {

/// Weights plus free-form metadata (model kind, architecture, config).
struct Checkpoint {
    std::map<std::string, std::string> meta;
    ParameterSet params;
};

/*
 * Text container, one record per line:
 *
 *   maneuverlab-checkpoint 1
 *   meta <key> <value...>
 *   param <name> <rank> <d0> ... <dn-1>
 *   <values as C99 hex floats, space separated>
 *
 * Hex floats make the round trip bit-exact.
 */
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
[[nodiscard]] Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies values from `source` into the same-named tensors of `target`.
/// Every target parameter must be present with an identical shape.
void assign_parameters(const ParameterSet& target, const ParameterSet& source);

}  // namespace mlab

#pragma once

#include <string>

#include "msvf/field.hpp"

namespace msvf {

/// Versioned JSON checkpoint: manifold, architecture, Euler-step count,
/// latent gain, target element and the flat parameter vector. `config_echo`
/// embeds the effective run configuration for provenance.
void save_checkpoint(const std::string& path, const MsvfModel& m,
                     const std::string& config_echo = {});

MsvfModel load_checkpoint(const std::string& path);

}  // namespace msvf

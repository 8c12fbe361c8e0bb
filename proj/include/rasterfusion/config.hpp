#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "rasterfusion/fusion.hpp"
#include "rasterfusion/geogrid.hpp"
#include "rasterfusion/ingest.hpp"

namespace rasterfusion {

// Run configuration grammar:
//
//   file    := { line }
//   line    := ws [ key ws "=" ws value ] ws [ "#" comment ] newline
//   key     := segment { "." segment },  segment := [A-Za-z0-9_]+
//
// Values run to the end of the line (or to a "#") with surrounding blanks
// trimmed. Each key may appear once. Unknown keys are errors. See README.md
// for the key table.

enum class MaskPolicy { Road, All };

struct ModalitySource {
  std::string name;
  std::string source;  // CSV path (relative to the config file) or "synthetic"
  Channel channel = Channel::R;
  Aggregator aggregator = Aggregator::Mean;
  int line = 0;  // line of the channel assignment

  bool synthetic() const { return source == "synthetic"; }
};

struct ModelConfig {
  std::size_t t_in = 4;
  std::size_t t_out = 2;
  double lr = 0.05;
  std::size_t epochs = 12;
  std::size_t hidden = 8;
  std::size_t var_lag = 1;
  std::size_t ha_period = 0;  // 0: one day of windows
};

struct RunConfig {
  GridSpec grid;
  EpochSeconds window_start = 1561939200;  // 2019-07-01T00:00:00Z
  std::int64_t window_length = 0;
  std::size_t window_count = 0;
  std::vector<ModalitySource> modalities;  // ordered R, G, B after parsing
  std::string target = "congestion";
  ModelConfig model;
  double train_fraction = 0.8;
  MaskPolicy mask = MaskPolicy::Road;
  std::uint64_t seed = 0;
  std::filesystem::path base_dir;

  const ModalitySource& modality_on(Channel ch) const {
    return modalities[static_cast<std::size_t>(ch)];
  }
  Channel target_channel() const;
  std::size_t ha_period() const;
  std::filesystem::path resolve(const std::string& path) const;
};

/// Throws UsageError naming the offending line and key.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

}  // namespace rasterfusion

#pragma once

#include <map>
#include <string>
#include <vector>

#include "msvf/arm.hpp"
#include "msvf/rollout.hpp"
#include "msvf/train.hpp"

namespace msvf {

/// Flat key = value run configuration with [sections]. Every key is validated
/// against the known-key table before any computation starts; flag overrides
/// are applied on top of the file through set().
class RunConfig {
 public:
  static RunConfig defaults();
  /// defaults overlaid with the file contents
  static RunConfig from_file(const std::string& path);

  /// dotted "section.key"; throws InvalidConfig for unknown keys or bad values
  void set(const std::string& dotted_key, const std::string& value);
  bool known(const std::string& dotted_key) const;

  std::string get(const std::string& dotted_key) const;
  double get_double(const std::string& dotted_key) const;
  int get_int(const std::string& dotted_key) const;
  std::uint64_t get_u64(const std::string& dotted_key) const;
  std::vector<int> get_int_list(const std::string& dotted_key) const;
  std::vector<double> get_double_list(const std::string& dotted_key) const;

  /// one-line "key=value" listing of the merged effective configuration
  std::string echo() const;

  Manifold manifold() const;
  std::vector<int> hidden() const;
  int flow_steps() const;
  double gain() const;
  TrainConfig train_config() const;
  RolloutConfig rollout_config() const;
  PlanarChain chain() const;
  ControlConfig control_config() const;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace msvf

#pragma once

// Run configuration files (JSON) and checkpoints.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "cam/policy.hpp"
#include "cam/population.hpp"

namespace cam {

// Invalid configuration; `field` is the dotted path of the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Missing keys take their defaults; unknown keys and out-of-range values
// throw ConfigError.
RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);

// Canonical form listing every key.
std::string serialize_config(const RunConfig& config);

// FNV-1a of the canonical form, as 16 hex digits.
std::string config_hash(const RunConfig& config);

std::uint64_t fnv1a(const std::string& bytes);
std::string hex64(std::uint64_t v);

struct Checkpoint {
  int format_version = 1;
  std::string stage = "mia";
  std::size_t generation = 0;
  std::optional<std::size_t> agent;  // specialists only
  PolicyParams params;
  std::optional<ValueHead> value;
  std::uint64_t master_seed = 0;
  std::string config_hash;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace cam

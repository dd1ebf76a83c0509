#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace aoi_edge {

/// A caller broke a documented precondition (for example, a transmission
/// from an empty battery). These indicate a bug in the calling layer, not a
/// modeled event.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The requested instance exceeds a configured size guard.
class SizeGuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing an artifact failed.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Aggregated configuration problems; never thrown for a partially valid run.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);

  const std::vector<std::string>& issues() const noexcept { return issues_; }

 private:
  std::vector<std::string> issues_;
};

/// Identifier of this build, e.g. "aoi_edge-0.1.0+8e99da7".
const char* build_id() noexcept;

}  // namespace aoi_edge

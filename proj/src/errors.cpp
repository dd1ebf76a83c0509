#include "aoi_edge/errors.hpp"

#include <utility>

namespace aoi_edge {
namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid configuration";
  for (const auto& issue : issues) {
    out += "\n  ";
    out += issue;
  }
  return out;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::runtime_error(join_issues(issues)), issues_(std::move(issues)) {}

}  // namespace aoi_edge

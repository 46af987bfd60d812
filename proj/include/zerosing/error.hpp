#pragma once

#include <stdexcept>
#include <string>

namespace zs {

/// Library error carrying a short machine-parseable category
/// ("parse-error", "too-short", "shape-mismatch", ...).
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& message)
      : std::runtime_error(message), category_(std::move(category)) {}

  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

}  // namespace zs

#pragma once

#include <stdexcept>
#include <string>

namespace causalaug {

// Error taxonomy mirrors the CLI exit codes: validation problems (bad flags,
// malformed models, out-of-range values) are distinct from property-check
// failures and from filesystem trouble.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an exact computation would materialize a table larger than the
// configured cell cap. The message names the offending size.
class CapExceededError : public ValidationError {
 public:
  CapExceededError(std::size_t cells, std::size_t cap)
      : ValidationError("exact table would need " + std::to_string(cells) +
                        " cells, cap is " + std::to_string(cap)),
        cells_(cells) {}
  std::size_t cells() const { return cells_; }

 private:
  std::size_t cells_;
};

class PropertyError : public std::runtime_error {
 public:
  explicit PropertyError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace causalaug

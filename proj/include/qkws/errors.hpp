#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qkws {

// Requested register or problem size exceeds the simulator budget.
class CapacityError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Malformed or unsupported input file.
class FormatError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Non-finite value produced during a numeric procedure. `index` identifies
// the offending parameter when known.
class NumericError : public std::runtime_error {
  public:
    explicit NumericError(const std::string& what,
                          std::size_t index = static_cast<std::size_t>(-1))
        : std::runtime_error(what), index_(index) {}
    std::size_t index() const { return index_; }

  private:
    std::size_t index_;
};

// Dataset directory unusable: missing class folders, no audio, bad layout.
class DatasetError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace qkws

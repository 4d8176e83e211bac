#pragma once

#include <stdexcept>
#include <string>

namespace misynth {

// Bad caller-supplied data: malformed files, unknown channels, out-of-range
// parameters. The CLI maps these to their own exit code.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numeric breakdown mid-computation (non-finite values, aborted optimizer
// steps). Distinct from InputError so callers can tell "fix your file" from
// "the run blew up".
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Corrupt or version-mismatched on-disk artifacts (stores, checkpoints).
class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace misynth

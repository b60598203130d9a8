#ifndef PROBEKIT_ERROR_H_
#define PROBEKIT_ERROR_H_

#include <stdexcept>
#include <string>

namespace probekit {

// Bad input data: malformed files, out-of-range spans, inconsistent shapes.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad command-line usage. The CLI maps this to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probekit

#endif  // PROBEKIT_ERROR_H_

#pragma once

#include <stdexcept>
#include <string>

namespace dcloss {

/// Invalid model or algorithm parameter (non-positive sigma, negative rate, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Inputs that do not fit together or lie outside a model's support.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Evaluation outside the domain of a function (e.g. log of a non-positive rate).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace dcloss

#pragma once

#include <stdexcept>
#include <string>

namespace fracorder {

/// Argument outside the region where an evaluation is defined or reliable.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure could not certify its own accuracy target.
class AccuracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fitted parameters do not map back to admissible physical parameters.
class IdentifiabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear least-squares design matrix is numerically rank deficient.
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fracorder

#pragma once

#include <stdexcept>
#include <string>

namespace adaptchi {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidMatrix : Error {
  using Error::Error;
};
struct NumericalFailure : Error {
  using Error::Error;
};
struct InvalidRank : Error {
  using Error::Error;
};
struct EigenNonConvergence : Error {
  double best_residual;
  EigenNonConvergence(const std::string& msg, double residual)
      : Error(msg), best_residual(residual) {}
};
struct InvalidBasisState : Error {
  using Error::Error;
};
struct SizeGuard : Error {
  using Error::Error;
};
struct DegenerateSpectrum : Error {
  using Error::Error;
};
struct InsufficientSpectrum : Error {
  using Error::Error;
};
struct InfiniteResponse : Error {
  using Error::Error;
};
struct NoUltimateGain : Error {
  using Error::Error;
};
struct DegeneratePolynomial : Error {
  using Error::Error;
};
struct InvalidDistribution : Error {
  using Error::Error;
};
struct UnsupportedModel : Error {
  using Error::Error;
};
struct InvalidConfig : Error {
  using Error::Error;
};
struct InternalConsistency : Error {
  using Error::Error;
};

}  // namespace adaptchi

#pragma once

#include <stdexcept>
#include <string>

namespace qal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input violates a documented precondition or type invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

/// Q-rules are too strong for the bare distribution: some p_j < 0.
class NegativeEffectiveProbability : public Error {
 public:
  using Error::Error;
};

/// Requested misread channel has a column with loss + misread mass > 1.
class ChannelInfeasible : public Error {
 public:
  using Error::Error;
};

/// Exhaustive enumeration would exceed the configured size guard.
class SizeGuardExceeded : public Error {
 public:
  using Error::Error;
};

/// A game image does not land on a grid node (or leaves the grid).
class OffGridImage : public Error {
 public:
  using Error::Error;
};

/// eps * max|V - E0| / alpha >= pi; the per-step potential phase would wrap.
class PhaseWrapGuard : public Error {
 public:
  using Error::Error;
};

}  // namespace qal

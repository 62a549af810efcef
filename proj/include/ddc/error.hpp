#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ddc {

/// Base of every error raised by the library. The message always names the
/// module that failed.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class DivisionByZeroInterval : public Error {
 public:
  DivisionByZeroInterval() : Error("interval: divisor interval contains zero") {}
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// The Lipschitz envelopes of some stored records have an empty intersection.
class EmptyEnvelope : public Error {
 public:
  EmptyEnvelope(std::string what, std::vector<std::size_t> records)
      : Error(std::move(what)), records_(std::move(records)) {}
  const std::vector<std::size_t>& records() const { return records_; }

 private:
  std::vector<std::size_t> records_;
};

/// A measured sample contradicts the declared side information.
class InconsistentData : public Error {
 public:
  InconsistentData(std::string what, std::size_t sample)
      : Error(std::move(what)), sample_(sample) {}
  std::size_t sample() const { return sample_; }

 private:
  std::size_t sample_;
};

class MaxSweepsExceeded : public Error {
 public:
  using Error::Error;
};

class EmptyAfterContraction : public Error {
 public:
  using Error::Error;
};

/// The Picard iteration could not certify a rough enclosure.
class EnclosureFailure : public Error {
 public:
  explicit EnclosureFailure(std::string what, std::size_t step = 0)
      : Error(std::move(what)), step_(step) {}
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class OracleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Every SCP iteration was rejected down to the minimum trust radius.
class NoProgress : public Error {
 public:
  using Error::Error;
};

}  // namespace ddc

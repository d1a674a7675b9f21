#pragma once

#include <stdexcept>
#include <string>

namespace ifslr {

enum class ErrorCode {
  NotContractingOnAverage,
  BadProbabilityVector,
  CommonFixedPoint,
  NonPositiveRatio,
  EqualRatios,
  OutOfRange,
  MomentDiverges,
  UnsupportedIFS,
  InadmissiblePerturbation,
  NonFiniteSample,
  DegenerateDistribution,
  EnumerationTooLarge,
  NoFeasibleM,
  OrderTooLarge,
  BadConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ifslr

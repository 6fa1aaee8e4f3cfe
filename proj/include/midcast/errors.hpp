#pragma once

#include <stdexcept>
#include <string>

namespace midcast {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// data ingestion
struct MissingColumn : Error {
  using Error::Error;
};
struct NonMonotoneDates : Error {
  using Error::Error;
};
struct EmptyTable : Error {
  using Error::Error;
};
struct NonPositivePrice : Error {
  using Error::Error;
};
struct DegenerateRange : Error {
  using Error::Error;
};
struct SeriesTooShort : Error {
  using Error::Error;
};

// numerics
struct DimensionMismatch : Error {
  using Error::Error;
};
struct DegenerateVector : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct InsufficientData : Error {
  using Error::Error;
};
struct WrongStateCount : Error {
  using Error::Error;
};

// config / cli
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace midcast

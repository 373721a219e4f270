#pragma once

#include <stdexcept>
#include <string>

namespace semsearch {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GenerationFailed : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

struct IllegalMove : Error {
  using Error::Error;
};

struct Unreachable : Error {
  using Error::Error;
};

struct DegenerateDataset : Error {
  using Error::Error;
};

struct InvalidIntervention : Error {
  InvalidIntervention(const std::string& what, long revision = -1)
      : Error(what), revision(revision) {}
  long revision;
};

struct IllegalCommand : Error {
  using Error::Error;
};

struct PortUnavailable : Error {
  using Error::Error;
};

struct ScenarioInvalid : Error {
  using Error::Error;
};

}  // namespace semsearch

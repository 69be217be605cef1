#pragma once

#include <stdexcept>
#include <string>

namespace wifisense {

enum class Errc {
  InvalidArgument,
  ParseError,
  UnknownSniffer,
  UnknownNode,
  EmptyDataset,
  EmptyInput,
  DegenerateVariance,
  InvalidK,
  ConstantGrid,
  SingleCluster,
  ZeroVariance,
  ZeroNorm,
  InvalidSpec,
  InvalidConfig,
  NonMonotoneMerge,
  Io,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::ParseError: return "ParseError";
    case Errc::UnknownSniffer: return "UnknownSniffer";
    case Errc::UnknownNode: return "UnknownNode";
    case Errc::EmptyDataset: return "EmptyDataset";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::InvalidK: return "InvalidK";
    case Errc::ConstantGrid: return "ConstantGrid";
    case Errc::SingleCluster: return "SingleCluster";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::ZeroNorm: return "ZeroNorm";
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::NonMonotoneMerge: return "NonMonotoneMerge";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// All library failures are reported through this exception; `code()` tells
/// the caller which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace wifisense

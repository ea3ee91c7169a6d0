#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cfx {

enum class Errc {
  InvalidSpec,
  OutOfRange,
  QuadratureFail,
  DegenerateCF,
  DegenerateVariance,
  DomainError,
  GridError,
  TailNotDecayed,
  UnstableScheme,
  ConfigError,
  InsufficientPoints,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidSpec: return "InvalidSpec";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::QuadratureFail: return "QuadratureFail";
    case Errc::DegenerateCF: return "DegenerateCF";
    case Errc::DegenerateVariance: return "DegenerateVariance";
    case Errc::DomainError: return "DomainError";
    case Errc::GridError: return "GridError";
    case Errc::TailNotDecayed: return "TailNotDecayed";
    case Errc::UnstableScheme: return "UnstableScheme";
    case Errc::ConfigError: return "ConfigError";
    case Errc::InsufficientPoints: return "InsufficientPoints";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cfx

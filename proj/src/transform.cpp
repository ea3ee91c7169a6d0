#include "cfx/transform.hpp"

#include <cmath>

#include "cfx/error.hpp"

namespace cfx {

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::x: return "x";
    case TransformKind::sqrt: return "sqrt";
    case TransformKind::log: return "log";
    case TransformKind::logsqrt: return "logsqrt";
  }
  return "x";
}

TransformKind parse_transform(std::string_view name) {
  if (name == "x") return TransformKind::x;
  if (name == "sqrt") return TransformKind::sqrt;
  if (name == "log") return TransformKind::log;
  if (name == "logsqrt") return TransformKind::logsqrt;
  throw Error(Errc::ConfigError, "unknown transform '" + std::string(name) + "'");
}

namespace {
void check_domain(TransformKind kind, double v) {
  if (kind != TransformKind::x && !(v > 0.0)) {
    throw Error(Errc::DomainError,
                "transform " + std::string(to_string(kind)) + " needs a positive variance");
  }
}
}  // namespace

double transform_value(TransformKind kind, double v) {
  check_domain(kind, v);
  switch (kind) {
    case TransformKind::x: return v;
    case TransformKind::sqrt: return std::sqrt(v);
    case TransformKind::log: return std::log(v);
    case TransformKind::logsqrt: return 0.5 * std::log(v);
  }
  return v;
}

double transform_derivative(TransformKind kind, double v) {
  check_domain(kind, v);
  switch (kind) {
    case TransformKind::x: return 1.0;
    case TransformKind::sqrt: return 0.5 / std::sqrt(v);
    case TransformKind::log: return 1.0 / v;
    case TransformKind::logsqrt: return 0.5 / v;
  }
  return 1.0;
}

}  // namespace cfx

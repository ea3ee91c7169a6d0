#pragma once

#include <string>
#include <string_view>

namespace cfx {

/// Transforms F of spot variance: F(x) = x, sqrt x, log x, log sqrt x.
enum class TransformKind { x, sqrt, log, logsqrt };

std::string_view to_string(TransformKind kind);
/// Throws Error(ConfigError) on an unknown name.
TransformKind parse_transform(std::string_view name);

/// F(v). Throws Error(DomainError) when v <= 0 for every kind but x.
double transform_value(TransformKind kind, double v);
/// F'(v), same domain rules.
double transform_derivative(TransformKind kind, double v);

}  // namespace cfx

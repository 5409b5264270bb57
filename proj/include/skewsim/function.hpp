#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>

#include <json.hpp>

namespace skewsim {

using Json = nlohmann::json;

/// Scalar coefficient x -> value. Coefficients are shared read-only across
/// simulation threads, so callables must be free of mutable state.
using RealFunction = std::function<double(double)>;

/// Running-cost style coefficient (t, x) -> value.
using TimeFunction = std::function<double(double, double)>;

/// Builds a coefficient from its JSON description.
///
/// Supported kinds (every kind also accepts "support": [lo, hi], outside of
/// which the function is zero):
///   const     {value}
///   poly      {coeffs}                 sum coeffs[i] * x^i
///   power     {exponent, scale=1, center=0, offset=0, cap=inf}
///                                      offset + scale * min(|x-center|^exponent, cap)
///   step      {at, left, right}        right for x >= at, left otherwise
///   indicator {lo, hi, inside=1, outside=0, lo_closed=true, hi_closed=false}
///   table     {x, y}                   linear interpolation, flat extrapolation
///   cos       {amplitude=1, frequency=1, phase=0, offset=0}
///   tanh      {center=0, width=1, low=0, high=1}
///   osc       {center=0, offset=1, scale=1}   offset + scale*|sin(1/(x-center))|
///
/// Throws ConfigError on unknown kinds or missing fields.
RealFunction make_function(const Json& desc);

/// Same as make_function, lifted to (t, x) -> value ignoring t.
TimeFunction make_time_function(const Json& desc);

/// Stable 64-bit FNV-1a hash of a JSON document's canonical dump.
std::uint64_t hash_json(const Json& doc);

std::string hex64(std::uint64_t value);

/// Throws ConfigError naming the first key of obj that is not in allowed.
void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where);

}  // namespace skewsim

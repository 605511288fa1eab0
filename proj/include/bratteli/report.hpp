#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "bratteli/exact.hpp"

namespace bratteli {

using Json = nlohmann::json;

// Rounds to 12 significant digits so serialized floats are stable.
double round12(double x);
Json float_json(double x);
Json float_array(const std::vector<double>& xs);
Json rational_json(const Rational& r);
Json rational_array(const RatVector& v);
Json integer_array(const IntVector& v);
Json matrix_json(const IntMatrix& m);
Json matrix_json(const RatMatrix& m);

// 64-bit FNV-1a of raw input bytes, as 16 hex digits.
std::string digest(const std::string& bytes);

}  // namespace bratteli

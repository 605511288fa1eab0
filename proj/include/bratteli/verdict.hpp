#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "bratteli/exact.hpp"

namespace bratteli {

enum class Status { Proved, Refuted, Evidence, Inconclusive };

const char* to_string(Status s);

// Outcome of an asymptotic question answered from finite data.
// Proved/Refuted only come from a decidable rule (degree test or exact finite
// computation); everything else is Evidence or Inconclusive with a trace.
struct Verdict {
  std::string criterion;
  Status status = Status::Inconclusive;
  std::string direction;
  Level depth = 0;
  std::vector<double> trace;
  nlohmann::json witness = nlohmann::json::object();
  std::string note;

  bool proved() const { return status == Status::Proved; }
  bool refuted() const { return status == Status::Refuted; }
  bool decided() const { return proved() || refuted(); }
  nlohmann::json to_json() const;
};

// Partial sums of non-negative terms, in order.
std::vector<double> partial_sums(const std::vector<double>& terms);

// Classifies the tail of a non-negative summand sequence by the log-log slope
// over its top half: +1 for divergent-looking, -1 for convergent-looking, 0 when
// the slope sits too close to -1 to call.
int classify_summands(const std::vector<double>& terms, double* slope = nullptr);

}  // namespace bratteli

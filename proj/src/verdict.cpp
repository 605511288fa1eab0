#include "bratteli/verdict.hpp"

#include <cmath>

#include "bratteli/report.hpp"

namespace bratteli {

const char* to_string(Status s) {
  switch (s) {
    case Status::Proved: return "Proved";
    case Status::Refuted: return "Refuted";
    case Status::Evidence: return "Evidence";
    case Status::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

nlohmann::json Verdict::to_json() const {
  Json out;
  out["criterion"] = criterion;
  out["status"] = to_string(status);
  out["direction"] = direction;
  out["depth"] = depth;
  out["trace"] = float_array(trace);
  out["witness"] = witness;
  if (!note.empty()) out["note"] = note;
  return out;
}

std::vector<double> partial_sums(const std::vector<double>& terms) {
  std::vector<double> out;
  out.reserve(terms.size());
  double acc = 0;
  for (double t : terms) out.push_back(acc += t);
  return out;
}

int classify_summands(const std::vector<double>& terms, double* slope) {
  // Least-squares slope of log c(n) against log n over the top half.
  std::size_t n = terms.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t count = 0;
  bool any_zero = false;
  for (std::size_t i = n / 2; i < n; ++i) {
    if (terms[i] <= 0) {
      any_zero = true;
      continue;
    }
    double x = std::log(static_cast<double>(i + 1));
    double y = std::log(terms[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++count;
  }
  if (count < 2) {
    if (slope) *slope = any_zero ? -INFINITY : 0;
    return any_zero ? -1 : 0;
  }
  double denom = count * sxx - sx * sx;
  double s = denom == 0 ? 0 : (count * sxy - sx * sy) / denom;
  if (slope) *slope = s;
  if (s > -0.8) return 1;
  if (s < -1.2) return -1;
  return 0;
}

}  // namespace bratteli

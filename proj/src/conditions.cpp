#include "uner/conditions.hpp"

namespace uner {

std::string ValidationReport::message() const {
  if (pass) return "ok";
  std::string out = strictness == Strictness::kPropriety ? "posterior propriety condition violated: "
                                                         : "finite posterior variance condition violated: ";
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (i) out += "; ";
    out += failures[i];
  }
  return out;
}

ValidationReport validate_conditions(long total_units, long q, long m, int a, Strictness strictness) {
  ValidationReport r;
  r.strictness = strictness;
  const long offset = strictness == Strictness::kPropriety ? 2 : 6;
  const int a_min = strictness == Strictness::kPropriety ? 1 : 5;
  const auto fmt = [](long v) { return std::to_string(v); };

  if (!(total_units > q + offset))
    r.failures.push_back("N > q + " + fmt(offset) + " (N = " + fmt(total_units) + ", q = " + fmt(q) + ")");
  if (!(m > a)) r.failures.push_back("m > a (m = " + fmt(m) + ", a = " + fmt(a) + ")");
  if (!(a >= a_min)) r.failures.push_back("a >= " + fmt(a_min) + " (a = " + fmt(a) + ")");
  r.pass = r.failures.empty();
  return r;
}

ValidationReport validate_conditions(const UnitDataset& data, const PriorConfig& prior,
                                     Strictness strictness) {
  return validate_conditions(static_cast<long>(data.total_units()), static_cast<long>(data.q()),
                             static_cast<long>(data.m()), prior.a, strictness);
}

}  // namespace uner

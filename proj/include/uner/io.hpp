#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "uner/prediction.hpp"
#include "uner/types.hpp"

namespace uner {

// Shortest decimal string that round-trips to the same double
// (std::to_chars); locale independent. Non-finite values print as
// "nan", "inf", "-inf".
std::string format_double(double x);

// Unit data: header `area_id,y,x1,...,xq`; rows may be grouped or not, areas
// keep the order of first appearance. With `intercept` a constant-1 column is
// prepended to the covariates. Throws ParseError with 1-based row/column.
UnitDataset read_unit_csv(const std::string& path, bool intercept);
UnitDataset parse_unit_csv(std::istream& in, const std::string& name, bool intercept);

// Writes every covariate column as x1..xq (an intercept column included).
void write_unit_csv(const std::string& path, const UnitDataset& data);
void write_unit_csv(std::ostream& out, const UnitDataset& data);

// Population spec: header `area_id,N,xbar1,...,xbarq`, one row per area.
// Returned in the data's area order; ids must match exactly.
FinitePopulationSpec read_population_csv(const std::string& path, const UnitDataset& data,
                                         bool intercept);
FinitePopulationSpec parse_population_csv(std::istream& in, const std::string& name,
                                          const UnitDataset& data, bool intercept);

std::string fingerprint_hex(std::uint64_t fp);

}  // namespace uner

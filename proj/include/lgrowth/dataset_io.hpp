#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lgrowth/data.hpp"

namespace lgrowth {

// Long-format CSV with header `subject_id,session,age,position,post_season,
// y1,...,yD`; empty outcome cells mean missing. Rows may arrive in any
// order; occasions are re-ordered by age per subject. Errors carry the
// offending 1-based row number.
Dataset read_dataset_csv(std::istream& in,
                         const std::vector<OutcomeSpec>* specs = nullptr);
Dataset read_dataset_csv_file(const std::string& path,
                              const std::vector<OutcomeSpec>* specs = nullptr);

void write_dataset_csv(const Dataset& data, std::ostream& out);
void write_dataset_csv_file(const Dataset& data, const std::string& path);

void write_summary_csv(const std::vector<OutcomeDataSummary>& rows,
                       std::ostream& out);

// Canonical shortest round-trip decimal formatting used by every emitter.
std::string format_double(double v);

}  // namespace lgrowth

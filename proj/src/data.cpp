#include "lgrowth/data.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "lgrowth/errors.hpp"

namespace lgrowth {

const char* const kCovariateNames[kCovariateCount] = {"post_season", "forward",
                                                      "midfielder", "defender"};

Position position_from_string(const std::string& s) {
  if (s == "forward") return Position::forward;
  if (s == "midfielder") return Position::midfielder;
  if (s == "defender") return Position::defender;
  if (s == "goalkeeper") return Position::goalkeeper;
  throw ValidationError("unknown position label: '" + s + "'");
}

std::string to_string(Position p) {
  switch (p) {
    case Position::forward: return "forward";
    case Position::midfielder: return "midfielder";
    case Position::defender: return "defender";
    case Position::goalkeeper: return "goalkeeper";
  }
  return "?";
}

std::vector<OutcomeSpec> default_outcomes() {
  using K = OutcomeKind;
  using C = Channel;
  return {
      {"y1", K::count, C::accuracy, 1, true},
      {"y2", K::continuous, C::speed, 1, false},
      {"y3", K::continuous, C::speed, 1, false},
      {"y4", K::continuous, C::speed, 1, false},
      {"y5", K::count, C::accuracy, 1, false},
      {"y6", K::continuous, C::speed, 1, false},
      {"y7", K::continuous, C::speed, 1, false},
      {"y8", K::count, C::accuracy, 2, true},
      {"y9", K::count, C::accuracy, 2, false},
      {"y10", K::continuous, C::speed, 2, false},
  };
}

void validate_outcomes(const std::vector<OutcomeSpec>& specs) {
  if (specs.empty()) throw ValidationError("outcome list is empty");
  std::set<int> facets;
  for (const auto& s : specs) {
    if (s.facet < 1 || s.facet > 2)
      throw ValidationError("outcome " + s.name + ": facet must be 1 or 2");
    facets.insert(s.facet);
  }
  for (int f : facets) {
    int fixed = 0;
    for (const auto& s : specs)
      if (s.facet == f && s.loading_fixed) ++fixed;
    if (fixed != 1)
      throw ValidationError("facet " + std::to_string(f) +
                            ": exactly one outcome must have its loading fixed"
                            " to one, found " + std::to_string(fixed));
  }
}

int facet_count(const std::vector<OutcomeSpec>& specs) {
  int maxf = 0;
  for (const auto& s : specs) maxf = std::max(maxf, s.facet);
  return maxf;
}

Eigen::Vector4d encode_covariates(const Observation& obs) {
  Eigen::Vector4d x = Eigen::Vector4d::Zero();
  x[0] = obs.post_season ? 1.0 : 0.0;
  switch (obs.position) {
    case Position::forward: x[1] = 1.0; break;
    case Position::midfielder: x[2] = 1.0; break;
    case Position::defender: x[3] = 1.0; break;
    case Position::goalkeeper: break;
  }
  return x;
}

Dataset::Dataset(std::vector<Subject> subjects, std::vector<OutcomeSpec> outcomes)
    : subjects_(std::move(subjects)), outcomes_(std::move(outcomes)) {
  validate_outcomes(outcomes_);
  const int D = n_outcomes();
  for (auto& subj : subjects_) {
    if (subj.id.empty()) throw ValidationError("subject with empty id");
    // Occasion order is defined by age, not input order.
    std::stable_sort(subj.occasions.begin(), subj.occasions.end(),
                     [](const Observation& a, const Observation& b) {
                       return a.age < b.age;
                     });
    std::vector<Observation> kept;
    kept.reserve(subj.occasions.size());
    double prev_age = -1.0;
    for (const auto& obs : subj.occasions) {
      if (!std::isfinite(obs.age) || obs.age <= 5.0 || obs.age >= 40.0)
        throw ValidationError("subject " + subj.id + ": age " +
                              std::to_string(obs.age) +
                              " outside the (5, 40) sanity bounds");
      if (static_cast<int>(obs.y.size()) != D)
        throw ValidationError("subject " + subj.id +
                              ": outcome vector length mismatch");
      if (!kept.empty() && !(obs.age > prev_age))
        throw ValidationError("subject " + subj.id +
                              ": ages must be strictly increasing (duplicate"
                              " or tied age " + std::to_string(obs.age) + ")");
      int observed = 0;
      for (int d = 0; d < D; ++d) {
        if (!obs.y[d].has_value()) continue;
        ++observed;
        const double v = *obs.y[d];
        if (!std::isfinite(v))
          throw ValidationError("subject " + subj.id + ": non-finite value for " +
                                outcomes_[d].name);
        if (outcomes_[d].kind == OutcomeKind::count &&
            (v < 0.0 || v != std::floor(v)))
          throw ValidationError("subject " + subj.id + ": count outcome " +
                                outcomes_[d].name +
                                " must be a non-negative integer, got " +
                                std::to_string(v));
      }
      if (observed == 0) {
        ++dropped_occasions_;
        continue;  // occasion carries no information; not retained
      }
      prev_age = obs.age;
      kept.push_back(obs);
    }
    subj.occasions = std::move(kept);
    total_occasions_ += static_cast<int>(subj.occasions.size());
  }
}

std::vector<OutcomeDataSummary> summarize(const Dataset& data) {
  if (data.n_subjects() == 0 || data.total_occasions() == 0)
    throw ValidationError("summarize: empty dataset");
  const int D = data.n_outcomes();
  std::vector<OutcomeDataSummary> out(D);
  std::vector<long> observed(D, 0);
  for (const auto& subj : data.subjects())
    for (const auto& obs : subj.occasions)
      for (int d = 0; d < D; ++d)
        if (obs.y[d].has_value()) ++observed[d];
  const double n_subj = data.n_subjects();
  const double n_occ = data.total_occasions();
  for (int d = 0; d < D; ++d) {
    out[d].name = data.outcomes()[d].name;
    out[d].mean_obs_per_subject = observed[d] / n_subj;
    out[d].missing_proportion = 1.0 - observed[d] / n_occ;
  }
  return out;
}

}  // namespace lgrowth

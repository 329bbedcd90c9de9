#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lgrowth {

enum class OutcomeKind { count, continuous };
enum class Channel { accuracy, speed };
enum class Position { forward, midfielder, defender, goalkeeper };

Position position_from_string(const std::string& s);
std::string to_string(Position p);

// Static description of one outcome column: measurement kind, whether it
// reports accuracy or (log) speed, which latent facet it loads on, and
// whether its loading is pinned to one for identifiability.
struct OutcomeSpec {
  std::string name;
  OutcomeKind kind = OutcomeKind::continuous;
  Channel channel = Channel::speed;
  int facet = 1;
  bool loading_fixed = false;
};

// The ten-outcome battery: counts {y1,y5,y8,y9}, log-speed otherwise,
// facet 1 = y1..y7, facet 2 = y8..y10, loadings pinned for y1 and y8.
std::vector<OutcomeSpec> default_outcomes();

void validate_outcomes(const std::vector<OutcomeSpec>& specs);
int facet_count(const std::vector<OutcomeSpec>& specs);

struct Observation {
  std::string session;
  double age = 0;
  Position position = Position::goalkeeper;
  bool post_season = false;
  std::vector<std::optional<double>> y;
};

struct Subject {
  std::string id;
  std::vector<Observation> occasions;  // ascending age
};

// (post_season, forward, midfielder, defender); goalkeeper is the
// positional reference level.
Eigen::Vector4d encode_covariates(const Observation& obs);

constexpr int kCovariateCount = 4;
extern const char* const kCovariateNames[kCovariateCount];

// Immutable longitudinal panel. Construction validates: ages in (5, 40) and
// strictly increasing per subject, count cells are non-negative integers,
// and occasions with no observed outcome are dropped.
class Dataset {
 public:
  Dataset(std::vector<Subject> subjects, std::vector<OutcomeSpec> outcomes);

  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  int n_outcomes() const { return static_cast<int>(outcomes_.size()); }
  int total_occasions() const { return total_occasions_; }
  const std::vector<Subject>& subjects() const { return subjects_; }
  const Subject& subject(int i) const { return subjects_[i]; }
  const std::vector<OutcomeSpec>& outcomes() const { return outcomes_; }
  int dropped_occasions() const { return dropped_occasions_; }

 private:
  std::vector<Subject> subjects_;
  std::vector<OutcomeSpec> outcomes_;
  int total_occasions_ = 0;
  int dropped_occasions_ = 0;
};

struct OutcomeDataSummary {
  std::string name;
  double mean_obs_per_subject = 0;
  double missing_proportion = 0;
};

std::vector<OutcomeDataSummary> summarize(const Dataset& data);

}  // namespace lgrowth

#include "lgrowth/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "lgrowth/dataset_io.hpp"
#include "lgrowth/errors.hpp"

namespace lgrowth::report {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ScoreRow> recovery_scorecard(
    const std::vector<diag::ParameterSummary>& summaries,
    const sim::SimulationTruth& truth) {
  // Truth values keyed by the scalar view names; shrinkage globals are not
  // generative quantities and are skipped.
  std::vector<std::pair<std::string, double>> truths;
  const ModelConfig& m = truth.model;
  const int q = m.state_dim();
  for (int j = 0; j < q; ++j)
    truths.push_back(
        {"mu_beta." + std::to_string(j + 1), truth.params.mu_beta[j]});
  for (int a = 0; a < q; ++a)
    for (int b = 0; b <= a; ++b)
      truths.push_back({"sigma_beta." + std::to_string(a + 1) + "." +
                            std::to_string(b + 1),
                        truth.params.sigma_beta(a, b)});
  for (int d = 0; d < m.n_outcomes(); ++d)
    truths.push_back({"alpha." + m.outcomes[d].name, truth.params.alpha[d]});
  for (int d = 0; d < m.n_outcomes(); ++d)
    for (int k = 0; k < kCovariateCount; ++k)
      truths.push_back(
          {"gamma." + m.outcomes[d].name + "." + kCovariateNames[k],
           truth.params.gamma(k, d)});
  for (int d = 0; d < m.n_outcomes(); ++d)
    if (!m.outcomes[d].loading_fixed)
      truths.push_back(
          {"loading." + m.outcomes[d].name, truth.params.loading[d]});
  for (int a = 0; a < m.n_outcomes(); ++a)
    for (int b = 0; b <= a; ++b)
      truths.push_back({"sigma_eps." + std::to_string(a + 1) + "." +
                            std::to_string(b + 1),
                        truth.params.sigma_eps(a, b)});

  std::vector<ScoreRow> rows;
  for (const auto& [name, value] : truths) {
    const auto it =
        std::find_if(summaries.begin(), summaries.end(),
                     [&](const auto& s) { return s.name == name; });
    if (it == summaries.end())
      throw ValidationError("recovery scoring: no posterior summary for " + name);
    ScoreRow r;
    r.name = name;
    r.truth = value;
    r.mean = it->mean;
    r.sd = it->sd;
    r.abs_z = it->sd > 0
                  ? std::abs(r.mean - value) / it->sd
                  : (r.mean == value ? 0.0
                                     : std::numeric_limits<double>::infinity());
    r.hpd_lo = it->hpd_lo;
    r.hpd_hi = it->hpd_hi;
    r.covered = value >= it->hpd_lo && value <= it->hpd_hi;
    rows.push_back(r);
  }
  return rows;
}

void write_scorecard_csv(const std::vector<ScoreRow>& rows,
                         const std::string& path) {
  auto out = open_out(path);
  out << "parameter,truth,post_mean,post_sd,abs_z,hpd_lo,hpd_hi,covered\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_double(r.truth) << ','
        << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << format_double(r.abs_z) << ',' << format_double(r.hpd_lo) << ','
        << format_double(r.hpd_hi) << ',' << (r.covered ? "true" : "false")
        << '\n';
}

void write_draws_csv(const gibbs::ChainOutput& chain, const ModelConfig& config,
                     const std::string& path) {
  auto out = open_out(path);
  const auto views = diag::scalar_views(config);
  out << "chain,draw,parameter,value\n";
  for (size_t s = 0; s < chain.draws.size(); ++s)
    for (const auto& view : views)
      out << chain.chain_id << ',' << (s + 1) << ',' << view.name << ','
          << format_double(view.get(chain.draws[s])) << '\n';
}

std::vector<gibbs::ChainOutput> read_draws_csv(
    const std::vector<std::string>& paths, const ModelConfig& config) {
  const auto views = diag::scalar_views(config);
  std::map<std::string, const diag::ScalarView*> by_name;
  for (const auto& v : views) by_name[v.name] = &v;

  std::vector<gibbs::ChainOutput> chains;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open draws file: " + path);
    std::string line;
    if (!std::getline(in, line) || split(line, ',') !=
        std::vector<std::string>{"chain", "draw", "parameter", "value"})
      throw IoError("draws file " + path + ": unexpected header");
    gibbs::ChainOutput chain;
    long row = 1;
    while (std::getline(in, line)) {
      ++row;
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      if (cells.size() != 4)
        throw IoError("draws file " + path + ": malformed row " +
                      std::to_string(row));
      const long draw = std::stol(cells[1]);
      if (draw < 1)
        throw IoError("draws file " + path + ": bad draw index at row " +
                      std::to_string(row));
      chain.chain_id = std::stoi(cells[0]);
      while (static_cast<long>(chain.draws.size()) < draw)
        chain.draws.push_back(diag::empty_draw(config));
      const auto it = by_name.find(cells[2]);
      if (it == by_name.end())
        throw IoError("draws file " + path + ": unknown parameter '" +
                      cells[2] + "' at row " + std::to_string(row));
      it->second->set(chain.draws[draw - 1], std::stod(cells[3]));
    }
    if (chain.draws.empty())
      throw IoError("draws file " + path + ": no draws");
    chains.push_back(std::move(chain));
  }
  return chains;
}

std::vector<SubjectDraws> collect_subject_draws(
    const std::vector<gibbs::ChainOutput>& chains, const gibbs::Panel& panel,
    const std::vector<std::string>& subject_ids) {
  std::vector<SubjectDraws> out;
  for (const auto& id : subject_ids) {
    const auto it =
        std::find(panel.subject_ids.begin(), panel.subject_ids.end(), id);
    if (it == panel.subject_ids.end())
      throw ValidationError("report subject '" + id + "' not in dataset");
    const int col = static_cast<int>(it - panel.subject_ids.begin());
    SubjectDraws sd;
    sd.id = id;
    for (const auto& chain : chains)
      for (const auto& draw : chain.draws) sd.draws.push_back(draw.beta.col(col));
    out.push_back(std::move(sd));
  }
  return out;
}

void write_subject_effects_csv(const std::vector<SubjectDraws>& subjects,
                               const std::string& path) {
  auto out = open_out(path);
  out << "subject,draw,component,value\n";
  for (const auto& s : subjects)
    for (size_t k = 0; k < s.draws.size(); ++k)
      for (Eigen::Index j = 0; j < s.draws[k].size(); ++j)
        out << s.id << ',' << (k + 1) << ',' << (j + 1) << ','
            << format_double(s.draws[k][j]) << '\n';
}

std::vector<SubjectDraws> read_subject_effects_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open subject effects file: " + path);
  std::string line;
  if (!std::getline(in, line) || split(line, ',') !=
      std::vector<std::string>{"subject", "draw", "component", "value"})
    throw IoError("subject effects file " + path + ": unexpected header");
  std::map<std::string, std::map<long, std::map<int, double>>> table;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != 4)
      throw IoError("subject effects file " + path + ": malformed row");
    if (table.find(cells[0]) == table.end()) order.push_back(cells[0]);
    table[cells[0]][std::stol(cells[1])][std::stoi(cells[2])] =
        std::stod(cells[3]);
  }
  std::vector<SubjectDraws> out;
  for (const auto& id : order) {
    SubjectDraws sd;
    sd.id = id;
    for (const auto& [draw, comps] : table[id]) {
      (void)draw;
      Eigen::VectorXd v(comps.size());
      for (const auto& [j, value] : comps) v[j - 1] = value;
      sd.draws.push_back(std::move(v));
    }
    out.push_back(std::move(sd));
  }
  return out;
}

void write_summary_csv(const std::vector<diag::ParameterSummary>& summaries,
                       const std::string& path) {
  auto out = open_out(path);
  out << "parameter,mean,sd,hpd_lo,hpd_hi,ess,rhat\n";
  for (const auto& s : summaries) {
    out << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd)
        << ',' << format_double(s.hpd_lo) << ',' << format_double(s.hpd_hi)
        << ',' << format_double(s.ess) << ',';
    if (s.rhat_defined)
      out << format_double(s.rhat);
    else
      out << "NA";
    out << '\n';
  }
}

void write_trajectory_csv(const diag::TrajectoryBand& band,
                          const std::string& path) {
  auto out = open_out(path);
  out << "age,mean,hpd_lo,hpd_hi\n";
  for (Eigen::Index i = 0; i < band.ages.size(); ++i)
    out << format_double(band.ages[i]) << ',' << format_double(band.mean[i])
        << ',' << format_double(band.lo[i]) << ',' << format_double(band.hi[i])
        << '\n';
}

namespace {

std::string svg_coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void write_trajectory_svg(const diag::TrajectoryBand& band,
                          const std::string& title, const std::string& path) {
  const double width = 640, height = 420;
  const double ml = 60, mr = 20, mt = 40, mb = 50;
  const double x0 = band.ages.minCoeff(), x1 = band.ages.maxCoeff();
  double y0 = band.lo.minCoeff(), y1 = band.hi.maxCoeff();
  if (y1 <= y0) y1 = y0 + 1.0;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto sx = [&](double v) { return ml + (v - x0) / (x1 - x0) * (width - ml - mr); };
  auto sy = [&](double v) {
    return height - mb - (v - y0) / (y1 - y0) * (height - mt - mb);
  };

  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " "
      << height << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "  <text x=\"" << svg_coord(width / 2) << "\" y=\"24\" "
      << "text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
  // HPD band as a closed polygon: upper bound left-to-right, lower reversed.
  out << "  <polygon fill=\"#c8d8ea\" stroke=\"none\" points=\"";
  for (Eigen::Index i = 0; i < band.ages.size(); ++i)
    out << svg_coord(sx(band.ages[i])) << ',' << svg_coord(sy(band.hi[i])) << ' ';
  for (Eigen::Index i = band.ages.size(); i-- > 0;)
    out << svg_coord(sx(band.ages[i])) << ',' << svg_coord(sy(band.lo[i])) << ' ';
  out << "\"/>\n";
  out << "  <polyline fill=\"none\" stroke=\"#1f3b57\" stroke-width=\"2\" "
         "points=\"";
  for (Eigen::Index i = 0; i < band.ages.size(); ++i)
    out << svg_coord(sx(band.ages[i])) << ',' << svg_coord(sy(band.mean[i]))
        << ' ';
  out << "\"/>\n";
  // Axes with end-point labels.
  out << "  <line x1=\"" << svg_coord(ml) << "\" y1=\"" << svg_coord(height - mb)
      << "\" x2=\"" << svg_coord(width - mr) << "\" y2=\""
      << svg_coord(height - mb) << "\" stroke=\"black\"/>\n";
  out << "  <line x1=\"" << svg_coord(ml) << "\" y1=\"" << svg_coord(mt)
      << "\" x2=\"" << svg_coord(ml) << "\" y2=\"" << svg_coord(height - mb)
      << "\" stroke=\"black\"/>\n";
  out << "  <text x=\"" << svg_coord(ml) << "\" y=\"" << svg_coord(height - mb + 18)
      << "\" font-family=\"sans-serif\" font-size=\"12\">" << format_double(x0)
      << "</text>\n";
  out << "  <text x=\"" << svg_coord(width - mr) << "\" y=\""
      << svg_coord(height - mb + 18)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(x1) << "</text>\n";
  out << "  <text x=\"" << svg_coord(ml - 6) << "\" y=\""
      << svg_coord(height - mb)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(y0 + pad) << "</text>\n";
  out << "  <text x=\"" << svg_coord(ml - 6) << "\" y=\"" << svg_coord(mt + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
      << format_double(y1 - pad) << "</text>\n";
  out << "  <text x=\"" << svg_coord((ml + width - mr) / 2) << "\" y=\""
      << svg_coord(height - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">age (years)</text>\n";
  out << "</svg>\n";
}

void write_covariates_csv(const std::vector<diag::CovariateRow>& rows,
                          const std::string& path) {
  auto out = open_out(path);
  out << "outcome,term,mean,hpd_lo,hpd_hi,hpd_excludes_zero\n";
  auto emit = [&](const std::string& outcome, const std::string& term,
                  const diag::CovariateCell& c) {
    out << outcome << ',' << term << ',' << format_double(c.mean) << ','
        << format_double(c.hpd_lo) << ',' << format_double(c.hpd_hi) << ','
        << (c.excludes_zero ? "true" : "false") << '\n';
  };
  for (const auto& row : rows) {
    emit(row.outcome, "intercept", row.intercept);
    for (int k = 0; k < kCovariateCount; ++k)
      emit(row.outcome, kCovariateNames[k], row.cells[k]);
  }
}

void write_spearman_csv(const diag::SpearmanResult& rho,
                        const std::vector<OutcomeSpec>& outcomes,
                        const std::string& path) {
  auto out = open_out(path);
  out << "outcome";
  for (const auto& o : outcomes) out << ',' << o.name;
  out << '\n';
  for (size_t a = 0; a < outcomes.size(); ++a) {
    out << outcomes[a].name;
    for (size_t b = 0; b < outcomes.size(); ++b) {
      out << ',';
      if (rho.available(a, b)) out << format_double(rho.rho(a, b));
    }
    out << '\n';
  }
}

void write_subject_trajectories_csv(const std::vector<SubjectDraws>& subjects,
                                    const ModelConfig& config,
                                    const Eigen::VectorXd& age_grid,
                                    const std::string& path) {
  auto out = open_out(path);
  out << "subject,facet,age,mean,hpd_lo,hpd_hi\n";
  const int seg = config.segment_count();
  for (const auto& s : subjects) {
    for (int facet = 1; facet <= config.n_facets(); ++facet) {
      std::vector<Eigen::VectorXd> facet_draws;
      facet_draws.reserve(s.draws.size());
      for (const auto& d : s.draws)
        facet_draws.push_back(d.segment((facet - 1) * seg, seg));
      for (Eigen::Index i = 0; i < age_grid.size(); ++i) {
        const Eigen::VectorXd b = spline::basis_vector(age_grid[i], config.knots);
        std::vector<double> values;
        values.reserve(facet_draws.size());
        for (const auto& fd : facet_draws) values.push_back(b.dot(fd));
        const double mean =
            std::accumulate(values.begin(), values.end(), 0.0) / values.size();
        double lo = mean, hi = mean;
        if (values.size() >= 20) {
          std::tie(lo, hi) = diag::hpd_interval(values, 0.95);
        } else {
          lo = *std::min_element(values.begin(), values.end());
          hi = *std::max_element(values.begin(), values.end());
        }
        out << s.id << ',' << facet << ',' << format_double(age_grid[i]) << ','
            << format_double(mean) << ',' << format_double(lo) << ','
            << format_double(hi) << '\n';
      }
    }
  }
}

}  // namespace lgrowth::report

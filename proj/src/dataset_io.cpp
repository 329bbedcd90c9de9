#include "lgrowth/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lgrowth/errors.hpp"

namespace lgrowth {

std::string format_double(double v) {
  char buf[32];
  if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0;
  // Prefer the shortest representation that round-trips.
  for (int prec = 1; prec <= 16; ++prec) {
    char shorter[32];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    std::sscanf(shorter, "%lf", &back);
    if (back == v) return shorter;
  }
  return buf;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, int row, const std::string& what) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError("row " + std::to_string(row) + ": cannot parse " +
                          what + " from '" + s + "'");
  }
}

}  // namespace

Dataset read_dataset_csv(std::istream& in,
                         const std::vector<OutcomeSpec>* specs) {
  std::string line;
  if (!std::getline(in, line)) throw ValidationError("empty dataset file");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed = {"subject_id", "session", "age",
                                          "position", "post_season"};
  if (header.size() < fixed.size() + 1)
    throw ValidationError("row 1: header has too few columns");
  for (size_t i = 0; i < fixed.size(); ++i)
    if (header[i] != fixed[i])
      throw ValidationError("row 1: expected header column '" + fixed[i] +
                            "', found '" + header[i] + "'");
  const int D = static_cast<int>(header.size() - fixed.size());
  for (int d = 0; d < D; ++d) {
    const std::string want = "y" + std::to_string(d + 1);
    if (header[fixed.size() + d] != want)
      throw ValidationError("row 1: expected outcome column '" + want +
                            "', found '" + header[fixed.size() + d] + "'");
  }

  std::vector<OutcomeSpec> outcome_specs;
  if (specs != nullptr) {
    if (static_cast<int>(specs->size()) != D)
      throw ValidationError("dataset has " + std::to_string(D) +
                            " outcome columns but the configuration declares " +
                            std::to_string(specs->size()));
    outcome_specs = *specs;
  } else if (D == 10) {
    outcome_specs = default_outcomes();
  } else {
    throw ValidationError("dataset has " + std::to_string(D) +
                          " outcome columns; outcome specifications are"
                          " required for non-default batteries");
  }

  std::map<std::string, Subject> by_id;
  std::vector<std::string> id_order;
  std::set<std::pair<std::string, std::string>> seen_keys;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " +
                            std::to_string(header.size()) + " cells, found " +
                            std::to_string(cells.size()));
    Observation obs;
    const std::string& id = cells[0];
    obs.session = cells[1];
    obs.age = parse_number(cells[2], row, "age");
    try {
      obs.position = position_from_string(cells[3]);
    } catch (const ValidationError& e) {
      throw ValidationError("row " + std::to_string(row) + ": " + e.what());
    }
    if (cells[4] == "0")
      obs.post_season = false;
    else if (cells[4] == "1")
      obs.post_season = true;
    else
      throw ValidationError("row " + std::to_string(row) +
                            ": post_season must be 0 or 1, got '" + cells[4] +
                            "'");
    if (!seen_keys.insert({id, obs.session}).second)
      throw ValidationError("row " + std::to_string(row) +
                            ": duplicate (subject, session) key (" + id + ", " +
                            obs.session + ")");
    obs.y.resize(D);
    for (int d = 0; d < D; ++d) {
      const std::string& cell = cells[5 + d];
      if (cell.empty()) continue;
      const double v = parse_number(cell, row, outcome_specs[d].name);
      if (outcome_specs[d].kind == OutcomeKind::count &&
          (v < 0.0 || v != std::floor(v)))
        throw ValidationError("row " + std::to_string(row) + ": count outcome " +
                              outcome_specs[d].name +
                              " must be a non-negative integer, got '" + cell +
                              "'");
      obs.y[d] = v;
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      it = by_id.emplace(id, Subject{id, {}}).first;
      id_order.push_back(id);
    }
    it->second.occasions.push_back(std::move(obs));
  }

  std::vector<Subject> subjects;
  subjects.reserve(id_order.size());
  for (const auto& id : id_order) subjects.push_back(std::move(by_id[id]));
  return Dataset(std::move(subjects), std::move(outcome_specs));
}

Dataset read_dataset_csv_file(const std::string& path,
                              const std::vector<OutcomeSpec>* specs) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  try {
    return read_dataset_csv(in, specs);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_dataset_csv(const Dataset& data, std::ostream& out) {
  out << "subject_id,session,age,position,post_season";
  for (const auto& spec : data.outcomes()) out << ',' << spec.name;
  out << '\n';
  for (const auto& subj : data.subjects()) {
    for (const auto& obs : subj.occasions) {
      out << subj.id << ',' << obs.session << ',' << format_double(obs.age)
          << ',' << to_string(obs.position) << ',' << (obs.post_season ? 1 : 0);
      for (const auto& v : obs.y) {
        out << ',';
        if (v.has_value()) out << format_double(*v);
      }
      out << '\n';
    }
  }
}

void write_dataset_csv_file(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  write_dataset_csv(data, out);
}

void write_summary_csv(const std::vector<OutcomeDataSummary>& rows,
                       std::ostream& out) {
  out << "outcome,mean_observations_per_subject,missing_proportion\n";
  for (const auto& r : rows)
    out << r.name << ',' << format_double(r.mean_obs_per_subject) << ','
        << format_double(r.missing_proportion) << '\n';
}

}  // namespace lgrowth

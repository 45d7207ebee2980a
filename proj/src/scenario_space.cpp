#include "msorte/types.hpp"
#include "msorte/scenario_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace msorte {

ScenarioSpace::ScenarioSpace(std::vector<std::string> labels, Vector probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
  if (probs_.size() < 1) throw InputError("scenario space must contain at least one outcome");
  if (static_cast<int>(labels_.size()) != probs_.size())
    throw InputError("label/probability count mismatch");
  for (int i = 0; i < probs_.size(); ++i) {
    if (!std::isfinite(probs_[i])) throw InputError("non-finite probability at scenario " + std::to_string(i));
    if (probs_[i] <= 0.0)
      throw InputError("non-positive probability at scenario " + std::to_string(i));
  }
  double total = 0.0;
  for (int i = 0; i < probs_.size(); ++i) total += probs_[i];
  if (std::abs(total - 1.0) > 1e-12)
    throw InputError("probabilities sum != 1 (got " + std::to_string(total) + ")");
}

Allocation::Allocation(Matrix values) : values_(std::move(values)) {
  if (values_.rows() < 1) throw InputError("allocation needs at least one agent");
  if (!values_.allFinite()) throw InputError("non-finite entry in allocation");
}

PricingVector::PricingVector(const ScenarioSpace& space, Matrix densities)
    : densities_(std::move(densities)) {
  if (densities_.cols() != space.size())
    throw InputError("pricing vector scenario count mismatch");
  equivalent_ = true;
  for (int j = 0; j < densities_.rows(); ++j) {
    double mass = 0.0;
    for (int w = 0; w < densities_.cols(); ++w) {
      double d = densities_(j, w);
      if (!std::isfinite(d) || d < 0.0)
        throw InputError("invalid density at agent " + std::to_string(j) + ", scenario " + std::to_string(w));
      if (d == 0.0) equivalent_ = false;
      mass += space.prob(w) * d;
    }
    if (std::abs(mass - 1.0) > 1e-10)
      throw InputError("density row " + std::to_string(j) + " not normalized (mass " + std::to_string(mass) + ")");
  }
}

ClusterPartition ClusterPartition::single(int n_agents) {
  std::vector<int> all(n_agents);
  for (int j = 0; j < n_agents; ++j) all[j] = j;
  return ClusterPartition(n_agents, {all});
}

ClusterPartition::ClusterPartition(int n_agents, std::vector<std::vector<int>> groups)
    : n_agents_(n_agents), groups_(std::move(groups)), group_of_(n_agents, -1) {
  if (groups_.empty()) throw InputError("partition needs at least one group");
  for (int g = 0; g < static_cast<int>(groups_.size()); ++g) {
    if (groups_[g].empty()) throw InputError("empty cluster group " + std::to_string(g));
    for (int j : groups_[g]) {
      if (j < 0 || j >= n_agents) throw InputError("cluster index out of range: " + std::to_string(j));
      if (group_of_[j] != -1) throw InputError("agent " + std::to_string(j) + " in two clusters");
      group_of_[j] = g;
    }
  }
  for (int j = 0; j < n_agents; ++j)
    if (group_of_[j] == -1) throw InputError("agent " + std::to_string(j) + " not covered by partition");
}

Vector expectation(const ScenarioSpace& space, const Allocation& Y, const PricingVector& Q) {
  if (Y.agents() != Q.agents() || Y.scenarios() != Q.scenarios() || Y.scenarios() != space.size())
    throw InputError("expectation: dimension mismatch");
  Vector out = Vector::Zero(Y.agents());
  for (int j = 0; j < Y.agents(); ++j) {
    double acc = 0.0;
    for (int w = 0; w < Y.scenarios(); ++w) acc += space.prob(w) * Q(j, w) * Y(j, w);
    out[j] = acc;
  }
  return out;
}

Vector expectation(const ScenarioSpace& space, const Allocation& Y) {
  if (Y.scenarios() != space.size()) throw InputError("expectation: dimension mismatch");
  Vector out = Vector::Zero(Y.agents());
  for (int j = 0; j < Y.agents(); ++j) {
    double acc = 0.0;
    for (int w = 0; w < Y.scenarios(); ++w) acc += space.prob(w) * Y(j, w);
    out[j] = acc;
  }
  return out;
}

Vector aggregate(const Allocation& Y) {
  Vector out = Vector::Zero(Y.scenarios());
  for (int w = 0; w < Y.scenarios(); ++w) {
    double acc = 0.0;
    for (int j = 0; j < Y.agents(); ++j) acc += Y(j, w);
    out[w] = acc;
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int row, int col) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  auto [ptr, ec] = std::from_chars(b, e, v);
  while (ptr < e && (*ptr == ' ' || *ptr == '\t')) ++ptr;
  if (ec != std::errc{} || ptr != e)
    throw InputError("malformed numeric field at row " + std::to_string(row) + ", column " + std::to_string(col));
  if (!std::isfinite(v))
    throw InputError("non-finite entry at row " + std::to_string(row) + ", column " + std::to_string(col));
  return v;
}

}  // namespace

std::pair<ScenarioSpace, Allocation> load_scenarios(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open scenario file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw InputError("empty scenario file: " + path);
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "scenario" || header[1] != "prob")
    throw InputError("bad header, expected scenario,prob,X1,...,XN");
  const int n_agents = static_cast<int>(header.size()) - 2;
  for (int j = 0; j < n_agents; ++j)
    if (header[2 + j] != "X" + std::to_string(j + 1))
      throw InputError("bad header, expected column X" + std::to_string(j + 1));

  std::vector<std::string> labels;
  std::vector<double> probs;
  std::vector<double> entries;  // row-major scenario rows
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != n_agents + 2)
      throw InputError("malformed row " + std::to_string(row) + ": expected " +
                       std::to_string(n_agents + 2) + " fields, got " + std::to_string(fields.size()));
    labels.push_back(fields[0]);
    probs.push_back(parse_double(fields[1], row, 2));
    for (int j = 0; j < n_agents; ++j) entries.push_back(parse_double(fields[2 + j], row, 3 + j));
  }
  const int m = static_cast<int>(probs.size());
  if (m == 0) throw InputError("scenario file has no data rows");

  Vector p(m);
  for (int w = 0; w < m; ++w) p[w] = probs[w];
  Matrix X(n_agents, m);
  for (int w = 0; w < m; ++w)
    for (int j = 0; j < n_agents; ++j) X(j, w) = entries[static_cast<size_t>(w) * n_agents + j];
  return {ScenarioSpace(std::move(labels), std::move(p)), Allocation(std::move(X))};
}

void save_scenarios(const std::string& path, const ScenarioSpace& space, const Allocation& X) {
  if (X.scenarios() != space.size()) throw InputError("save_scenarios: dimension mismatch");
  std::ofstream out(path);
  if (!out) throw InputError("cannot write scenario file: " + path);
  out << "scenario,prob";
  for (int j = 0; j < X.agents(); ++j) out << ",X" << (j + 1);
  out << "\n";
  char buf[32];
  for (int w = 0; w < space.size(); ++w) {
    out << space.labels()[w];
    std::snprintf(buf, sizeof(buf), "%.17g", space.prob(w));
    out << ',' << buf;
    for (int j = 0; j < X.agents(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", X(j, w));
      out << ',' << buf;
    }
    out << "\n";
  }
}

}  // namespace msorte

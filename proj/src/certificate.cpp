#include "msorte/certificate.hpp"

#include <cstdint>
#include <cstdio>

#include <json.hpp>

namespace msorte {

namespace {

void put_number(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

void put_vector(std::string& out, const Vector& v) {
  out += '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    put_number(out, v[i]);
  }
  out += ']';
}

void put_matrix(std::string& out, const Matrix& m) {
  out += '[';
  for (int r = 0; r < m.rows(); ++r) {
    if (r) out += ',';
    put_vector(out, m.row(r));
  }
  out += ']';
}

Matrix parse_matrix(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw InputError(std::string("certificate: ") + what + " must be an array of rows");
  const auto rows = j.size();
  const auto cols = j[0].size();
  Matrix m(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols)
      throw InputError(std::string("certificate: ragged rows in ") + what);
    for (size_t c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

Vector parse_vector(const nlohmann::json& j, const char* what) {
  if (!j.is_array()) throw InputError(std::string("certificate: ") + what + " must be an array");
  Vector v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

}  // namespace

std::string certificate_to_json(const EquilibriumCertificate& cert) {
  std::string out;
  out.reserve(4096);
  out += "{\"triple\":{\"y_tilde\":";
  put_matrix(out, cert.triple.Y_tilde.values());
  out += ",\"q_density\":";
  put_matrix(out, cert.triple.Q.densities());
  out += ",\"a\":";
  put_vector(out, cert.triple.a);
  out += ",\"budget\":";
  put_number(out, cert.triple.A.A);
  out += "},\"lambda\":";
  put_number(out, cert.lambda);
  out += ",\"values\":{\"primal\":";
  put_number(out, cert.primal_value);
  out += ",\"dual\":";
  put_number(out, cert.dual_value);
  out += ",\"gap\":";
  put_number(out, cert.gap);
  out += "},\"residuals\":{\"clearing_max\":";
  put_number(out, cert.residuals.clearing_max);
  out += ",\"budget_expectation_max\":";
  put_number(out, cert.residuals.budget_expectation_max);
  out += ",\"nash_max_improvement\":";
  put_number(out, cert.residuals.nash_max_improvement);
  out += ",\"fairness_min_slack\":";
  put_number(out, cert.residuals.fairness_min_slack);
  out += ",\"measurability_max_spread\":";
  put_number(out, cert.residuals.measurability_max_spread);
  out += ",\"fixed_q_consistency\":";
  put_number(out, cert.residuals.fixed_q_consistency);
  out += "},\"flags\":{\"unique\":";
  out += cert.flags.unique ? "true" : "false";
  out += ",\"differentiable\":";
  out += cert.flags.differentiable ? "true" : "false";
  out += ",\"oracle_checked\":";
  out += cert.flags.oracle_checked ? "true" : "false";
  out += "},\"meta\":{\"config_hash\":\"";
  out += cert.config_hash;
  out += "\",\"version\":\"";
  out += cert.version;
  out += "\"}}\n";
  return out;
}

EquilibriumCertificate certificate_from_json(const std::string& text,
                                             const ScenarioSpace& space) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("certificate: invalid JSON: ") + e.what());
  }
  EquilibriumCertificate cert;
  try {
    const auto& t = j.at("triple");
    Matrix yt = parse_matrix(t.at("y_tilde"), "y_tilde");
    Matrix qd = parse_matrix(t.at("q_density"), "q_density");
    if (yt.cols() != space.size() || qd.cols() != space.size())
      throw InputError("certificate: scenario count mismatch with data");
    cert.triple.Y_tilde = Allocation(std::move(yt));
    cert.triple.Q = PricingVector(space, std::move(qd));
    cert.triple.a = parse_vector(t.at("a"), "a");
    cert.triple.A.A = t.at("budget").get<double>();
    cert.lambda = j.at("lambda").get<double>();
    const auto& v = j.at("values");
    cert.primal_value = v.at("primal").get<double>();
    cert.dual_value = v.at("dual").get<double>();
    cert.gap = v.at("gap").get<double>();
    const auto& r = j.at("residuals");
    cert.residuals.clearing_max = r.at("clearing_max").get<double>();
    cert.residuals.budget_expectation_max = r.at("budget_expectation_max").get<double>();
    cert.residuals.nash_max_improvement = r.at("nash_max_improvement").get<double>();
    cert.residuals.fairness_min_slack = r.at("fairness_min_slack").get<double>();
    cert.residuals.measurability_max_spread = r.at("measurability_max_spread").get<double>();
    cert.residuals.fixed_q_consistency = r.at("fixed_q_consistency").get<double>();
    const auto& f = j.at("flags");
    cert.flags.unique = f.at("unique").get<bool>();
    cert.flags.differentiable = f.at("differentiable").get<bool>();
    cert.flags.oracle_checked = f.at("oracle_checked").get<bool>();
    const auto& m = j.at("meta");
    cert.config_hash = m.at("config_hash").get<std::string>();
    cert.version = m.at("version").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("certificate: missing or mistyped field: ") + e.what());
  }
  return cert;
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace msorte

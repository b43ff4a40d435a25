#pragma once

#include <fstream>

#include <json.hpp>

#include "hfi/factor/estimate.hpp"
#include "hfi/sim/dgp.hpp"
#include "hfi/ssm/model.hpp"

namespace hfi::io {

using json = nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j) {
  const Index rows = static_cast<Index>(j.size());
  require(rows > 0, "matrix_from_json: empty matrix");
  const Index cols = static_cast<Index>(j.at(0).size());
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index c = 0; c < cols; ++c)
      m(i, c) = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(c)).get<double>();
  return m;
}

inline json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline Vector vector_from_json(const json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i)
    v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

// --- DgpSpec

inline json dgp_to_json(const sim::DgpSpec& spec) {
  json j;
  j["label"] = spec.label;
  j["periods"] = spec.periods;
  j["loadings"] = matrix_to_json(spec.loadings);
  j["idio_var"] = vector_to_json(spec.idio_var);
  j["idio_ar"] = vector_to_json(spec.idio_ar);
  j["block_shares"] = spec.block_shares;
  json sizes = json::array();
  for (Index b : spec.block_sizes) sizes.push_back(b);
  j["block_sizes"] = sizes;
  json var;
  var["order"] = spec.dynamics.order;
  json coefs = json::array();
  for (const auto& A : spec.dynamics.coefs) coefs.push_back(matrix_to_json(A));
  var["coefs"] = coefs;
  var["innov_cov"] = matrix_to_json(spec.dynamics.innov_cov);
  j["var"] = var;
  return j;
}

inline sim::DgpSpec dgp_from_json(const json& j) {
  sim::DgpSpec spec;
  spec.label = j.value("label", "unnamed");
  spec.periods = j.at("periods").get<Index>();
  spec.loadings = matrix_from_json(j.at("loadings"));
  spec.idio_var = vector_from_json(j.at("idio_var"));
  spec.idio_ar = vector_from_json(j.at("idio_ar"));
  spec.block_shares = j.at("block_shares").get<std::vector<double>>();
  for (const auto& b : j.at("block_sizes"))
    spec.block_sizes.push_back(b.get<Index>());
  const json& var = j.at("var");
  spec.dynamics.order = var.at("order").get<int>();
  for (const auto& A : var.at("coefs"))
    spec.dynamics.coefs.push_back(matrix_from_json(A));
  spec.dynamics.innov_cov = matrix_from_json(var.at("innov_cov"));
  spec.validate();
  return spec;
}

// --- StateSpaceModel dump/restore

inline json ssm_to_json(const ssm::StateSpaceModel& m) {
  json j;
  j["obs_load"] = matrix_to_json(m.obs_load);
  if (m.obs_intercept.size() > 0)
    j["obs_intercept"] = matrix_to_json(m.obs_intercept);
  j["obs_noise_var"] = vector_to_json(m.obs_noise_var);
  j["trans_mat"] = matrix_to_json(m.trans_mat);
  j["trans_cov"] = matrix_to_json(m.trans_cov);
  j["init_mean"] = vector_to_json(m.init_mean);
  j["init_cov"] = matrix_to_json(m.init_cov);
  if (m.obs_load_first) j["obs_load_first"] = matrix_to_json(*m.obs_load_first);
  if (m.obs_noise_first)
    j["obs_noise_first"] = vector_to_json(*m.obs_noise_first);
  j["layout"] = {{"n_factors", m.layout.n_factors},
                 {"factor_lags", m.layout.factor_lags},
                 {"n_appended", m.layout.n_appended}};
  return j;
}

inline ssm::StateSpaceModel ssm_from_json(const json& j) {
  ssm::StateSpaceModel m;
  m.obs_load = matrix_from_json(j.at("obs_load"));
  if (j.contains("obs_intercept"))
    m.obs_intercept = matrix_from_json(j.at("obs_intercept"));
  m.obs_noise_var = vector_from_json(j.at("obs_noise_var"));
  m.trans_mat = matrix_from_json(j.at("trans_mat"));
  m.trans_cov = matrix_from_json(j.at("trans_cov"));
  m.init_mean = vector_from_json(j.at("init_mean"));
  m.init_cov = matrix_from_json(j.at("init_cov"));
  if (j.contains("obs_load_first"))
    m.obs_load_first = matrix_from_json(j.at("obs_load_first"));
  if (j.contains("obs_noise_first"))
    m.obs_noise_first = vector_from_json(j.at("obs_noise_first"));
  const json& lay = j.at("layout");
  m.layout.n_factors = lay.at("n_factors").get<Index>();
  m.layout.factor_lags = lay.at("factor_lags").get<int>();
  m.layout.n_appended = lay.at("n_appended").get<Index>();
  m.validate();
  return m;
}

// --- factor estimate sidecar

inline json factor_estimate_to_json(const factor::FactorEstimate& est) {
  json j;
  j["method"] = factor::method_name(est.method);
  j["idio_var"] = vector_to_json(est.idio_var);
  j["factor_cov"] = matrix_to_json(est.factor_cov);
  if (est.ar_coefs.size() > 0) j["ar_coefs"] = vector_to_json(est.ar_coefs);
  if (est.dynamics) {
    json var;
    var["order"] = est.dynamics->order;
    json coefs = json::array();
    for (const auto& A : est.dynamics->coefs) coefs.push_back(matrix_to_json(A));
    var["coefs"] = coefs;
    var["innov_cov"] = matrix_to_json(est.dynamics->innov_cov);
    var["shrunk"] = est.dynamics->shrunk;
    j["var"] = var;
  }
  j["diagnostics"] = {{"converged", est.diag.converged},
                      {"iterations", est.diag.iterations},
                      {"heywood", est.diag.heywood},
                      {"rho_capped", est.diag.rho_capped},
                      {"var_shrunk", est.diag.var_shrunk}};
  if (!est.diag.loglik_path.empty())
    j["diagnostics"]["loglik_final"] = est.diag.loglik_path.back();
  return j;
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

inline json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

/// FNV-1a over the file bytes; used by the run manifest.
inline std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

}  // namespace hfi::io

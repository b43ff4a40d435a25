#pragma once

#include <string>
#include <vector>

#include "hfi/panel.hpp"

namespace hfi::impute {

enum class Method { TP, EM, CL, TP_STAR, KS, KS_STAR };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::TP: return "tp";
    case Method::EM: return "em";
    case Method::CL: return "cl";
    case Method::TP_STAR: return "tp-star";
    case Method::KS: return "ks";
    case Method::KS_STAR: return "ks-star";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  for (Method m : {Method::TP, Method::EM, Method::CL, Method::TP_STAR,
                   Method::KS, Method::KS_STAR})
    if (s == method_name(m)) return m;
  throw std::invalid_argument("unknown imputation method '" + s + "'");
}

enum class Provenance { Observed, Imputed };

/// Fitted parameters of the imputation model; which fields are meaningful
/// depends on the method.
struct FitParams {
  Vector target_loading;    // Lambda_Y (TP/TP*/KS/KS*) or beta_GLS (CL)
  double intercept = 0.0;
  double rho = 0.0;         // AR(1) of the target error, when modeled
  Matrix factor_lag_coefs;  // TP*: row l = coefficients on F_{s-l}
  int iterations = 0;
  bool converged = true;
  bool rho_sign_binding = false;
};

/// A completed high-frequency target series. `series` passes observed values
/// through bitwise; `fitted` keeps the raw model prediction at every index
/// for dispersion diagnostics.
struct ImputationResult {
  Vector series;
  Vector fitted;
  std::vector<Provenance> provenance;
  Method method = Method::TP;
  FitParams params;

  Index size() const { return series.size(); }

  Index imputed_count() const {
    Index n = 0;
    for (auto p : provenance)
      if (p == Provenance::Imputed) ++n;
    return n;
  }

  /// Pass observed values through and take `fitted` elsewhere.
  static ImputationResult assemble(const MaskedSeries& y, Vector fitted,
                                   Method method) {
    require(fitted.size() == y.size(), "ImputationResult: length mismatch");
    ImputationResult res;
    res.method = method;
    res.fitted = std::move(fitted);
    res.series.resize(y.size());
    res.provenance.resize(static_cast<std::size_t>(y.size()));
    for (Index s = 0; s < y.size(); ++s) {
      if (y.observed[s]) {
        res.series[s] = y.values[s];
        res.provenance[static_cast<std::size_t>(s)] = Provenance::Observed;
      } else {
        res.series[s] = res.fitted[s];
        res.provenance[static_cast<std::size_t>(s)] = Provenance::Imputed;
      }
    }
    if (!res.series.allFinite())
      throw std::runtime_error("ImputationResult: non-finite imputed values");
    return res;
  }
};

}  // namespace hfi::impute

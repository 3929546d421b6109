#pragma once

#include <string>
#include <vector>

#include "oasis/ident.hpp"
#include "oasis/var_engine.hpp"

namespace oasis {

/// Responses to one-standard-deviation structural shocks. values[h](i, j) is
/// the response of variable i at horizon h to shock j.
struct IrfSet {
  std::vector<Matrix> values;
  std::string scheme;
  int horizon = 0;
};

inline constexpr int kDefaultHorizon = 40;

/// IRF(h) = Ψ_h B.
IrfSet structural_irf(const MaCoefficients& ma, const IdentificationResult& ident);

/// IRF(h) = Θ_h B.
IrfSet lp_structural_irf(const LpResult& lp, const IdentificationResult& ident);

/// IRF(h) R for every horizon. With R = A1⁻¹A2 (so u2 = R'u1) this maps
/// scheme-1 responses to scheme-2 responses, since cov(X, u2) = cov(X, u1) R.
IrfSet rotate_irf(const IrfSet& base, const RotationMatrix& R, std::string scheme = {});

}  // namespace oasis

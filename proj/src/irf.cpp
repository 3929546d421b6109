#include "oasis/irf.hpp"

namespace oasis {

namespace {

IrfSet apply_impact(const std::vector<Matrix>& coefs, const IdentificationResult& ident) {
  IrfSet out;
  out.scheme = ident.scheme.label();
  out.horizon = static_cast<int>(coefs.size()) - 1;
  out.values.reserve(coefs.size());
  for (const Matrix& c : coefs) {
    if (c.cols() != ident.B.rows()) throw Error(ErrorKind::DimensionMismatch, "coefficient and impact matrices disagree");
    out.values.push_back(c * ident.B);
  }
  return out;
}

}  // namespace

IrfSet structural_irf(const MaCoefficients& ma, const IdentificationResult& ident) {
  return apply_impact(ma.psi, ident);
}

IrfSet lp_structural_irf(const LpResult& lp, const IdentificationResult& ident) {
  return apply_impact(lp.theta, ident);
}

IrfSet rotate_irf(const IrfSet& base, const RotationMatrix& R, std::string scheme) {
  IrfSet out;
  out.scheme = scheme.empty() ? base.scheme + "*R" : std::move(scheme);
  out.horizon = base.horizon;
  out.values.reserve(base.values.size());
  for (const Matrix& m : base.values) {
    if (m.cols() != R.dim()) throw Error(ErrorKind::DimensionMismatch, "rotation size does not match the shocks");
    out.values.push_back(m * R.values());
  }
  return out;
}

}  // namespace oasis

#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "etisac/types.h"

namespace etisac {

/// Hermitian operator used by linear functionals on complex PSD blocks:
/// the identity, an outer product u u^H, or a dense Hermitian matrix.
struct HermOp {
  enum class Kind { kIdentity, kOuter, kDense };
  Kind kind = Kind::kIdentity;
  CVec u;
  CMat dense;

  static HermOp identity() { return {}; }
  static HermOp outer(CVec v) { return {Kind::kOuter, std::move(v), {}}; }
  static HermOp matrix(CMat m) { return {Kind::kDense, {}, std::move(m)}; }
};

/// Linear functional on the product cone plus a constant:
///   constant + sum coeff Re tr(op X_block) + sum coeff S_block(row, col) + sum coeff x_index
/// Symmetric-block entries refer to the upper triangle (row <= col).
struct ConeExpr {
  struct Herm {
    int block;
    int op;
    double coeff;
  };
  struct Sym {
    int block;
    int row;
    int col;
    double coeff;
  };
  struct Lin {
    int index;
    double coeff;
  };
  double constant = 0.0;
  std::vector<Herm> herm;
  std::vector<Sym> sym;
  std::vector<Lin> lin;

  ConeExpr& add(const ConeExpr& other, double scale = 1.0);
  ConeExpr scaled(double s) const {
    ConeExpr out;
    out.add(*this, s);
    return out;
  }
  static ConeExpr lin_var(int index, double coeff = 1.0) {
    ConeExpr e;
    e.lin.push_back({index, coeff});
    return e;
  }
  static ConeExpr sym_entry(int block, int row, int col, double coeff = 1.0) {
    ConeExpr e;
    e.sym.push_back({block, std::min(row, col), std::max(row, col), coeff});
    return e;
  }
};

/// Point in the product of complex Hermitian PSD blocks, real symmetric PSD
/// blocks and the nonnegative orthant.
struct ConePoint {
  std::vector<CMat> herm;
  std::vector<MatX> sym;
  VecX lin;
};

/// minimize <C, X>  subject to  A_i(X) = b_i,  X in the cone.
/// Each constraint is a ConeExpr whose constant is ignored; the objective
/// constant is carried into the reported values.
struct ConeProblem {
  std::vector<int> herm_dims;
  std::vector<int> sym_dims;
  int n_lin = 0;
  std::vector<HermOp> ops;
  ConeExpr objective;
  std::vector<ConeExpr> rows;
  std::vector<double> rhs;

  int add_op(HermOp op) {
    ops.push_back(std::move(op));
    return static_cast<int>(ops.size()) - 1;
  }
  int add_lin(int count = 1) {
    const int first = n_lin;
    n_lin += count;
    return first;
  }
  int add_sym(int dim) {
    sym_dims.push_back(dim);
    return static_cast<int>(sym_dims.size()) - 1;
  }
  /// expr == 0, the constant moving to the right-hand side.
  void add_equality(const ConeExpr& expr);
  /// expr >= 0 through a fresh slack; returns the slack index.
  int add_inequality(const ConeExpr& expr);
  /// Barrier parameter of the cone.
  double degree() const;
  void validate() const;
};

struct ConeOptions {
  double gap_tol = 1e-7;   // relative duality gap
  double feas_tol = 1e-6;  // relative primal and dual residuals
  int max_iters = 100;
  bool parallel = true;
};

struct ConeResult {
  ConePoint x;
  ConePoint z;
  VecX y;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double rel_gap = 0.0;
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string status;  // optimal, max_iterations, stalled
};

/// Infeasible primal-dual interior-point method with the HKM direction and
/// Mehrotra predictor-corrector steps.
ConeResult solve_cone(const ConeProblem& prob, const ConeOptions& opts = {});

/// Value of a functional at a point, using the problem's operators.
double evaluate(const ConeProblem& prob, const ConeExpr& e, const ConePoint& x);

/// Schur complement M_ij = <A_i, X A_j Z^{-1}> of the Newton system. The
/// OpenMP kernel and the serial reference must agree to rounding.
MatX schur_complement_serial(const ConeProblem& prob, const ConePoint& x, const ConePoint& z);
MatX schur_complement_parallel(const ConeProblem& prob, const ConePoint& x, const ConePoint& z);

}  // namespace etisac

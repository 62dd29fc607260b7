#include "etisac/conic_solver.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace etisac {

ConeExpr& ConeExpr::add(const ConeExpr& other, double scale) {
  constant += scale * other.constant;
  for (const auto& h : other.herm) herm.push_back({h.block, h.op, scale * h.coeff});
  for (const auto& s : other.sym) sym.push_back({s.block, s.row, s.col, scale * s.coeff});
  for (const auto& l : other.lin) lin.push_back({l.index, scale * l.coeff});
  return *this;
}

void ConeProblem::add_equality(const ConeExpr& expr) {
  ConeExpr row = expr;
  row.constant = 0.0;
  rows.push_back(std::move(row));
  rhs.push_back(-expr.constant);
}

int ConeProblem::add_inequality(const ConeExpr& expr) {
  const int s = add_lin();
  ConeExpr row = expr;
  row.lin.push_back({s, -1.0});
  add_equality(row);
  return s;
}

double ConeProblem::degree() const {
  double d = n_lin;
  for (int n : herm_dims) d += n;
  for (int n : sym_dims) d += n;
  return d;
}

void ConeProblem::validate() const {
  if (rows.size() != rhs.size()) throw DomainError("constraint and right-hand side counts differ");
  if (rows.empty()) throw DomainError("conic problem needs at least one constraint");
  for (const auto& op : ops) {
    if (op.kind == HermOp::Kind::kDense && op.dense.rows() != op.dense.cols())
      throw DomainError("dense operator must be square");
  }
  auto check = [&](const ConeExpr& e) {
    for (const auto& h : e.herm) {
      if (h.block < 0 || h.block >= static_cast<int>(herm_dims.size())) throw DomainError("Hermitian block index out of range");
      if (h.op < 0 || h.op >= static_cast<int>(ops.size())) throw DomainError("operator index out of range");
      const auto& op = ops[h.op];
      const int n = herm_dims[h.block];
      if ((op.kind == HermOp::Kind::kOuter && op.u.size() != n) ||
          (op.kind == HermOp::Kind::kDense && op.dense.rows() != n))
        throw DomainError("operator size differs from its block");
    }
    for (const auto& s : e.sym) {
      if (s.block < 0 || s.block >= static_cast<int>(sym_dims.size())) throw DomainError("symmetric block index out of range");
      if (s.row < 0 || s.col < s.row || s.col >= sym_dims[s.block]) throw DomainError("symmetric entry out of range");
    }
    for (const auto& l : e.lin)
      if (l.index < 0 || l.index >= n_lin) throw DomainError("linear variable index out of range");
  };
  check(objective);
  for (const auto& r : rows) check(r);
}

double evaluate(const ConeProblem& prob, const ConeExpr& e, const ConePoint& x) {
  double v = e.constant;
  for (const auto& h : e.herm) {
    const auto& op = prob.ops.at(h.op);
    const CMat& w = x.herm.at(h.block);
    double t = 0.0;
    switch (op.kind) {
      case HermOp::Kind::kIdentity: t = w.trace().real(); break;
      case HermOp::Kind::kOuter: t = op.u.dot(w * op.u).real(); break;
      case HermOp::Kind::kDense: t = op.dense.cwiseProduct(w.transpose()).sum().real(); break;
    }
    v += h.coeff * t;
  }
  for (const auto& s : e.sym) v += s.coeff * x.sym.at(s.block)(s.row, s.col);
  for (const auto& l : e.lin) v += l.coeff * x.lin[l.index];
  return v;
}

namespace {

// Constraint data regrouped by cone block.
struct HBlock {
  int dim = 0;
  std::vector<int> outer;  // op ids
  std::vector<int> dense;  // op ids, identity included
  CMat u;                  // dim x outer
  MatX p;                  // (outer + dense) x m coefficients
  CMat c;                  // objective
};

struct SBlock {
  int dim = 0;
  std::vector<std::pair<int, MatX>> rows;
  MatX c;
};

struct Compiled {
  int m = 0;
  std::vector<HBlock> h;
  std::vector<SBlock> s;
  MatX a_lin;  // m x n_lin
  VecX c_lin;
  VecX b;
  double objective_constant = 0.0;
  const std::vector<HermOp>* ops = nullptr;
};

MatX sym_matrix(int dim, const ConeExpr::Sym& s) {
  MatX a = MatX::Zero(dim, dim);
  if (s.row == s.col) {
    a(s.row, s.row) = s.coeff;
  } else {
    a(s.row, s.col) = 0.5 * s.coeff;
    a(s.col, s.row) = 0.5 * s.coeff;
  }
  return a;
}

Compiled compile(const ConeProblem& prob) {
  Compiled c;
  c.m = static_cast<int>(prob.rows.size());
  c.ops = &prob.ops;
  const int nh = static_cast<int>(prob.herm_dims.size());
  std::vector<std::map<int, int>> local(nh);
  c.h.resize(nh);
  auto note_op = [&](int block, int op) {
    auto& loc = local[block];
    if (loc.count(op)) return;
    loc[op] = -1;
  };
  for (const auto& r : prob.rows)
    for (const auto& t : r.herm) note_op(t.block, t.op);
  for (int b = 0; b < nh; ++b) {
    auto& hb = c.h[b];
    hb.dim = prob.herm_dims[b];
    for (auto& [op, idx] : local[b]) {
      if (prob.ops[op].kind == HermOp::Kind::kOuter) hb.outer.push_back(op);
      else hb.dense.push_back(op);
    }
    int k = 0;
    for (int op : hb.outer) local[b][op] = k++;
    for (int op : hb.dense) local[b][op] = k++;
    hb.u = CMat(hb.dim, static_cast<Eigen::Index>(hb.outer.size()));
    for (std::size_t j = 0; j < hb.outer.size(); ++j) hb.u.col(static_cast<Eigen::Index>(j)) = prob.ops[hb.outer[j]].u;
    hb.p = MatX::Zero(k, c.m);
    hb.c = CMat::Zero(hb.dim, hb.dim);
  }
  c.s.resize(prob.sym_dims.size());
  for (std::size_t b = 0; b < prob.sym_dims.size(); ++b) {
    c.s[b].dim = prob.sym_dims[b];
    c.s[b].c = MatX::Zero(c.s[b].dim, c.s[b].dim);
  }
  c.a_lin = MatX::Zero(c.m, prob.n_lin);
  c.c_lin = VecX::Zero(prob.n_lin);
  c.b = VecX(c.m);
  for (int i = 0; i < c.m; ++i) {
    const auto& r = prob.rows[i];
    c.b[i] = prob.rhs[i];
    for (const auto& t : r.herm) c.h[t.block].p(local[t.block][t.op], i) += t.coeff;
    std::map<int, MatX> per_block;
    for (const auto& s : r.sym) {
      auto it = per_block.try_emplace(s.block, MatX::Zero(prob.sym_dims[s.block], prob.sym_dims[s.block])).first;
      it->second += sym_matrix(prob.sym_dims[s.block], s);
    }
    for (auto& [blk, mat] : per_block) c.s[blk].rows.emplace_back(i, std::move(mat));
    for (const auto& l : r.lin) c.a_lin(i, l.index) += l.coeff;
  }
  c.objective_constant = prob.objective.constant;
  for (const auto& t : prob.objective.herm) {
    const auto& op = prob.ops[t.op];
    auto& cb = c.h[t.block].c;
    switch (op.kind) {
      case HermOp::Kind::kIdentity: cb.diagonal().array() += t.coeff; break;
      case HermOp::Kind::kOuter: cb += t.coeff * op.u * op.u.adjoint(); break;
      case HermOp::Kind::kDense: cb += t.coeff * op.dense; break;
    }
  }
  for (const auto& s : prob.objective.sym) c.s[s.block].c += sym_matrix(prob.sym_dims[s.block], s);
  for (const auto& l : prob.objective.lin) c.c_lin[l.index] += l.coeff;
  return c;
}

double re_trace(const CMat& a, const CMat& b) { return a.cwiseProduct(b.transpose()).sum().real(); }

const CMat& dense_of(const Compiled& c, int op, const CMat& identity_stand_in) {
  const auto& o = (*c.ops)[op];
  return o.kind == HermOp::Kind::kDense ? o.dense : identity_stand_in;
}

// Operator values Re tr(op K) for the ops of one block, in local order.
VecX op_values(const Compiled& c, const HBlock& hb, const CMat& k) {
  const Eigen::Index no = static_cast<Eigen::Index>(hb.outer.size());
  VecX v(hb.p.rows());
  if (no > 0) {
    const CMat ku = k * hb.u;
    for (Eigen::Index j = 0; j < no; ++j) v[j] = hb.u.col(j).dot(ku.col(j)).real();
  }
  for (std::size_t d = 0; d < hb.dense.size(); ++d) {
    const auto& o = (*c.ops)[hb.dense[d]];
    v[no + static_cast<Eigen::Index>(d)] = o.kind == HermOp::Kind::kDense ? re_trace(o.dense, k) : k.trace().real();
  }
  return v;
}

CMat op_combination(const Compiled& c, const HBlock& hb, const VecX& w) {
  const Eigen::Index no = static_cast<Eigen::Index>(hb.outer.size());
  CMat out = CMat::Zero(hb.dim, hb.dim);
  if (no > 0) out = hb.u * w.head(no).asDiagonal() * hb.u.adjoint();
  for (std::size_t d = 0; d < hb.dense.size(); ++d) {
    const double wd = w[no + static_cast<Eigen::Index>(d)];
    if (wd == 0.0) continue;
    const auto& o = (*c.ops)[hb.dense[d]];
    if (o.kind == HermOp::Kind::kDense) out += wd * o.dense;
    else out.diagonal().array() += wd;
  }
  return out;
}

// A(K) for a direction-like point (blocks may be non-Hermitian).
VecX apply_a(const Compiled& c, const std::vector<CMat>& kh, const std::vector<MatX>& ks, const VecX& kl) {
  VecX out = c.a_lin * kl;
  for (std::size_t b = 0; b < c.h.size(); ++b) out += c.h[b].p.transpose() * op_values(c, c.h[b], kh[b]);
  for (std::size_t b = 0; b < c.s.size(); ++b)
    for (const auto& [i, a] : c.s[b].rows) out[i] += a.cwiseProduct(ks[b]).sum();
  return out;
}

void apply_at(const Compiled& c, const VecX& y, std::vector<CMat>& kh, std::vector<MatX>& ks, VecX& kl) {
  kh.resize(c.h.size());
  ks.resize(c.s.size());
  for (std::size_t b = 0; b < c.h.size(); ++b) kh[b] = op_combination(c, c.h[b], c.h[b].p * y);
  for (std::size_t b = 0; b < c.s.size(); ++b) {
    ks[b] = MatX::Zero(c.s[b].dim, c.s[b].dim);
    for (const auto& [i, a] : c.s[b].rows) ks[b] += y[i] * a;
  }
  kl = c.a_lin.transpose() * y;
}

// Op-pair table T(a, b) = Re tr(op_a X op_b Z^{-1}) for one block.
MatX op_table(const Compiled& c, const HBlock& hb, const CMat& x, const CMat& zi, bool parallel) {
  const Eigen::Index no = static_cast<Eigen::Index>(hb.outer.size());
  const Eigen::Index nd = static_cast<Eigen::Index>(hb.dense.size());
  const Eigen::Index n = no + nd;
  MatX t(n, n);
  const CMat xu = x * hb.u;
  const CMat ziu = zi * hb.u;
  if (no > 0) {
    const CMat px = hb.u.adjoint() * xu;
    const CMat qz = hb.u.adjoint() * ziu;
    t.topLeftCorner(no, no) = px.cwiseProduct(qz.transpose()).real();
  }
  const CMat eye = CMat::Identity(hb.dim, hb.dim);
  std::vector<CMat> g(static_cast<std::size_t>(nd));
#pragma omp parallel for if (parallel) schedule(dynamic)
  for (Eigen::Index d = 0; d < nd; ++d) {
    const CMat& dm = dense_of(c, hb.dense[static_cast<std::size_t>(d)], eye);
    g[static_cast<std::size_t>(d)] = x * dm * zi;
  }
#pragma omp parallel for if (parallel) schedule(dynamic)
  for (Eigen::Index d = 0; d < nd; ++d) {
    const CMat& gd = g[static_cast<std::size_t>(d)];
    if (no > 0) {
      const CMat gu = gd * hb.u;
      for (Eigen::Index j = 0; j < no; ++j) {
        const double v = hb.u.col(j).dot(gu.col(j)).real();
        t(j, no + d) = v;
        t(no + d, j) = v;
      }
    }
    for (Eigen::Index e = 0; e < nd; ++e)
      t(no + e, no + d) = re_trace(dense_of(c, hb.dense[static_cast<std::size_t>(e)], eye), gd);
  }
  return 0.5 * (t + t.transpose());
}

MatX schur(const Compiled& c, const ConePoint& x, const std::vector<CMat>& zi_h, const std::vector<MatX>& zi_s,
           const VecX& z_lin, bool parallel) {
  MatX m = c.a_lin * (x.lin.array() / z_lin.array()).matrix().asDiagonal() * c.a_lin.transpose();
  for (std::size_t b = 0; b < c.h.size(); ++b) {
    const MatX t = op_table(c, c.h[b], x.herm[b], zi_h[b], parallel);
    m += c.h[b].p.transpose() * t * c.h[b].p;
  }
  for (std::size_t b = 0; b < c.s.size(); ++b) {
    const auto& rows = c.s[b].rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const MatX g = x.sym[b] * rows[i].second * zi_s[b];
      for (std::size_t j = 0; j < rows.size(); ++j)
        m(rows[j].first, rows[i].first) += rows[j].second.cwiseProduct(g.transpose()).sum();
    }
  }
  return 0.5 * (m + m.transpose());
}

template <typename M>
M inverse_spd(const M& a) {
  Eigen::LLT<M> llt(a);
  if (llt.info() != Eigen::Success) throw ConditioningError("cone iterate lost positive definiteness", INFINITY);
  return llt.solve(M::Identity(a.rows(), a.cols()));
}

// Largest step keeping a + alpha * d in the cone, capped at `cap`.
template <typename M>
double max_step(const M& a, const M& d, double cap) {
  Eigen::LLT<M> llt(a);
  if (llt.info() != Eigen::Success) return 0.0;
  const M l = llt.matrixL();
  const M li = l.template triangularView<Eigen::Lower>().solve(M::Identity(a.rows(), a.cols()));
  M s = li * d * li.adjoint();
  s = 0.5 * (s + s.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<M> es(s, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  return lo < 0.0 ? std::min(cap, -1.0 / lo) : cap;
}

double inner(const ConePoint& a, const ConePoint& b) {
  double v = a.lin.dot(b.lin);
  for (std::size_t i = 0; i < a.herm.size(); ++i) v += re_trace(a.herm[i], b.herm[i]);
  for (std::size_t i = 0; i < a.sym.size(); ++i) v += a.sym[i].cwiseProduct(b.sym[i]).sum();
  return v;
}

double norm(const ConePoint& a) { return std::sqrt(std::max(0.0, inner(a, a))); }

ConePoint axpy(const ConePoint& a, double s, const ConePoint& d) {
  ConePoint out = a;
  for (std::size_t i = 0; i < out.herm.size(); ++i) {
    out.herm[i] += s * d.herm[i];
    out.herm[i] = 0.5 * (out.herm[i] + out.herm[i].adjoint()).eval();
  }
  for (std::size_t i = 0; i < out.sym.size(); ++i) {
    out.sym[i] += s * d.sym[i];
    out.sym[i] = 0.5 * (out.sym[i] + out.sym[i].transpose()).eval();
  }
  out.lin += s * d.lin;
  return out;
}

ConePoint objective_point(const Compiled& c) {
  ConePoint p;
  for (const auto& hb : c.h) p.herm.push_back(hb.c);
  for (const auto& sb : c.s) p.sym.push_back(sb.c);
  p.lin = c.c_lin;
  return p;
}

// Jacobi-scaled Cholesky of the Schur complement. The diagonal spans many
// orders of magnitude near the optimum; scaling first keeps the small rows
// from drowning in rounding of the large ones.
class SchurFactor {
 public:
  explicit SchurFactor(const MatX& m) : d_(m.diagonal().cwiseAbs().cwiseMax(1e-300).cwiseSqrt().cwiseInverse()) {
    MatX s = d_.asDiagonal() * m * d_.asDiagonal();
    llt_.compute(s);
    if (llt_.info() == Eigen::Success) return;
    // Rank-deficient constraint sets: a tiny shift far below the tolerances.
    s.diagonal().array() += 1e-13;
    llt_.compute(s);
    if (llt_.info() != Eigen::Success) throw ConditioningError("Schur complement factorization failed", INFINITY);
  }
  VecX solve(const VecX& r) const { return d_.cwiseProduct(llt_.solve(d_.cwiseProduct(r))); }

 private:
  VecX d_;
  Eigen::LLT<MatX> llt_;
};

struct Direction {
  ConePoint dx, dz;
  VecX dy;
};

// HKM direction. h holds R_c Z^{-1} for the complementarity target
// R_c = sigma mu I - X Z - correction, formed as sigma mu Z^{-1} - X -
// correction Z^{-1} so the X Z Z^{-1} round trip never loses accuracy.
Direction hkm_direction(const Compiled& c, const SchurFactor& fact, const ConePoint& x, const ConePoint& rd,
                        const VecX& rp, const std::vector<CMat>& h_h, const std::vector<MatX>& h_s, const VecX& h_l,
                        const std::vector<CMat>& zi_h, const std::vector<MatX>& zi_s, const VecX& z_lin) {
  const std::size_t nh = c.h.size(), ns = c.s.size();
  std::vector<CMat> th(nh);
  std::vector<MatX> ts(ns);
  for (std::size_t b = 0; b < nh; ++b) th[b] = h_h[b] - x.herm[b] * rd.herm[b] * zi_h[b];
  for (std::size_t b = 0; b < ns; ++b) ts[b] = h_s[b] - x.sym[b] * rd.sym[b] * zi_s[b];
  const VecX tl = (h_l.array() - x.lin.array() * rd.lin.array() / z_lin.array()).matrix();
  const VecX rhs = rp - apply_a(c, th, ts, tl);
  Direction d;
  d.dy = fact.solve(rhs);
  std::vector<CMat> ah;
  std::vector<MatX> as;
  VecX al;
  apply_at(c, d.dy, ah, as, al);
  d.dz.herm.resize(nh);
  d.dz.sym.resize(ns);
  d.dx.herm.resize(nh);
  d.dx.sym.resize(ns);
  for (std::size_t b = 0; b < nh; ++b) {
    d.dz.herm[b] = rd.herm[b] - ah[b];
    const CMat k = h_h[b] - x.herm[b] * d.dz.herm[b] * zi_h[b];
    d.dx.herm[b] = 0.5 * (k + k.adjoint());
  }
  for (std::size_t b = 0; b < ns; ++b) {
    d.dz.sym[b] = rd.sym[b] - as[b];
    const MatX k = h_s[b] - x.sym[b] * d.dz.sym[b] * zi_s[b];
    d.dx.sym[b] = 0.5 * (k + k.transpose());
  }
  d.dz.lin = rd.lin - al;
  d.dx.lin = (h_l.array() - x.lin.array() * d.dz.lin.array() / z_lin.array()).matrix();

  // Refinement against the exact operators by conjugate gradients on the
  // Schur system, preconditioned with its factorization. Near the optimum
  // the factorization is inaccurate along a few nearly degenerate rows; a
  // plain fixed-point refinement stalls there while CG only needs a couple of
  // extra steps per outlying eigenvalue.
  auto lift = [&](const VecX& v, std::vector<CMat>& xh, std::vector<MatX>& xs, VecX& xl) {
    apply_at(c, v, ah, as, al);
    xh.resize(nh);
    xs.resize(ns);
    for (std::size_t b = 0; b < nh; ++b) {
      const CMat k2 = x.herm[b] * ah[b] * zi_h[b];
      xh[b] = 0.5 * (k2 + k2.adjoint());
    }
    for (std::size_t b = 0; b < ns; ++b) {
      const MatX k2 = x.sym[b] * as[b] * zi_s[b];
      xs[b] = 0.5 * (k2 + k2.transpose());
    }
    xl = (x.lin.array() * al.array() / z_lin.array()).matrix();
  };
  const double target = 1e-14 * (1.0 + rp.norm());
  VecX r = rp - apply_a(c, d.dx.herm, d.dx.sym, d.dx.lin);
  if (r.norm() <= target) return d;
  VecX delta = VecX::Zero(r.size()), best = delta;
  double best_norm = r.norm();
  VecX zr = fact.solve(r);
  VecX pdir = zr;
  double rz = r.dot(zr);
  std::vector<CMat> xh;
  std::vector<MatX> xs;
  VecX xl;
  for (int k = 0; k < 30; ++k) {
    lift(pdir, xh, xs, xl);
    const VecX q = apply_a(c, xh, xs, xl);
    const double pq = pdir.dot(q);
    if (!(pq > 0.0)) break;
    const double alpha = rz / pq;
    delta += alpha * pdir;
    r -= alpha * q;
    const double rn = r.norm();
    if (rn < best_norm) {
      best_norm = rn;
      best = delta;
    }
    if (rn <= target) break;
    zr = fact.solve(r);
    const double rz_next = r.dot(zr);
    pdir = zr + (rz_next / rz) * pdir;
    rz = rz_next;
  }
  if (best.isZero(0.0)) return d;
  lift(best, xh, xs, xl);
  d.dy += best;
  for (std::size_t b = 0; b < nh; ++b) {
    d.dz.herm[b] -= ah[b];
    d.dx.herm[b] += xh[b];
  }
  for (std::size_t b = 0; b < ns; ++b) {
    d.dz.sym[b] -= as[b];
    d.dx.sym[b] += xs[b];
  }
  d.dz.lin -= al;
  d.dx.lin += xl;
  return d;
}

double step_to_boundary(const ConePoint& a, const ConePoint& d) {
  double alpha = 1e30;
  for (std::size_t b = 0; b < a.herm.size(); ++b) alpha = std::min(alpha, max_step(a.herm[b], d.herm[b], alpha));
  for (std::size_t b = 0; b < a.sym.size(); ++b) alpha = std::min(alpha, max_step(a.sym[b], d.sym[b], alpha));
  for (Eigen::Index i = 0; i < a.lin.size(); ++i)
    if (d.lin[i] < 0.0) alpha = std::min(alpha, -a.lin[i] / d.lin[i]);
  return alpha;
}


}  // namespace

ConeResult solve_cone(const ConeProblem& prob_in, const ConeOptions& opts) {
  prob_in.validate();
  Compiled c = compile(prob_in);
  const int m = c.m;
  const double nu = prob_in.degree();

  // Row equilibration and objective scaling.
  VecX rscale(m);
  {
    VecX r2 = c.a_lin.rowwise().squaredNorm();
    for (const auto& hb : c.h) {
      VecX opn(hb.p.rows());
      const Eigen::Index no = static_cast<Eigen::Index>(hb.outer.size());
      for (Eigen::Index j = 0; j < no; ++j) opn[j] = hb.u.col(j).squaredNorm();
      for (std::size_t d = 0; d < hb.dense.size(); ++d) {
        const auto& o = prob_in.ops[hb.dense[d]];
        opn[no + static_cast<Eigen::Index>(d)] = o.kind == HermOp::Kind::kDense ? o.dense.norm() : std::sqrt(hb.dim);
      }
      r2 += (hb.p.array().square().colwise() * opn.array().square()).colwise().sum().transpose().matrix();
    }
    for (const auto& sb : c.s)
      for (const auto& [i, a] : sb.rows) r2[i] += a.squaredNorm();
    for (int i = 0; i < m; ++i) {
      if (!(r2[i] > 0.0)) throw DomainError("conic problem has an empty constraint row");
      rscale[i] = 1.0 / std::sqrt(r2[i]);
    }
  }
  for (auto& hb : c.h) hb.p = hb.p * rscale.asDiagonal();
  for (auto& sb : c.s)
    for (auto& [i, a] : sb.rows) a *= rscale[i];
  c.a_lin = rscale.asDiagonal() * c.a_lin;
  c.b = c.b.cwiseProduct(rscale);
  ConePoint cpt = objective_point(c);
  const double cnorm = std::max(norm(cpt), 1e-300);
  const double cscale = norm(cpt) > 0.0 ? 1.0 / cnorm : 1.0;
  for (auto& hb : c.h) hb.c *= cscale;
  for (auto& sb : c.s) sb.c *= cscale;
  c.c_lin *= cscale;
  cpt = objective_point(c);

  // Standard infeasible starting point.
  const double sqn = std::sqrt(nu);
  double xi = std::max(10.0, sqn), zeta = std::max(10.0, sqn);
  for (int i = 0; i < m; ++i) xi = std::max(xi, (1.0 + std::abs(c.b[i])));
  zeta = std::max(zeta, 1.0 + norm(cpt));
  ConePoint x, z;
  for (const auto& hb : c.h) {
    x.herm.push_back(xi * CMat::Identity(hb.dim, hb.dim));
    z.herm.push_back(zeta * CMat::Identity(hb.dim, hb.dim));
  }
  for (const auto& sb : c.s) {
    x.sym.push_back(xi * MatX::Identity(sb.dim, sb.dim));
    z.sym.push_back(zeta * MatX::Identity(sb.dim, sb.dim));
  }
  x.lin = VecX::Constant(prob_in.n_lin, xi);
  z.lin = VecX::Constant(prob_in.n_lin, zeta);
  VecX y = VecX::Zero(m);

  const double bnorm = c.b.norm();
  ConeResult res;
  res.status = "max_iterations";
  auto report = [&](double pobj, double dobj, double gap) {
    res.primal_objective = pobj / cscale + c.objective_constant;
    res.dual_objective = dobj / cscale + c.objective_constant;
    const double denom = std::max({std::abs(res.primal_objective), std::abs(res.dual_objective), 1e-12});
    res.rel_gap = std::max(gap / cscale, std::abs(res.primal_objective - res.dual_objective)) / denom;
  };

  std::vector<double> history;
  for (int it = 0;; ++it) {
    // Residuals.
    std::vector<CMat> ah;
    std::vector<MatX> as;
    VecX al;
    apply_at(c, y, ah, as, al);
    ConePoint rd;
    for (std::size_t b = 0; b < c.h.size(); ++b) rd.herm.push_back(cpt.herm[b] - ah[b] - z.herm[b]);
    for (std::size_t b = 0; b < c.s.size(); ++b) rd.sym.push_back(cpt.sym[b] - as[b] - z.sym[b]);
    rd.lin = cpt.lin - al - z.lin;
    const VecX rp = c.b - apply_a(c, x.herm, x.sym, x.lin);
    const double gap = inner(x, z);
    const double mu = gap / nu;
    report(inner(cpt, x), c.b.dot(y), gap);
    res.primal_infeas = rp.norm() / (1.0 + bnorm);
    res.dual_infeas = norm(rd) / (1.0 + norm(cpt));
    if (res.primal_infeas <= opts.feas_tol && res.dual_infeas <= opts.feas_tol && res.rel_gap <= opts.gap_tol) {
      res.converged = true;
      res.status = "optimal";
      break;
    }
    if (it >= opts.max_iters) break;
    // Infeasible or unbounded problems show up as residuals that stop
    // shrinking; leave early so the caller can certify.
    const double infeas = std::max(res.primal_infeas, res.dual_infeas);
    history.push_back(infeas);
    if (infeas > opts.feas_tol && history.size() > 25 && infeas > 0.5 * history[history.size() - 26]) {
      res.status = "stalled";
      break;
    }

    try {
      std::vector<CMat> zi_h;
      std::vector<MatX> zi_s;
      for (const auto& zb : z.herm) zi_h.push_back(inverse_spd(zb));
      for (const auto& zb : z.sym) zi_s.push_back(inverse_spd(zb));
      const SchurFactor fact(schur(c, x, zi_h, zi_s, z.lin, opts.parallel));

      // Predictor.
      std::vector<CMat> h_h(c.h.size());
      std::vector<MatX> h_s(c.s.size());
      for (std::size_t b = 0; b < c.h.size(); ++b) h_h[b] = -x.herm[b];
      for (std::size_t b = 0; b < c.s.size(); ++b) h_s[b] = -x.sym[b];
      VecX h_l = -x.lin;
      const Direction pred = hkm_direction(c, fact, x, rd, rp, h_h, h_s, h_l, zi_h, zi_s, z.lin);
      const double ap = std::min(1.0, step_to_boundary(x, pred.dx));
      const double ad = std::min(1.0, step_to_boundary(z, pred.dz));
      const double mu_aff = inner(axpy(x, ap, pred.dx), axpy(z, ad, pred.dz)) / nu;
      const double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0);

      // Corrector.
      for (std::size_t b = 0; b < c.h.size(); ++b)
        h_h[b] += (sigma * mu * CMat::Identity(c.h[b].dim, c.h[b].dim) - pred.dx.herm[b] * pred.dz.herm[b]) * zi_h[b];
      for (std::size_t b = 0; b < c.s.size(); ++b)
        h_s[b] += (sigma * mu * MatX::Identity(c.s[b].dim, c.s[b].dim) - pred.dx.sym[b] * pred.dz.sym[b]) * zi_s[b];
      h_l = (h_l.array() + (sigma * mu - pred.dx.lin.array() * pred.dz.lin.array()) / z.lin.array()).matrix();
      const Direction dir = hkm_direction(c, fact, x, rd, rp, h_h, h_s, h_l, zi_h, zi_s, z.lin);
      const double gamma = 0.9 + 0.09 * std::min(ap, ad);
      const double sp = std::min(1.0, gamma * step_to_boundary(x, dir.dx));
      const double sd = std::min(1.0, gamma * step_to_boundary(z, dir.dz));
      if (sp < 1e-10 && sd < 1e-10) {
        res.status = "stalled";
        break;
      }
      x = axpy(x, sp, dir.dx);
      z = axpy(z, sd, dir.dz);
      y += sd * dir.dy;
    } catch (const ConditioningError&) {
      break;
    }
  }

  // Undo the scalings.
  res.x = std::move(x);
  res.z = z;
  for (auto& zb : res.z.herm) zb /= cscale;
  for (auto& zb : res.z.sym) zb /= cscale;
  res.z.lin /= cscale;
  res.y = (y.array() * rscale.array()).matrix() / cscale;
  return res;
}

MatX schur_complement_serial(const ConeProblem& prob, const ConePoint& x, const ConePoint& z) {
  prob.validate();
  const Compiled c = compile(prob);
  std::vector<CMat> zi_h;
  std::vector<MatX> zi_s;
  for (const auto& zb : z.herm) zi_h.push_back(inverse_spd(zb));
  for (const auto& zb : z.sym) zi_s.push_back(inverse_spd(zb));
  return schur(c, x, zi_h, zi_s, z.lin, false);
}

MatX schur_complement_parallel(const ConeProblem& prob, const ConePoint& x, const ConePoint& z) {
  prob.validate();
  const Compiled c = compile(prob);
  std::vector<CMat> zi_h;
  std::vector<MatX> zi_s;
  for (const auto& zb : z.herm) zi_h.push_back(inverse_spd(zb));
  for (const auto& zb : z.sym) zi_s.push_back(inverse_spd(zb));
  return schur(c, x, zi_h, zi_s, z.lin, true);
}

}  // namespace etisac

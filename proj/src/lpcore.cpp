#include "ccmkt/lpcore.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <memory>

#include "ccmkt/errors.hpp"

namespace ccmkt::lp {

namespace detail {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

int LpProblem::add_column(const std::string& cname, double c, VarBound b) {
  int id = num_cols();
  col_names.push_back(cname);
  col_bounds.push_back(b);
  cost.push_back(c);
  col_index_.emplace(cname, id);
  return id;
}

int LpProblem::add_row(const std::string& rname, RowSense sense, double rhs,
                       std::vector<std::pair<int, double>> coeffs) {
  int id = num_rows();
  rows.push_back(Row{rname, sense, rhs, std::move(coeffs)});
  row_index_.emplace(rname, id);
  return id;
}

int LpProblem::col(const std::string& cname) const {
  auto it = col_index_.find(cname);
  return it == col_index_.end() ? -1 : it->second;
}

int LpProblem::row(const std::string& rname) const {
  auto it = row_index_.find(rname);
  return it == row_index_.end() ? -1 : it->second;
}

void LpProblem::validate() const {
  std::vector<std::string> issues;
  if (col_index_.size() != col_names.size()) issues.push_back("duplicate column names");
  if (row_index_.size() != rows.size()) issues.push_back("duplicate row names");
  for (int j = 0; j < num_cols(); ++j)
    if (!std::isfinite(cost[j]))
      issues.push_back("non-finite cost on column " + col_names[j]);
  if (!std::isfinite(cost_constant)) issues.push_back("non-finite cost constant");
  for (const auto& r : rows) {
    if (!std::isfinite(r.rhs)) issues.push_back("non-finite rhs on row " + r.name);
    for (auto [j, v] : r.coeffs) {
      if (j < 0 || j >= num_cols())
        issues.push_back("row " + r.name + " references an undeclared column");
      else if (!std::isfinite(v))
        issues.push_back("non-finite coefficient in row " + r.name + " on " +
                         col_names[j]);
    }
  }
  if (!issues.empty()) throw ValidationError(std::move(issues));
}

// ---------------------------------------------------------------------------
// Standard form: min c'x s.t. Ax = b, x >= 0 except declared free columns.
// Surplus columns (coefficient -1) turn >= rows into equalities. Artificials
// are virtual columns n_total + r with a single entry art_sign[r] in row r.
// ---------------------------------------------------------------------------

namespace detail {

struct Standardized {
  int m = 0;
  int n_struct = 0;
  int n_total = 0;  // structural + surplus
  std::vector<std::vector<std::pair<int, double>>> cols;
  std::vector<double> cost;
  std::vector<uint8_t> is_free;
  std::vector<double> b;
  std::vector<int> surplus_of_row;
};

Standardized standardize(const LpProblem& p) {
  Standardized s;
  s.m = p.num_rows();
  s.n_struct = p.num_cols();
  s.cols.resize(s.n_struct);
  s.cost = p.cost;
  s.is_free.resize(s.n_struct, 0);
  for (int j = 0; j < s.n_struct; ++j)
    s.is_free[j] = (p.col_bounds[j] == VarBound::Free) ? 1 : 0;
  s.b.resize(s.m);
  s.surplus_of_row.assign(s.m, -1);
  for (int i = 0; i < s.m; ++i) {
    const auto& r = p.rows[i];
    s.b[i] = r.rhs;
    for (auto [j, v] : r.coeffs)
      if (v != 0.0) s.cols[j].push_back({i, v});
  }
  // coalesce repeated (row, column) entries so dense expansions stay exact
  for (auto& col : s.cols) {
    std::sort(col.begin(), col.end());
    size_t w = 0;
    for (size_t r = 0; r < col.size();) {
      int row = col[r].first;
      double acc = 0.0;
      while (r < col.size() && col[r].first == row) acc += col[r++].second;
      if (acc != 0.0) col[w++] = {row, acc};
    }
    col.resize(w);
  }
  for (int i = 0; i < s.m; ++i) {
    if (p.rows[i].sense == RowSense::GreaterEqual) {
      s.surplus_of_row[i] = static_cast<int>(s.cols.size());
      s.cols.push_back({{i, -1.0}});
      s.cost.push_back(0.0);
      s.is_free.push_back(0);
    }
  }
  s.n_total = static_cast<int>(s.cols.size());
  return s;
}

class DenseLu {
 public:
  void factor(int m, std::vector<double> matrix_col_major, double pivot_tol) {
    m_ = m;
    lu_ = std::move(matrix_col_major);
    perm_.resize(m);
    for (int i = 0; i < m; ++i) perm_[i] = i;
    singular_ = false;
    for (int k = 0; k < m; ++k) {
      int piv = k;
      double best = std::abs(lu_[k + static_cast<size_t>(k) * m]);
      for (int i = k + 1; i < m; ++i) {
        double v = std::abs(lu_[i + static_cast<size_t>(k) * m]);
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (best < pivot_tol) {
        singular_ = true;
        if (lu_[piv + static_cast<size_t>(k) * m] == 0.0)
          lu_[piv + static_cast<size_t>(k) * m] = pivot_tol;
      }
      if (piv != k) {
        std::swap(perm_[k], perm_[piv]);
        for (int j = 0; j < m; ++j)
          std::swap(lu_[k + static_cast<size_t>(j) * m], lu_[piv + static_cast<size_t>(j) * m]);
      }
      double d = lu_[k + static_cast<size_t>(k) * m];
      for (int i = k + 1; i < m; ++i) {
        double f = lu_[i + static_cast<size_t>(k) * m] / d;
        lu_[i + static_cast<size_t>(k) * m] = f;
        if (f != 0.0) {
          const double* col_k = &lu_[static_cast<size_t>(k) * m];
          for (int j = k + 1; j < m; ++j)
            lu_[i + static_cast<size_t>(j) * m] -= f * lu_[k + static_cast<size_t>(j) * m];
          (void)col_k;
        }
      }
    }
  }

  bool singular() const { return singular_; }

  void solve(std::vector<double>& v, std::vector<double>& scratch) const {
    scratch.resize(m_);
    for (int i = 0; i < m_; ++i) scratch[i] = v[perm_[i]];
    for (int k = 0; k < m_; ++k) {
      double t = scratch[k];
      if (t != 0.0)
        for (int i = k + 1; i < m_; ++i) scratch[i] -= lu_[i + static_cast<size_t>(k) * m_] * t;
    }
    for (int k = m_ - 1; k >= 0; --k) {
      double t = scratch[k] / lu_[k + static_cast<size_t>(k) * m_];
      scratch[k] = t;
      if (t != 0.0)
        for (int i = 0; i < k; ++i) scratch[i] -= lu_[i + static_cast<size_t>(k) * m_] * t;
    }
    v = scratch;
  }

  void solve_transpose(std::vector<double>& v, std::vector<double>& scratch) const {
    scratch = v;
    for (int k = 0; k < m_; ++k) {
      double t = scratch[k] / lu_[k + static_cast<size_t>(k) * m_];
      scratch[k] = t;
      if (t != 0.0)
        for (int i = k + 1; i < m_; ++i) scratch[i] -= lu_[k + static_cast<size_t>(i) * m_] * t;
    }
    for (int k = m_ - 1; k >= 0; --k) {
      double t = scratch[k];
      if (t != 0.0)
        for (int i = 0; i < k; ++i) scratch[i] -= lu_[k + static_cast<size_t>(i) * m_] * t;
    }
    v.resize(m_);
    for (int i = 0; i < m_; ++i) v[perm_[i]] = scratch[i];
  }

 private:
  int m_ = 0;
  std::vector<double> lu_;
  std::vector<int> perm_;
  bool singular_ = false;
};

class Engine {
 public:
  Engine(const Standardized& s, const SolverConfig& cfg) : s_(s), cfg_(cfg) {
    art_sign_.resize(s_.m, 1.0);
    max_iter_ = cfg_.max_iterations > 0 ? cfg_.max_iterations
                                        : 400 * (s_.m + s_.n_total) + 20000;
  }

  LpSolution run(const std::vector<double>& b) {
    b_ = b;
    LpSolution out;
    init();
    if (!iterate(Phase::One, out)) return out;
    double infeas = phase_objective(phase1_costs_);
    if (infeas > 1e-7 * (1.0 + linf(b_))) {
      out.status = SolveStatus::Infeasible;
      out.farkas = current_duals(phase1_costs_);
      out.iterations = iterations_;
      return out;
    }
    if (!iterate(Phase::Two, out)) return out;
    if (!cfg_.secondary_costs.empty()) {
      if (!iterate(Phase::Lex, out)) return out;
      // the lexicographic walk may leave a basis that is not dual-feasible
      // for the primary cost; degenerate phase-2 pivots restore it without
      // moving the primal point
      if (!iterate(Phase::Two, out)) return out;
    }
    finish(out);
    return out;
  }

 private:
  enum class Phase { One, Two, Lex };

  const Standardized& s_;
  SolverConfig cfg_;
  std::vector<double> b_;
  std::vector<double> art_sign_;

  std::vector<int> basic_;
  std::vector<int> pos_in_basis_;
  std::vector<double> x_basic_;
  std::vector<double> phase1_costs_;
  std::vector<double> phase2_costs_;
  std::vector<std::vector<double>> lex_costs_;  // lexicographic levels
  DenseLu lu_;
  struct Eta {
    int r;
    std::vector<double> w;
  };
  std::vector<Eta> etas_;
  int iterations_ = 0;
  int degenerate_streak_ = 0;
  bool bland_ = false;
  int max_iter_ = 0;
  std::vector<double> scratch_a_, scratch_b_, work_col_, duals_;

  int art_id(int row) const { return s_.n_total + row; }
  bool is_artificial(int col) const { return col >= s_.n_total; }

  static double linf(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }

  void column_dense(int col, std::vector<double>& out) const {
    out.assign(s_.m, 0.0);
    if (is_artificial(col)) {
      int r = col - s_.n_total;
      out[r] = art_sign_[r];
    } else {
      for (auto [i, v] : s_.cols[col]) out[i] += v;
    }
  }

  double column_dot(int col, const std::vector<double>& y) const {
    if (is_artificial(col)) {
      int r = col - s_.n_total;
      return art_sign_[r] * y[r];
    }
    double acc = 0;
    for (auto [i, v] : s_.cols[col]) acc += v * y[i];
    return acc;
  }

  void init() {
    iterations_ = 0;
    basic_.resize(s_.m);
    pos_in_basis_.assign(s_.n_total + s_.m, -1);
    x_basic_.resize(s_.m);
    for (int i = 0; i < s_.m; ++i) {
      art_sign_[i] = b_[i] >= 0.0 ? 1.0 : -1.0;
      basic_[i] = art_id(i);
      pos_in_basis_[art_id(i)] = i;
      x_basic_[i] = std::abs(b_[i]);
    }
    phase1_costs_.assign(s_.n_total + s_.m, 0.0);
    for (int i = 0; i < s_.m; ++i) phase1_costs_[art_id(i)] = 1.0;
    phase2_costs_.assign(s_.n_total + s_.m, 0.0);
    for (int j = 0; j < s_.n_total; ++j) phase2_costs_[j] = s_.cost[j];
    lex_costs_.clear();
    for (const auto& level : cfg_.secondary_costs) {
      std::vector<double> padded(s_.n_total + s_.m, 0.0);
      for (size_t j = 0; j < level.size() && j < static_cast<size_t>(s_.n_struct); ++j)
        padded[j] = level[j];
      lex_costs_.push_back(std::move(padded));
    }
    refactor();
  }

  double phase_objective(const std::vector<double>& costs) const {
    double acc = 0;
    for (int i = 0; i < s_.m; ++i) acc += costs[basic_[i]] * x_basic_[i];
    return acc;
  }

  void refactor() {
    std::vector<double> bmat(static_cast<size_t>(s_.m) * s_.m, 0.0);
    for (int k = 0; k < s_.m; ++k) {
      int col = basic_[k];
      if (is_artificial(col)) {
        int r = col - s_.n_total;
        bmat[r + static_cast<size_t>(k) * s_.m] = art_sign_[r];
      } else {
        for (auto [i, v] : s_.cols[col]) bmat[i + static_cast<size_t>(k) * s_.m] += v;
      }
    }
    lu_.factor(s_.m, std::move(bmat), cfg_.pivot_tol);
    if (lu_.singular()) throw SolverError("basis factorization became singular");
    etas_.clear();
    std::vector<double> rhs = b_;
    lu_.solve(rhs, scratch_a_);
    x_basic_ = rhs;
  }

  void ftran(std::vector<double>& v) {
    lu_.solve(v, scratch_a_);
    for (const auto& e : etas_) {
      double t = v[e.r] / e.w[e.r];
      for (int i = 0; i < s_.m; ++i) v[i] -= e.w[i] * t;
      v[e.r] = t;
    }
  }

  void btran(std::vector<double>& v) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      double dot = 0;
      for (int i = 0; i < s_.m; ++i) dot += it->w[i] * v[i];
      // (E^T v)_r = (v_r - (w'v - w_r v_r)) / w_r; other entries unchanged
      v[it->r] = (v[it->r] - (dot - it->w[it->r] * v[it->r])) / it->w[it->r];
    }
    lu_.solve_transpose(v, scratch_b_);
  }

  std::vector<double> current_duals(const std::vector<double>& costs) {
    duals_.assign(s_.m, 0.0);
    for (int k = 0; k < s_.m; ++k) duals_[k] = costs[basic_[k]];
    btran(duals_);
    return duals_;
  }

  struct Entering {
    int col = -1;
    int dir = +1;
  };

  Entering price(Phase phase) {
    const auto& costs = (phase == Phase::One) ? phase1_costs_ : phase2_costs_;
    std::vector<double> y(s_.m);
    for (int k = 0; k < s_.m; ++k) y[k] = costs[basic_[k]];
    btran(y);

    // lexicographic level duals (primary first)
    std::vector<std::vector<double>> ylev;
    if (phase == Phase::Lex) {
      for (const auto& lev : lex_costs_) {
        std::vector<double> v(s_.m);
        for (int k = 0; k < s_.m; ++k) v[k] = lev[basic_[k]];
        btran(v);
        ylev.push_back(std::move(v));
      }
    }

    Entering best;
    double best_score = 0.0;
    int best_level = 1 << 20;
    const double tol = cfg_.opt_tol;
    for (int j = 0; j < s_.n_total; ++j) {
      if (pos_in_basis_[j] >= 0) continue;
      double score = 0.0;
      int dir = +1;
      int level = 0;
      double rc = costs[j] - column_dot(j, y);
      if (s_.is_free[j]) {
        if (std::abs(rc) > tol) {
          dir = rc < 0 ? +1 : -1;
          score = std::abs(rc);
        }
      } else if (rc < -tol) {
        score = -rc;
      }
      if (phase == Phase::Lex && score == 0.0) {
        // walk flat edges: the first level with a signed reduced cost decides
        bool rejected = std::abs(rc) > cfg_.flat_tol && !s_.is_free[j];
        for (size_t m = 0; m < ylev.size() && !rejected && score == 0.0; ++m) {
          double rcm = lex_costs_[m][j] - column_dot(j, ylev[m]);
          if (s_.is_free[j]) {
            if (std::abs(rcm) > tol) {
              dir = rcm < 0 ? +1 : -1;
              score = std::abs(rcm);
              level = static_cast<int>(m) + 1;
            }
          } else if (rcm < -tol) {
            score = -rcm;
            level = static_cast<int>(m) + 1;
          } else if (rcm > cfg_.flat_tol) {
            rejected = true;  // lexicographically positive: not improving
          }
        }
      }
      if (score == 0.0) continue;
      if (bland_) {
        best.col = j;
        best.dir = dir;
        return best;
      }
      bool better = best.col < 0;
      if (!better && level != best_level) better = level < best_level;
      if (!better && level == best_level) better = score > best_score + 1e-15;
      if (better) {
        best_score = score;
        best.col = j;
        best.dir = dir;
        best_level = level;
      }
    }
    return best;
  }

  bool iterate(Phase phase, LpSolution& out) {
    degenerate_streak_ = 0;
    bland_ = false;
    int unstable_retries = 0;
    for (;;) {
      if (iterations_ >= max_iter_)
        throw SolverError("simplex iteration limit exceeded");
      Entering e = price(phase);
      if (e.col < 0) return true;

      column_dense(e.col, work_col_);
      ftran(work_col_);

      int leave = -1;
      double best_ratio = kInf;
      double best_piv_abs = 0.0;
      bool best_is_art = false;
      for (int i = 0; i < s_.m; ++i) {
        double step = e.dir * work_col_[i];
        int bcol = basic_[i];
        bool art = is_artificial(bcol);
        double ratio;
        if (art && phase != Phase::One) {
          if (std::abs(step) <= cfg_.pivot_tol) continue;
          ratio = 0.0;  // pinned at zero, blocks either direction
        } else {
          if (!art && s_.is_free[bcol]) continue;
          if (step <= cfg_.pivot_tol) continue;
          ratio = std::max(0.0, x_basic_[i] / step);
        }
        double piv_abs = std::abs(work_col_[i]);
        bool better;
        if (ratio < best_ratio - 1e-12)
          better = true;
        else if (ratio > best_ratio + 1e-12)
          better = false;
        else if (art != best_is_art)
          better = art;
        else
          better = piv_abs > best_piv_abs + 1e-15;
        if (better) {
          best_ratio = ratio;
          leave = i;
          best_piv_abs = piv_abs;
          best_is_art = art;
        }
      }

      if (leave < 0) {
        if (phase == Phase::One)
          throw SolverError("phase-1 ray encountered; numerical breakdown");
        if (phase == Phase::Lex) return true;
        out.status = SolveStatus::Unbounded;
        out.iterations = iterations_;
        return false;
      }
      if (std::abs(work_col_[leave]) < cfg_.pivot_tol) {
        if (etas_.empty() || ++unstable_retries > 4)
          throw SolverError("pivot below threshold after refactorization");
        refactor();
        continue;
      }
      unstable_retries = 0;

      double t = best_ratio;
      for (int i = 0; i < s_.m; ++i) x_basic_[i] -= t * e.dir * work_col_[i];
      int leaving_col = basic_[leave];
      pos_in_basis_[leaving_col] = -1;
      basic_[leave] = e.col;
      pos_in_basis_[e.col] = leave;
      x_basic_[leave] = t * e.dir;

      etas_.push_back(Eta{leave, work_col_});
      ++iterations_;
      if (t <= cfg_.feas_tol) {
        if (++degenerate_streak_ > 100) bland_ = true;
      } else {
        degenerate_streak_ = 0;
        bland_ = false;
      }
      if (static_cast<int>(etas_.size()) >= cfg_.refactor_interval) refactor();
    }
  }

  void finish(LpSolution& out) {
    out.status = SolveStatus::Optimal;
    out.iterations = iterations_;
    out.primal.assign(s_.n_struct, 0.0);
    for (int i = 0; i < s_.m; ++i) {
      int col = basic_[i];
      if (is_artificial(col)) {
        if (std::abs(x_basic_[i]) > 1e-6)
          throw SolverError("artificial variable stuck in the optimal basis");
        continue;
      }
      if (col < s_.n_struct) out.primal[col] = x_basic_[i];
    }
    out.dual = current_duals(phase2_costs_);
    out.reduced_cost.assign(s_.n_struct, 0.0);
    for (int j = 0; j < s_.n_struct; ++j)
      out.reduced_cost[j] = s_.cost[j] - column_dot(j, out.dual);
    double obj = 0;
    for (int j = 0; j < s_.n_struct; ++j) obj += s_.cost[j] * out.primal[j];
    out.objective = obj;
  }
};

LpSolution solve_standardized(const Standardized& s, const std::vector<double>& b,
                              const SolverConfig& cfg, double cost_constant) {
  if (s.m == 0) {
    LpSolution out;
    for (int j = 0; j < s.n_struct; ++j) {
      if ((s.is_free[j] && std::abs(s.cost[j]) > cfg.opt_tol) ||
          (!s.is_free[j] && s.cost[j] < -cfg.opt_tol)) {
        out.status = SolveStatus::Unbounded;
        return out;
      }
    }
    out.status = SolveStatus::Optimal;
    out.primal.assign(s.n_struct, 0.0);
    out.reduced_cost.assign(s.cost.begin(), s.cost.begin() + s.n_struct);
    out.objective = cost_constant;
    return out;
  }
  Engine engine(s, cfg);
  LpSolution out = engine.run(b);
  if (out.status == SolveStatus::Optimal) out.objective += cost_constant;
  return out;
}

}  // namespace

LpSolution SimplexSolver::solve(const LpProblem& problem) {
  return solve_lp(problem, config_);
}

LpSolution solve_lp(const LpProblem& problem, const SolverConfig& config) {
  problem.validate();
  detail::Standardized s = detail::standardize(problem);
  return detail::solve_standardized(s, s.b, config, problem.cost_constant);
}

struct RepeatSolver::Impl {
  detail::Standardized s;
  SolverConfig cfg;
  double constant = 0.0;
};

RepeatSolver::RepeatSolver(const LpProblem& problem, SolverConfig config)
    : impl_(std::make_unique<Impl>()) {
  problem.validate();
  impl_->s = detail::standardize(problem);
  impl_->cfg = config;
  impl_->constant = problem.cost_constant;
}

RepeatSolver::~RepeatSolver() = default;
RepeatSolver::RepeatSolver(RepeatSolver&&) noexcept = default;
RepeatSolver& RepeatSolver::operator=(RepeatSolver&&) noexcept = default;

LpSolution RepeatSolver::solve(const std::vector<double>& rhs) {
  if (rhs.size() != static_cast<size_t>(impl_->s.m))
    throw ValidationError({"rhs size does not match template row count"});
  return detail::solve_standardized(impl_->s, rhs, impl_->cfg, impl_->constant);
}

KktReport check_kkt(const LpProblem& p, const LpSolution& sol) {
  KktReport rep;
  if (sol.status != SolveStatus::Optimal) {
    rep.max_primal_residual = detail::kInf;
    return rep;
  }
  const int n = p.num_cols();
  const int m = p.num_rows();
  for (int j = 0; j < n; ++j)
    if (p.col_bounds[j] == VarBound::NonNegative)
      rep.max_primal_residual = std::max(rep.max_primal_residual, -sol.primal[j]);
  std::vector<double> activity(m, 0.0);
  for (int i = 0; i < m; ++i) {
    double acc = 0;
    for (auto [j, v] : p.rows[i].coeffs) acc += v * sol.primal[j];
    activity[i] = acc;
    double resid = (p.rows[i].sense == RowSense::Equal)
                       ? std::abs(acc - p.rows[i].rhs)
                       : std::max(0.0, p.rows[i].rhs - acc);
    rep.max_primal_residual = std::max(rep.max_primal_residual, resid);
  }
  std::vector<double> rc(p.cost);
  for (int i = 0; i < m; ++i) {
    double y = sol.dual[i];
    if (p.rows[i].sense == RowSense::GreaterEqual) {
      rep.max_dual_residual = std::max(rep.max_dual_residual, -y);
      double slack = activity[i] - p.rows[i].rhs;
      rep.max_complementarity = std::max(rep.max_complementarity, std::abs(y * slack));
    }
    for (auto [j, v] : p.rows[i].coeffs) rc[j] -= v * y;
  }
  for (int j = 0; j < n; ++j) {
    if (p.col_bounds[j] == VarBound::Free)
      rep.max_dual_residual = std::max(rep.max_dual_residual, std::abs(rc[j]));
    else {
      rep.max_dual_residual = std::max(rep.max_dual_residual, -rc[j]);
      rep.max_complementarity =
          std::max(rep.max_complementarity, std::abs(rc[j] * sol.primal[j]));
    }
  }
  double by = 0;
  for (int i = 0; i < m; ++i) by += p.rows[i].rhs * sol.dual[i];
  double cx = sol.objective - p.cost_constant;
  rep.duality_gap = std::abs(cx - by) / std::max(1.0, std::abs(cx));
  return rep;
}

LpProblem dual_of(const LpProblem& p) {
  LpProblem d;
  d.name = p.name + "_dual";
  for (int i = 0; i < p.num_rows(); ++i) {
    VarBound b = (p.rows[i].sense == RowSense::Equal) ? VarBound::Free
                                                      : VarBound::NonNegative;
    d.add_column("y_" + p.rows[i].name, -p.rows[i].rhs, b);
  }
  std::vector<std::vector<std::pair<int, double>>> cols(p.num_cols());
  for (int i = 0; i < p.num_rows(); ++i)
    for (auto [j, v] : p.rows[i].coeffs) cols[j].push_back({i, -v});
  for (int j = 0; j < p.num_cols(); ++j) {
    RowSense sense = (p.col_bounds[j] == VarBound::Free) ? RowSense::Equal
                                                         : RowSense::GreaterEqual;
    d.add_row("c_" + p.col_names[j], sense, -p.cost[j], std::move(cols[j]));
  }
  return d;
}

namespace detail {

std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sanitize(const std::string& name) {
  std::string out;
  out.reserve(name.size());
  for (char c : name)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '_');
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out[0]))) out = "n" + out;
  return out;
}

// returns true when a placeholder zero term was emitted
bool append_terms(std::string& s, const std::vector<std::pair<int, double>>& coeffs,
                  const std::vector<std::string>& names) {
  bool first = true;
  for (auto [j, v] : coeffs) {
    if (v == 0.0) continue;
    if (first) {
      if (v < 0) s += "- ";
      s += fmt_num(std::abs(v));
      first = false;
    } else {
      s += (v < 0 ? " - " : " + ");
      s += fmt_num(std::abs(v));
    }
    s += " ";
    s += sanitize(names[j]);
  }
  if (first) {
    s += "0 dummy_zero";
    return true;
  }
  return false;
}

}  // namespace

std::string to_lp_format(const LpProblem& p) {
  std::string s;
  s += "\\ " + p.name + "\n";
  s += "Minimize\n obj: ";
  bool used_dummy = false;
  {
    std::vector<std::pair<int, double>> obj;
    for (int j = 0; j < p.num_cols(); ++j)
      if (p.cost[j] != 0.0) obj.push_back({j, p.cost[j]});
    used_dummy |= detail::append_terms(s, obj, p.col_names);
    if (p.cost_constant != 0.0) {
      s += (p.cost_constant > 0 ? " + " : " - ");
      s += detail::fmt_num(std::abs(p.cost_constant));
    }
  }
  s += "\nSubject To\n";
  for (const auto& r : p.rows) {
    s += " " + detail::sanitize(r.name) + ": ";
    used_dummy |= detail::append_terms(s, r.coeffs, p.col_names);
    s += (r.sense == RowSense::Equal) ? " = " : " >= ";
    s += detail::fmt_num(r.rhs);
    s += "\n";
  }
  s += "Bounds\n";
  for (int j = 0; j < p.num_cols(); ++j)
    if (p.col_bounds[j] == VarBound::Free)
      s += " " + detail::sanitize(p.col_names[j]) + " free\n";
  if (used_dummy) s += " dummy_zero = 0\n";
  s += "End\n";
  return s;
}

}  // namespace ccmkt::lp

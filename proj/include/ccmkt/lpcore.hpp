#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace ccmkt::lp {

enum class RowSense { Equal, GreaterEqual };
enum class VarBound { NonNegative, Free };
enum class SolveStatus { Optimal, Infeasible, Unbounded };

// Linear program in the form
//   min c'x + c0   s.t.  a_i'x  =  b_i   or   a_i'x >= b_i,
// with every variable either x_j >= 0 or free. All inequality rows are
// greater-or-equal so their optimal duals are nonnegative.
struct LpProblem {
  struct Row {
    std::string name;
    RowSense sense = RowSense::GreaterEqual;
    double rhs = 0.0;
    std::vector<std::pair<int, double>> coeffs;  // (column, value)
  };

  std::string name = "lp";
  std::vector<std::string> col_names;
  std::vector<VarBound> col_bounds;
  std::vector<double> cost;
  double cost_constant = 0.0;
  std::vector<Row> rows;

  int add_column(const std::string& name, double c, VarBound b = VarBound::NonNegative);
  int add_row(const std::string& name, RowSense sense, double rhs,
              std::vector<std::pair<int, double>> coeffs);

  int num_cols() const { return static_cast<int>(col_names.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
  int col(const std::string& name) const;  // -1 when absent
  int row(const std::string& name) const;

  // Throws ValidationError when coefficients are not finite, names collide,
  // or a row references an undeclared column.
  void validate() const;

 private:
  std::unordered_map<std::string, int> col_index_;
  std::unordered_map<std::string, int> row_index_;
};

struct LpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> primal;        // per column
  std::vector<double> dual;          // per row
  std::vector<double> reduced_cost;  // per column
  // Farkas certificate of the row system when status == Infeasible:
  // y'A <= 0 columnwise on x >= 0 columns (== 0 on free) and y'b > 0.
  std::vector<double> farkas;
  int iterations = 0;
};

struct SolverConfig {
  double pivot_tol = 1e-9;     // reject pivots smaller than this
  double feas_tol = 1e-9;      // phase-1 and ratio-test feasibility
  double opt_tol = 1e-9;       // reduced-cost threshold
  double flat_tol = 1e-7;      // |rc| below this counts as a cost-flat direction
  int refactor_interval = 64;
  int max_iterations = 0;      // 0 -> automatic (scales with problem size)
  // Optional lexicographic tie-breaks: once no strictly improving column
  // remains, keep pivoting along cost-flat directions that improve the first
  // secondary objective, then along doubly-flat directions that improve the
  // second, and so on. The returned duals are still duals of the primary
  // cost, read from the final (primary-optimal) basis.
  std::vector<std::vector<double>> secondary_costs;
};

// Abstract solver so an external LP engine can be substituted. The contract:
// status Optimal implies primal feasibility, dual feasibility and
// complementary slackness within tolerance, and identical inputs produce
// identical outputs.
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual LpSolution solve(const LpProblem& problem) = 0;
};

// Bundled dense revised simplex (two-phase, Bland fallback for stalls).
class SimplexSolver final : public LpSolver {
 public:
  explicit SimplexSolver(SolverConfig config = {}) : config_(config) {}
  LpSolution solve(const LpProblem& problem) override;

 private:
  SolverConfig config_;
};

LpSolution solve_lp(const LpProblem& problem, const SolverConfig& config = {});

// Re-solves one LP shape for many right-hand sides (the constraint matrix,
// costs and senses stay fixed). Standardizes once; each solve is cold but
// allocation-free.
class RepeatSolver {
 public:
  RepeatSolver(const LpProblem& problem, SolverConfig config = {});
  ~RepeatSolver();
  RepeatSolver(RepeatSolver&&) noexcept;
  RepeatSolver& operator=(RepeatSolver&&) noexcept;

  // rhs has one entry per row of the template problem.
  LpSolution solve(const std::vector<double>& rhs);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct KktReport {
  double max_primal_residual = 0.0;  // row violation + variable bound violation
  double max_dual_residual = 0.0;    // reduced-cost sign / free-column residual
  double max_complementarity = 0.0;  // y_i * slack_i and x_j * rc_j
  double duality_gap = 0.0;          // |c'x - b'y| (constants cancelled)
  bool pass(double tol) const {
    return max_primal_residual <= tol && max_dual_residual <= tol &&
           max_complementarity <= tol && duality_gap <= tol;
  }
};

// Always returns a report; never throws for a merely bad solution.
KktReport check_kkt(const LpProblem& problem, const LpSolution& solution);

// Explicit dual of the given LP:  max b'y  s.t.  A'y <= c (columnwise; free
// primal columns give equality rows), y_i >= 0 on >= rows and free on
// equality rows. Returned as a minimization of -b'y so it can be fed back
// into solve_lp. Column j of the result is the dual of row j of the input.
LpProblem dual_of(const LpProblem& problem);

// CPLEX-style LP text export for cross-checking against external solvers.
std::string to_lp_format(const LpProblem& problem);

}  // namespace ccmkt::lp

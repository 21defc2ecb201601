#include "nom/simplex.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace nom {
namespace {

// Dense exact-rational tableau. Columns are the structural variables,
// then one surplus column per inequality row, then one artificial column
// per row; the last column holds the right-hand side.
class Tableau {
 public:
  Tableau(const std::vector<LPRow>& rows, const std::vector<int>& var_ids)
      : m_(rows.size()), n_struct_(var_ids.size()) {
    std::map<int, int> col_of;
    for (std::size_t i = 0; i < var_ids.size(); ++i)
      col_of[var_ids[i]] = (int)i;
    int n_slack = 0;
    for (const LPRow& r : rows)
      if (!r.eq) ++n_slack;
    n_total_ = n_struct_ + n_slack + (int)m_;
    a_.assign(m_, std::vector<Rat>(n_total_ + 1));
    basis_.assign(m_, -1);
    alive_.assign(m_, true);
    allowed_.assign(n_total_, true);

    art_first_ = n_struct_ + n_slack;
    int slack_at = n_struct_;
    for (std::size_t i = 0; i < m_; ++i) {
      const LPRow& r = rows[i];
      for (const auto& [v, c] : r.coef) a_[i][col_of.at(v)] = c;
      a_[i][n_total_] = r.rhs;
      if (!r.eq) a_[i][slack_at++] = Rat(-1);
      if (a_[i][n_total_].sign() < 0)
        for (int j = 0; j <= n_total_; ++j) a_[i][j] = -a_[i][j];
      int art = art_first_ + (int)i;
      a_[i][art] = Rat(1);
      basis_[i] = art;
    }
  }

  // Phase 1: minimize the sum of artificials; returns false on infeasible.
  bool phase1() {
    if (m_ == 0) return true;
    cost_.assign(n_total_ + 1, Rat(0));
    for (int j = art_first_; j < n_total_; ++j) cost_[j] = Rat(1);
    price_out();
    if (!iterate()) throw std::logic_error("phase-1 unbounded");
    if (objective_value().sign() > 0) return false;
    drive_out_artificials();
    for (int j = art_first_; j < n_total_; ++j) allowed_[j] = false;
    return true;
  }

  // Phase 2: minimize the given structural objective (by column).
  bool phase2(const std::map<int, Rat>& obj_by_col) {
    cost_.assign(n_total_ + 1, Rat(0));
    for (const auto& [j, c] : obj_by_col) cost_[j] = c;
    price_out();
    return iterate();
  }

  Rat value_of_col(int j) const {
    for (std::size_t i = 0; i < m_; ++i)
      if (alive_[i] && basis_[i] == j) return a_[i][n_total_];
    return Rat(0);
  }

 private:
  std::size_t m_;
  int n_struct_ = 0;
  int n_total_ = 0;
  int art_first_ = 0;
  std::vector<std::vector<Rat>> a_;
  std::vector<int> basis_;
  std::vector<bool> alive_;
  std::vector<bool> allowed_;
  std::vector<Rat> cost_;  // reduced-cost row; last entry is -objective

  void price_out() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!alive_[i]) continue;
      const Rat cb = cost_[basis_[i]];
      if (cb.is_zero()) continue;
      for (int j = 0; j <= n_total_; ++j) cost_[j] -= cb * a_[i][j];
    }
  }

  Rat objective_value() const { return -cost_[n_total_]; }

  // Bland's rule: entering = lowest-index column with a negative reduced
  // cost; leaving = lexicographically lowest basis variable among the
  // minimum-ratio rows.
  bool iterate() {
    for (long guard = 0;; ++guard) {
      if (guard > 2000000) throw std::logic_error("simplex iteration bound");
      int enter = -1;
      for (int j = 0; j < n_total_; ++j) {
        if (!allowed_[j]) continue;
        if (cost_[j].sign() < 0) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;  // optimal
      int leave = -1;
      Rat best;
      for (std::size_t i = 0; i < m_; ++i) {
        if (!alive_[i]) continue;
        if (a_[i][enter].sign() <= 0) continue;
        Rat ratio = a_[i][n_total_] / a_[i][enter];
        if (leave < 0 || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave])) {
          leave = (int)i;
          best = ratio;
        }
      }
      if (leave < 0) return false;  // unbounded
      pivot(leave, enter);
    }
  }

  void pivot(int row, int col) {
    const Rat p = a_[row][col];
    for (int j = 0; j <= n_total_; ++j) a_[row][j] /= p;
    for (std::size_t i = 0; i < m_; ++i) {
      if ((int)i == row || !alive_[i]) continue;
      const Rat f = a_[i][col];
      if (f.is_zero()) continue;
      for (int j = 0; j <= n_total_; ++j) a_[i][j] -= f * a_[row][j];
    }
    const Rat fc = cost_[col];
    if (!fc.is_zero())
      for (int j = 0; j <= n_total_; ++j) cost_[j] -= fc * a_[row][j];
    basis_[row] = col;
  }

  // After phase 1 an artificial can linger in the basis at level zero;
  // pivot it out on any admissible column, or retire the row as redundant.
  void drive_out_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (!alive_[i] || basis_[i] < art_first_) continue;
      int col = -1;
      for (int j = 0; j < art_first_; ++j) {
        if (!a_[i][j].is_zero()) {
          col = j;
          break;
        }
      }
      if (col < 0) {
        alive_[i] = false;
        continue;
      }
      pivot((int)i, col);
    }
  }
};

}  // namespace

LPResult solve_lp(const std::vector<LPRow>& rows,
                  const std::map<int, Rat>& objective) {
  std::set<int> ids;
  for (const LPRow& r : rows)
    for (const auto& [v, c] : r.coef) ids.insert(v);
  for (const auto& [v, c] : objective) ids.insert(v);
  std::vector<int> var_ids(ids.begin(), ids.end());

  Tableau t(rows, var_ids);
  LPResult res;
  if (!t.phase1()) {
    res.status = LPStatus::Infeasible;
    return res;
  }
  std::map<int, Rat> obj_by_col;
  for (std::size_t i = 0; i < var_ids.size(); ++i) {
    auto it = objective.find(var_ids[i]);
    if (it != objective.end() && !it->second.is_zero())
      obj_by_col[(int)i] = it->second;
  }
  if (!t.phase2(obj_by_col)) {
    res.status = LPStatus::Unbounded;
    return res;
  }
  res.status = LPStatus::Optimal;
  res.objective = Rat(0);
  for (std::size_t i = 0; i < var_ids.size(); ++i) {
    Rat v = t.value_of_col((int)i);
    res.solution[var_ids[i]] = v;
    auto it = objective.find(var_ids[i]);
    if (it != objective.end()) res.objective += it->second * v;
  }
  return res;
}

}  // namespace nom

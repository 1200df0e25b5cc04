#include "sbbd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace sbbd {

int LpProblem::add_variable(double obj, double lo, double hi) {
    objective.push_back(obj);
    lower.push_back(lo);
    upper.push_back(hi);
    return n_vars() - 1;
}

int LpProblem::add_row(SparseRow row, RowSense s, double b) {
    rows.push_back(std::move(row));
    sense.push_back(s);
    rhs.push_back(b);
    return n_rows() - 1;
}

int LpProblem::add_dense_row(std::span<const double> coeffs, RowSense s, double b) {
    SparseRow row;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
        if (coeffs[j] != 0.0) row.push(static_cast<int>(j), coeffs[j]);
    }
    return add_row(std::move(row), s, b);
}

void LpProblem::validate() const {
    const std::size_t n = objective.size();
    if (lower.size() != n || upper.size() != n) throw std::invalid_argument("bound vectors differ in length");
    if (sense.size() != rows.size() || rhs.size() != rows.size()) {
        throw std::invalid_argument("row data differ in length");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective[j])) throw std::invalid_argument("non-finite objective coefficient");
        if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] || lower[j] == kInf ||
            upper[j] == -kInf) {
            throw std::invalid_argument("invalid bounds on variable " + std::to_string(j));
        }
    }
    std::vector<int> seen(n, -1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto &row = rows[r];
        if (row.index.size() != row.value.size()) throw std::invalid_argument("sparse row sizes differ");
        if (!std::isfinite(rhs[r])) throw std::invalid_argument("non-finite right-hand side");
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const int j = row.index[k];
            if (j < 0 || static_cast<std::size_t>(j) >= n) throw std::invalid_argument("row index out of range");
            if (!std::isfinite(row.value[k])) throw std::invalid_argument("non-finite row coefficient");
            if (seen[j] == static_cast<int>(r)) throw std::invalid_argument("duplicate index in row");
            seen[j] = static_cast<int>(r);
        }
    }
}

std::string LpProblem::to_lp_string() const {
    std::ostringstream os;
    os.precision(17);
    auto term = [&os](double c, int j, bool first) {
        if (!first || c < 0) os << (c < 0 ? " - " : " + ");
        os << std::abs(c) << " v" << j;
    };
    os << "Maximize\n obj:";
    bool first = true;
    for (int j = 0; j < n_vars(); ++j) {
        if (objective[j] == 0.0) continue;
        term(objective[j], j, first);
        first = false;
    }
    if (first) os << " 0 v0";
    os << "\nSubject To\n";
    for (int r = 0; r < n_rows(); ++r) {
        os << " c" << r << ":";
        first = true;
        for (std::size_t k = 0; k < rows[r].index.size(); ++k) {
            term(rows[r].value[k], rows[r].index[k], first);
            first = false;
        }
        if (first) os << " 0 v0";
        os << (sense[r] == RowSense::Equal ? " = " : " <= ") << rhs[r] << "\n";
    }
    os << "Bounds\n";
    for (int j = 0; j < n_vars(); ++j) {
        if (lower[j] == -kInf && upper[j] == kInf) {
            os << " v" << j << " free\n";
            continue;
        }
        os << " ";
        if (lower[j] == -kInf) os << "-inf"; else os << lower[j];
        os << " <= v" << j << " <= ";
        if (upper[j] == kInf) os << "+inf"; else os << upper[j];
        os << "\n";
    }
    os << "End\n";
    return os.str();
}

std::string to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "Unknown";
}

LpSolver::LpSolver(LpProblem problem, SimplexOptions options) : prob_(std::move(problem)), opt_(options) {
    prob_.validate();
    n_ = prob_.n_vars();
    m_ = 0;
    cols_.assign(n_, {});
    lo_ = prob_.lower;
    up_ = prob_.upper;
    cost_ = prob_.objective;
    x_.assign(n_, 0.0);
    status_.assign(n_, VarStatus::AtLower);
    for (int j = 0; j < n_; ++j) place_nonbasic(j);
    where_.assign(n_, -1);
    work_.assign(n_, 0.0);
    pair_row_.assign(n_, -1);
    role_.assign(n_, 0);

    const int m = prob_.n_rows();
    for (int r = 0; r < m; ++r) {
        const auto &row = prob_.rows[r];
        for (std::size_t k = 0; k < row.index.size(); ++k) cols_[row.index[k]].emplace_back(r, row.value[k]);
        lo_.push_back(0.0);
        up_.push_back(prob_.sense[r] == RowSense::Equal ? 0.0 : kInf);
        cost_.push_back(0.0);
        x_.push_back(0.0);
        status_.push_back(VarStatus::Basic);
        where_.push_back(r);
        head_.push_back(n_ + r);
    }
    m_ = m;
}

void LpSolver::place_nonbasic(int j) {
    if (lo_[j] > -kInf) {
        status_[j] = VarStatus::AtLower;
        x_[j] = lo_[j];
    } else if (up_[j] < kInf) {
        status_[j] = VarStatus::AtUpper;
        x_[j] = up_[j];
    } else {
        status_[j] = VarStatus::FreeZero;
        x_[j] = 0.0;
    }
}

void LpSolver::reset_slack_basis() {
    for (int j = 0; j < n_; ++j) {
        place_nonbasic(j);
        where_[j] = -1;
    }
    for (int r = 0; r < m_; ++r) {
        status_[n_ + r] = VarStatus::Basic;
        head_[r] = n_ + r;
        where_[n_ + r] = r;
    }
    factor_valid_ = false;
    primal_valid_ = false;
}

int LpSolver::add_row(SparseRow row, RowSense s, double b) {
    const int r = prob_.n_rows();
    for (std::size_t k = 0; k < row.index.size(); ++k) {
        const int j = row.index[k];
        if (j < 0 || j >= n_) throw std::invalid_argument("row index out of range");
        if (!std::isfinite(row.value[k])) throw std::invalid_argument("non-finite row coefficient");
        cols_[j].emplace_back(r, row.value[k]);
    }
    if (!std::isfinite(b)) throw std::invalid_argument("non-finite right-hand side");
    double activity = 0.0;
    for (std::size_t k = 0; k < row.index.size(); ++k) activity += row.value[k] * x_[row.index[k]];
    prob_.add_row(std::move(row), s, b);
    lo_.push_back(0.0);
    up_.push_back(s == RowSense::Equal ? 0.0 : kInf);
    cost_.push_back(0.0);
    x_.push_back(b - activity);
    status_.push_back(VarStatus::Basic);
    where_.push_back(m_);
    head_.push_back(n_ + r);
    ++m_;
    factor_valid_ = false;
    return r;
}

void LpSolver::set_bounds(int j, double lo, double hi) {
    if (j < 0 || j >= n_) throw std::out_of_range("variable index out of range");
    if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw std::invalid_argument("invalid bounds");
    prob_.lower[j] = lo;
    prob_.upper[j] = hi;
    lo_[j] = lo;
    up_[j] = hi;
    if (status_[j] != VarStatus::Basic) {
        const double old = x_[j];
        if (status_[j] == VarStatus::AtUpper && hi < kInf) {
            x_[j] = hi;
        } else {
            place_nonbasic(j);
        }
        if (x_[j] != old) primal_valid_ = false;
    }
}

LpBasis LpSolver::basis() const { return {status_}; }

void LpSolver::set_basis(const LpBasis &b) {
    const std::size_t total = static_cast<std::size_t>(n_ + m_);
    if (b.status.size() < static_cast<std::size_t>(n_) || b.status.size() > total) {
        throw std::invalid_argument("basis snapshot does not match the problem");
    }
    int n_basic = 0;
    for (std::size_t j = 0; j < total; ++j) {
        VarStatus st = j < b.status.size() ? b.status[j] : VarStatus::Basic;
        if (st != VarStatus::Basic) {
            if ((st == VarStatus::AtLower && lo_[j] == -kInf) || (st == VarStatus::AtUpper && up_[j] == kInf) ||
                (st == VarStatus::FreeZero && (lo_[j] > -kInf || up_[j] < kInf))) {
                status_[j] = VarStatus::AtLower;
                place_nonbasic(static_cast<int>(j));
            } else {
                status_[j] = st;
                x_[j] = st == VarStatus::AtLower ? lo_[j] : st == VarStatus::AtUpper ? up_[j] : 0.0;
            }
            where_[j] = -1;
        } else {
            status_[j] = VarStatus::Basic;
            ++n_basic;
        }
    }
    if (n_basic != m_) {
        reset_slack_basis();
        return;
    }
    int p = 0;
    for (std::size_t j = 0; j < total; ++j) {
        if (status_[j] == VarStatus::Basic) {
            head_[p] = static_cast<int>(j);
            where_[j] = p++;
        }
    }
    factor_valid_ = false;
    primal_valid_ = false;
}

namespace {

// Greedy elimination with partial pivoting; reports the columns that are linearly
// dependent on earlier ones and the rows never used as a pivot.
void rank_split(Eigen::MatrixXd M, double tol, std::vector<int> &dep_cols, std::vector<int> &free_rows) {
    const int k = static_cast<int>(M.rows());
    std::vector<char> used(k, 0);
    for (int c = 0; c < k; ++c) {
        int best = -1;
        double bv = tol;
        for (int r = 0; r < k; ++r) {
            if (!used[r] && std::abs(M(r, c)) > bv) {
                bv = std::abs(M(r, c));
                best = r;
            }
        }
        if (best < 0) {
            dep_cols.push_back(c);
            continue;
        }
        used[best] = 1;
        for (int r = 0; r < k; ++r) {
            if (used[r] || M(r, c) == 0.0) continue;
            const double f = M(r, c) / M(best, c);
            M.row(r).tail(k - c) -= f * M.row(best).tail(k - c);
        }
    }
    for (int r = 0; r < k; ++r) {
        if (!used[r]) free_rows.push_back(r);
    }
}

}  // namespace

bool LpSolver::factor_once(std::vector<int> &dependent_cols, std::vector<int> &uncovered_rows) {
    basic_structs_.clear();
    std::fill(role_.begin(), role_.end(), 0);
    row_in_r_.assign(m_, 0);
    for (int p = 0; p < m_; ++p) {
        const int j = head_[p];
        if (j < n_) basic_structs_.push_back(j);
        else row_in_r_[j - n_] = 1;
    }

    std::vector<char> col_active(n_, 0), row_active(m_, 0);
    for (int s : basic_structs_) col_active[s] = 1;
    std::vector<int> rowcnt(m_, 0);
    std::size_t n_t = 0;
    for (int r = 0; r < m_; ++r) {
        if (row_in_r_[r]) continue;
        row_active[r] = 1;
        ++n_t;
        for (int c : prob_.rows[r].index) rowcnt[r] += col_active[c];
    }
    if (n_t != basic_structs_.size()) throw std::logic_error("basis size mismatch");

    lpiv_.clear();
    upiv_.clear();
    std::vector<int> queue;
    for (int r = 0; r < m_; ++r) {
        if (row_active[r] && rowcnt[r] == 1) queue.push_back(r);
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
        const int r = queue[h];
        if (!row_active[r] || rowcnt[r] != 1) continue;
        const auto &row = prob_.rows[r];
        int s = -1;
        double a = 0.0;
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            if (col_active[row.index[k]]) {
                s = row.index[k];
                a = row.value[k];
                break;
            }
        }
        if (s < 0 || std::abs(a) < opt_.pivot_tol) continue;
        lpiv_.push_back({r, s, a});
        row_active[r] = 0;
        col_active[s] = 0;
        for (const auto &[rr, v] : cols_[s]) {
            if (row_active[rr] && --rowcnt[rr] == 1) queue.push_back(rr);
        }
    }

    std::vector<int> colcnt(n_, 0);
    queue.clear();
    for (int s : basic_structs_) {
        if (!col_active[s]) continue;
        for (const auto &[rr, v] : cols_[s]) colcnt[s] += row_active[rr];
        if (colcnt[s] == 1) queue.push_back(s);
    }
    for (std::size_t h = 0; h < queue.size(); ++h) {
        const int s = queue[h];
        if (!col_active[s] || colcnt[s] != 1) continue;
        int r = -1;
        double a = 0.0;
        for (const auto &[rr, v] : cols_[s]) {
            if (row_active[rr]) {
                r = rr;
                a = v;
                break;
            }
        }
        if (r < 0 || std::abs(a) < opt_.pivot_tol) continue;
        upiv_.push_back({r, s, a});
        row_active[r] = 0;
        col_active[s] = 0;
        for (int c : prob_.rows[r].index) {
            if (col_active[c] && --colcnt[c] == 1) queue.push_back(c);
        }
    }

    bump_rows_.clear();
    bump_cols_.clear();
    for (int r = 0; r < m_; ++r) {
        if (row_active[r]) bump_rows_.push_back(r);
    }
    for (int s : basic_structs_) {
        if (col_active[s]) bump_cols_.push_back(s);
    }
    const int k = static_cast<int>(bump_rows_.size());
    if (k > 0) {
        for (int i = 0; i < k; ++i) work_[bump_cols_[i]] = i;
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, k);
        for (int i = 0; i < k; ++i) {
            const auto &row = prob_.rows[bump_rows_[i]];
            for (std::size_t t = 0; t < row.index.size(); ++t) {
                const int c = row.index[t];
                if (col_active[c]) B(i, static_cast<int>(work_[c])) = row.value[t];
            }
        }
        for (int i = 0; i < k; ++i) work_[bump_cols_[i]] = 0.0;
        bump_lu_.setThreshold(1e-11);
        bump_lu_.compute(B);
        if (bump_lu_.rank() < k) {
            std::vector<int> dc, fr;
            rank_split(B, 1e-11 * std::max(1.0, B.cwiseAbs().maxCoeff()), dc, fr);
            if (dc.empty()) {
                // Rank reported deficient but greedy elimination found no dependency:
                // drop the column with the smallest LU pivot.
                const int last = k - 1;
                dc.push_back(static_cast<int>(bump_lu_.permutationQ().indices()[last]));
                const auto &pi = bump_lu_.permutationP().indices();
                for (int i = 0; i < k; ++i) {
                    if (pi[i] == last) fr.push_back(i);
                }
            }
            for (int c : dc) dependent_cols.push_back(bump_cols_[c]);
            for (int r : fr) uncovered_rows.push_back(bump_rows_[r]);
            return false;
        }
    }

    for (const auto &pv : lpiv_) {
        role_[pv.col] = 1;
        pair_row_[pv.col] = pv.row;
    }
    for (int i = 0; i < k; ++i) {
        role_[bump_cols_[i]] = 2;
        pair_row_[bump_cols_[i]] = bump_rows_[i];
    }
    for (const auto &pv : upiv_) {
        role_[pv.col] = 3;
        pair_row_[pv.col] = pv.row;
    }
    return true;
}

void LpSolver::refactor() {
    for (int attempt = 0;; ++attempt) {
        std::vector<int> dep, unc;
        if (factor_once(dep, unc)) break;
        if (attempt >= 8 || dep.size() != unc.size()) throw NumericalError("basis repair failed");
        for (int s : dep) {
            place_nonbasic(s);
            where_[s] = -1;
        }
        for (int r : unc) status_[n_ + r] = VarStatus::Basic;
        int p = 0;
        for (int j = 0; j < n_ + m_; ++j) {
            if (status_[j] == VarStatus::Basic) head_[p++] = j;
        }
        primal_valid_ = false;
    }
    for (int r = 0; r < m_; ++r) {
        if (row_in_r_[r]) head_[r] = n_ + r;
    }
    for (int s : basic_structs_) head_[pair_row_[s]] = s;
    for (int p = 0; p < m_; ++p) where_[head_[p]] = p;
    etas_.clear();
    eta_nnz_ = 0;
    factor_valid_ = true;
}

void LpSolver::ftran_base(std::vector<double> &v) {
    for (int s : basic_structs_) work_[s] = 0.0;
    for (const auto &pv : lpiv_) {
        const auto &row = prob_.rows[pv.row];
        double acc = v[pv.row];
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const int c = row.index[k];
            if (c != pv.col && role_[c] != 0) acc -= row.value[k] * work_[c];
        }
        work_[pv.col] = acc / pv.value;
    }
    const int nb = static_cast<int>(bump_rows_.size());
    if (nb > 0) {
        Eigen::VectorXd rhs(nb);
        for (int i = 0; i < nb; ++i) {
            const auto &row = prob_.rows[bump_rows_[i]];
            double acc = v[bump_rows_[i]];
            for (std::size_t k = 0; k < row.index.size(); ++k) {
                const int c = row.index[k];
                if (role_[c] == 1) acc -= row.value[k] * work_[c];
            }
            rhs(i) = acc;
        }
        const Eigen::VectorXd z = bump_lu_.solve(rhs);
        for (int i = 0; i < nb; ++i) work_[bump_cols_[i]] = z(i);
    }
    for (auto it = upiv_.rbegin(); it != upiv_.rend(); ++it) {
        const auto &row = prob_.rows[it->row];
        double acc = v[it->row];
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const int c = row.index[k];
            if (c != it->col && role_[c] != 0) acc -= row.value[k] * work_[c];
        }
        work_[it->col] = acc / it->value;
    }
    for (int s : basic_structs_) {
        const double z = work_[s];
        if (z == 0.0) continue;
        for (const auto &[r, a] : cols_[s]) {
            if (row_in_r_[r]) v[r] -= a * z;
        }
    }
    for (int s : basic_structs_) v[pair_row_[s]] = work_[s];
}

void LpSolver::btran_base(std::vector<double> &v) {
    for (int s : basic_structs_) {
        double acc = v[pair_row_[s]];
        for (const auto &[r, a] : cols_[s]) {
            if (row_in_r_[r]) acc -= a * v[r];
        }
        work_[s] = acc;
    }
    auto scatter = [&](int r, int skip, double y, int only_role) {
        const auto &row = prob_.rows[r];
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            const int c = row.index[k];
            if (c != skip && role_[c] != 0 && (only_role == 0 || role_[c] == only_role)) {
                work_[c] -= row.value[k] * y;
            }
        }
    };
    for (const auto &pv : upiv_) {
        const double y = work_[pv.col] / pv.value;
        v[pv.row] = y;
        scatter(pv.row, pv.col, y, 0);
    }
    const int nb = static_cast<int>(bump_rows_.size());
    if (nb > 0) {
        Eigen::VectorXd rhs(nb);
        for (int i = 0; i < nb; ++i) rhs(i) = work_[bump_cols_[i]];
        const Eigen::VectorXd y = bump_lu_.transpose().solve(rhs);
        for (int i = 0; i < nb; ++i) {
            v[bump_rows_[i]] = y(i);
            scatter(bump_rows_[i], -1, y(i), 1);
        }
    }
    for (auto it = lpiv_.rbegin(); it != lpiv_.rend(); ++it) {
        const double y = work_[it->col] / it->value;
        v[it->row] = y;
        scatter(it->row, it->col, y, 1);
    }
}

void LpSolver::ftran(std::vector<double> &v) {
    ftran_base(v);
    for (const auto &e : etas_) {
        const double zp = v[e.pos] / e.pivot;
        v[e.pos] = zp;
        if (zp == 0.0) continue;
        for (std::size_t k = 0; k < e.idx.size(); ++k) v[e.idx[k]] -= e.val[k] * zp;
    }
}

void LpSolver::btran(std::vector<double> &v) {
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
        double acc = v[it->pos];
        for (std::size_t k = 0; k < it->idx.size(); ++k) acc -= it->val[k] * v[it->idx[k]];
        v[it->pos] = acc / it->pivot;
    }
    btran_base(v);
}

void LpSolver::load_column(int j, std::vector<double> &v) const {
    if (j < n_) {
        for (const auto &[r, a] : cols_[j]) v[r] = a;
    } else {
        v[j - n_] = 1.0;
    }
}

double LpSolver::column_dot(int j, const std::vector<double> &y) const {
    double s = 0.0;
    for (const auto &[r, a] : cols_[j]) s += a * y[r];
    return s;
}

void LpSolver::compute_primal() {
    std::vector<double> w(prob_.rhs.begin(), prob_.rhs.end());
    for (int j = 0; j < n_; ++j) {
        if (status_[j] == VarStatus::Basic || x_[j] == 0.0) continue;
        for (const auto &[r, a] : cols_[j]) w[r] -= a * x_[j];
    }
    ftran(w);
    for (int p = 0; p < m_; ++p) x_[head_[p]] = w[p];
    primal_valid_ = true;
}

LpSolution LpSolver::make_solution(LpStatus status, const std::vector<double> &y) {
    LpSolution out;
    out.status = status;
    out.primal.assign(x_.begin(), x_.begin() + n_);
    out.duals = y;
    out.reduced_costs.assign(n_, 0.0);
    for (int j = 0; j < n_; ++j) {
        if (status_[j] != VarStatus::Basic) out.reduced_costs[j] = cost_[j] - column_dot(j, y);
    }
    out.objective = 0.0;
    for (int j = 0; j < n_; ++j) out.objective += cost_[j] * x_[j];
    return out;
}

bool LpSolver::eta_file_full() const {
    // Dense eta columns make every solve expensive; refactoring is cheap by comparison.
    return static_cast<int>(etas_.size()) >= opt_.refactor_interval ||
           eta_nnz_ > 8 * static_cast<std::size_t>(m_) + 1000;
}

void LpSolver::pivot(int leave, int q, const std::vector<double> &alpha) {
    where_[head_[leave]] = -1;
    head_[leave] = q;
    where_[q] = leave;
    status_[q] = VarStatus::Basic;
    Eta e{leave, alpha[leave], {}, {}};
    for (int p = 0; p < m_; ++p) {
        if (p != leave && alpha[p] != 0.0) {
            e.idx.push_back(p);
            e.val.push_back(alpha[p]);
        }
    }
    eta_nnz_ += e.idx.size() + 1;
    etas_.push_back(std::move(e));
}

LpSolver::DualOutcome LpSolver::dual_phase(std::int64_t &iter, std::int64_t max_iter, std::vector<double> &y) {
    const double ptol = opt_.primal_tol;
    const double dtol = opt_.dual_tol;
    const int total = n_ + m_;
    std::vector<double> d(total, 0.0), rho(m_), alpha(m_), arow(total, 0.0);
    // Costs shifted into the interior of the dual feasible cone to break dual degeneracy;
    // the primal loop that follows restores the true costs.
    std::vector<double> cost = cost_;
    auto reduced_costs = [&] {
        for (int p = 0; p < m_; ++p) y[p] = cost[head_[p]];
        btran(y);
        for (int j = 0; j < total; ++j) {
            d[j] = status_[j] == VarStatus::Basic ? 0.0 : cost[j] - (j < n_ ? column_dot(j, y) : y[j - n_]);
        }
    };
    auto dual_feasible = [&] {
        for (int j = 0; j < total; ++j) {
            const VarStatus st = status_[j];
            if (st == VarStatus::Basic || up_[j] == lo_[j]) continue;
            if (st == VarStatus::AtLower && d[j] > dtol) return false;
            if (st == VarStatus::AtUpper && d[j] < -dtol) return false;
            if (st == VarStatus::FreeZero && std::abs(d[j]) > dtol) return false;
        }
        return true;
    };
    reduced_costs();
    if (!dual_feasible()) return DualOutcome::Abandoned;
    bool infeasible_basis = false;
    for (int p = 0; p < m_ && !infeasible_basis; ++p) {
        const int j = head_[p];
        infeasible_basis = x_[j] < lo_[j] - ptol || x_[j] > up_[j] + ptol;
    }
    if (!infeasible_basis) return DualOutcome::PrimalFeasible;
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (int j = 0; j < total; ++j) {
        h ^= h >> 31;
        h *= 0xbf58476d1ce4e5b9ULL;
        h ^= h >> 29;
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
        const double delta = (1.0 + u) * 1e-7 * (1.0 + std::abs(cost_[j]));
        if (status_[j] == VarStatus::AtLower) {
            cost[j] -= delta;
            d[j] -= delta;
        } else if (status_[j] == VarStatus::AtUpper) {
            cost[j] += delta;
            d[j] += delta;
        }
    }

    const std::int64_t budget = iter + 5LL * total + 100;
    bool fresh = etas_.empty();
    for (;;) {
        int r = -1;
        double worst = ptol;
        for (int p = 0; p < m_; ++p) {
            const int j = head_[p];
            const double v = std::max(lo_[j] - x_[j], x_[j] - up_[j]);
            if (v > worst) {
                worst = v;
                r = p;
            }
        }
        if (r < 0) return DualOutcome::PrimalFeasible;
        if (iter >= budget || iter >= max_iter) return DualOutcome::Abandoned;

        const int l = head_[r];
        const bool below = x_[l] < lo_[l];
        const double s = below ? 1.0 : -1.0;
        std::fill(rho.begin(), rho.end(), 0.0);
        rho[r] = 1.0;
        btran(rho);

        // Pivot row alpha_r = rho A, accumulated by rows when rho is sparse.
        int rho_nnz = 0;
        for (int p = 0; p < m_; ++p) rho_nnz += rho[p] != 0.0;
        if (4 * rho_nnz < m_) {
            std::fill(arow.begin(), arow.begin() + n_, 0.0);
            for (int p = 0; p < m_; ++p) {
                if (rho[p] == 0.0) continue;
                const auto &row = prob_.rows[p];
                for (std::size_t k = 0; k < row.index.size(); ++k) arow[row.index[k]] += rho[p] * row.value[k];
            }
        } else {
            for (int j = 0; j < n_; ++j) arow[j] = column_dot(j, rho);
        }
        for (int p = 0; p < m_; ++p) arow[n_ + p] = rho[p];

        // Harris pass 1 on the dual ratios |d_j| / |alpha_rj|.
        double tmax = kInf;
        for (int j = 0; j < total; ++j) {
            const VarStatus st = status_[j];
            if (st == VarStatus::Basic || up_[j] == lo_[j]) {
                arow[j] = 0.0;
                continue;
            }
            const double a = arow[j];
            if (std::abs(a) <= opt_.pivot_tol) continue;
            if (st == VarStatus::AtLower && s * a >= 0.0) continue;
            if (st == VarStatus::AtUpper && s * a <= 0.0) continue;
            tmax = std::min(tmax, (std::abs(d[j]) + dtol) / std::abs(a));
        }
        int q = -1;
        double best_a = 0.0;
        for (int j = 0; j < total; ++j) {
            const double a = arow[j];
            if (std::abs(a) <= opt_.pivot_tol) continue;
            const VarStatus st = status_[j];
            if (st == VarStatus::AtLower && s * a >= 0.0) continue;
            if (st == VarStatus::AtUpper && s * a <= 0.0) continue;
            if (std::abs(d[j]) / std::abs(a) <= tmax && std::abs(a) > best_a) {
                best_a = std::abs(a);
                q = j;
            }
        }
        if (q < 0) {
            if (!fresh) {
                refactor();
                compute_primal();
                reduced_costs();
                fresh = true;
                if (!dual_feasible()) return DualOutcome::Abandoned;
                continue;
            }
            return DualOutcome::Infeasible;
        }
        ++iter;

        std::fill(alpha.begin(), alpha.end(), 0.0);
        load_column(q, alpha);
        ftran(alpha);
        if (std::abs(alpha[r]) <= opt_.pivot_tol) {
            if (fresh) return DualOutcome::Abandoned;
            refactor();
            compute_primal();
            reduced_costs();
            fresh = true;
            continue;
        }
        const double target = below ? lo_[l] : up_[l];
        const double step = (x_[l] - target) / alpha[r];
        x_[q] += step;
        for (int p = 0; p < m_; ++p) {
            if (alpha[p] != 0.0) x_[head_[p]] -= step * alpha[p];
        }
        x_[l] = target;
        status_[l] = below ? VarStatus::AtLower : VarStatus::AtUpper;

        const double theta = d[q] / arow[q];
        for (int j = 0; j < total; ++j) {
            if (arow[j] != 0.0) d[j] -= theta * arow[j];
        }
        d[l] = -theta;
        d[q] = 0.0;
        pivot(r, q, alpha);
        fresh = false;
        if (eta_file_full()) {
            refactor();
            compute_primal();
            reduced_costs();
            fresh = true;
        }
    }
}

LpSolution LpSolver::solve() {
    try {
        return solve_once();
    } catch (const NumericalError &) {
        // A stalled or drifting warm start gets one cold retry from the slack basis.
        reset_slack_basis();
        return solve_once();
    }
}

LpSolution LpSolver::solve_once() {
    const std::int64_t max_iter =
        opt_.max_iterations > 0 ? opt_.max_iterations : 10000 + 20LL * static_cast<std::int64_t>(n_ + m_);
    const double ptol = opt_.primal_tol;
    const double dtol = opt_.dual_tol;
    bool fresh = false;
    if (!factor_valid_) {
        refactor();
        fresh = true;
    }
    if (!primal_valid_) compute_primal();

    std::vector<double> y(m_), alpha(m_);
    std::int64_t iter = 0;
    switch (dual_phase(iter, max_iter, y)) {
        case DualOutcome::Infeasible: {
            auto out = make_solution(LpStatus::Infeasible, y);
            out.iterations = iter;
            return out;
        }
        case DualOutcome::PrimalFeasible:
        case DualOutcome::Abandoned: break;
    }
    fresh = etas_.empty();
    int degenerate = 0;
    double obj_scale = 0.0;
    for (int j = 0; j < n_; ++j) obj_scale += cost_[j] * x_[j];
    // Basic variables off their bounds by rounding noise get the bound shifted onto them
    // instead of a phase-1 pass; the true bounds come back at optimality.
    struct Shift {
        int j;
        double lo, up;
    };
    std::vector<Shift> shifts;
    auto restore_bounds = [&] {
        if (shifts.empty()) return;
        for (auto it = shifts.rbegin(); it != shifts.rend(); ++it) {
            lo_[it->j] = it->lo;
            up_[it->j] = it->up;
        }
        shifts.clear();
        for (int j = 0; j < n_ + m_; ++j) {
            if (status_[j] == VarStatus::AtLower) x_[j] = lo_[j];
            else if (status_[j] == VarStatus::AtUpper) x_[j] = up_[j];
        }
        primal_valid_ = false;
    };
    struct RestoreOnExit {
        decltype(restore_bounds) &f;
        ~RestoreOnExit() { f(); }
    } restore_guard{restore_bounds};
    int repair_rounds = 0;
    auto shift_tol = [&](int j) { return 1e-7 * (1.0 + std::abs(x_[j])); };
    auto max_violation = [&] {
        double v = 0.0;
        for (int p = 0; p < m_; ++p) {
            const int j = head_[p];
            v = std::max(v, std::max(lo_[j] - x_[j], x_[j] - up_[j]) / (1.0 + std::abs(x_[j])));
        }
        return v;
    };
    for (;;) {
        bool phase1 = false;
        for (int p = 0; p < m_; ++p) {
            const int j = head_[p];
            const bool below = x_[j] < lo_[j] - ptol;
            const bool above = x_[j] > up_[j] + ptol;
            if ((below || above) && repair_rounds < 3 && std::max(lo_[j] - x_[j], x_[j] - up_[j]) <= shift_tol(j)) {
                shifts.push_back({j, lo_[j], up_[j]});
                if (below) lo_[j] = x_[j];
                else up_[j] = x_[j];
                y[p] = 0.0;
            } else if (below) {
                y[p] = 1.0;
                phase1 = true;
            } else if (above) {
                y[p] = -1.0;
                phase1 = true;
            } else {
                y[p] = 0.0;
            }
        }
        if (!phase1) {
            for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
        }
        btran(y);

        const bool bland = degenerate > opt_.stall_threshold;
        int q = -1;
        double dq = 0.0, best = 0.0;
        for (int j = 0; j < n_ + m_; ++j) {
            const VarStatus st = status_[j];
            if (st == VarStatus::Basic) continue;
            const double c = phase1 ? 0.0 : cost_[j];
            const double d = c - (j < n_ ? column_dot(j, y) : y[j - n_]);
            bool ok = false;
            if (st == VarStatus::AtLower) ok = d > dtol && up_[j] > lo_[j];
            else if (st == VarStatus::AtUpper) ok = d < -dtol && up_[j] > lo_[j];
            else ok = std::abs(d) > dtol;
            if (!ok) continue;
            if (bland) {
                q = j;
                dq = d;
                break;
            }
            if (std::abs(d) > best) {
                best = std::abs(d);
                q = j;
                dq = d;
            }
        }
        if (q < 0) {
            if (!fresh) {
                refactor();
                compute_primal();
                fresh = true;
                continue;
            }
            if (!phase1 && !shifts.empty()) {
                restore_bounds();
                compute_primal();
                if (max_violation() > ptol) {
                    // The basis is dual feasible, so the dual phase repairs what the shifts hid.
                    if (++repair_rounds <= 3) {
                        if (dual_phase(iter, max_iter, y) == DualOutcome::Infeasible) {
                            auto out = make_solution(LpStatus::Infeasible, y);
                            out.iterations = iter;
                            return out;
                        }
                        fresh = etas_.empty();
                        continue;
                    }
                    if (max_violation() > 1e-7) throw NumericalError("bound shifts left a primal violation");
                }
                for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
                btran(y);
            }
            auto out = make_solution(phase1 ? LpStatus::Infeasible : LpStatus::Optimal, y);
            out.iterations = iter;
            return out;
        }
        if (++iter > max_iter) throw NumericalError("simplex iteration limit reached");

        const double sigma = dq > 0.0 ? 1.0 : -1.0;
        std::fill(alpha.begin(), alpha.end(), 0.0);
        load_column(q, alpha);
        ftran(alpha);

        // Harris pass 1: largest step keeping every basic variable within tolerance.
        double tmax = kInf;
        for (int p = 0; p < m_; ++p) {
            const double a = alpha[p];
            if (std::abs(a) <= opt_.pivot_tol) continue;
            const int j = head_[p];
            const double rate = -sigma * a;
            const double v = x_[j];
            double lim;
            if (phase1 && v < lo_[j] - ptol) {
                if (rate <= 0.0) continue;
                lim = (lo_[j] - v + ptol) / rate;
            } else if (phase1 && v > up_[j] + ptol) {
                if (rate >= 0.0) continue;
                lim = (v - up_[j] + ptol) / -rate;
            } else if (rate > 0.0) {
                if (up_[j] == kInf) continue;
                lim = (up_[j] - v + ptol) / rate;
            } else {
                if (lo_[j] == -kInf) continue;
                lim = (v - lo_[j] + ptol) / -rate;
            }
            tmax = std::min(tmax, lim);
        }
        const double flip = up_[q] - lo_[q];
        if (tmax == kInf && !(flip < kInf)) {
            if (!fresh) {
                refactor();
                compute_primal();
                fresh = true;
                continue;
            }
            if (phase1) throw NumericalError("phase 1 ray without a breakpoint");
            auto out = make_solution(LpStatus::Unbounded, y);
            out.iterations = iter;
            return out;
        }
        fresh = false;
        if (flip <= tmax) {
            x_[q] = sigma > 0.0 ? up_[q] : lo_[q];
            status_[q] = sigma > 0.0 ? VarStatus::AtUpper : VarStatus::AtLower;
            for (int p = 0; p < m_; ++p) {
                if (alpha[p] != 0.0) x_[head_[p]] -= sigma * flip * alpha[p];
            }
            degenerate = 0;
            continue;
        }

        // Pass 2: among breakpoints within tmax take the largest pivot.
        int leave = -1;
        double best_a = 0.0, t = 0.0, target = 0.0;
        for (int p = 0; p < m_; ++p) {
            const double a = alpha[p];
            if (std::abs(a) <= opt_.pivot_tol) continue;
            const int j = head_[p];
            const double rate = -sigma * a;
            const double v = x_[j];
            double r, bound;
            if (phase1 && v < lo_[j] - ptol) {
                if (rate <= 0.0) continue;
                bound = lo_[j];
                r = (bound - v) / rate;
            } else if (phase1 && v > up_[j] + ptol) {
                if (rate >= 0.0) continue;
                bound = up_[j];
                r = (v - bound) / -rate;
            } else if (rate > 0.0) {
                if (up_[j] == kInf) continue;
                bound = up_[j];
                r = (bound - v) / rate;
            } else {
                if (lo_[j] == -kInf) continue;
                bound = lo_[j];
                r = (v - bound) / -rate;
            }
            r = std::max(r, 0.0);
            if (bland) {
                if (leave < 0 || r < t - 1e-12 || (r <= t + 1e-12 && j < head_[leave])) {
                    leave = p;
                    t = r;
                    target = bound;
                }
            } else if (r <= tmax && std::abs(a) > best_a) {
                best_a = std::abs(a);
                leave = p;
                t = r;
                target = bound;
            }
        }
        if (leave < 0) throw NumericalError("ratio test found no leaving variable");

        x_[q] += sigma * t;
        for (int p = 0; p < m_; ++p) {
            if (alpha[p] != 0.0) x_[head_[p]] -= sigma * t * alpha[p];
        }
        const int l = head_[leave];
        x_[l] = target;
        status_[l] = target == lo_[l] ? VarStatus::AtLower : VarStatus::AtUpper;
        pivot(leave, q, alpha);
        // Steps that barely move the objective count as stalls, so Bland's rule can take over.
        degenerate = std::abs(dq) * t <= 1e-9 * (1.0 + std::abs(obj_scale)) ? degenerate + 1 : 0;
        if (eta_file_full()) {
            refactor();
            compute_primal();
            obj_scale = 0.0;
            for (int j = 0; j < n_; ++j) obj_scale += cost_[j] * x_[j];
        }
    }
}

LpSolution solve_lp(const LpProblem &p, const SimplexOptions &options) {
    LpSolver solver(p, options);
    return solver.solve();
}

bool verify_kkt(const LpProblem &p, const LpSolution &s, const KktTolerances &tol) {
    if (s.status != LpStatus::Optimal) return false;
    const int n = p.n_vars();
    const int m = p.n_rows();
    if (static_cast<int>(s.primal.size()) != n || static_cast<int>(s.duals.size()) != m ||
        static_cast<int>(s.reduced_costs.size()) != n) {
        return false;
    }
    for (int j = 0; j < n; ++j) {
        const double scale = 1.0 + std::abs(s.primal[j]);
        if (s.primal[j] < p.lower[j] - tol.primal * scale || s.primal[j] > p.upper[j] + tol.primal * scale) {
            return false;
        }
    }
    std::vector<double> d(p.objective);
    double dual_obj = 0.0;
    for (int r = 0; r < m; ++r) {
        const auto &row = p.rows[r];
        double act = 0.0, mag = std::abs(p.rhs[r]);
        for (std::size_t k = 0; k < row.index.size(); ++k) {
            act += row.value[k] * s.primal[row.index[k]];
            mag += std::abs(row.value[k] * s.primal[row.index[k]]);
            d[row.index[k]] -= row.value[k] * s.duals[r];
        }
        const double slack = p.rhs[r] - act;
        const double scale = 1.0 + mag;
        if (p.sense[r] == RowSense::Equal) {
            if (std::abs(slack) > tol.primal * scale) return false;
        } else {
            if (slack < -tol.primal * scale) return false;
            if (s.duals[r] < -tol.dual) return false;
            if (std::abs(s.duals[r] * slack) > tol.complementarity * scale) return false;
        }
        dual_obj += p.rhs[r] * s.duals[r];
    }
    for (int j = 0; j < n; ++j) {
        const double scale = 1.0 + std::abs(p.objective[j]);
        if (std::abs(d[j] - s.reduced_costs[j]) > tol.dual * scale) return false;
        const double dj = s.reduced_costs[j];
        const double v = s.primal[j];
        if (dj > tol.dual * scale) {
            if (p.upper[j] == kInf) return false;
            if (std::abs(dj * (p.upper[j] - v)) > tol.complementarity * scale) return false;
            dual_obj += dj * p.upper[j];
        } else if (dj < -tol.dual * scale) {
            if (p.lower[j] == -kInf) return false;
            if (std::abs(dj * (v - p.lower[j])) > tol.complementarity * scale) return false;
            dual_obj += dj * p.lower[j];
        } else {
            dual_obj += dj * v;
        }
    }
    double primal_obj = 0.0;
    for (int j = 0; j < n; ++j) primal_obj += p.objective[j] * s.primal[j];
    if (std::abs(primal_obj - s.objective) > tol.gap_rel * std::max(1.0, std::abs(primal_obj))) return false;
    return std::abs(primal_obj - dual_obj) <= tol.gap_rel * std::max(1.0, std::abs(primal_obj));
}

}  // namespace sbbd

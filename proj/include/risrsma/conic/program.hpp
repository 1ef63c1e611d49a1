#pragma once

// Canonical conic program accepted by every solver adapter:
//
//   minimize    c^T x
//   subject to  h - G x  in  K = R_+^l  x  Q^{q_1} x ... x Q^{q_p}
//
// where Q^q = {(t, w) in R x R^{q-1} : ||w|| <= t}. Rows of G and h are
// ordered with the l nonnegative rows first, then each second-order cone
// block in turn. Rotated cones are stored in their second-order form and
// keep their tag.

#include "risrsma/types.hpp"

#include <Eigen/Sparse>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace risrsma::conic {

using Index = Eigen::Index;

enum class ConeKind { Linear, SecondOrder, RotatedSecondOrder };

struct VariableBlock {
    std::string name;
    Index offset = 0;
    Index size = 0;
};

struct ConstraintTag {
    ConeKind kind = ConeKind::Linear;
    std::string label;
    Index first_row = 0; // row in G
    Index rows = 0;
};

struct ConicProgram {
    Index num_vars = 0;
    std::vector<VariableBlock> blocks;
    RVec c;
    Eigen::SparseMatrix<double> G;
    RVec h;
    Index nonneg = 0;
    std::vector<Index> soc_dims;
    std::vector<ConstraintTag> constraints;
    std::optional<RVec> warm_start; // primal hint; solvers may ignore it

    [[nodiscard]] Index rows() const { return h.size(); }

    [[nodiscard]] const VariableBlock* block(const std::string& name) const {
        for (const auto& b : blocks)
            if (b.name == name) return &b;
        return nullptr;
    }

    void validate() const {
        auto req = [](bool ok, const char* what) {
            if (!ok) throw ModelError(std::string("invalid ConicProgram: ") + what);
        };
        req(c.size() == num_vars, "objective length");
        req(G.cols() == num_vars && G.rows() == h.size(), "G shape");
        Index m = nonneg;
        for (Index q : soc_dims) {
            req(q >= 1, "cone dimension >= 1");
            m += q;
        }
        req(m == h.size(), "cone dimensions cover all rows");
        for (const auto& b : blocks) req(b.offset >= 0 && b.offset + b.size <= num_vars, "block range");
        if (warm_start) req(warm_start->size() == num_vars, "warm start length");
    }
};

/// Affine expression in the program variables.
class Affine {
public:
    Affine() = default;
    explicit Affine(double constant) : constant_(constant) {}

    static Affine var(Index i, double coef = 1.0) {
        Affine a;
        a.terms_.emplace_back(i, coef);
        return a;
    }

    Affine& add(Index i, double coef) {
        if (coef != 0.0) terms_.emplace_back(i, coef);
        return *this;
    }
    Affine& operator+=(const Affine& o) {
        terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
        constant_ += o.constant_;
        return *this;
    }
    Affine& operator-=(const Affine& o) { return *this += o * -1.0; }
    Affine& operator+=(double v) {
        constant_ += v;
        return *this;
    }
    Affine operator*(double s) const {
        Affine r = *this;
        for (auto& t : r.terms_) t.second *= s;
        r.constant_ *= s;
        return r;
    }
    friend Affine operator+(Affine a, const Affine& b) { return a += b; }
    friend Affine operator-(Affine a, const Affine& b) { return a -= b; }
    friend Affine operator+(Affine a, double v) { return a += v; }
    friend Affine operator-(Affine a, double v) { return a += -v; }

    [[nodiscard]] double constant() const { return constant_; }
    [[nodiscard]] const std::vector<std::pair<Index, double>>& terms() const { return terms_; }

    [[nodiscard]] double eval(const RVec& x) const {
        double v = constant_;
        for (const auto& [i, c] : terms_) v += c * x(i);
        return v;
    }

private:
    std::vector<std::pair<Index, double>> terms_;
    double constant_ = 0.0;
};

/// Incrementally assembles a ConicProgram.
class ProgramBuilder {
public:
    Index add_block(const std::string& name, Index size) {
        blocks_.push_back({name, num_vars_, size});
        num_vars_ += size;
        return blocks_.back().offset;
    }

    void set_objective(const Affine& obj) { objective_ = obj; }

    /// expr >= 0
    void add_nonneg(const Affine& expr, std::string label) {
        lin_.push_back(expr);
        lin_labels_.push_back(std::move(label));
    }

    /// ||w|| <= t
    void add_soc(const Affine& t, const std::vector<Affine>& w, std::string label,
                 ConeKind kind = ConeKind::SecondOrder) {
        std::vector<Affine> rows;
        rows.reserve(w.size() + 1);
        rows.push_back(t);
        rows.insert(rows.end(), w.begin(), w.end());
        socs_.push_back({std::move(rows), std::move(label), kind});
    }

    /// ||w||^2 <= x y with x, y >= 0, as ||(2w, x - y)|| <= x + y.
    void add_rotated(const Affine& x, const Affine& y, const std::vector<Affine>& w, std::string label) {
        std::vector<Affine> rows;
        rows.reserve(w.size() + 1);
        for (const auto& e : w) rows.push_back(e * 2.0);
        rows.push_back(x - y);
        add_soc(x + y, rows, std::move(label), ConeKind::RotatedSecondOrder);
    }

    /// ||w||^2 <= s
    void add_squares_le(const std::vector<Affine>& w, const Affine& s, std::string label) {
        add_rotated(s, Affine(1.0), w, std::move(label));
    }

    [[nodiscard]] Index num_vars() const { return num_vars_; }

    [[nodiscard]] ConicProgram build() const {
        ConicProgram p;
        p.num_vars = num_vars_;
        p.blocks = blocks_;
        p.c = RVec::Zero(num_vars_);
        for (const auto& [i, v] : objective_.terms()) p.c(i) += v;

        Index m = static_cast<Index>(lin_.size());
        for (const auto& s : socs_) m += static_cast<Index>(s.rows.size());
        p.h.resize(m);
        std::vector<Eigen::Triplet<double>> trips;
        Index row = 0;
        auto emit = [&](const Affine& e) {
            // s_row = e(x) = a^T x + b  ->  G row = -a, h = b
            for (const auto& [i, v] : e.terms()) trips.emplace_back(row, i, -v);
            p.h(row) = e.constant();
            ++row;
        };
        for (std::size_t i = 0; i < lin_.size(); ++i) {
            p.constraints.push_back({ConeKind::Linear, lin_labels_[i], row, 1});
            emit(lin_[i]);
        }
        p.nonneg = static_cast<Index>(lin_.size());
        for (const auto& s : socs_) {
            p.constraints.push_back({s.kind, s.label, row, static_cast<Index>(s.rows.size())});
            for (const auto& e : s.rows) emit(e);
            p.soc_dims.push_back(static_cast<Index>(s.rows.size()));
        }
        p.G.resize(m, num_vars_);
        p.G.setFromTriplets(trips.begin(), trips.end()); // duplicates are summed
        return p;
    }

private:
    struct Soc {
        std::vector<Affine> rows;
        std::string label;
        ConeKind kind;
    };
    Index num_vars_ = 0;
    std::vector<VariableBlock> blocks_;
    Affine objective_;
    std::vector<Affine> lin_;
    std::vector<std::string> lin_labels_;
    std::vector<Soc> socs_;
};

} // namespace risrsma::conic

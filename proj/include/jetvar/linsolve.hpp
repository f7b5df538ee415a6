#pragma once

#include <optional>
#include <vector>

#include "jetvar/expr.hpp"

namespace jetvar {

// Linear system in unknown parameter atoms. Each added expression is split
// into one equation per monomial in x, jets and opaque symbols; t, parameters
// and constants form the coefficient field.
class LinearSystem {
public:
    explicit LinearSystem(std::vector<AtomId> unknowns);

    // Fresh unknown atoms named prefix0, prefix1, ...
    static std::vector<AtomId> make_unknowns(const std::string& prefix, std::size_t n);

    void add(const Expr& e);
    std::size_t equation_count() const { return rows_.size(); }
    // Particular solution with free unknowns set to zero; nullopt if inconsistent.
    std::optional<std::vector<Expr>> solve() const;
    // Rank of the coefficient matrix.
    std::size_t rank() const;

private:
    struct Row {
        std::vector<Expr> coef;
        Expr rhs;
    };
    std::vector<AtomId> unknowns_;
    std::vector<Row> rows_;
};

// Replaces unknown atoms by their solved values.
Expr substitute_unknowns(const Expr& e, const std::vector<AtomId>& unknowns, const std::vector<Expr>& values);

}  // namespace jetvar

#pragma once

#include <optional>
#include <string>

#include "jetvar/operators.hpp"

namespace jetvar {

// v-jets are the same coordinates as u-jets; v = u_d is a jet shift by d.
Expr substitute_potential(const Expr& e, int depth);
DiffOperator substitute_potential(const DiffOperator& p, int depth);

// v_t = D_x^depth E(H) with K recomputed from D and H.
struct HamiltonianPair {
    DiffOperator D;
    Expr H;
    Expr K;
};
HamiltonianPair hamiltonian_pair(const DiffOperator& D, const Expr& H);

struct PotentialForm {
    int depth = 1;
    Expr K;                                  // E(H1) with v = u_depth
    Expr change_of_variables_residual;       // see euler_change_of_variables
    std::optional<VariationalWitness> witness;  // D_x^depth as variational operator (odd depth)
};

PotentialForm potentialize(const Expr& H1, int depth = 1);

// E(H|_{v=u_d}) - (-D_x)^d (E(H)|_{v=u_d}); identically zero.
Expr euler_change_of_variables(const Expr& H, int depth);

struct Compatibility {
    int depth = 1;
    Expr G;                     // D0(E(H1))
    Expr exactness_residual;    // E(G) for depth 1; zero when G is in the image of D_x
    std::optional<Expr> F;      // D_x^depth F = G
    HelmholtzVerdict helmholtz; // on F
    std::optional<Expr> H2;     // E(H2) = F
    std::string verdict;
    bool ok() const { return H2.has_value(); }
};

// D0(E(H1)) = D_x^depth E(H2).
Compatibility compatibility_H2(const DiffOperator& D0, const Expr& H1, int depth = 1);

// h (s D_x s + D_x^3) h with s = sqrt(c1 + c2 * int_0^v dy/h(y)).
DiffOperator dorfman_operator(const Expr& h, const Expr& c1, const Expr& c2);
// The h = 1/(k1 v + k2), c2 = 1 member with v = u_x; skewness asserted.
DiffOperator pulled_back(const Expr& k1, const Expr& k2, const Expr& c1);

struct BihtResult {
    Compatibility compat;
    DiffOperator E;               // D0 with v = u_depth
    SymplecticVerdict symplectic;
    Expr K;                       // potential equation
    Expr transfer_residual;       // E(K) + E_op(H2|)
    std::optional<VariationalWitness> witness;
    std::string failure;
};

BihtResult biht_pipeline(const DiffOperator& D0, const Expr& H1, int depth = 1);

// Cylindrical KdV pair: raw certificates only.
struct CylindricalKdvReport {
    Expr K_from_D1;  // D_x E(H1)
    Expr K_from_D0;  // D0 E(H0)
    int sign = 0;    // sigma with D_x E(sigma/2 w_x^2 + w^3/(6 sqrt t)) = D0 E(H0), or 0 if none
    Compatibility compat;  // D0 against the sign-corrected H1
};

CylindricalKdvReport cylindrical_kdv_experiment();

}  // namespace jetvar

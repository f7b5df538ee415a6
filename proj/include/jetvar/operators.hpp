#pragma once

#include <optional>
#include <string>
#include <vector>

#include "jetvar/cohomology.hpp"

namespace jetvar {

class AnsatzError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

// E(u_t - K) = E(Q (u_t - K) + L) with E = F_Q* - F_Q, all on the free jet space.
struct VariationalWitness {
    DiffOperator E;
    Expr Q;
    Expr L;
    DiffOperator operator_defect;  // F_Q* - F_Q - E
    Expr residual;                 // E(Delta) - E_op(Q Delta + L)
    bool ok() const { return operator_defect.is_zero() && residual.is_zero(); }
};

VariationalWitness verify_variational(const DiffOperator& E, const EqContext& ctx, const Expr& Q, const Expr& L);

// Default bound: order(E) plus the highest jet order among its coefficients.
int default_order_bound(const DiffOperator& E);

// Q with F_Q* - F_Q = E from an undetermined-coefficient ansatz; order_bound < 0 picks the default.
Expr construct_Q(const DiffOperator& E, int order_bound = -1);

struct VariationalSearch {
    std::optional<Expr> Q;
    Expr source;  // E(Delta) - E(Q Delta); must be E(L)
    HelmholtzVerdict helmholtz;
    std::optional<VariationalWitness> witness;
    // Definite answer once Q is known: the source term is an Euler image or not.
    std::optional<bool> variational() const {
        if (!Q) return std::nullopt;
        return helmholtz.is_euler_image;
    }
};

// Q from construct_Q, then L from the Helmholtz inversion of the source term.
VariationalSearch search_variational(const DiffOperator& E, const EqContext& ctx, int order_bound = -1);

struct SymplecticVerdict {
    bool skew = false;
    bool closed = false;  // delta_V(dx ^ th0 ^ S(th0)) = 0
    DiffOperator skew_defect{Space::SemiBasic};  // S + S*
    Form closure_residual{Space::SemiBasic, 1, 3};  // delta_V(dx ^ th0 ^ S(th0)); set once skew
    std::optional<Expr> P;  // 1/2 (F_P - F_P*) = S, verified
    std::string potential_route;  // "scaling homotopy" or "ansatz"
    std::string reason;
    bool symplectic() const { return skew && closed; }
};

// with_potential = false skips the potential search, which can dominate for parametric operators.
SymplecticVerdict is_symplectic(const DiffOperator& S, bool with_potential = true);

// Scaling-homotopy potential for a symplectic operator, verified; nullopt if no grading works.
std::optional<Expr> symplectic_potential(const DiffOperator& S);

struct HamiltonianVerdict {
    Expr G;  // 1/2 dP/dt + S(K)
    std::optional<Expr> H;
    std::string reason;
    bool ok() const { return H.has_value(); }
};

// Throws OperatorError if P is not a potential for S.
HamiltonianVerdict hamiltonian_of(const DiffOperator& S, const EqContext& ctx, const Expr& P);

enum class FotVerdict { NotClosed, Nontrivial, OperatorFound, Inconclusive };
std::string to_string(FotVerdict v);

struct FotResult {
    Expr khat2;
    Form kappa;
    ConservationVerdict conservation;
    FotVerdict verdict = FotVerdict::Inconclusive;
    std::optional<Expr> R;
    std::optional<DiffOperator> E;  // 2R D_x + X(R)
    std::optional<bool> closure_certificate;  // omega(E) closed, computed independently
};

FotResult fot_test(const EqContext& ctx);

// Coefficient of theta^i ^ theta^0 in theta^0 ^ L*(eps), i.e. in -L*(eps) ^ theta^0.
struct AnsatzCondition {
    int i;
    Expr coef;
};

std::vector<AnsatzCondition> ansatz_conditions(const EqContext& ctx, const Form& eps);

// -R theta^1 - 1/2 X(R) theta^0, the general skew first-order contact form.
Form first_order_skew_form(const Expr& R, const EqContext& ctx);

}  // namespace jetvar

#pragma once

#include <optional>
#include <string>

#include "jetvar/forms.hpp"
#include "jetvar/jet.hpp"

namespace jetvar {

class OperatorError : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// rho* = sum (-X)^i (r_i theta^0) for a contact 1-form rho = sum r_i theta^i.
Form rho_adjoint(const Form& rho);

// sum_{i=1}^n sum_{a=1}^i (-X)^{a-1}(K_i rho) ^ theta^{i-a}; rho a function or contact 1-form.
Form beta_form(const Form& rho, const EqContext& ctx);

// dx ^ theta^0 ^ eps - dt ^ beta(eps).
Form omega_of(const Form& epsilon, const EqContext& ctx);

struct CanonicalClass {
    Form epsilon;
    Form omega;
    Form skew_residual;     // eps* + eps
    Form closure_residual;  // d_H omega
    Form lin_residual;      // theta^0 ^ L*(eps)
    bool is_skew() const { return skew_residual.is_zero(); }
    bool is_closed() const { return closure_residual.is_zero(); }
    bool lin_ok() const { return lin_residual.is_zero(); }
};

CanonicalClass certify_class(const Form& epsilon, const EqContext& ctx);

// eps = -1/2 sum r_i theta^i for E = sum r_i D_x^i; rejects non-skew or t-dependent operators.
CanonicalClass omega_from_operator(const DiffOperator& E, const EqContext& ctx);

struct CanonicalResult {
    CanonicalClass cls;
    // omega - cls.omega = d_H(xi) when found.
    std::optional<Form> xi;
};

// Skew-symmetrized representative of a d_H-closed (1,2)-form on the equation manifold.
CanonicalResult canonical_representative(const Form& omega, const EqContext& ctx);

struct ClosedCorrection {
    Form xi;     // d_V omega_hat = d_H xi
    Form zeta;   // d_V zeta = xi
    Form omega;  // omega_hat + d_H zeta, d_V-closed
};

// Adds a d_H-exact term making a d_H-closed (1,2)-form d_V-closed.
std::optional<ClosedCorrection> dv_closed_representative(const Form& omega_hat, const EqContext& ctx,
                                                         const HomotopyOptions& opt = {});

struct LambdaResult {
    Form eta;       // d_V eta = omega
    Form lambda;    // grade (2,0)
    Form residual;  // d_V lambda - d_H eta
};

struct DivergenceReduction {
    Expr reduced;  // L - X(F)
    Expr F;
};

// Strips top-order terms linear in the highest x-derivative by integration by parts.
DivergenceReduction divergence_reduce(const Expr& L);

LambdaResult lambda_invariant(const Form& omega, const EqContext& ctx, const HomotopyOptions& opt = {});
// Same, starting from a supplied eta. Both shift eta by d_V(F dt) so that lambda is divergence-reduced.
LambdaResult lambda_for_eta(const Form& eta, const EqContext& ctx, const HomotopyOptions& opt = {});
// True when the coefficient difference is an x-divergence, which certifies the same lambda class.
// False is not a proof of a different class: d_H-exact terms T(A) dt^dx are not detected.
bool same_lambda_class(const Form& a, const Form& b);

enum class Triviality { NotClosed, Trivial, Nontrivial, Undetermined };
std::string to_string(Triviality t);

struct ConservationVerdict {
    Form dh_residual;
    Expr Q;
    Triviality trivial = Triviality::Undetermined;
    std::optional<Expr> f;  // kappa = d_H f
    std::optional<Expr> R;  // kappa = d_H log R
    bool closed() const { return dh_residual.is_zero(); }
};

ConservationVerdict conservation_characteristic(const Form& kappa, const EqContext& ctx);

// Antiderivative in t of an expression in t and constants alone (no logarithms).
std::optional<Expr> integrate_t(const Expr& c);

struct HelmholtzVerdict {
    bool is_euler_image = false;
    DiffOperator defect;  // F_Q - F_Q*
    std::optional<Expr> A;  // E(A) = Q, verified
};

HelmholtzVerdict helmholtz_and_lagrangian(const Expr& Q, Space space, const HomotopyOptions& opt = {});

}  // namespace jetvar

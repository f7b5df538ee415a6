#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

#include "jetvar/expr.hpp"
#include "jetvar/parse.hpp"

namespace jetvar {

// Free 2-jet space, equation manifold, t-semibasic space.
enum class Space { Free, Eqn, SemiBasic };
std::string to_string(Space s);

class SpaceError : public std::logic_error {
    using std::logic_error::logic_error;
};

// Evolution equation u_t = K on the equation manifold.
class EqContext {
public:
    explicit EqContext(Expr k);

    const Expr& K() const { return k_; }
    int order() const { return n_; }
    // dK/du_i, zero for i > order.
    Expr K_i(int i) const;

    Expr X(const Expr& e) const;
    Expr T(const Expr& e) const;
    // X^i(K), cached.
    Expr XK(int i) const;
    // Value of u_{a,i} on the equation manifold (a >= 1).
    Expr jet_value(int a, int i) const;
    // Replace every t-jet by its value on the equation manifold.
    Expr restrict(const Expr& e) const;
    // X^k(K_j), cached.
    Expr XK_i(int k, int j) const;
    // Contact 1-form T(theta^i) = X^i(d_V K) as index -> coefficient, cached.
    std::map<int, Expr> T_theta(int i) const;

private:
    Expr k_;
    int n_ = 0;
    std::vector<Expr> ki_;
    struct Cache {
        std::mutex mu;
        std::map<std::pair<int, int>, Expr> jets;
        std::map<std::pair<int, int>, Expr> xkj;
        std::map<int, std::map<int, Expr>> ttheta;
    };
    std::shared_ptr<Cache> cache_;
};

enum class Dir { X, T };

// D_x / D_t on Free; X / T on Eqn (T needs ctx); X on SemiBasic.
Expr total_derivative(const Expr& e, Dir dir, Space space, const EqContext* ctx = nullptr);
Expr Dx(const Expr& e);
Expr Dt(const Expr& e);
Expr Dx_pow(const Expr& e, int k);

// Sum of c_{a,i} D_t^a D_x^i with coefficients to the left.
class DiffOperator {
public:
    using Key = std::pair<int, int>;  // (a, i)

    DiffOperator() = default;
    explicit DiffOperator(Space s) : space_(s) {}

    static DiffOperator mult(const Expr& c, Space s);
    static DiffOperator Dx(Space s, int k = 1);
    static DiffOperator Dt(Space s, int k = 1);
    static DiffOperator identity(Space s) { return mult(Expr(1), s); }

    Space space() const { return space_; }
    const std::map<Key, Expr>& terms() const { return terms_; }
    Expr coef(int a, int i) const;
    void add_term(int a, int i, const Expr& c);
    bool is_zero() const { return terms_.empty(); }
    // Highest a+i, or -1 for the zero operator.
    int order() const;
    // The multiplication operator value if order <= 0.
    std::optional<Expr> as_scalar() const;

    // Applies to an expression; on Eqn the context supplies T when needed.
    Expr apply(const Expr& e, const EqContext* ctx = nullptr) const;

    DiffOperator operator+(const DiffOperator& o) const;
    DiffOperator operator-(const DiffOperator& o) const;
    DiffOperator operator-() const;
    DiffOperator scaled(const Expr& c) const;
    friend bool operator==(const DiffOperator& p, const DiffOperator& q);

    std::string str(const FormatOptions& opt = {}) const;

private:
    void check_space(const DiffOperator& o) const;
    Space space_ = Space::Eqn;
    std::map<Key, Expr> terms_;
};

DiffOperator compose(const DiffOperator& p, const DiffOperator& q);
DiffOperator adjoint(const DiffOperator& p);
bool is_skew(const DiffOperator& p);
bool is_self_adjoint(const DiffOperator& p);

// Frechet derivative: sum of dP/du_{a,i} D_t^a D_x^i (x-jets only off Free).
DiffOperator frechet(const Expr& p, Space space);

// Moves an operator between spaces. Lifting rejects coefficients with t-jets;
// projecting to Eqn rejects D_t terms and restricts coefficients.
DiffOperator lift(const DiffOperator& p);
DiffOperator project(const DiffOperator& p, const EqContext& ctx);
DiffOperator retag(const DiffOperator& p, Space s);

// Universal linearization T - sum K_i X^i and its adjoint on functions.
struct Linearization {
    const EqContext* ctx;
    Expr apply(const Expr& rho) const;
    Expr adjoint_apply(const Expr& rho) const;
};
Linearization linearization(const EqContext& ctx);

DiffOperator parse_operator(std::string_view src, Decls& decls, Space space);

}  // namespace jetvar

#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "jetvar/expr.hpp"
#include "jetvar/jet.hpp"

namespace jetvar {

// Contact index: (a, i) names theta^{(a,i)} on the free space; a = 0 elsewhere.
struct CIdx {
    int a = 0;
    int i = 0;
    friend auto operator<=>(const CIdx&, const CIdx&) = default;
    friend bool operator==(const CIdx&, const CIdx&) = default;
    JetCoord coord() const { return JetCoord::u(a, i); }
};

// dt? ^ dx? ^ theta^{c1} ^ ... with c1 < c2 < ...
struct Basis {
    bool dt = false;
    bool dx = false;
    std::vector<CIdx> th;
    int r() const { return int(dt) + int(dx); }
    int s() const { return static_cast<int>(th.size()); }
    friend auto operator<=>(const Basis&, const Basis&) = default;
    friend bool operator==(const Basis&, const Basis&) = default;
};

class FormError : public std::logic_error {
    using std::logic_error::logic_error;
};

class Form {
public:
    Form() = default;
    Form(Space space, int r, int s) : space_(space), r_(r), s_(s) {}

    static Form function(const Expr& f, Space space);
    static Form dx(Space space);
    static Form dt(Space space);
    static Form theta(Space space, int i, int a = 0);
    // Contact 1-form sum r_i theta^i.
    static Form contact(Space space, const std::map<int, Expr>& coefs);

    Space space() const { return space_; }
    int r() const { return r_; }
    int s() const { return s_; }
    const std::map<Basis, Expr>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    Expr coef(const Basis& b) const;

    // Adds c times the basis element (already normalized).
    void add(const Basis& b, const Expr& c);
    // Adds c * H ^ theta^{list} with list in any order (sign and zero handled).
    void add_unsorted(bool dt, bool dx, std::vector<CIdx> list, Expr c);

    Form operator+(const Form& o) const;
    Form operator-(const Form& o) const;
    Form operator-() const;
    Form scaled(const Expr& c) const;
    Form map_coefs(const std::function<Expr(const Expr&)>& f) const;
    friend bool operator==(const Form& a, const Form& b);

    // Coefficients as a contact 1-form (requires r = 0, s = 1).
    std::map<int, Expr> contact_coefs() const;
    // The part whose horizontal factor is exactly (dt, dx), with that factor removed.
    Form horizontal_part(bool dt, bool dx) const;

    std::string str(const FormatOptions& opt = {}) const;

private:
    void check(const Form& o) const;
    Space space_ = Space::Eqn;
    int r_ = 0;
    int s_ = 0;
    std::map<Basis, Expr> terms_;
};

std::string contact_name(Space space, const CIdx& c);

Form wedge(const Form& a, const Form& b);

// Total derivative acting on forms: X (or D_x) and T (or D_t).
Form total_x(const Form& w);
Form total_t(const Form& w, const EqContext* ctx);
Form d_h(const Form& w, const EqContext* ctx = nullptr);
Form d_v(const Form& w);
// Vertical differential of a function on the given space.
Form d_v(const Expr& f, Space space);
// Interior product with d/du_c, passing horizontal factors with sign (-1)^r.
Form interior(const CIdx& c, const Form& w);

Expr euler_lagrange(const Expr& L, Space space);
// Interior Euler operator J and integration by parts I on top-degree forms.
Form interior_euler(const Form& w);
Form ibp(const Form& w);
// I o d_V on functional forms over the semibasic space.
Form delta_v(const Form& w);
// Drops dt terms and moves to the semibasic space.
Form project_sb(const Form& w);
// Operator application, with D_x^i theta^j = theta^{i+j}.
Form apply(const DiffOperator& p, const Form& w, const EqContext* ctx = nullptr);
// Linearization adjoint on contact 1-forms over the equation manifold.
Form linearization_adjoint(const EqContext& ctx, const Form& rho);

// ---------------------------------------------------------------------------
// Homotopies and integration

class HomotopyError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct HomotopyOptions {
    // Straight-line base point for jet coordinates; empty = weighted fiber scaling.
    std::map<JetCoord, Expr> base;
};

// h with d_V h = w for d_V-closed w of vertical degree >= 1.
Form vertical_homotopy(const Form& w, const HomotopyOptions& opt = {});

// L with E(L) = G, verified; nullopt if no closed-form inverse was found.
std::optional<Expr> lagrangian_of(const Expr& G, Space space);
// f with X(f) = A on the semibasic/equation space (t a parameter), verified.
std::optional<Expr> integrate_x(const Expr& A);
// R with X(R) = A R and T(R) = B R, built as a product of powers of atoms.
std::optional<Expr> multiplicative_witness(const Expr& A, const Expr& B, const EqContext& ctx);
// Contact form xi (no horizontal part) with X(xi) = alpha; nullopt if the reduction fails.
std::optional<Form> integrate_x_contact(const Form& alpha);

Form parse_form(std::string_view src, Decls& decls, Space space);

}  // namespace jetvar

#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "jetvar/rat.hpp"

namespace jetvar {

using AtomId = std::uint32_t;

// Jet-space coordinate: t, x or u_{a,i} (a time and i space derivatives).
struct JetCoord {
    enum class Kind : std::uint8_t { T, X, U };
    Kind kind = Kind::U;
    int a = 0;
    int i = 0;

    static JetCoord t() { return {Kind::T, 0, 0}; }
    static JetCoord x() { return {Kind::X, 0, 0}; }
    static JetCoord u(int a, int i) { return {Kind::U, a, i}; }
    static JetCoord ux(int i) { return {Kind::U, 0, i}; }

    bool is_jet() const { return kind == Kind::U; }
    AtomId atom() const;
    std::string name(char field = 'u') const;

    friend bool operator==(const JetCoord&, const JetCoord&) = default;
    friend auto operator<=>(const JetCoord& p, const JetCoord& q) {
        if (p.kind != q.kind) return p.kind <=> q.kind;
        if (p.a != q.a) return p.a <=> q.a;
        return p.i <=> q.i;
    }
};

struct Factor {
    AtomId atom;
    Rat exp;
    friend bool operator==(const Factor& p, const Factor& q) { return p.atom == q.atom && p.exp == q.exp; }
};

// Product of atom powers, sorted by atom id; zero exponents never stored.
using Monomial = std::vector<Factor>;

struct Term {
    Monomial mono;
    mpq_class coef;
};

// Sum of terms sorted by monomial; no zero coefficients.
struct Poly {
    std::vector<Term> terms;
    bool empty() const { return terms.empty(); }
    friend bool operator==(const Poly& p, const Poly& q);
};

// Integer power of a compound radicand in the denominator.
struct DenFactor {
    AtomId atom;
    std::int64_t power;
    friend bool operator==(const DenFactor&, const DenFactor&) = default;
};

enum class AtomKind : std::uint8_t { Number, Param, Time, Space, Jet, Func, Radical };

struct AtomInfo {
    AtomKind kind;
    JetCoord coord;                // Time/Space/Jet
    std::string name;              // Param, Func base name
    std::vector<JetCoord> args;    // Func argument list
    std::vector<int> deriv;        // Func: sorted multiset of argument positions
    mpz_class number;              // Number base
    Poly radicand;                 // Radical
    std::vector<JetCoord> deps;    // coordinates this atom depends on (sorted)
    std::string key;               // structural ordering key
};

const AtomInfo& atom_info(AtomId id);
AtomId param_atom(const std::string& name);
AtomId func_atom(const std::string& name, const std::vector<JetCoord>& args,
                 std::vector<int> deriv = {});
bool structural_less(AtomId a, AtomId b);

enum class ZeroTest { Zero, NonZero, Inconclusive };

struct FormatOptions {
    char field = 'u';
};

class Expr;

// Derivation defined by its value on coordinates; parameters are constants.
using CoordDerivation = std::function<Expr(const JetCoord&)>;

// Immutable normalized expression: numerator terms over a product of
// compound radicands raised to positive integer powers.
class Expr {
public:
    Expr();
    Expr(int v);
    Expr(long v);
    Expr(long long v);
    Expr(const mpq_class& v);

    static Expr atom(AtomId id, Rat exp = Rat(1));
    static Expr coord(const JetCoord& c) { return atom(c.atom()); }
    static Expr param(const std::string& name) { return atom(param_atom(name)); }
    static Expr rational(long n, long d) { return Expr(mpq_class(n, d)); }

    const Poly& num() const;
    const std::vector<DenFactor>& den() const;

    bool is_zero() const { return num().empty(); }
    ZeroTest zero_test() const;
    std::optional<mpq_class> as_rational() const;
    std::size_t term_count() const { return num().terms.size(); }

    Expr pow(const Rat& r) const;
    Expr inverse() const;
    Expr operator-() const;

    friend Expr operator+(const Expr& a, const Expr& b);
    friend Expr operator-(const Expr& a, const Expr& b);
    friend Expr operator*(const Expr& a, const Expr& b);
    friend Expr operator/(const Expr& a, const Expr& b);
    Expr& operator+=(const Expr& o) { return *this = *this + o; }
    Expr& operator-=(const Expr& o) { return *this = *this - o; }
    Expr& operator*=(const Expr& o) { return *this = *this * o; }

    friend bool operator==(const Expr& a, const Expr& b);

    std::string str(const FormatOptions& opt = {}) const;
    std::size_t hash() const;

    // Coordinates this expression depends on, including through opaque symbols and radicands.
    std::vector<JetCoord> coords() const;
    bool depends_on_jets() const;
    bool has_radicals() const;
    // Highest i with u_{0,i} present (or -1), highest a with u_{a,*} present.
    int x_order() const;
    int t_order() const;

    // Build from raw parts, normalizing.
    static Expr make(Poly num, std::vector<DenFactor> den);

private:
    struct Node;
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;
};

Expr sqrt(const Expr& e);
Expr partial(const Expr& e, const JetCoord& v);
Expr derive(const Expr& e, const CoordDerivation& delta);
Expr substitute(const Expr& e, const std::map<JetCoord, Expr>& bindings);
// Replace u_{a,i} by u_{a,i+shift} everywhere (shift may be negative if valid).
Expr shift_jets(const Expr& e, int shift);
// Evaluate with the given atom values; unspecified atoms get pseudo-random values from seed.
long double numeric_eval(const Expr& e, std::uint64_t seed);

inline ZeroTest test_zero(const Expr& e) { return e.zero_test(); }

}  // namespace jetvar

template <>
struct std::hash<jetvar::Expr> {
    std::size_t operator()(const jetvar::Expr& e) const { return e.hash(); }
};

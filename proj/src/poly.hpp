#pragma once
// Internal polynomial layer shared by the kernel sources.

#include <optional>
#include <unordered_map>

#include "jetvar/expr.hpp"

namespace jetvar::detail {

bool mono_less(const Monomial& a, const Monomial& b);

struct MonoHash {
    std::size_t operator()(const Monomial& m) const;
};

struct PolyBuilder {
    std::unordered_map<Monomial, mpq_class, MonoHash> map;
    void add(Monomial m, const mpq_class& c);
    void add_poly(const Poly& p, const mpq_class& scale);
    Poly finish();
};

Monomial mono_mul(const Monomial& a, const Monomial& b);
Monomial mono_scale(const Monomial& a, const Rat& r);
Rat exponent_of(const Monomial& m, AtomId a);
Monomial mono_without(const Monomial& m, AtomId a);

// Adds c*m after folding integer parts of number and radical exponents.
void add_reduced(PolyBuilder& out, Monomial m, mpq_class c);

Poly poly_const(const mpq_class& c);
Poly poly_add(const Poly& a, const Poly& b, const mpq_class& bscale);
Poly poly_mul(const Poly& a, const Poly& b);
Poly poly_scale(const Poly& a, const mpq_class& c);
Poly poly_pow(const Poly& a, std::int64_t k);
// Exact quotient, or nullopt when d does not divide n (or the search gives up).
std::optional<Poly> poly_divide(const Poly& n, const Poly& d, int depth = 0);

bool display_greater(const Monomial& a, const Monomial& b);
std::vector<const Term*> display_order(const Poly& p);

struct Content {
    mpq_class coef;
    Monomial mono;
    Poly rest;
};
// s = coef * mono * rest, with rest's display-leading coefficient 1 (or -1 when positive_coef).
Content strip_content(const Poly& s, bool positive_coef);

AtomId number_atom(const mpz_class& n);
AtomId radical_atom(const Poly& p);
std::vector<AtomId> known_radicals();
std::string serialize(const Poly& p);

}  // namespace jetvar::detail

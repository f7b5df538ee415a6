#pragma once

#include <string>

#include "jetvar/expr.hpp"

namespace jetvar {

std::string format_atom(AtomId id, const FormatOptions& opt);
std::string format_poly(const Poly& p, const FormatOptions& opt);
std::string format_rational(const mpq_class& q);

}  // namespace jetvar

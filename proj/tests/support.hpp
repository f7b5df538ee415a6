#pragma once

#include "doctest.h"
#include "generators.hpp"


namespace doctest {
template <>
struct StringMaker<jetvar::Expr> {
    static String convert(const jetvar::Expr& e) { return e.str().c_str(); }
};
template <>
struct StringMaker<jetvar::Form> {
    static String convert(const jetvar::Form& w) { return w.str().c_str(); }
};
}  // namespace doctest

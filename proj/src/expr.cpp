#include "jetvar/expr.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "jetvar/format.hpp"
#include "poly.hpp"

namespace jetvar {

// ---------------------------------------------------------------------------
// Atom table

namespace {

class AtomTable {
public:
    static AtomTable& instance() {
        static AtomTable table;
        return table;
    }

    template <class Make>
    AtomId intern(const std::string& key, Make&& make) {
        {
            std::lock_guard lock(mu_);
            auto it = index_.find(key);
            if (it != index_.end()) return it->second;
        }
        AtomInfo info = make();
        std::lock_guard lock(mu_);
        auto it = index_.find(key);
        if (it != index_.end()) return it->second;
        AtomId id = count_;
        std::uint32_t chunk = id >> kShift;
        if (chunk >= kMaxChunks) throw std::length_error("atom table exhausted");
        AtomInfo* block = chunks_[chunk].load(std::memory_order_acquire);
        if (!block) {
            block = new AtomInfo[kChunk];
            chunks_[chunk].store(block, std::memory_order_release);
        }
        block[id & kMask] = std::move(info);
        if (block[id & kMask].kind == AtomKind::Radical) radicals_.push_back(id);
        index_.emplace(key, id);
        ++count_;
        return id;
    }

    const AtomInfo& at(AtomId id) const {
        return chunks_[id >> kShift].load(std::memory_order_acquire)[id & kMask];
    }

    std::vector<AtomId> radicals() {
        std::lock_guard lock(mu_);
        return radicals_;
    }

private:
    static constexpr std::uint32_t kShift = 10;
    static constexpr std::uint32_t kChunk = 1u << kShift;
    static constexpr std::uint32_t kMask = kChunk - 1;
    static constexpr std::uint32_t kMaxChunks = 1u << 14;

    AtomTable() : chunks_(new std::atomic<AtomInfo*>[kMaxChunks]) {
        for (std::uint32_t i = 0; i < kMaxChunks; ++i) chunks_[i].store(nullptr);
    }

    std::unique_ptr<std::atomic<AtomInfo*>[]> chunks_;
    std::mutex mu_;
    std::unordered_map<std::string, AtomId> index_;
    std::uint32_t count_ = 0;
    std::vector<AtomId> radicals_;
};

int kind_rank(AtomKind k) { return static_cast<int>(k); }

std::string coord_key(const JetCoord& c) {
    switch (c.kind) {
    case JetCoord::Kind::T: return "T";
    case JetCoord::Kind::X: return "X";
    default: return "U:" + std::to_string(c.a) + ":" + std::to_string(c.i);
    }
}

}  // namespace

const AtomInfo& atom_info(AtomId id) { return AtomTable::instance().at(id); }

AtomId JetCoord::atom() const {
    return AtomTable::instance().intern(coord_key(*this), [&] {
        AtomInfo info;
        info.kind = kind == Kind::T ? AtomKind::Time : kind == Kind::X ? AtomKind::Space : AtomKind::Jet;
        info.coord = *this;
        info.deps = {*this};
        return info;
    });
}

std::string JetCoord::name(char field) const {
    switch (kind) {
    case Kind::T: return "t";
    case Kind::X: return "x";
    default: break;
    }
    if (a == 0 && i == 0) return std::string(1, field);
    if (a + i > 6) return std::string(1, field) + "[" + std::to_string(a) + "," + std::to_string(i) + "]";
    return std::string(1, field) + "_" + std::string(a, 't') + std::string(i, 'x');
}

AtomId param_atom(const std::string& name) {
    return AtomTable::instance().intern("P:" + name, [&] {
        AtomInfo info;
        info.kind = AtomKind::Param;
        info.name = name;
        info.key = name;
        return info;
    });
}

AtomId func_atom(const std::string& name, const std::vector<JetCoord>& args, std::vector<int> deriv) {
    std::sort(deriv.begin(), deriv.end());
    std::string key = "F:" + name + "(";
    for (auto& c : args) key += coord_key(c) + ",";
    key += ")";
    for (int d : deriv) key += ":" + std::to_string(d);
    return AtomTable::instance().intern(key, [&] {
        AtomInfo info;
        info.kind = AtomKind::Func;
        info.name = name;
        info.args = args;
        info.deriv = deriv;
        info.deps = args;
        std::sort(info.deps.begin(), info.deps.end());
        info.deps.erase(std::unique(info.deps.begin(), info.deps.end()), info.deps.end());
        std::string k = name + '\x01';
        for (int d : deriv) k += static_cast<char>('A' + d);
        info.key = k;
        return info;
    });
}

namespace detail {

AtomId number_atom(const mpz_class& n) {
    return AtomTable::instance().intern("N:" + n.get_str(), [&] {
        AtomInfo info;
        info.kind = AtomKind::Number;
        info.number = n;
        return info;
    });
}

std::string serialize(const Poly& p) {
    std::string s;
    for (auto& t : p.terms) {
        s += t.coef.get_str();
        for (auto& f : t.mono) s += "|" + std::to_string(f.atom) + "^" + f.exp.str();
        s += ";";
    }
    return s;
}

AtomId radical_atom(const Poly& p) {
    return AtomTable::instance().intern("R:" + serialize(p), [&] {
        AtomInfo info;
        info.kind = AtomKind::Radical;
        info.radicand = p;
        std::vector<JetCoord> deps;
        for (auto& t : p.terms)
            for (auto& f : t.mono) {
                auto& d = atom_info(f.atom).deps;
                deps.insert(deps.end(), d.begin(), d.end());
            }
        std::sort(deps.begin(), deps.end());
        deps.erase(std::unique(deps.begin(), deps.end()), deps.end());
        info.deps = std::move(deps);
        info.key = format_poly(p, FormatOptions{});
        return info;
    });
}

std::vector<AtomId> known_radicals() { return AtomTable::instance().radicals(); }

}  // namespace detail

bool structural_less(AtomId a, AtomId b) {
    if (a == b) return false;
    const AtomInfo& x = atom_info(a);
    const AtomInfo& y = atom_info(b);
    if (x.kind != y.kind) return kind_rank(x.kind) < kind_rank(y.kind);
    switch (x.kind) {
    case AtomKind::Number: return x.number < y.number;
    case AtomKind::Time:
    case AtomKind::Space: return false;
    case AtomKind::Jet: return x.coord < y.coord;
    case AtomKind::Func:
        if (x.name != y.name) return x.name < y.name;
        if (x.deriv.size() != y.deriv.size()) return x.deriv.size() < y.deriv.size();
        if (x.deriv != y.deriv) return x.deriv < y.deriv;
        return a < b;
    default:
        if (x.key != y.key) return x.key < y.key;
        return a < b;
    }
}

// ---------------------------------------------------------------------------
// Polynomial layer

bool operator==(const Poly& p, const Poly& q) {
    if (p.terms.size() != q.terms.size()) return false;
    for (std::size_t k = 0; k < p.terms.size(); ++k) {
        if (!(p.terms[k].mono == q.terms[k].mono)) return false;
        if (p.terms[k].coef != q.terms[k].coef) return false;
    }
    return true;
}

namespace detail {

bool mono_less(const Monomial& a, const Monomial& b) {
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (a[k].atom != b[k].atom) return a[k].atom < b[k].atom;
        if (a[k].exp != b[k].exp) return a[k].exp < b[k].exp;
    }
    return a.size() < b.size();
}

std::size_t MonoHash::operator()(const Monomial& m) const {
    std::size_t h = 1469598103934665603ull;
    for (auto& f : m) {
        h ^= f.atom + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h ^= f.exp.hash() + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

Monomial mono_mul(const Monomial& a, const Monomial& b) {
    Monomial r;
    r.reserve(a.size() + b.size());
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        if (j == b.size() || (i < a.size() && a[i].atom < b[j].atom)) {
            r.push_back(a[i++]);
        } else if (i == a.size() || b[j].atom < a[i].atom) {
            r.push_back(b[j++]);
        } else {
            Rat e = a[i].exp + b[j].exp;
            if (!e.is_zero()) r.push_back({a[i].atom, e});
            ++i;
            ++j;
        }
    }
    return r;
}

Monomial mono_scale(const Monomial& a, const Rat& r) {
    Monomial m;
    if (r.is_zero()) return m;
    for (auto& f : a) m.push_back({f.atom, f.exp * r});
    return m;
}

void PolyBuilder::add(Monomial m, const mpq_class& c) {
    if (c == 0) return;
    auto [it, inserted] = map.try_emplace(std::move(m), c);
    if (!inserted) it->second += c;
}

void PolyBuilder::add_poly(const Poly& p, const mpq_class& scale) {
    for (auto& t : p.terms) add(t.mono, t.coef * scale);
}

Poly PolyBuilder::finish() {
    Poly p;
    p.terms.reserve(map.size());
    for (auto& [m, c] : map)
        if (c != 0) p.terms.push_back({m, c});
    std::sort(p.terms.begin(), p.terms.end(),
              [](const Term& a, const Term& b) { return mono_less(a.mono, b.mono); });
    map.clear();
    return p;
}

Poly poly_const(const mpq_class& c) {
    Poly p;
    if (c != 0) p.terms.push_back({{}, c});
    return p;
}

Poly poly_add(const Poly& a, const Poly& b, const mpq_class& bscale) {
    Poly r;
    r.terms.reserve(a.terms.size() + b.terms.size());
    std::size_t i = 0, j = 0;
    while (i < a.terms.size() || j < b.terms.size()) {
        if (j == b.terms.size() || (i < a.terms.size() && mono_less(a.terms[i].mono, b.terms[j].mono))) {
            r.terms.push_back(a.terms[i++]);
        } else if (i == a.terms.size() || mono_less(b.terms[j].mono, a.terms[i].mono)) {
            r.terms.push_back({b.terms[j].mono, b.terms[j].coef * bscale});
            ++j;
        } else {
            mpq_class c = a.terms[i].coef + b.terms[j].coef * bscale;
            if (c != 0) r.terms.push_back({a.terms[i].mono, c});
            ++i;
            ++j;
        }
    }
    return r;
}

void add_reduced(PolyBuilder& out, Monomial m, mpq_class c) {
    std::vector<std::pair<AtomId, std::int64_t>> expand;
    bool changed = false;
    for (auto& f : m) {
        const AtomInfo& info = atom_info(f.atom);
        if (info.kind == AtomKind::Number) {
            if (f.exp >= Rat(1) || f.exp < Rat(0)) {
                std::int64_t k = f.exp.floor();
                mpz_class p;
                mpz_pow_ui(p.get_mpz_t(), info.number.get_mpz_t(), static_cast<unsigned long>(k < 0 ? -k : k));
                if (k > 0) c *= p; else c /= p;
                f.exp -= Rat(k);
                changed = true;
            }
        } else if (info.kind == AtomKind::Radical) {
            if (f.exp < Rat(0)) throw std::logic_error("negative radical exponent in numerator");
            if (f.exp >= Rat(1)) {
                std::int64_t k = f.exp.floor();
                expand.push_back({f.atom, k});
                f.exp -= Rat(k);
                changed = true;
            }
        }
    }
    if (changed) m.erase(std::remove_if(m.begin(), m.end(), [](const Factor& f) { return f.exp.is_zero(); }), m.end());
    if (expand.empty()) {
        out.add(std::move(m), c);
        return;
    }
    Poly acc;
    acc.terms.push_back({std::move(m), c});
    for (auto& [a, k] : expand) acc = poly_mul(acc, poly_pow(atom_info(a).radicand, k));
    out.add_poly(acc, 1);
}

Poly poly_mul(const Poly& a, const Poly& b) {
    if (a.empty() || b.empty()) return {};
    PolyBuilder pb;
    for (auto& x : a.terms)
        for (auto& y : b.terms) add_reduced(pb, mono_mul(x.mono, y.mono), x.coef * y.coef);
    return pb.finish();
}

Poly poly_scale(const Poly& a, const mpq_class& c) {
    if (c == 0) return {};
    Poly r = a;
    for (auto& t : r.terms) t.coef *= c;
    return r;
}

Poly poly_pow(const Poly& a, std::int64_t k) {
    Poly result = poly_const(1);
    Poly base = a;
    while (k > 0) {
        if (k & 1) result = poly_mul(result, base);
        k >>= 1;
        if (k) base = poly_mul(base, base);
    }
    return result;
}

Rat exponent_of(const Monomial& m, AtomId a) {
    for (auto& f : m)
        if (f.atom == a) return f.exp;
    return Rat(0);
}

Monomial mono_without(const Monomial& m, AtomId a) {
    Monomial r;
    for (auto& f : m)
        if (f.atom != a) r.push_back(f);
    return r;
}

namespace {

std::optional<Poly> divide_by_term(const Poly& n, const Term& d) {
    PolyBuilder pb;
    for (auto& t : n.terms) {
        Monomial m = t.mono;
        for (auto& f : d.mono) {
            auto it = std::find_if(m.begin(), m.end(), [&](const Factor& g) { return g.atom == f.atom; });
            Rat e = (it == m.end() ? Rat(0) : it->exp) - f.exp;
            if (atom_info(f.atom).kind == AtomKind::Radical && e < Rat(0)) return std::nullopt;
            if (it == m.end()) {
                m.push_back({f.atom, e});
                std::sort(m.begin(), m.end(), [](const Factor& p, const Factor& q) { return p.atom < q.atom; });
            } else if (e.is_zero()) {
                m.erase(it);
            } else {
                it->exp = e;
            }
        }
        add_reduced(pb, std::move(m), t.coef / d.coef);
    }
    return pb.finish();
}

}  // namespace

std::optional<Poly> poly_divide(const Poly& n, const Poly& d, int depth) {
    if (d.empty()) throw std::domain_error("polynomial division by zero");
    if (n.empty()) return Poly{};
    if (d.terms.size() == 1) return divide_by_term(n, d.terms[0]);
    if (depth > 12) return std::nullopt;

    // Main variable: a plain atom with integer exponents that varies across the divisor.
    std::vector<AtomId> cand;
    for (auto& t : d.terms)
        for (auto& f : t.mono) cand.push_back(f.atom);
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::optional<AtomId> z;
    for (AtomId a : cand) {
        AtomKind k = atom_info(a).kind;
        if (k == AtomKind::Number || k == AtomKind::Radical) continue;
        bool integral = true;
        Rat lo = exponent_of(d.terms[0].mono, a), hi = lo;
        for (auto& t : d.terms) {
            Rat e = exponent_of(t.mono, a);
            if (!e.is_integer()) integral = false;
            lo = std::min(lo, e);
            hi = std::max(hi, e);
        }
        if (integral && lo != hi) {
            z = a;
            break;
        }
    }
    if (!z) return std::nullopt;

    Rat dlo = exponent_of(d.terms[0].mono, *z), dhi = dlo;
    for (auto& t : d.terms) {
        Rat e = exponent_of(t.mono, *z);
        dlo = std::min(dlo, e);
        dhi = std::max(dhi, e);
    }
    Poly lcd;
    {
        PolyBuilder pb;
        for (auto& t : d.terms)
            if (exponent_of(t.mono, *z) == dhi) pb.add(mono_without(t.mono, *z), t.coef);
        lcd = pb.finish();
    }
    Rat nlo = exponent_of(n.terms[0].mono, *z);
    for (auto& t : n.terms) nlo = std::min(nlo, exponent_of(t.mono, *z));

    Poly rem = n;
    PolyBuilder quot;
    for (int iter = 0; !rem.empty(); ++iter) {
        if (iter > 4000) return std::nullopt;
        Rat ehi = exponent_of(rem.terms[0].mono, *z);
        for (auto& t : rem.terms) ehi = std::max(ehi, exponent_of(t.mono, *z));
        Rat qe = ehi - dhi;
        if (qe + dlo < nlo) return std::nullopt;
        PolyBuilder lb;
        for (auto& t : rem.terms)
            if (exponent_of(t.mono, *z) == ehi) lb.add(mono_without(t.mono, *z), t.coef);
        Poly lcr = lb.finish();
        auto qc = poly_divide(lcr, lcd, depth + 1);
        if (!qc) return std::nullopt;
        Poly q;
        {
            PolyBuilder qb;
            Monomial zm{{*z, qe}};
            for (auto& t : qc->terms) add_reduced(qb, qe.is_zero() ? t.mono : mono_mul(t.mono, zm), t.coef);
            q = qb.finish();
        }
        quot.add_poly(q, 1);
        Poly next = poly_add(rem, poly_mul(q, d), -1);
        // The leading z-degree must strictly drop.
        for (auto& t : next.terms)
            if (exponent_of(t.mono, *z) >= ehi) return std::nullopt;
        rem = std::move(next);
    }
    return quot.finish();
}

// Display order on monomials: factors compared from the structurally largest.
bool display_greater(const Monomial& a, const Monomial& b) {
    auto sorted = [](const Monomial& m) {
        Monomial s = m;
        std::sort(s.begin(), s.end(), [](const Factor& p, const Factor& q) { return structural_less(q.atom, p.atom); });
        return s;
    };
    Monomial x = sorted(a), y = sorted(b);
    std::size_t n = std::min(x.size(), y.size());
    for (std::size_t k = 0; k < n; ++k) {
        if (x[k].atom != y[k].atom) return structural_less(y[k].atom, x[k].atom);
        if (x[k].exp != y[k].exp) return x[k].exp > y[k].exp;
    }
    return x.size() > y.size();
}

std::vector<const Term*> display_order(const Poly& p) {
    std::vector<const Term*> v;
    for (auto& t : p.terms) v.push_back(&t);
    std::stable_sort(v.begin(), v.end(), [](const Term* a, const Term* b) { return display_greater(a->mono, b->mono); });
    return v;
}

Content strip_content(const Poly& s, bool positive_coef) {
    Content c;
    std::map<AtomId, Rat> lo;
    for (auto& t : s.terms)
        for (auto& f : t.mono) {
            auto it = lo.find(f.atom);
            if (it == lo.end()) lo.emplace(f.atom, f.exp);
            else it->second = std::min(it->second, f.exp);
        }
    for (auto& [a, e] : lo) {
        Rat m = e;
        for (auto& t : s.terms)
            if (std::none_of(t.mono.begin(), t.mono.end(), [&](const Factor& f) { return f.atom == a; }))
                m = std::min(m, Rat(0));
        if (!m.is_zero()) c.mono.push_back({a, m});
    }
    const Term* lead = display_order(s).front();
    c.coef = lead->coef;
    if (positive_coef && c.coef < 0) c.coef = -c.coef;
    for (auto& t : s.terms) {
        Monomial m;
        for (auto& f : t.mono) {
            Rat e = f.exp - exponent_of(c.mono, f.atom);
            if (!e.is_zero()) m.push_back({f.atom, e});
        }
        for (auto& f : c.mono)
            if (std::none_of(t.mono.begin(), t.mono.end(), [&](const Factor& g) { return g.atom == f.atom; }))
                m.push_back({f.atom, -f.exp});
        std::sort(m.begin(), m.end(), [](const Factor& p, const Factor& q) { return p.atom < q.atom; });
        c.rest.terms.push_back({std::move(m), t.coef / c.coef});
    }
    std::sort(c.rest.terms.begin(), c.rest.terms.end(),
              [](const Term& a, const Term& b) { return mono_less(a.mono, b.mono); });
    return c;
}

}  // namespace detail

using namespace detail;

// ---------------------------------------------------------------------------
// Expr

struct Expr::Node {
    Poly num;
    std::vector<DenFactor> den;
    std::size_t hash = 0;
};

namespace {

std::size_t compute_hash(const Poly& num, const std::vector<DenFactor>& den) {
    std::size_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](std::size_t v) { h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2); };
    MonoHash mh;
    for (auto& t : num.terms) {
        mix(mh(t.mono));
        mix(mpz_get_ui(t.coef.get_num_mpz_t()));
        mix(mpz_get_ui(t.coef.get_den_mpz_t()));
        mix(mpz_sgn(t.coef.get_num_mpz_t()) + 7);
    }
    for (auto& d : den) {
        mix(d.atom);
        mix(static_cast<std::size_t>(d.power));
    }
    return h;
}

}  // namespace

Expr Expr::make(Poly num, std::vector<DenFactor> den) {
    if (num.empty()) den.clear();
    std::sort(den.begin(), den.end(), [](const DenFactor& a, const DenFactor& b) { return a.atom < b.atom; });
    std::vector<DenFactor> merged;
    for (auto& d : den) {
        if (!merged.empty() && merged.back().atom == d.atom) merged.back().power += d.power;
        else merged.push_back(d);
    }
    std::vector<DenFactor> kept;
    for (auto& d : merged) {
        std::int64_t p = d.power;
        while (p > 0) {
            auto q = poly_divide(num, atom_info(d.atom).radicand);
            if (!q) break;
            num = std::move(*q);
            --p;
        }
        if (p > 0) kept.push_back({d.atom, p});
    }
    auto node = std::make_shared<Node>();
    node->num = std::move(num);
    node->den = std::move(kept);
    node->hash = compute_hash(node->num, node->den);
    return Expr(std::shared_ptr<const Node>(std::move(node)));
}

Expr::Expr() : Expr(make({}, {})) {}
Expr::Expr(int v) : Expr(mpq_class(v)) {}
Expr::Expr(long v) : Expr(mpq_class(v)) {}
Expr::Expr(long long v) : Expr(mpq_class(std::to_string(v))) {}
Expr::Expr(const mpq_class& v) {
    mpq_class c = v;
    c.canonicalize();
    *this = make(poly_const(c), {});
}

Expr Expr::atom(AtomId id, Rat exp) {
    const AtomInfo& info = atom_info(id);
    if (exp.is_zero()) return Expr(1);
    if (info.kind == AtomKind::Radical) {
        std::int64_t k = exp.floor();
        Rat f = exp - Rat(k);
        Poly num = f.is_zero() ? poly_const(1) : Poly{{Term{{{id, f}}, 1}}};
        if (k >= 0) return make(poly_mul(num, poly_pow(info.radicand, k)), {});
        return make(num, {{id, -k}});
    }
    PolyBuilder pb;
    add_reduced(pb, Monomial{{id, exp}}, 1);
    return make(pb.finish(), {});
}

const Poly& Expr::num() const { return node_->num; }
const std::vector<DenFactor>& Expr::den() const { return node_->den; }
std::size_t Expr::hash() const { return node_->hash; }

bool operator==(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return true;
    return a.node_->hash == b.node_->hash && a.node_->den == b.node_->den && a.node_->num == b.node_->num;
}

std::optional<mpq_class> Expr::as_rational() const {
    if (!den().empty()) return std::nullopt;
    if (num().empty()) return mpq_class(0);
    if (num().terms.size() == 1 && num().terms[0].mono.empty()) return num().terms[0].coef;
    return std::nullopt;
}

namespace {

Poly den_poly(const std::vector<DenFactor>& den, const std::vector<DenFactor>& target) {
    // Product of radicands raising `den` to `target`.
    Poly p = poly_const(1);
    for (auto& t : target) {
        std::int64_t have = 0;
        for (auto& d : den)
            if (d.atom == t.atom) have = d.power;
        if (t.power > have) p = poly_mul(p, poly_pow(atom_info(t.atom).radicand, t.power - have));
    }
    return p;
}

std::vector<DenFactor> den_max(const std::vector<DenFactor>& a, const std::vector<DenFactor>& b) {
    std::map<AtomId, std::int64_t> m;
    for (auto& d : a) m[d.atom] = std::max(m[d.atom], d.power);
    for (auto& d : b) m[d.atom] = std::max(m[d.atom], d.power);
    std::vector<DenFactor> r;
    for (auto& [k, v] : m) r.push_back({k, v});
    return r;
}

}  // namespace

Expr operator+(const Expr& a, const Expr& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    if (a.den().empty() && b.den().empty()) return Expr::make(poly_add(a.num(), b.num(), 1), {});
    if (a.den() == b.den()) return Expr::make(poly_add(a.num(), b.num(), 1), a.den());
    auto target = den_max(a.den(), b.den());
    Poly na = poly_mul(a.num(), den_poly(a.den(), target));
    Poly nb = poly_mul(b.num(), den_poly(b.den(), target));
    return Expr::make(poly_add(na, nb, 1), target);
}

Expr Expr::operator-() const {
    return make(poly_scale(num(), -1), den());
}

Expr operator-(const Expr& a, const Expr& b) {
    if (b.is_zero()) return a;
    if (a.den().empty() && b.den().empty()) return Expr::make(poly_add(a.num(), b.num(), -1), {});
    return a + (-b);
}

Expr operator*(const Expr& a, const Expr& b) {
    if (a.is_zero() || b.is_zero()) return Expr();
    std::vector<DenFactor> den = a.den();
    den.insert(den.end(), b.den().begin(), b.den().end());
    return Expr::make(poly_mul(a.num(), b.num()), std::move(den));
}

Expr operator/(const Expr& a, const Expr& b) { return a * b.inverse(); }

namespace {

// Prime factorization by trial division; a large leftover cofactor is kept whole.
std::vector<std::pair<mpz_class, long>> factor_integer(mpz_class n) {
    std::vector<std::pair<mpz_class, long>> out;
    if (n < 0) n = -n;
    for (unsigned long p = 2; p < 100000 && mpz_class(p) * p <= n; p += (p == 2 ? 1 : 2)) {
        long k = 0;
        while (mpz_divisible_ui_p(n.get_mpz_t(), p)) {
            mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), p);
            ++k;
        }
        if (k) out.push_back({mpz_class(p), k});
    }
    if (n > 1) out.push_back({n, 1});
    return out;
}

Expr number_power(const mpz_class& n, const Rat& r) {
    Monomial m;
    for (auto& [p, k] : factor_integer(n)) m.push_back({number_atom(p), Rat(k) * r});
    std::sort(m.begin(), m.end(), [](const Factor& p, const Factor& q) { return p.atom < q.atom; });
    PolyBuilder pb;
    add_reduced(pb, std::move(m), 1);
    return Expr::make(pb.finish(), {});
}

Expr radical_power(AtomId a, const Rat& x) { return Expr::atom(a, x); }

Expr term_power(const Term& t, const Rat& r) {
    if (t.coef < 0) throw std::domain_error("fractional power of a negative quantity");
    Expr res = number_power(t.coef.get_num(), r) * number_power(t.coef.get_den(), -r);
    Monomial plain;
    for (auto& f : t.mono) {
        const AtomInfo& info = atom_info(f.atom);
        if (info.kind == AtomKind::Number) res *= number_power(info.number, f.exp * r);
        else if (info.kind == AtomKind::Radical) res *= radical_power(f.atom, f.exp * r);
        else plain.push_back({f.atom, f.exp * r});
    }
    if (!plain.empty()) res *= Expr::make(Poly{{Term{plain, 1}}}, {});
    return res;
}

// Invert a single term: coefficient, plain atoms and radicals.
Expr invert_term(const Term& t) {
    if (t.coef == 0) throw std::domain_error("division by zero");
    Monomial m;
    std::vector<DenFactor> den;
    for (auto& f : t.mono) {
        const AtomInfo& info = atom_info(f.atom);
        if (info.kind == AtomKind::Radical) {
            Rat e = Rat(1) - f.exp;
            if (!e.is_zero()) m.push_back({f.atom, e});
            den.push_back({f.atom, 1});
        } else {
            m.push_back({f.atom, -f.exp});
        }
    }
    PolyBuilder pb;
    add_reduced(pb, std::move(m), 1 / t.coef);
    return Expr::make(pb.finish(), std::move(den));
}

std::vector<AtomId> atoms_of(const Poly& p) {
    std::vector<AtomId> v;
    for (auto& t : p.terms)
        for (auto& f : t.mono) v.push_back(f.atom);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Divide out already-known positive radicands; returns the exponents removed.
std::vector<DenFactor> factor_known(Poly& p) {
    std::vector<DenFactor> out;
    auto pa = atoms_of(p);
    for (AtomId r : known_radicals()) {
        const Poly& rp = atom_info(r).radicand;
        if (rp.terms.size() > p.terms.size()) continue;
        if (display_order(rp).front()->coef < 0) continue;
        auto ra = atoms_of(rp);
        if (!std::includes(pa.begin(), pa.end(), ra.begin(), ra.end())) continue;
        std::int64_t k = 0;
        while (p.terms.size() > 1) {
            auto q = poly_divide(p, rp);
            if (!q) break;
            p = std::move(*q);
            ++k;
        }
        if (k) out.push_back({r, k});
        if (p.terms.size() <= 1) break;
    }
    return out;
}

Expr invert_poly(const Poly& s) {
    if (s.terms.size() == 1) return invert_term(s.terms[0]);
    Content c = strip_content(s, false);
    Expr res = invert_term(Term{c.mono, c.coef});
    Poly p = std::move(c.rest);
    std::vector<DenFactor> den = factor_known(p);
    if (p.terms.size() == 1) {
        res *= invert_term(p.terms[0]);
    } else {
        Content c2 = strip_content(p, false);
        res *= invert_term(Term{c2.mono, c2.coef});
        den.push_back({radical_atom(c2.rest), 1});
    }
    return res * Expr::make(poly_const(1), std::move(den));
}

}  // namespace

Expr Expr::inverse() const {
    if (is_zero()) throw std::domain_error("division by zero");
    Expr inv = invert_poly(num());
    if (den().empty()) return inv;
    return inv * make(den_poly({}, den()), {});
}

namespace {

bool mentions_func(const Poly& p) {
    for (auto& t : p.terms)
        for (auto& f : t.mono) {
            const AtomInfo& a = atom_info(f.atom);
            if (a.kind == AtomKind::Func || (a.kind == AtomKind::Radical && mentions_func(a.radicand))) return true;
        }
    return false;
}

}  // namespace

Expr Expr::pow(const Rat& r) const {
    bool opaque = mentions_func(num());
    for (auto& d : den()) opaque |= mentions_func(atom_info(d.atom).radicand);
    if (!r.is_integer() && opaque)
        throw std::domain_error("opaque symbols take integer exponents only");
    if (r.is_integer()) {
        std::int64_t k = r.num();
        if (k < 0) return inverse().pow(Rat(-k));
        Expr result(1), base = *this;
        while (k > 0) {
            if (k & 1) result = result * base;
            k >>= 1;
            if (k) base = base * base;
        }
        return result;
    }
    if (is_zero()) {
        if (r > Rat(0)) return Expr();
        throw std::domain_error("zero raised to a negative power");
    }
    Expr res(1);
    for (auto& d : den()) res *= radical_power(d.atom, Rat(-d.power) * r);
    if (num().terms.size() == 1) return res * term_power(num().terms[0], r);
    Content c = strip_content(num(), true);
    res *= term_power(Term{c.mono, c.coef}, r);
    Poly p = std::move(c.rest);
    for (auto& d : factor_known(p)) res *= radical_power(d.atom, Rat(d.power) * r);
    if (p.terms.size() == 1) return res * term_power(p.terms[0], r);
    Content c2 = strip_content(p, true);
    res *= term_power(Term{c2.mono, c2.coef}, r);
    return res * radical_power(radical_atom(c2.rest), r);
}

Expr sqrt(const Expr& e) { return e.pow(Rat(1, 2)); }

// ---------------------------------------------------------------------------
// Queries

namespace {

void collect_coords(const Poly& p, std::vector<JetCoord>& out) {
    for (auto& t : p.terms)
        for (auto& f : t.mono) {
            auto& d = atom_info(f.atom).deps;
            out.insert(out.end(), d.begin(), d.end());
        }
}

}  // namespace

std::vector<JetCoord> Expr::coords() const {
    std::vector<JetCoord> out;
    collect_coords(num(), out);
    for (auto& d : den()) {
        auto& deps = atom_info(d.atom).deps;
        out.insert(out.end(), deps.begin(), deps.end());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool Expr::depends_on_jets() const {
    for (auto& c : coords())
        if (c.is_jet()) return true;
    return false;
}

bool Expr::has_radicals() const {
    if (!den().empty()) return true;
    for (auto& t : num().terms)
        for (auto& f : t.mono)
            if (atom_info(f.atom).kind == AtomKind::Radical) return true;
    return false;
}

int Expr::x_order() const {
    int m = -1;
    for (auto& c : coords())
        if (c.is_jet()) m = std::max(m, c.i);
    return m;
}

int Expr::t_order() const {
    int m = -1;
    for (auto& c : coords())
        if (c.is_jet()) m = std::max(m, c.a);
    return m;
}

// ---------------------------------------------------------------------------
// Numeric evaluation (used only to flag possibly-dependent radicands)

namespace {

long double atom_value(AtomId id, std::uint64_t seed, std::unordered_map<AtomId, long double>& memo);

long double poly_value(const Poly& p, std::uint64_t seed, std::unordered_map<AtomId, long double>& memo,
                       long double* magnitude) {
    long double s = 0, mag = 0;
    for (auto& t : p.terms) {
        long double v = t.coef.get_d();
        for (auto& f : t.mono)
            v *= std::pow(atom_value(f.atom, seed, memo),
                          static_cast<long double>(f.exp.num()) / static_cast<long double>(f.exp.den()));
        s += v;
        mag += std::fabs(v);
    }
    if (magnitude) *magnitude = mag;
    return s;
}

long double atom_value(AtomId id, std::uint64_t seed, std::unordered_map<AtomId, long double>& memo) {
    auto it = memo.find(id);
    if (it != memo.end()) return it->second;
    const AtomInfo& info = atom_info(id);
    long double v;
    if (info.kind == AtomKind::Number) {
        v = info.number.get_d();
    } else if (info.kind == AtomKind::Radical) {
        v = poly_value(info.radicand, seed, memo, nullptr);
    } else {
        std::mt19937_64 g(seed ^ (0x9e3779b97f4a7c15ull * (id + 1)));
        v = 0.5L + std::uniform_real_distribution<long double>(0, 1.5L)(g);
    }
    memo.emplace(id, v);
    return v;
}

}  // namespace

long double numeric_eval(const Expr& e, std::uint64_t seed) {
    std::unordered_map<AtomId, long double> memo;
    long double n = poly_value(e.num(), seed, memo, nullptr);
    for (auto& d : e.den())
        n /= std::pow(atom_value(d.atom, seed, memo), static_cast<long double>(d.power));
    return n;
}

ZeroTest Expr::zero_test() const {
    if (is_zero()) return ZeroTest::Zero;
    bool radical = false;
    for (auto& t : num().terms)
        for (auto& f : t.mono)
            if (atom_info(f.atom).kind == AtomKind::Radical) radical = true;
    if (!radical) return ZeroTest::NonZero;
    int small = 0, tried = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        std::unordered_map<AtomId, long double> memo;
        long double mag = 0;
        long double v = poly_value(num(), seed * 7919, memo, &mag);
        if (!std::isfinite(v) || !std::isfinite(mag)) continue;
        ++tried;
        if (std::fabs(v) <= 1e-12L * (mag + 1e-300L)) ++small;
    }
    return (tried > 0 && small == tried) ? ZeroTest::Inconclusive : ZeroTest::NonZero;
}

// ---------------------------------------------------------------------------
// Derivations

namespace {

Expr unit_den(AtomId a) { return Expr::make(poly_const(1), {{a, 1}}); }

struct Deriver {
    const CoordDerivation& delta;
    std::unordered_map<AtomId, Expr> memo;

    const Expr& of_atom(AtomId id) {
        auto it = memo.find(id);
        if (it != memo.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        Expr d;
        switch (info.kind) {
        case AtomKind::Time:
        case AtomKind::Space:
        case AtomKind::Jet: d = delta(info.coord); break;
        case AtomKind::Func:
            for (std::size_t j = 0; j < info.args.size(); ++j) {
                Expr dj = delta(info.args[j]);
                if (dj.is_zero()) continue;
                std::vector<int> dv = info.deriv;
                dv.push_back(static_cast<int>(j));
                d += Expr::atom(func_atom(info.name, info.args, dv)) * dj;
            }
            break;
        case AtomKind::Radical: d = run(Expr::make(info.radicand, {})); break;
        default: break;
        }
        return memo.emplace(id, std::move(d)).first->second;
    }

    Expr run(const Expr& e) {
        PolyBuilder fast;
        std::vector<Expr> slow;
        for (auto& t : e.num().terms) {
            for (std::size_t k = 0; k < t.mono.size(); ++k) {
                const Factor& f = t.mono[k];
                const AtomInfo& info = atom_info(f.atom);
                if (info.kind == AtomKind::Number || info.kind == AtomKind::Param) continue;
                const Expr& d = of_atom(f.atom);
                if (d.is_zero()) continue;
                mpq_class c = t.coef * mpq_class(f.exp.num(), f.exp.den());
                if (info.kind == AtomKind::Radical) {
                    slow.push_back(Expr::make(Poly{{Term{t.mono, c}}}, {}) * d * unit_den(f.atom));
                    continue;
                }
                Monomial m = t.mono;
                m[k].exp -= Rat(1);
                if (m[k].exp.is_zero()) m.erase(m.begin() + static_cast<long>(k));
                if (d.den().empty() && d.num().terms.size() == 1) {
                    const Term& dt = d.num().terms[0];
                    add_reduced(fast, mono_mul(m, dt.mono), c * dt.coef);
                } else {
                    slow.push_back(Expr::make(Poly{{Term{std::move(m), c}}}, {}) * d);
                }
            }
        }
        Expr r = Expr::make(fast.finish(), {});
        for (auto& s : slow) r += s;
        if (e.den().empty()) return r;
        r = r * Expr::make(poly_const(1), e.den());
        for (auto& dn : e.den()) {
            const Expr& dp = of_atom(dn.atom);
            if (dp.is_zero()) continue;
            r -= e * Expr(static_cast<long>(dn.power)) * dp * unit_den(dn.atom);
        }
        return r;
    }
};

}  // namespace

Expr derive(const Expr& e, const CoordDerivation& delta) {
    Deriver d{delta, {}};
    return d.run(e);
}

Expr partial(const Expr& e, const JetCoord& v) {
    bool found = false;
    for (auto& c : e.coords())
        if (c == v) found = true;
    if (!found) return Expr();
    return derive(e, [&v](const JetCoord& c) { return c == v ? Expr(1) : Expr(); });
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

struct Substituter {
    std::function<std::optional<Expr>(const JetCoord&)> bind;
    std::unordered_map<AtomId, std::optional<Expr>> memo;  // image of atom^1, nullopt = unchanged

    const std::optional<Expr>& image(AtomId id) {
        auto it = memo.find(id);
        if (it != memo.end()) return it->second;
        const AtomInfo& info = atom_info(id);
        std::optional<Expr> img;
        switch (info.kind) {
        case AtomKind::Time:
        case AtomKind::Space:
        case AtomKind::Jet: img = bind(info.coord); break;
        case AtomKind::Func: {
            bool touched = false;
            std::vector<JetCoord> args = info.args;
            for (auto& a : args) {
                auto b = bind(a);
                if (!b) continue;
                touched = true;
                const Poly& p = b->num();
                if (!b->den().empty() || p.terms.size() != 1 || p.terms[0].coef != 1 || p.terms[0].mono.size() != 1 ||
                    p.terms[0].mono[0].exp != Rat(1))
                    throw std::invalid_argument("substitution into an argument of opaque symbol " + info.name);
                const AtomInfo& ai = atom_info(p.terms[0].mono[0].atom);
                if (ai.kind != AtomKind::Jet && ai.kind != AtomKind::Time && ai.kind != AtomKind::Space)
                    throw std::invalid_argument("substitution into an argument of opaque symbol " + info.name);
                a = ai.coord;
            }
            if (touched) img = Expr::atom(func_atom(info.name, args, info.deriv));
            break;
        }
        case AtomKind::Radical: {
            Expr r = run(Expr::make(info.radicand, {}));
            if (!(r == Expr::make(info.radicand, {}))) img = r;
            break;
        }
        default: break;
        }
        return memo.emplace(id, std::move(img)).first->second;
    }

    Expr run(const Expr& e) {
        PolyBuilder fast;
        std::vector<Expr> slow;
        for (auto& t : e.num().terms) {
            Monomial keep;
            Expr factor(1);
            bool simple = true;
            mpq_class coef = t.coef;
            for (auto& f : t.mono) {
                const auto& img = image(f.atom);
                if (!img) {
                    keep.push_back(f);
                    continue;
                }
                const Poly& p = img->num();
                if (img->den().empty() && p.terms.size() == 1 && atom_info(f.atom).kind != AtomKind::Radical) {
                    bool plain = true;
                    for (auto& g : p.terms[0].mono) {
                        auto k = atom_info(g.atom).kind;
                        if (k == AtomKind::Radical || k == AtomKind::Number) plain = false;
                    }
                    if (plain && (f.exp.is_integer() || p.terms[0].coef == 1)) {
                        mpq_class c = p.terms[0].coef;
                        std::int64_t n = f.exp.num();
                        if (n != 0 && c != 1) {
                            mpz_class nn, dd;
                            mpz_pow_ui(nn.get_mpz_t(), c.get_num_mpz_t(), static_cast<unsigned long>(n < 0 ? -n : n));
                            mpz_pow_ui(dd.get_mpz_t(), c.get_den_mpz_t(), static_cast<unsigned long>(n < 0 ? -n : n));
                            coef *= n > 0 ? mpq_class(nn, dd) : mpq_class(dd, nn);
                        }
                        keep = mono_mul(keep, mono_scale(p.terms[0].mono, f.exp));
                        continue;
                    }
                }
                simple = false;
                factor *= img->pow(f.exp);
            }
            std::sort(keep.begin(), keep.end(), [](const Factor& a, const Factor& b) { return a.atom < b.atom; });
            if (simple) add_reduced(fast, std::move(keep), coef);
            else slow.push_back(factor * Expr::make(Poly{{Term{std::move(keep), coef}}}, {}));
        }
        Expr r = Expr::make(fast.finish(), {});
        for (auto& s : slow) r += s;
        for (auto& d : e.den()) {
            const auto& img = image(d.atom);
            if (img) r = r * img->pow(Rat(-d.power));
            else r = r * Expr::make(poly_const(1), {d});
        }
        return r;
    }
};

}  // namespace

Expr substitute(const Expr& e, const std::map<JetCoord, Expr>& bindings) {
    if (bindings.empty()) return e;
    bool touched = false;
    for (auto& c : e.coords())
        if (bindings.count(c)) touched = true;
    if (!touched) return e;
    Substituter s{[&](const JetCoord& c) -> std::optional<Expr> {
                      auto it = bindings.find(c);
                      if (it == bindings.end()) return std::nullopt;
                      return it->second;
                  },
                  {}};
    return s.run(e);
}

Expr shift_jets(const Expr& e, int shift) {
    if (shift == 0) return e;
    std::map<JetCoord, Expr> b;
    for (auto& c : e.coords()) {
        if (!c.is_jet()) continue;
        if (c.i + shift < 0) throw std::invalid_argument("jet shift below order zero");
        b[c] = Expr::coord(JetCoord::u(c.a, c.i + shift));
    }
    return substitute(e, b);
}

}  // namespace jetvar

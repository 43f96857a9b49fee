#include "franklin/torus_mesh.hpp"

#include <bit>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace franklin {

namespace {

constexpr int kMaxExp = 62;

Dyadic make_checked(__int128 num, int exp) {
    while (exp > 0 && num % 2 == 0) {
        num /= 2;
        --exp;
    }
    if (exp > kMaxExp)
        throw std::overflow_error("dyadic exponent exceeds 2^62");
    if (num > INT64_MAX || num < INT64_MIN)
        throw std::overflow_error("dyadic numerator overflow");
    return Dyadic(static_cast<std::int64_t>(num), exp);
}

}  // namespace

Dyadic::Dyadic(std::int64_t num, int exp) : num_(num), exp_(exp) {
    if (exp < 0)
        throw std::invalid_argument("dyadic exponent must be nonnegative");
    if (num_ == 0) {
        exp_ = 0;
        return;
    }
    while (exp_ > 0 && num_ % 2 == 0) {
        num_ /= 2;
        --exp_;
    }
}

double Dyadic::to_double() const {
    return std::ldexp(static_cast<double>(num_), -exp_);
}

Dyadic Dyadic::from_double(double x) {
    if (!std::isfinite(x))
        throw std::invalid_argument("non-finite value is not dyadic");
    if (x == 0.0) return {};
    int e = 0;
    double m = std::frexp(x, &e);
    auto mant = static_cast<std::int64_t>(std::ldexp(m, 53));
    int exp = 53 - e;
    while (exp > 0 && mant % 2 == 0) {
        mant /= 2;
        --exp;
    }
    if (exp < 0) {
        if (exp < -10 || std::abs(mant) > (INT64_MAX >> -exp))
            throw std::overflow_error("value too large for a dyadic");
        return Dyadic(mant * (std::int64_t{1} << -exp), 0);
    }
    if (exp > kMaxExp)
        throw std::invalid_argument("value is not a dyadic with exponent <= 62");
    return Dyadic(mant, exp);
}

Dyadic Dyadic::parse(const std::string& text) {
    auto slash = text.find('/');
    if (slash == std::string::npos) return from_double(std::stod(text));
    std::int64_t num = std::stoll(text.substr(0, slash));
    std::string den = text.substr(slash + 1);
    if (den.rfind("2^", 0) == 0) return Dyadic(num, std::stoi(den.substr(2)));
    auto q = std::stoull(den);
    if (q == 0 || !std::has_single_bit(q))
        throw std::invalid_argument("denominator is not a power of two: " + den);
    return Dyadic(num, std::countr_zero(q));
}

Dyadic Dyadic::mod1() const {
    if (exp_ == 0) return {};
    std::int64_t den = std::int64_t{1} << exp_;
    std::int64_t r = num_ % den;
    if (r < 0) r += den;
    return Dyadic(r, exp_);
}

Dyadic Dyadic::operator+(const Dyadic& o) const {
    int e = std::max(exp_, o.exp_);
    __int128 a = static_cast<__int128>(num_) << (e - exp_);
    __int128 b = static_cast<__int128>(o.num_) << (e - o.exp_);
    return make_checked(a + b, e);
}

Dyadic Dyadic::operator-(const Dyadic& o) const { return *this + (-o); }

std::strong_ordering Dyadic::operator<=>(const Dyadic& o) const {
    int e = std::max(exp_, o.exp_);
    __int128 a = static_cast<__int128>(num_) << (e - exp_);
    __int128 b = static_cast<__int128>(o.num_) << (e - o.exp_);
    return a <=> b;
}

std::string Dyadic::to_string() const {
    if (exp_ == 0) return std::to_string(num_);
    return std::to_string(num_) + "/2^" + std::to_string(exp_);
}

Dyadic NodeSet::new_node() const {
    if (n < 2) throw std::logic_error("Pi_1 has no new node");
    return Dyadic(2 * j - 1, k + 1);
}

std::vector<double> NodeSet::as_doubles() const {
    std::vector<double> out;
    out.reserve(nodes.size());
    for (const auto& t : nodes) out.push_back(t.to_double());
    return out;
}

void decompose_index(int n, int& k, int& j) {
    if (n < 2) throw std::invalid_argument("decomposition needs n >= 2");
    k = std::bit_width(static_cast<unsigned>(n - 1)) - 1;
    j = n - (1 << k);
}

NodeSet build_nodes(int n) {
    if (n < 1) throw std::invalid_argument("build_nodes requires n >= 1");
    NodeSet s;
    s.n = n;
    if (n == 1) {
        s.nodes.push_back(Dyadic());
        return s;
    }
    decompose_index(n, s.k, s.j);
    s.nodes.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (i <= 2 * s.j)
            s.nodes.emplace_back(i, s.k + 1);
        else
            s.nodes.emplace_back(i - s.j, s.k);
    }
    return s;
}

double DyadicInterval::length() const { return std::ldexp(1.0, -level); }

bool DyadicInterval::contains(double x) const {
    if (level == 0) return true;
    double l = left.to_double();
    double r = right.to_double();
    if (l < r) return l <= x && x < r;
    if (r == 0.0) return l <= x && x < 1.0;
    return x >= l || x < r;
}

bool DyadicInterval::contains(const DyadicInterval& inner) const {
    if (inner.level < level) return false;
    if (level == 0) return true;
    Dyadic offset = (inner.left - left).mod1();
    return offset + Dyadic(1, inner.level) <= Dyadic(1, level);
}

DyadicInterval locate_dyadic(double x, int level, Dyadic shift) {
    if (!(x >= 0.0 && x < 1.0))
        throw std::invalid_argument("locate_dyadic expects x in [0,1)");
    if (level < 0 || level > kMaxExp)
        throw std::invalid_argument("level out of range");
    DyadicInterval iv;
    iv.level = level;
    iv.shift = shift.mod1();
    if (level == 0) {
        iv.left = iv.shift;
        iv.right = iv.shift;
        return iv;
    }
    // Work in unwrapped coordinates z in [shift, shift + 1): z = x or x + 1.
    const double s = iv.shift.to_double();
    const Dyadic lift = x >= s ? Dyadic() : Dyadic(1, 0);
    auto below = [&](const Dyadic& d) { return x < (d - lift).to_double(); };
    double y = x >= s ? x - s : (x - s) + 1.0;
    auto i = static_cast<std::int64_t>(std::floor(std::ldexp(y, level)));
    const std::int64_t count = std::int64_t{1} << level;
    i = std::clamp<std::int64_t>(i, 0, count - 1);
    while (i > 0 && below(iv.shift + Dyadic(i, level))) --i;
    while (i + 1 < count && !below(iv.shift + Dyadic(i + 1, level))) ++i;
    iv.left = (iv.shift + Dyadic(i, level)).mod1();
    iv.right = (iv.left + Dyadic(1, level)).mod1();
    return iv;
}

std::vector<DyadicInterval> dyadic_partition(int level, Dyadic shift) {
    std::vector<DyadicInterval> out;
    std::int64_t count = std::int64_t{1} << level;
    out.reserve(static_cast<std::size_t>(count));
    Dyadic s = shift.mod1();
    for (std::int64_t i = 0; i < count; ++i) {
        DyadicInterval iv;
        iv.level = level;
        iv.shift = s;
        iv.left = (s + Dyadic(i, level)).mod1();
        iv.right = level == 0 ? iv.left : (iv.left + Dyadic(1, level)).mod1();
        out.push_back(iv);
    }
    return out;
}

double wrap_unit(double x) {
    double r = x - std::floor(x);
    return r >= 1.0 ? 0.0 : r;
}

double torus_distance(double x, double y) {
    double d = wrap_unit(x - y);
    return std::min(d, 1.0 - d);
}

}  // namespace franklin

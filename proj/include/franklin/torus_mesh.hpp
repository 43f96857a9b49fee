#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <vector>

namespace franklin {

/// Exact dyadic rational num / 2^exp, kept in lowest terms (num odd or zero).
class Dyadic {
public:
    constexpr Dyadic() = default;
    Dyadic(std::int64_t num, int exp);

    [[nodiscard]] std::int64_t num() const { return num_; }
    [[nodiscard]] int exp() const { return exp_; }
    [[nodiscard]] double to_double() const;

    /// Exact conversion; throws if x is not a dyadic with exponent <= 62.
    static Dyadic from_double(double x);
    /// Parses "p/2^K", "p/q" with q a power of two, or a decimal that is dyadic.
    static Dyadic parse(const std::string& text);

    /// Representative of this value modulo 1 in [0,1).
    [[nodiscard]] Dyadic mod1() const;
    [[nodiscard]] Dyadic operator+(const Dyadic& o) const;
    [[nodiscard]] Dyadic operator-(const Dyadic& o) const;
    [[nodiscard]] Dyadic operator-() const { return Dyadic(-num_, exp_); }

    std::strong_ordering operator<=>(const Dyadic& o) const;
    bool operator==(const Dyadic& o) const = default;

    [[nodiscard]] std::string to_string() const;

private:
    std::int64_t num_ = 0;
    int exp_ = 0;
};

/// Node set of the Franklin hierarchy: n = 2^k + j, 1 <= j <= 2^k.
struct NodeSet {
    int n = 1;
    int k = 0;
    int j = 0;
    std::vector<Dyadic> nodes;

    /// The node added when passing from n-1 to n, (2j-1)/2^{k+1}.
    [[nodiscard]] Dyadic new_node() const;
    [[nodiscard]] std::vector<double> as_doubles() const;
};

/// Splits n >= 2 into (k, j) with n = 2^k + j and 1 <= j <= 2^k.
void decompose_index(int n, int& k, int& j);

[[nodiscard]] NodeSet build_nodes(int n);

/// Half-open interval [left, left + 2^-level) on the torus, endpoints mod 1.
struct DyadicInterval {
    int level = 0;
    Dyadic shift;
    Dyadic left;
    Dyadic right;

    [[nodiscard]] double length() const;
    [[nodiscard]] bool contains(double x) const;
    [[nodiscard]] bool contains(const DyadicInterval& inner) const;
};

/// The level-n interval of the xi-shifted dyadic grid that contains x.
[[nodiscard]] DyadicInterval locate_dyadic(double x, int level, Dyadic shift);

/// All 2^level intervals of the xi-shifted grid, starting with the one at the shift.
[[nodiscard]] std::vector<DyadicInterval> dyadic_partition(int level, Dyadic shift);

/// Canonical representative of x in [0,1).
[[nodiscard]] double wrap_unit(double x);

/// Torus distance min(|x-y| mod 1, 1 - |x-y| mod 1).
[[nodiscard]] double torus_distance(double x, double y);

}  // namespace franklin

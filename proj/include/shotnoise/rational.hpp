#ifndef SHOTNOISE_RATIONAL_HPP
#define SHOTNOISE_RATIONAL_HPP

#include <cctype>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shotnoise {

namespace detail {
__extension__ typedef __int128 wide_int;
}  // namespace detail

/**
 * Exact rational number with 64-bit numerator and denominator.
 *
 * Used for model inputs that are naturally written as fractions
 * ("141/700", "28/423") so derived quantities such as the premium can
 * be checked without rounding. Arithmetic throws std::overflow_error
 * instead of wrapping.
 */
class Rational {
public:
    constexpr Rational() = default;
    Rational(std::int64_t num, std::int64_t den = 1) { assign(num, den); }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
    explicit operator double() const { return to_double(); }

    /// Parses "a/b", integers and plain decimals ("0.07", "-2.5e-3").
    static Rational parse(std::string_view text);

    friend Rational operator+(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::wide_int>(a.num_) * b.den_ + static_cast<detail::wide_int>(b.num_) * a.den_,
                         static_cast<detail::wide_int>(a.den_) * b.den_);
    }
    friend Rational operator-(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::wide_int>(a.num_) * b.den_ - static_cast<detail::wide_int>(b.num_) * a.den_,
                         static_cast<detail::wide_int>(a.den_) * b.den_);
    }
    friend Rational operator*(const Rational& a, const Rational& b) {
        return from_wide(static_cast<detail::wide_int>(a.num_) * b.num_, static_cast<detail::wide_int>(a.den_) * b.den_);
    }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.num_ == 0) throw std::domain_error("rational division by zero");
        return from_wide(static_cast<detail::wide_int>(a.num_) * b.den_, static_cast<detail::wide_int>(a.den_) * b.num_);
    }
    friend bool operator==(const Rational& a, const Rational& b) = default;
    friend auto operator<=>(const Rational& a, const Rational& b) {
        return static_cast<detail::wide_int>(a.num_) * b.den_ <=> static_cast<detail::wide_int>(b.num_) * a.den_;
    }

    std::string str() const {
        return den_ == 1 ? std::to_string(num_) : std::to_string(num_) + "/" + std::to_string(den_);
    }
    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    std::int64_t num_ = 0;
    std::int64_t den_ = 1;

    void assign(std::int64_t num, std::int64_t den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        *this = from_wide(num, den);
    }

    static Rational from_wide(detail::wide_int num, detail::wide_int den) {
        if (den == 0) throw std::domain_error("rational with zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        detail::wide_int a = num < 0 ? -num : num;
        detail::wide_int b = den;
        while (b != 0) {
            detail::wide_int t = a % b;
            a = b;
            b = t;
        }
        if (a > 1) {
            num /= a;
            den /= a;
        }
        constexpr detail::wide_int lim = INT64_MAX;
        if (num > lim || num < -lim || den > lim) throw std::overflow_error("rational overflow");
        Rational r;
        r.num_ = static_cast<std::int64_t>(num);
        r.den_ = static_cast<std::int64_t>(den);
        return r;
    }
};

inline Rational Rational::parse(std::string_view text) {
    auto fail = [&] { return std::invalid_argument("not a rational number: '" + std::string(text) + "'"); };
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) throw fail();

    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational a = parse(text.substr(0, slash));
        Rational b = parse(text.substr(slash + 1));
        if (b.num_ == 0) throw fail();
        return a / b;
    }

    std::size_t i = 0;
    bool negative = false;
    if (text[i] == '+' || text[i] == '-') {
        negative = text[i] == '-';
        ++i;
    }
    detail::wide_int digits = 0;
    int scale = 0;
    bool any = false;
    bool seen_point = false;
    constexpr detail::wide_int digit_cap = static_cast<detail::wide_int>(1) << 62;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c == '.') {
            if (seen_point) throw fail();
            seen_point = true;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            if (digits > digit_cap) throw std::overflow_error("too many digits in '" + std::string(text) + "'");
            digits = digits * 10 + (c - '0');
            if (seen_point) --scale;
            any = true;
        } else if (c == 'e' || c == 'E') {
            break;
        } else {
            throw fail();
        }
    }
    if (!any) throw fail();
    if (i < text.size()) {
        std::string exp_text(text.substr(i + 1));
        if (exp_text.empty()) throw fail();
        std::size_t used = 0;
        int e = 0;
        try {
            e = std::stoi(exp_text, &used);
        } catch (const std::exception&) {
            throw fail();
        }
        if (used != exp_text.size()) throw fail();
        scale += e;
    }
    if (scale > 18 || scale < -18) throw std::overflow_error("exponent out of range in '" + std::string(text) + "'");
    detail::wide_int den = 1;
    for (; scale > 0; --scale) digits *= 10;
    for (; scale < 0; ++scale) den *= 10;
    return from_wide(negative ? -digits : digits, den);
}

}  // namespace shotnoise

#endif  // SHOTNOISE_RATIONAL_HPP

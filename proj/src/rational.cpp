#include "bratteli/rational.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace bratteli {

namespace {

Rational pow10(long e) {
    Integer p;
    mpz_ui_pow_ui(p.get_mpz_t(), 10, static_cast<unsigned long>(e < 0 ? -e : e));
    return e < 0 ? Rational(Integer(1), p) : Rational(p);
}

Rational parse_decimal(std::string_view s) {
    std::size_t pos = 0;
    bool negative = false;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        negative = s[pos] == '-';
        ++pos;
    }
    std::string digits;
    long exponent = 0;
    bool seen_digit = false;
    bool after_point = false;
    for (; pos < s.size(); ++pos) {
        char c = s[pos];
        if (c >= '0' && c <= '9') {
            digits.push_back(c);
            seen_digit = true;
            if (after_point) {
                --exponent;
            }
        } else if (c == '.' && !after_point) {
            after_point = true;
        } else {
            break;
        }
    }
    if (!seen_digit) {
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    }
    if (pos < s.size() && (s[pos] == 'e' || s[pos] == 'E')) {
        ++pos;
        long e = 0;
        auto [ptr, ec] = std::from_chars(s.data() + pos + (s[pos] == '+' ? 1 : 0), s.data() + s.size(), e);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw std::invalid_argument("bad exponent in '" + std::string(s) + "'");
        }
        exponent += e;
        pos = s.size();
    }
    if (pos != s.size()) {
        throw std::invalid_argument("trailing characters in '" + std::string(s) + "'");
    }
    Rational q(Integer(digits, 10));
    q *= pow10(exponent);
    q.canonicalize();
    return negative ? Rational(-q) : q;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    if (b == std::string_view::npos) {
        return {};
    }
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Rational parse_rational(std::string_view text) {
    std::string s = trim(text);
    auto slash = s.find('/');
    if (slash == std::string::npos) {
        return parse_decimal(s);
    }
    Rational num = parse_decimal(std::string_view(s).substr(0, slash));
    Rational den = parse_decimal(std::string_view(s).substr(slash + 1));
    if (sgn(den) == 0) {
        throw std::invalid_argument("zero denominator in '" + s + "'");
    }
    Rational q = num / den;
    q.canonicalize();
    return q;
}

std::string format_double(double x) {
    if (!std::isfinite(x)) {
        return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, ptr);
}

Rational rational_from_double(double x) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument("non-finite potential");
    }
    return parse_decimal(format_double(x));
}

std::string to_string(const Rational& q) {
    if (q.get_den() == 1) {
        return q.get_num().get_str();
    }
    return q.get_str();
}

std::string to_string(const Integer& n) { return n.get_str(); }

double log_of(const Integer& n) {
    if (sgn(n) <= 0) {
        throw std::domain_error("log of non-positive integer");
    }
    long exp = 0;
    double mant = mpz_get_d_2exp(&exp, n.get_mpz_t());
    return std::log(mant) + static_cast<double>(exp) * std::log(2.0);
}

Potential Potential::from_double(double x) {
    Potential p;
    p.value = x;
    p.exact = rational_from_double(x);
    return p;
}

Potential Potential::from_rational(const Rational& q) {
    Potential p;
    p.exact = q;
    p.exact.canonicalize();
    p.value = p.exact.get_d();
    return p;
}

Potential Potential::operator-() const {
    Potential p;
    p.value = 0.0 - value;
    p.exact = -exact;
    return p;
}

Potential& Potential::operator+=(const Potential& other) {
    value += other.value;
    exact += other.exact;
    return *this;
}

bool Potential::decimal_exact() const {
    return rational_from_double(value) == exact;
}

bool operator==(const Potential& a, const Potential& b) { return a.exact == b.exact; }

}  // namespace bratteli

#pragma once

#include <gmpxx.h>

#include <string>
#include <string_view>

namespace bratteli {

using Integer = mpz_class;
using Rational = mpq_class;

// Accepts "p/q", plain integers and decimal literals ("-1.25", "3e-2").
Rational parse_rational(std::string_view text);

// The rational value of the shortest decimal literal that round-trips to x.
Rational rational_from_double(double x);

std::string to_string(const Rational& q);
std::string to_string(const Integer& n);

// Shortest round-trip decimal form of x.
std::string format_double(double x);

// Natural logarithm of a positive arbitrary-precision integer.
double log_of(const Integer& n);

// A real number kept both as a double and as the exact rational it was
// written as. Sums keep both representations in step.
struct Potential {
    double value = 0.0;
    Rational exact = 0;

    Potential() = default;
    static Potential from_double(double x);
    static Potential from_rational(const Rational& q);

    Potential operator-() const;
    Potential& operator+=(const Potential& other);
    friend Potential operator+(Potential a, const Potential& b) { return a += b; }
    friend Potential operator-(Potential a, const Potential& b) { return a += -b; }

    bool is_zero() const { return sgn(exact) == 0; }
    // Literal used in diagram files: a JSON number when the decimal form
    // is exact, else "p/q".
    bool decimal_exact() const;
};

bool operator==(const Potential& a, const Potential& b);

}  // namespace bratteli

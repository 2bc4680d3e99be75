#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>

namespace cloudrank {

/*
 * Fixed-point decimal with exactly six fractional digits, stored as a signed count of millionths.
 * Every operation that can produce more than six fractional digits (multiplication, parsing of longer
 * literals, conversion from double) rounds half-to-even. Addition and subtraction are exact.
 */
class Decimal {
 public:
  static constexpr int kScaleDigits = 6;
  static constexpr std::int64_t kScale = 1'000'000;

  constexpr Decimal() = default;

  static constexpr Decimal FromMicros(std::int64_t micros) {
    Decimal d;
    d.micros_ = micros;
    return d;
  }
  static constexpr Decimal FromInteger(std::int64_t value) { return FromMicros(value * kScale); }

  // Accepts [-]digits[.digits]; throws std::invalid_argument on anything else.
  static Decimal Parse(std::string_view text);
  // Goes through the shortest round-trip representation of the double, so 0.1 becomes exactly 0.100000.
  static Decimal FromDouble(double value);

  constexpr std::int64_t micros() const { return micros_; }
  double ToDouble() const { return static_cast<double>(micros_) / static_cast<double>(kScale); }
  // Canonical form: always six fractional digits, e.g. "17.000000".
  std::string ToString() const;

  constexpr bool IsZero() const { return micros_ == 0; }
  constexpr bool IsNegative() const { return micros_ < 0; }

  friend constexpr Decimal operator+(Decimal a, Decimal b) { return FromMicros(a.micros_ + b.micros_); }
  friend constexpr Decimal operator-(Decimal a, Decimal b) { return FromMicros(a.micros_ - b.micros_); }
  friend constexpr Decimal operator-(Decimal a) { return FromMicros(-a.micros_); }
  friend Decimal operator*(Decimal a, Decimal b);
  Decimal& operator+=(Decimal other) {
    micros_ += other.micros_;
    return *this;
  }
  Decimal& operator-=(Decimal other) {
    micros_ -= other.micros_;
    return *this;
  }

  friend constexpr auto operator<=>(Decimal, Decimal) = default;
  friend constexpr bool operator==(Decimal, Decimal) = default;

 private:
  std::int64_t micros_ = 0;
};

// Product of three decimals rounded once at the end, so a*b*c does not accumulate two roundings.
Decimal MultiplyRounded(Decimal a, Decimal b, Decimal c);

Decimal Min(Decimal a, Decimal b);
Decimal Max(Decimal a, Decimal b);

std::ostream& operator<<(std::ostream& os, Decimal value);

}  // namespace cloudrank

#include "cloudrank/decimal.hpp"

#include <array>
#include <charconv>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cloudrank {

namespace {

using Wide = __int128;

constexpr Wide kWideScale = Decimal::kScale;

// Divides by a positive divisor, rounding the quotient half-to-even.
Wide DivideRoundHalfEven(Wide numerator, Wide divisor) {
  const bool negative = numerator < 0;
  const Wide magnitude = negative ? -numerator : numerator;
  Wide quotient = magnitude / divisor;
  const Wide remainder = magnitude % divisor;
  const Wide twice = remainder * 2;
  if (twice > divisor || (twice == divisor && (quotient % 2) != 0)) {
    ++quotient;
  }
  return negative ? -quotient : quotient;
}

std::int64_t Narrow(Wide value) {
  if (value > std::numeric_limits<std::int64_t>::max() || value < std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("decimal overflow");
  }
  return static_cast<std::int64_t>(value);
}

}  // namespace

Decimal Decimal::Parse(std::string_view text) {
  if (text.empty()) {
    throw std::invalid_argument("empty decimal literal");
  }
  std::size_t pos = 0;
  bool negative = false;
  if (text[0] == '-' || text[0] == '+') {
    negative = text[0] == '-';
    pos = 1;
  }
  Wide integral = 0;
  std::size_t integral_digits = 0;
  for (; pos < text.size() && text[pos] != '.'; ++pos) {
    const char c = text[pos];
    if (c < '0' || c > '9') {
      throw std::invalid_argument("invalid decimal literal: " + std::string(text));
    }
    integral = integral * 10 + (c - '0');
    if (integral > Wide{std::numeric_limits<std::int64_t>::max()}) {
      throw std::overflow_error("decimal overflow: " + std::string(text));
    }
    ++integral_digits;
  }
  // Fraction kept at full written precision, then rounded to six digits.
  Wide fraction = 0;
  Wide fraction_scale = 1;
  std::size_t fraction_digits = 0;
  if (pos < text.size()) {
    ++pos;  // '.'
    for (; pos < text.size(); ++pos) {
      const char c = text[pos];
      if (c < '0' || c > '9') {
        throw std::invalid_argument("invalid decimal literal: " + std::string(text));
      }
      if (fraction_digits < 30) {
        fraction = fraction * 10 + (c - '0');
        fraction_scale *= 10;
      }
      ++fraction_digits;
    }
  }
  if (integral_digits == 0 && fraction_digits == 0) {
    throw std::invalid_argument("invalid decimal literal: " + std::string(text));
  }
  Wide micros = integral * kWideScale + DivideRoundHalfEven(fraction * kWideScale, fraction_scale);
  if (negative) {
    micros = -micros;
  }
  return FromMicros(Narrow(micros));
}

Decimal Decimal::FromDouble(double value) {
  std::array<char, 64> buffer{};
  const auto [end, ec] = std::to_chars(buffer.data(), buffer.data() + buffer.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) {
    throw std::invalid_argument("cannot represent double as decimal");
  }
  return Parse(std::string_view(buffer.data(), static_cast<std::size_t>(end - buffer.data())));
}

std::string Decimal::ToString() const {
  const bool negative = micros_ < 0;
  const Wide magnitude = negative ? -Wide{micros_} : Wide{micros_};
  const auto integral = static_cast<unsigned long long>(magnitude / kWideScale);
  const auto fraction = static_cast<unsigned long long>(magnitude % kWideScale);
  std::string out = negative ? "-" : "";
  out += std::to_string(integral);
  out += '.';
  std::string frac = std::to_string(fraction);
  out.append(static_cast<std::size_t>(kScaleDigits) - frac.size(), '0');
  out += frac;
  return out;
}

Decimal operator*(Decimal a, Decimal b) {
  const Wide product = Wide{a.micros()} * Wide{b.micros()};
  return Decimal::FromMicros(Narrow(DivideRoundHalfEven(product, kWideScale)));
}

Decimal MultiplyRounded(Decimal a, Decimal b, Decimal c) {
  const Wide ab = Wide{a.micros()} * Wide{b.micros()};
  // ab * c can exceed 128 bits only for absurd magnitudes; detect before multiplying.
  constexpr Wide kLimit = (Wide{1} << 126) - 1;
  const Wide c_mag = c.micros() < 0 ? -Wide{c.micros()} : Wide{c.micros()};
  const Wide ab_mag = ab < 0 ? -ab : ab;
  if (c_mag != 0 && ab_mag > kLimit / c_mag) {
    throw std::overflow_error("decimal overflow");
  }
  return Decimal::FromMicros(Narrow(DivideRoundHalfEven(ab * Wide{c.micros()}, kWideScale * kWideScale)));
}

Decimal Min(Decimal a, Decimal b) { return b < a ? b : a; }
Decimal Max(Decimal a, Decimal b) { return a < b ? b : a; }

std::ostream& operator<<(std::ostream& os, Decimal value) { return os << value.ToString(); }

}  // namespace cloudrank

#pragma once

// Register encoding of the text reader: two 32-bit big-endian words.
//   whole_word: 7 packed-BCD digits, zero-padded left, then a sign nibble (C = +, D = -)
//   frac_word:  8 packed-BCD digits starting at tenths, zero-padded right
// All-ones in both words means "nothing readable".

#include <array>
#include <cstdint>
#include <optional>
#include <span>

#include "mlsensor/error.hpp"
#include "mlsensor/stimuli/seven_segment.hpp"

namespace mlsensor {

using RegisterBytes = std::array<std::uint8_t, 8>;

inline constexpr RegisterBytes kNoReading{0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF, 0xFF};
inline constexpr std::uint8_t kSignPositive = 0xC;
inline constexpr std::uint8_t kSignNegative = 0xD;
inline constexpr std::size_t kBcdWholeDigits = 7;
inline constexpr std::size_t kBcdFracDigits = 8;

inline RegisterBytes encode_reading(const Reading& r) {
  if (!all_digits(r.whole_digits) || !all_digits(r.frac_digits))
    throw Error(Errc::InvalidArgument, "reading contains non-digit characters");
  if (r.whole_digits.size() > kBcdWholeDigits || r.frac_digits.size() > kBcdFracDigits)
    throw Error(Errc::TooManyDigits, "'" + r.to_string() + "' exceeds 7 whole / 8 fractional digits");

  std::array<std::uint8_t, 16> nib{};  // 8 whole-word nibbles, then 8 frac-word nibbles
  const std::size_t pad = kBcdWholeDigits - r.whole_digits.size();
  for (std::size_t i = 0; i < r.whole_digits.size(); ++i)
    nib[pad + i] = static_cast<std::uint8_t>(r.whole_digits[i] - '0');
  nib[7] = r.negative ? kSignNegative : kSignPositive;
  for (std::size_t i = 0; i < r.frac_digits.size(); ++i) nib[8 + i] = static_cast<std::uint8_t>(r.frac_digits[i] - '0');

  RegisterBytes out{};
  for (std::size_t i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(nib[2 * i] << 4 | nib[2 * i + 1]);
  return out;
}

/// The canonical form decode_reading produces for r.
inline Reading canonical_reading(Reading r) {
  const auto first = r.whole_digits.find_first_not_of('0');
  r.whole_digits = first == std::string::npos ? "0" : r.whole_digits.substr(first);
  const auto last = r.frac_digits.find_last_not_of('0');
  r.frac_digits = last == std::string::npos ? "" : r.frac_digits.substr(0, last + 1);
  return r;
}

/// Inverse of encode_reading on canonical readings: the whole part loses its
/// padding zeros (keeping at least "0") and the fraction its trailing zeros,
/// because the register format cannot tell them apart. nullopt is the
/// no-reading sentinel.
inline std::optional<Reading> decode_reading(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != 8) throw Error(Errc::InvalidArgument, "register payload must be 8 bytes");
  if (std::equal(bytes.begin(), bytes.end(), kNoReading.begin())) return std::nullopt;

  std::array<std::uint8_t, 16> nib{};
  for (std::size_t i = 0; i < 8; ++i) {
    nib[2 * i] = bytes[i] >> 4;
    nib[2 * i + 1] = bytes[i] & 0x0F;
  }
  auto digit = [&](std::size_t i) {
    if (nib[i] > 9)
      throw Error(Errc::MalformedNibble, "nibble " + std::to_string(i) + " holds 0x" +
                                             std::string(1, "0123456789ABCDEF"[nib[i]]) + " in a digit position");
    return static_cast<char>('0' + nib[i]);
  };

  Reading r;
  if (nib[7] == kSignPositive) r.negative = false;
  else if (nib[7] == kSignNegative) r.negative = true;
  else throw Error(Errc::MalformedNibble, "sign nibble is neither 0xC nor 0xD");
  for (std::size_t i = 0; i < 7; ++i) r.whole_digits += digit(i);
  for (std::size_t i = 8; i < 16; ++i) r.frac_digits += digit(i);

  return canonical_reading(std::move(r));
}

}  // namespace mlsensor

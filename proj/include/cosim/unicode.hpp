#pragma once

// UTF-8 helpers over ICU. Every offset handled by the library counts Unicode
// scalar values of NFC text, never bytes.

#include <string>
#include <string_view>

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/ustring.h>

#include "cosim/error.hpp"

namespace cosim::unicode {

inline icu::UnicodeString to_icu(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

inline bool is_valid_utf8(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  int32_t needed = 0;
  u_strFromUTF8(nullptr, 0, &needed, s.data(), static_cast<int32_t>(s.size()), &status);
  return status == U_BUFFER_OVERFLOW_ERROR || U_SUCCESS(status);
}

/// NFC-normalizes UTF-8 text. Throws FormatError on ill-formed UTF-8.
inline std::string nfc(std::string_view s) {
  if (!is_valid_utf8(s)) throw FormatError("ill-formed UTF-8");
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error(std::string("ICU NFC unavailable: ") + u_errorName(status));
  icu::UnicodeString out = norm->normalize(to_icu(s), status);
  if (U_FAILURE(status)) throw Error(std::string("NFC normalization failed: ") + u_errorName(status));
  std::string result;
  out.toUTF8String(result);
  return result;
}

inline std::u32string to_u32(std::string_view s) {
  icu::UnicodeString u = to_icu(s);
  std::u32string out(static_cast<std::size_t>(u.countChar32()), U'\0');
  UErrorCode status = U_ZERO_ERROR;
  u.toUTF32(reinterpret_cast<UChar32*>(out.data()), static_cast<int32_t>(out.size()), status);
  if (U_FAILURE(status)) throw Error(std::string("UTF-32 conversion failed: ") + u_errorName(status));
  return out;
}

inline std::string to_utf8(std::u32string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF32(reinterpret_cast<const UChar32*>(s.data()),
                                                       static_cast<int32_t>(s.size()));
  std::string out;
  u.toUTF8String(out);
  return out;
}

/// Length in scalar values.
inline std::size_t length(std::string_view s) { return to_u32(s).size(); }

/// Scalar-value substring [start, end).
inline std::string substr(std::string_view s, std::size_t start, std::size_t end) {
  std::u32string u = to_u32(s);
  if (start > end || end > u.size()) throw ContractError("substring range out of bounds");
  return to_utf8(std::u32string_view(u).substr(start, end - start));
}

inline icu::UnicodeString folded(std::string_view s) {
  icu::UnicodeString u = to_icu(s);
  u.foldCase(U_FOLD_CASE_DEFAULT);
  return u;
}

inline bool equal_ignore_case(std::string_view a, std::string_view b) {
  return folded(a) == folded(b);
}

/// True when `prefix` is a case-insensitive prefix of `s`.
inline bool starts_with_ignore_case(std::string_view s, std::string_view prefix) {
  return folded(s).startsWith(folded(prefix));
}

inline bool has_whitespace(std::string_view s) {
  for (char32_t cp : to_u32(s)) {
    if (u_isUWhiteSpace(static_cast<UChar32>(cp))) return true;
  }
  return false;
}

inline bool is_lowercase(std::string_view s) {
  icu::UnicodeString u = to_icu(s);
  icu::UnicodeString lower = u;
  lower.toLower();
  return u == lower;
}

}  // namespace cosim::unicode

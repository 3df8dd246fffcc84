#ifndef QINTERP_TEXT_HPP
#define QINTERP_TEXT_HPP

#include <string>
#include <string_view>
#include <vector>

namespace qinterp {

// Canonical surface normalization, applied identically at ingestion and at
// query time: ASCII lowercasing, leading/trailing whitespace stripped,
// internal whitespace runs collapsed to a single space. Input is treated as
// UTF-8; non-ASCII bytes pass through unchanged (precomposed input assumed).
std::string normalize(std::string_view raw);

// Splits a normalized string on single spaces. normalize() guarantees no
// empty tokens for non-empty input.
std::vector<std::string> split_terms(std::string_view normalized);

// Joins tokens with single spaces.
std::string join_terms(const std::vector<std::string>& terms, std::size_t begin,
                       std::size_t end_inclusive);
std::string join_terms(const std::vector<std::string>& terms);

}  // namespace qinterp

#endif  // QINTERP_TEXT_HPP

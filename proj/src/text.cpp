#include "qinterp/text.hpp"

namespace qinterp {

namespace {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline char to_lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      if (!out.empty()) pending_space = true;
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(to_lower_ascii(c));
  }
  return out;
}

std::vector<std::string> split_terms(std::string_view normalized) {
  std::vector<std::string> terms;
  std::size_t pos = 0;
  while (pos < normalized.size()) {
    std::size_t space = normalized.find(' ', pos);
    if (space == std::string_view::npos) {
      terms.emplace_back(normalized.substr(pos));
      break;
    }
    if (space > pos) terms.emplace_back(normalized.substr(pos, space - pos));
    pos = space + 1;
  }
  return terms;
}

std::string join_terms(const std::vector<std::string>& terms, std::size_t begin,
                       std::size_t end_inclusive) {
  std::string out;
  for (std::size_t i = begin; i <= end_inclusive && i < terms.size(); ++i) {
    if (i > begin) out.push_back(' ');
    out += terms[i];
  }
  return out;
}

std::string join_terms(const std::vector<std::string>& terms) {
  if (terms.empty()) return {};
  return join_terms(terms, 0, terms.size() - 1);
}

}  // namespace qinterp

#include "ptsem/concept.hpp"

#include <cctype>

namespace ptsem {

namespace {
bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}
}  // namespace

std::string normalize_concept(std::string_view raw) {
  std::size_t begin = 0;
  std::size_t end = raw.size();
  while (begin < end && is_space(raw[begin])) ++begin;
  while (end > begin && is_space(raw[end - 1])) --end;

  std::string out;
  out.reserve(end - begin);
  bool in_gap = false;
  for (std::size_t i = begin; i < end; ++i) {
    char c = raw[i];
    if (is_space(c)) {
      in_gap = true;
      continue;
    }
    if (in_gap) {
      out.push_back('_');
      in_gap = false;
    }
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

bool is_valid_concept(std::string_view id) {
  return !id.empty() && normalize_concept(id) == id;
}

}  // namespace ptsem

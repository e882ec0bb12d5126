#pragma once

#include <string>
#include <string_view>

namespace ptsem {

// Canonical concept token: lowercased, trimmed, internal whitespace runs
// collapsed to a single underscore. Idempotent.
std::string normalize_concept(std::string_view raw);

// True iff `id` is non-empty and already in canonical form.
bool is_valid_concept(std::string_view id);

}  // namespace ptsem

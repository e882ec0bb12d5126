#include <doctest.h>

#include <ptsem/concept.hpp>

using namespace ptsem;

TEST_CASE("normalize lowercases and collapses whitespace to underscores") {
  CHECK(normalize_concept("Pour") == "pour");
  CHECK(normalize_concept("  fried  egg ") == "fried_egg");
  CHECK(normalize_concept("TIDY\tCABINET") == "tidy_cabinet");
  CHECK(normalize_concept("already_ok") == "already_ok");
  CHECK(normalize_concept("   ") == "");
}

TEST_CASE("validity means already normalized and non-empty") {
  CHECK(is_valid_concept("pour"));
  CHECK(is_valid_concept("fried_egg"));
  CHECK_FALSE(is_valid_concept(""));
  CHECK_FALSE(is_valid_concept("Pour"));
  CHECK_FALSE(is_valid_concept("two words"));
}

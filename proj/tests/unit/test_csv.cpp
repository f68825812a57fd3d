#include <string_view>
#include <vector>

#include "chronogaze/csv.hpp"
#include "chronogaze/error.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace chronogaze;

TEST_CASE("format_double round-trips") {
  for (double v : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 123456789.125, 60.0}) {
    const auto text = csv::format_double(v);
    REQUIRE(csv::parse_double(text).has_value());
    CHECK(*csv::parse_double(text) == v);
  }
  CHECK(csv::format_double(60.0) == "60");
  CHECK(csv::format_double(0.5) == "0.5");
}

TEST_CASE("parse_double and parse_int reject garbage") {
  CHECK_FALSE(csv::parse_double("").has_value());
  CHECK_FALSE(csv::parse_double("1.2x").has_value());
  CHECK_FALSE(csv::parse_double("abc").has_value());
  CHECK(*csv::parse_double(" 2.5 ") == 2.5);
  CHECK(*csv::parse_int("42") == 42);
  CHECK_FALSE(csv::parse_int("4.2").has_value());
}

TEST_CASE("read reorders columns and reports lines") {
  testing::TempDir dir;
  testing::write_file(dir / "a.csv", "b,a\r\n2,1\r\n4,3\n");
  constexpr std::string_view cols[] = {"a", "b"};
  std::vector<std::pair<std::string, std::size_t>> seen;
  csv::read(dir / "a.csv", cols, [&](std::span<const std::string_view> f, std::size_t line) {
    seen.emplace_back(std::string(f[0]) + "|" + std::string(f[1]), line);
  });
  REQUIRE(seen.size() == 2);
  CHECK(seen[0].first == "1|2");
  CHECK(seen[0].second == 2);
  CHECK(seen[1].first == "3|4");
  CHECK(seen[1].second == 3);
}

TEST_CASE("read errors") {
  testing::TempDir dir;
  constexpr std::string_view cols[] = {"a", "b"};
  auto noop = [](std::span<const std::string_view>, std::size_t) {};

  try {
    csv::read(dir / "missing.csv", cols, noop);
    FAIL("expected missing_file");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::missing_file);
  }

  testing::write_file(dir / "wrong.csv", "a,c\n1,2\n");
  try {
    csv::read(dir / "wrong.csv", cols, noop);
    FAIL("expected schema_mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::schema_mismatch);
  }

  testing::write_file(dir / "short.csv", "a,b\n1,2\n3\n");
  try {
    csv::read(dir / "short.csv", cols, noop);
    FAIL("expected row_parse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::row_parse);
    CHECK(e.line() == 3);
  }
}

TEST_CASE("write_atomic replaces content and leaves no temp file") {
  testing::TempDir dir;
  csv::write_atomic(dir / "out.txt", "first");
  csv::write_atomic(dir / "out.txt", "second");
  CHECK(testing::read_file(dir / "out.txt") == "second");
  int files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(dir.path())) ++files;
  CHECK(files == 1);
}

#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chronogaze::csv {

/// Shortest round-trip decimal representation.
std::string format_double(double value);

std::optional<double> parse_double(std::string_view text);
std::optional<long long> parse_int(std::string_view text);

/// Column lookup for a parsed header; columns may appear in any order but the
/// set of names must match exactly.
class Header {
 public:
  Header(std::vector<std::string> names, std::string_view file);

  std::size_t index(std::string_view name) const;
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

using RowCallback = std::function<void(std::span<const std::string_view> fields, std::size_t line)>;

/// Streams a comma-separated UTF-8 file with a mandatory header row. Throws
/// missing_file if absent, schema_mismatch if the header's column set differs
/// from `expected`, row_parse on a wrong field count. The callback receives
/// fields reordered to match `expected`.
void read(const std::filesystem::path& path, std::span<const std::string_view> expected,
          const RowCallback& on_row);

/// Writes `content` to a sibling temp file and renames it over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string join(std::span<const std::string> fields);

}  // namespace chronogaze::csv

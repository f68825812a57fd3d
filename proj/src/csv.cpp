#include "chronogaze/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

#include "chronogaze/error.hpp"

namespace chronogaze::csv {

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw Error(ErrorCode::serialization, "cannot format number");
  return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<long long> parse_int(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

Header::Header(std::vector<std::string> names, std::string_view file) : names_(std::move(names)) {
  std::vector<std::string> sorted = names_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw Error(ErrorCode::schema_mismatch, std::string(file) + ": duplicate column names");
}

std::size_t Header::index(std::string_view name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw Error(ErrorCode::schema_mismatch, "missing column " + std::string(name));
  return static_cast<std::size_t>(it - names_.begin());
}

namespace {

void split_line(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t begin = 0;
  while (true) {
    auto comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  return s;
}

}  // namespace

void read(const std::filesystem::path& path, std::span<const std::string_view> expected,
          const RowCallback& on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  std::string_view rest(content);
  if (rest.starts_with("\xEF\xBB\xBF")) rest.remove_prefix(3);

  std::vector<std::string_view> fields;
  std::vector<std::string_view> ordered(expected.size());
  std::vector<std::size_t> mapping;
  std::size_t line_no = 0;
  bool have_header = false;

  while (!rest.empty()) {
    auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    split_line(line, fields);
    for (auto& f : fields) f = trim(f);

    if (!have_header) {
      have_header = true;
      std::vector<std::string> names(fields.begin(), fields.end());
      Header header(names, path.string());
      if (names.size() != expected.size())
        throw Error(ErrorCode::schema_mismatch,
                    path.string() + ": expected " + std::to_string(expected.size()) + " columns, found " +
                        std::to_string(names.size()));
      mapping.clear();
      for (auto name : expected) {
        try {
          mapping.push_back(header.index(name));
        } catch (const Error&) {
          throw Error(ErrorCode::schema_mismatch, path.string() + ": missing column " + std::string(name));
        }
      }
      continue;
    }

    if (fields.size() != expected.size())
      throw Error(ErrorCode::row_parse,
                  path.string() + ": expected " + std::to_string(expected.size()) + " fields, found " +
                      std::to_string(fields.size()),
                  line_no);
    for (std::size_t i = 0; i < mapping.size(); ++i) ordered[i] = fields[mapping[i]];
    on_row(ordered, line_no);
  }
  if (!have_header) throw Error(ErrorCode::schema_mismatch, path.string() + ": missing header row");
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::io, "write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string join(std::span<const std::string> fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

}  // namespace chronogaze::csv

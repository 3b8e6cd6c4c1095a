#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace partrace::app {

/// Shortest round-trip text for a double ("inf", "nan" for specials).
std::string format_double(double x);

/// CSV file with a "# schema: <name>/<version>" first line and a header row.
/// Rows are flushed as they are written.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view schema, int version,
            std::vector<std::string> columns);

  class Row {
   public:
    explicit Row(CsvWriter& w) : w_(w) {}
    Row& operator<<(double x) { return add(format_double(x)); }
    Row& operator<<(long long x) { return add(std::to_string(x)); }
    Row& operator<<(long x) { return add(std::to_string(x)); }
    Row& operator<<(int x) { return add(std::to_string(x)); }
    Row& operator<<(unsigned long x) { return add(std::to_string(x)); }
    Row& operator<<(unsigned long long x) { return add(std::to_string(x)); }
    Row& operator<<(std::string_view s) { return add(std::string(s)); }
    Row& operator<<(const char* s) { return add(s); }
    ~Row() noexcept(false);

   private:
    Row& add(std::string cell);
    CsvWriter& w_;
    std::vector<std::string> cells_;
  };

  Row row() { return Row(*this); }
  const std::filesystem::path& path() const { return path_; }

 private:
  void write(const std::vector<std::string>& cells);

  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_cols_;
};

}  // namespace partrace::app

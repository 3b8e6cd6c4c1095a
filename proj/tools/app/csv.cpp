#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <stdexcept>

namespace partrace::app {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view schema, int version,
                     std::vector<std::string> columns)
    : path_(path), n_cols_(columns.size()) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw std::runtime_error("cannot write " + path.string());
  out_ << "# schema: " << schema << '/' << version << '\n';
  write(columns);
}

void CsvWriter::write(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << '\n';
  out_.flush();
  if (!out_) throw std::runtime_error("write failed: " + path_.string());
}

CsvWriter::Row& CsvWriter::Row::add(std::string cell) {
  cells_.push_back(std::move(cell));
  return *this;
}

CsvWriter::Row::~Row() noexcept(false) {
  if (std::uncaught_exceptions() > 0) return;
  if (cells_.size() != w_.n_cols_) {
    throw std::logic_error("CSV row for " + w_.path_.string() + " has " + std::to_string(cells_.size()) +
                           " cells, expected " + std::to_string(w_.n_cols_));
  }
  w_.write(cells_);
}

}  // namespace partrace::app

#include "felpa/csv.hpp"

#include <charconv>
#include <sstream>

#include "felpa/errors.hpp"

namespace felpa {

std::string csv_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& metadata,
    const std::vector<std::string>& columns)
    : path_(path) {
  out_.open(path);
  if (!out_) throw IoError("cannot open for writing: " + path);
  for (const auto& [key, value] : metadata) out_ << "# " << key << ": " << value << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ",";
    out_ << columns[i];
  }
  out_ << "\n";
  columns_ = columns.size();
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_)
    throw IoError("row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ",";
    out_ << cells[i];
  }
  out_ << "\n";
}

void CsvWriter::close() {
  out_.flush();
  out_.close();
  if (out_.fail()) throw IoError("write failed: " + path_);
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path);
  CsvTable table;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto colon = line.find(':');
      if (colon != std::string::npos) {
        std::string key = line.substr(1, colon - 1);
        std::string value = line.substr(colon + 1);
        while (!key.empty() && key.front() == ' ') key.erase(key.begin());
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        table.metadata.emplace_back(key, value);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    if (!header_seen) {
      table.columns = std::move(cells);
      header_seen = true;
      continue;
    }
    if (cells.size() != table.columns.size())
      throw IoError(path + ":" + std::to_string(line_no) +
                    ": expected " + std::to_string(table.columns.size()) +
                    " cells, got " + std::to_string(cells.size()));
    table.rows.push_back(std::move(cells));
  }
  if (!header_seen) throw IoError(path + ": missing header row");
  return table;
}

}  // namespace felpa

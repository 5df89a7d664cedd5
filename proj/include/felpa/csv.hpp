#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

namespace felpa {

// Shortest round-trip decimal form; keeps rerun outputs byte-identical.
std::string csv_double(double v);

// CSV file with `# key: value` metadata lines above the header row. Every
// artifact carries the scenario hash, seed and version so a run can be
// reproduced exactly from its outputs.
class CsvWriter {
 public:
  CsvWriter(const std::string& path,
            const std::vector<std::pair<std::string, std::string>>& metadata,
            const std::vector<std::string>& columns);  // throws IoError
  void row(const std::vector<std::string>& cells);
  void close();

 private:
  std::ofstream out_;
  std::size_t columns_ = 0;
  std::string path_;
};

struct CsvTable {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

// Parses a file written by CsvWriter (or any plain CSV with optional `#`
// metadata). Throws IoError with the offending line number on malformed rows.
CsvTable read_csv(const std::string& path);

}  // namespace felpa

#pragma once
// Minimal RFC 4180 CSV reading and writing.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "notesim/types.hpp"

namespace notesim {

using CsvRow = std::vector<std::string>;

// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);
std::string csv_line(const CsvRow& row);  // without the trailing newline

// Shortest round-trip decimal form; undefined -> empty cell.
std::string format_real(MaybeReal v);
std::string format_real(double v);

// Empty cell -> undefined. Throws FormatError on anything non-numeric.
MaybeReal parse_real(std::string_view cell);

// Parses CSV text (quoted fields may span lines). Lines ending in CRLF are accepted.
std::vector<CsvRow> parse_csv(std::string_view text);
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path, bool append = false);
    void write(const CsvRow& row);
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::filesystem::path path_;
};

}  // namespace notesim

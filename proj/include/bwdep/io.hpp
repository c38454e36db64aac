#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bwdep/estimation.hpp"

namespace bwdep {

// RFC-4180 CSV with '.' decimals. The first row is a header when any of its
// fields is not a number. Empty or unparsable cells are errors naming the cell.
DataMatrix read_csv(const std::string& path);
DataMatrix parse_csv(const std::string& text, const std::string& source = "<string>");

// Round-trip exact formatting (17 significant digits).
std::string format_double(double v);
std::string csv_field(const std::string& s);

void write_matrix_csv(const std::string& path, const MatrixXd& m, const std::vector<std::string>& header = {});
void write_mask_csv(const std::string& path, const MaskXb& m, const std::vector<std::string>& header = {});
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

// Flat experiment config: TOML-style `key = value` lines (strings, numbers,
// booleans, flat arrays; '#' comments; [section] headers prefix keys with
// "section."), or a flat JSON object when the file ends in .json.
std::map<std::string, std::string> parse_kv_config(const std::string& text, bool json = false);
std::map<std::string, std::string> read_kv_config(const std::string& path);

}  // namespace bwdep

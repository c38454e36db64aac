#include "bwdep/io.hpp"

#include <cerrno>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace bwdep {

namespace {

std::vector<std::vector<std::string>> split_records(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, field_started = false;
  std::size_t line = 1;
  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_row();
      ++line;
    } else if (c == '\r') {
      continue;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (quoted) throw InputError(source + ": unterminated quoted field near line " + std::to_string(line));
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& raw, double& out) {
  const std::string s = trim(raw);
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno != ERANGE;
}

}  // namespace

DataMatrix parse_csv(const std::string& text, const std::string& source) {
  std::vector<std::vector<std::string>> rows = split_records(text, source);
  if (rows.empty()) throw InputError(source + ": no data");
  DataMatrix out;
  std::size_t first = 0;
  double tmp;
  for (const std::string& f : rows[0]) {
    if (!parse_number(f, tmp)) {
      first = 1;
      break;
    }
  }
  const std::size_t q = rows[0].size();
  if (first == 1) {
    for (const std::string& f : rows[0]) out.column_names.push_back(trim(f));
  } else {
    for (std::size_t j = 0; j < q; ++j) out.column_names.push_back("V" + std::to_string(j + 1));
  }
  const std::size_t n = rows.size() - first;
  if (n == 0) throw InputError(source + ": header but no data rows");
  out.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(q));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = rows[i + first];
    const std::size_t line = i + first + 1;
    if (r.size() != q) {
      throw InputError(source + ": row " + std::to_string(line) + " has " + std::to_string(r.size()) +
                       " fields, expected " + std::to_string(q));
    }
    for (std::size_t j = 0; j < q; ++j) {
      if (trim(r[j]).empty()) {
        throw InputError(source + ": missing value at row " + std::to_string(line) + ", column " +
                         std::to_string(j + 1) + " (" + out.column_names[j] + ")");
      }
      if (!parse_number(r[j], tmp) || !std::isfinite(tmp)) {
        throw InputError(source + ": invalid number '" + r[j] + "' at row " + std::to_string(line) + ", column " +
                         std::to_string(j + 1) + " (" + out.column_names[j] + ")");
      }
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tmp;
    }
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataMatrix read_csv(const std::string& path) { return parse_csv(read_text(path), path); }

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write file '" + path + "'");
  out << text;
  if (!out) throw InputError("write failed for '" + path + "'");
}

namespace {

std::string header_line(const std::vector<std::string>& header) {
  std::string s;
  for (std::size_t j = 0; j < header.size(); ++j) s += (j ? "," : "") + csv_field(header[j]);
  return s + "\n";
}

}  // namespace

void write_matrix_csv(const std::string& path, const MatrixXd& m, const std::vector<std::string>& header) {
  std::string s = header.empty() ? "" : header_line(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
    s += "\n";
  }
  write_text(path, s);
}

void write_mask_csv(const std::string& path, const MaskXb& m, const std::vector<std::string>& header) {
  std::string s = header.empty() ? "" : header_line(header);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) s += std::string(j ? "," : "") + (m(i, j) ? "1" : "0");
    s += "\n";
  }
  write_text(path, s);
}

namespace {

std::string json_scalar(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  throw InputError("config: unsupported JSON value " + v.dump());
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) return s.substr(1, s.size() - 2);
  return s;
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_str) {
      if (c == quote) in_str = false;
    } else if (c == '"' || c == '\'') {
      in_str = true;
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

}  // namespace

std::map<std::string, std::string> parse_kv_config(const std::string& text, bool json) {
  std::map<std::string, std::string> out;
  if (json) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config: JSON root must be an object");
    for (const auto& [key, v] : j.items()) {
      if (v.is_array()) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + json_scalar(v[i]);
        out[key] = s;
      } else {
        out[key] = json_scalar(v);
      }
    }
    return out;
  }
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(strip_comment(line));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key");
    if (!value.empty() && value.front() == '[') {
      if (value.back() != ']') throw InputError("config line " + std::to_string(lineno) + ": unterminated array");
      std::string inner = value.substr(1, value.size() - 2);
      std::string flat;
      int depth = 0;
      std::string cur;
      auto flush = [&] {
        const std::string t = unquote(trim(cur));
        if (!t.empty()) flat += (flat.empty() ? "" : ",") + t;
        cur.clear();
      };
      for (char c : inner) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
          flush();
        } else {
          cur += c;
        }
      }
      flush();
      value = flat;
    } else {
      value = unquote(value);
    }
    if (!section.empty()) key = section + "." + key;
    if (out.count(key)) throw InputError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    out[key] = value;
  }
  return out;
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return parse_kv_config(read_text(path), json);
}

}  // namespace bwdep

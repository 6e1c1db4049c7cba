#include "stbeta/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace stbeta::csv {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool in_quotes = false;
  bool was_quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      // Blanks around a quoted field are not part of it.
      if (trim(current).empty()) current.clear();
      in_quotes = true;
      was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(was_quoted ? current : trim(current));
      current.clear();
      was_quoted = false;
    } else if (!(was_quoted && (ch == ' ' || ch == '\t'))) {
      current.push_back(ch);
    }
  }
  if (in_quotes) {
    throw std::invalid_argument("unterminated quoted field");
  }
  fields.push_back(was_quoted ? current : trim(current));
  return fields;
}

std::string format_double(double value) {
  if (std::isnan(value)) {
    return "NA";
  }
  if (std::isinf(value)) {
    return value > 0 ? "Inf" : "-Inf";
  }
  char buffer[64];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

double parse_double(std::string_view field) {
  const std::string text = trim(field);
  if (text == "NA" || text == "nan") {
    return std::nan("");
  }
  if (text == "Inf" || text == "inf") {
    return HUGE_VAL;
  }
  if (text == "-Inf" || text == "-inf") {
    return -HUGE_VAL;
  }
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') {
    ++begin;
  }
  const auto result = std::from_chars(begin, end, value);
  if (text.empty() || result.ec != std::errc() || result.ptr != end) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return value;
}

long long parse_integer(std::string_view field) {
  const std::string text = trim(field);
  long long value = 0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || result.ec != std::errc() || result.ptr != text.data() + text.size()) {
    throw std::invalid_argument("not an integer: '" + text + "'");
  }
  return value;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') {
      out.push_back('"');
    }
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> read_lines(const std::string& path,
                                    std::vector<std::size_t>* line_numbers) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open '" + path + "'");
  }
  std::vector<std::string> lines;
  std::string line;
  bool first = true;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (first && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
      line.erase(0, 3);
    }
    first = false;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    const std::string content = trim(line);
    if (content.empty() || content.front() == '#') {
      continue;
    }
    lines.push_back(line);
    if (line_numbers) line_numbers->push_back(number);
  }
  return lines;
}

}  // namespace stbeta::csv

#include "fedsim/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fedsim/errors.hpp"

namespace fedsim::toml {

double Value::as_number() const {
  if (type == Type::integer) return static_cast<double>(integer);
  if (type == Type::floating) return floating;
  throw std::logic_error("as_number on a non-numeric toml value");
}

std::string type_name(Value::Type type) {
  switch (type) {
    case Value::Type::table: return "table";
    case Value::Type::table_array: return "array of tables";
    case Value::Type::string: return "string";
    case Value::Type::integer: return "integer";
    case Value::Type::floating: return "float";
    case Value::Type::boolean: return "boolean";
    case Value::Type::array: return "array";
  }
  return "?";
}

namespace {

struct Parser {
  const std::string& origin;
  std::string line;
  int line_no = 0;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + what);
  }

  void skip_ws() {
    while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
  }

  bool at_end_or_comment() {
    skip_ws();
    return pos >= line.size() || line[pos] == '#';
  }

  static bool is_bare_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  }

  std::string bare_key() {
    skip_ws();
    const std::size_t start = pos;
    while (pos < line.size() && is_bare_char(line[pos])) ++pos;
    if (pos == start) fail("expected a key");
    return line.substr(start, pos - start);
  }

  std::string quoted_string() {
    // pos is at the opening quote
    ++pos;
    std::string out;
    while (pos < line.size() && line[pos] != '"') {
      char c = line[pos];
      if (c == '\\') {
        ++pos;
        if (pos >= line.size()) fail("dangling escape in string");
        switch (line[pos]) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '\\': c = '\\'; break;
          case '"': c = '"'; break;
          default: fail(std::string("unsupported escape '\\") + line[pos] + "'");
        }
      }
      out.push_back(c);
      ++pos;
    }
    if (pos >= line.size()) fail("unterminated string");
    ++pos;  // closing quote
    return out;
  }

  Value scalar() {
    skip_ws();
    if (pos >= line.size()) fail("expected a value");
    Value v;
    v.line = line_no;
    const char c = line[pos];
    if (c == '"') {
      v.type = Value::Type::string;
      v.str = quoted_string();
      return v;
    }
    if (c == '[') {
      ++pos;
      v.type = Value::Type::array;
      skip_ws();
      if (pos < line.size() && line[pos] == ']') {
        ++pos;
        return v;
      }
      while (true) {
        v.array.push_back(scalar());
        skip_ws();
        if (pos < line.size() && line[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < line.size() && line[pos] == ']') {
          ++pos;
          return v;
        }
        fail("expected ',' or ']' in array");
      }
    }
    // bare token: boolean or number
    const std::size_t start = pos;
    while (pos < line.size() && line[pos] != ',' && line[pos] != ']' && line[pos] != '#' &&
           line[pos] != ' ' && line[pos] != '\t') {
      ++pos;
    }
    const std::string token = line.substr(start, pos - start);
    if (token == "true" || token == "false") {
      v.type = Value::Type::boolean;
      v.boolean = token == "true";
      return v;
    }
    // try integer first, then float
    {
      std::int64_t n = 0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), n);
      if (ec == std::errc() && p == token.data() + token.size()) {
        v.type = Value::Type::integer;
        v.integer = n;
        return v;
      }
    }
    {
      double d = 0.0;
      auto [p, ec] = std::from_chars(token.data(), token.data() + token.size(), d);
      if (ec == std::errc() && p == token.data() + token.size()) {
        v.type = Value::Type::floating;
        v.floating = d;
        return v;
      }
    }
    fail("cannot parse value '" + token + "'");
  }

  std::vector<std::string> header_path(bool& is_array) {
    // pos is at '['
    ++pos;
    is_array = pos < line.size() && line[pos] == '[';
    if (is_array) ++pos;
    std::vector<std::string> path;
    while (true) {
      path.push_back(bare_key());
      skip_ws();
      if (pos < line.size() && line[pos] == '.') {
        ++pos;
        continue;
      }
      break;
    }
    if (pos >= line.size() || line[pos] != ']') fail("expected ']' in table header");
    ++pos;
    if (is_array) {
      if (pos >= line.size() || line[pos] != ']') fail("expected ']]' in array-of-tables header");
      ++pos;
    }
    if (!at_end_or_comment()) fail("trailing characters after table header");
    if (path.empty()) fail("empty table header");
    return path;
  }
};

std::string join_path(const std::vector<std::string>& path) {
  std::string out;
  for (const std::string& part : path) {
    if (!out.empty()) out.push_back('.');
    out += part;
  }
  return out;
}

}  // namespace

Value parse_string(const std::string& text, const std::string& origin) {
  Value root;
  root.type = Value::Type::table;
  Value* current = &root;

  Parser p{origin};
  std::istringstream in(text);
  while (std::getline(in, p.line)) {
    ++p.line_no;
    if (!p.line.empty() && p.line.back() == '\r') p.line.pop_back();
    p.pos = 0;
    if (p.at_end_or_comment()) continue;

    if (p.line[p.pos] == '[') {
      bool is_array = false;
      const std::vector<std::string> path = p.header_path(is_array);
      Value* node = &root;
      for (std::size_t i = 0; i < path.size(); ++i) {
        const bool last = i + 1 == path.size();
        const std::string& part = path[i];
        auto it = node->table.find(part);
        if (it == node->table.end()) {
          Value fresh;
          fresh.line = p.line_no;
          fresh.type = (last && is_array) ? Value::Type::table_array : Value::Type::table;
          if (last && is_array) {
            Value elem;
            elem.type = Value::Type::table;
            elem.line = p.line_no;
            fresh.array.push_back(std::move(elem));
          }
          it = node->table.emplace(part, std::move(fresh)).first;
        } else if (last && is_array) {
          if (it->second.type != Value::Type::table_array) {
            p.fail("'" + join_path(path) + "' is already a " + type_name(it->second.type));
          }
          Value elem;
          elem.type = Value::Type::table;
          elem.line = p.line_no;
          it->second.array.push_back(std::move(elem));
        } else if (last && it->second.type == Value::Type::table) {
          // reopening a table; TOML proper forbids this, but the loader's
          // unknown-key pass catches actual mistakes, so allow it.
        } else if (!last && it->second.type == Value::Type::table_array) {
          // descend into the latest element below
        } else if (it->second.type != Value::Type::table &&
                   !(last && it->second.type == Value::Type::table_array)) {
          p.fail("'" + join_path(path) + "' is already a " + type_name(it->second.type));
        }
        Value& slot = it->second;
        if (slot.type == Value::Type::table_array) {
          node = &slot.array.back();
        } else {
          node = &slot;
        }
      }
      current = node;
      continue;
    }

    // key = value
    const std::string key = p.bare_key();
    p.skip_ws();
    if (p.pos >= p.line.size() || p.line[p.pos] != '=') p.fail("expected '=' after key '" + key + "'");
    ++p.pos;
    Value v = p.scalar();
    if (!p.at_end_or_comment()) p.fail("trailing characters after value for key '" + key + "'");
    if (current->table.count(key) != 0) p.fail("duplicate key '" + key + "'");
    current->table.emplace(key, std::move(v));
  }
  return root;
}

Value parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

}  // namespace fedsim::toml

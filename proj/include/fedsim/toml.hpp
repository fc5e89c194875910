#ifndef FEDSIM_TOML_HPP
#define FEDSIM_TOML_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace fedsim::toml {

// Minimal TOML subset used by the config loader: tables, arrays of tables,
// strings, integers, floats, booleans, and flat scalar arrays. Dotted table
// headers nest; dotted keys inside a table do not.
class Value {
 public:
  enum class Type { table, table_array, string, integer, floating, boolean, array };

  Type type = Type::table;
  int line = 0;  // 1-based source line, 0 when synthesized

  std::string str;
  std::int64_t integer = 0;
  double floating = 0.0;
  bool boolean = false;
  std::vector<Value> array;        // Type::array elements, Type::table_array tables
  std::map<std::string, Value> table;

  bool is_table() const { return type == Type::table; }
  // Numeric accessor: integers widen to double.
  double as_number() const;
};

// Parses TOML text; `origin` names the source in error messages.
// Throws ConfigError with line information on malformed input.
Value parse_string(const std::string& text, const std::string& origin);

Value parse_file(const std::string& path);

std::string type_name(Value::Type type);

}  // namespace fedsim::toml
#endif

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cosim {

/// One violated rule. `subject` names the offending entity (item id, record
/// key, config label), `field` the part of it, `rule` what went wrong.
struct Diagnostic {
  std::string subject;
  std::string field;
  std::string rule;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

using Diagnostics = std::vector<Diagnostic>;

inline std::string to_string(const Diagnostic& d) {
  return d.subject + ": " + d.field + ": " + d.rule;
}

inline std::ostream& operator<<(std::ostream& os, const Diagnostic& d) {
  return os << to_string(d);
}

}  // namespace cosim

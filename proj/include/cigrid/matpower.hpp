#pragma once

// MATPOWER-style case file subset: scalar assignments `mpc.name = <num>;`
// and matrix assignments `mpc.name = [ rows ];` with `%` comments.

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cigrid/errors.hpp"

namespace cigrid {

using Matrix = std::vector<std::vector<double>>;

// Column indices for the MATPOWER fields the model needs.
namespace col {
// bus
inline constexpr int BUS_I = 0, BUS_TYPE = 1, PD = 2;
// gen
inline constexpr int GEN_BUS = 0, GEN_STATUS = 7, PMAX = 8, PMIN = 9;
// branch
inline constexpr int F_BUS = 0, T_BUS = 1, BR_X = 3, RATE_A = 5, BR_STATUS = 10;
// gencost
inline constexpr int COST_MODEL = 0, NCOST = 3, C2 = 4, C1 = 5, C0 = 6;
}  // namespace col

inline constexpr int REF_BUS_TYPE = 3;

struct RawCase {
  double base_mva = 0.0;
  Matrix bus;
  Matrix gen;
  Matrix branch;
  Matrix gencost;

  bool operator==(const RawCase&) const = default;
};

namespace detail {

struct case_scanner {
  const std::string& text;
  std::size_t pos = 0;
  int line = 1, column = 1;

  explicit case_scanner(const std::string& t) : text(t) {}

  bool eof() const { return pos >= text.size(); }
  char peek() const { return text[pos]; }

  char advance() {
    char c = text[pos++];
    if (c == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
    return c;
  }

  // Skips spaces, tabs, `%` comments, and `...` continuations. Newlines are
  // significant inside matrices, so the caller decides whether to skip them.
  void skip_blanks(bool with_newlines) {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        while (!eof() && peek() != '\n') advance();
      } else if (c == '.' && pos + 2 < text.size() && text[pos + 1] == '.' &&
                 text[pos + 2] == '.') {
        while (!eof() && peek() != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        advance();
      } else if (c == '\n' && with_newlines) {
        advance();
      } else {
        break;
      }
    }
  }

  [[noreturn]] void error_here(errc code, const std::string& what) const {
    fail(code, what + " at line " + std::to_string(line) + ", column " +
                   std::to_string(column));
  }

  std::string identifier() {
    std::string out;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '.')) {
      out.push_back(advance());
    }
    return out;
  }

  double number() {
    std::size_t start = pos;
    if (!eof() && (peek() == '+' || peek() == '-')) advance();
    bool digits = false;
    while (!eof() && (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.')) {
      digits = digits || std::isdigit(static_cast<unsigned char>(peek()));
      advance();
    }
    if (!eof() && (peek() == 'e' || peek() == 'E')) {
      advance();
      if (!eof() && (peek() == '+' || peek() == '-')) advance();
      bool exp_digits = false;
      while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) {
        exp_digits = true;
        advance();
      }
      if (!exp_digits) error_here(errc::malformed_number, "truncated exponent");
    }
    if (!digits) error_here(errc::malformed_number, "expected numeric literal");
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data() + start, text.data() + pos, value);
    if (ec != std::errc() || ptr != text.data() + pos)
      error_here(errc::malformed_number, "bad numeric literal '" +
                                             text.substr(start, pos - start) + "'");
    return value;
  }
};

}  // namespace detail

/// Structural checks on a parsed case; parse_matpower_case calls this last.
inline void validate_raw_case(const RawCase& rc) {
  if (!(rc.base_mva > 0.0)) fail(errc::bad_base_mva, "baseMVA must be positive");
  std::set<long long> bus_ids;
  int ref_count = 0;
  for (const auto& row : rc.bus) {
    if (row.size() <= col::PD) fail(errc::syntax_error, "bus row too short");
    bus_ids.insert(static_cast<long long>(row[col::BUS_I]));
    if (static_cast<int>(row[col::BUS_TYPE]) == REF_BUS_TYPE) ++ref_count;
  }
  if (ref_count == 0) fail(errc::no_reference_bus, "no reference bus (type 3)");
  if (ref_count > 1)
    fail(errc::multiple_reference_buses, std::to_string(ref_count) + " reference buses");
  for (const auto& row : rc.gen) {
    if (row.size() <= col::PMAX) fail(errc::syntax_error, "gen row too short");
    long long b = static_cast<long long>(row[col::GEN_BUS]);
    if (!bus_ids.count(b))
      fail(errc::unknown_bus, "gen references unknown bus " + std::to_string(b));
  }
  for (const auto& row : rc.branch) {
    if (row.size() <= col::BR_STATUS) fail(errc::syntax_error, "branch row too short");
    long long f = static_cast<long long>(row[col::F_BUS]);
    long long t = static_cast<long long>(row[col::T_BUS]);
    if (!bus_ids.count(f))
      fail(errc::unknown_bus, "branch references unknown bus " + std::to_string(f));
    if (!bus_ids.count(t))
      fail(errc::unknown_bus, "branch references unknown bus " + std::to_string(t));
    bool in_service = row[col::BR_STATUS] != 0.0;
    if (in_service && row[col::BR_X] == 0.0)
      fail(errc::zero_reactance, "in-service branch " + std::to_string(f) + "-" +
                                     std::to_string(t) + " has zero reactance");
  }
  if (rc.gencost.size() != rc.gen.size())
    fail(errc::gencost_count_mismatch,
         "gencost has " + std::to_string(rc.gencost.size()) + " rows for " +
             std::to_string(rc.gen.size()) + " generators");
  for (const auto& row : rc.gencost) {
    if (row.size() <= col::C0) fail(errc::syntax_error, "gencost row too short");
    if (static_cast<int>(row[col::COST_MODEL]) != 2 || static_cast<int>(row[col::NCOST]) != 3)
      fail(errc::bad_gencost_model,
           "only polynomial gencost (model 2, 3 coefficients) is supported");
  }
}

inline RawCase parse_matpower_case(const std::string& text) {
  detail::case_scanner sc(text);
  RawCase rc;
  std::set<std::string> seen;

  while (true) {
    sc.skip_blanks(true);
    if (sc.eof()) break;
    char c = sc.peek();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string name = sc.identifier();
      sc.skip_blanks(true);
      if (sc.eof() || sc.peek() != '=') {
        // `function mpc = case39` style header or stray word; skip the line.
        while (!sc.eof() && sc.peek() != '\n') sc.advance();
        continue;
      }
      sc.advance();  // '='
      sc.skip_blanks(true);
      if (sc.eof()) sc.error_here(errc::syntax_error, "truncated assignment");
      if (sc.peek() == '[') {
        sc.advance();
        Matrix mat;
        std::vector<double> row;
        while (true) {
          sc.skip_blanks(false);
          if (sc.eof()) sc.error_here(errc::syntax_error, "unterminated matrix " + name);
          char d = sc.peek();
          if (d == ']') {
            sc.advance();
            if (!row.empty()) mat.push_back(std::move(row));
            break;
          }
          if (d == ';' || d == '\n') {
            sc.advance();
            if (!row.empty()) {
              mat.push_back(std::move(row));
              row.clear();
            }
            continue;
          }
          row.push_back(sc.number());
        }
        sc.skip_blanks(false);
        if (!sc.eof() && sc.peek() == ';') sc.advance();
        seen.insert(name);
        if (name == "mpc.bus") rc.bus = std::move(mat);
        else if (name == "mpc.gen") rc.gen = std::move(mat);
        else if (name == "mpc.branch") rc.branch = std::move(mat);
        else if (name == "mpc.gencost") rc.gencost = std::move(mat);
        // other matrices are parsed and ignored
      } else if (sc.peek() == '\'' || sc.peek() == '"') {
        // string assignment such as mpc.version = '2';
        char quote = sc.advance();
        while (!sc.eof() && sc.peek() != quote) sc.advance();
        if (sc.eof()) sc.error_here(errc::syntax_error, "unterminated string");
        sc.advance();
        sc.skip_blanks(false);
        if (!sc.eof() && sc.peek() == ';') sc.advance();
      } else {
        double v = sc.number();
        sc.skip_blanks(false);
        if (!sc.eof() && sc.peek() == ';') sc.advance();
        if (name == "mpc.baseMVA") {
          rc.base_mva = v;
          seen.insert(name);
        }
      }
    } else {
      sc.error_here(errc::syntax_error, std::string("unexpected character '") + c + "'");
    }
  }

  for (const char* required : {"mpc.baseMVA", "mpc.bus", "mpc.gen", "mpc.branch", "mpc.gencost"}) {
    if (!seen.count(required))
      fail(errc::missing_matrix,
           std::string("missing required matrix ") + (required + 4));
  }
  validate_raw_case(rc);
  return rc;
}

inline RawCase parse_matpower_case(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matpower_case(ss.str());
}

namespace detail {
inline std::string format_number(double v) {
  char buf[40];
  // shortest representation that round-trips
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double check = 0.0;
  std::sscanf(buf, "%lf", &check);
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    std::sscanf(shorter, "%lf", &check);
    if (check == v) return shorter;
  }
  return buf;
}

inline void write_matrix(std::ostream& os, const std::string& name, const Matrix& mat) {
  os << "mpc." << name << " = [\n";
  for (const auto& row : mat) {
    os << '\t';
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ' ';
      os << format_number(row[i]);
    }
    os << ";\n";
  }
  os << "];\n";
}
}  // namespace detail

/// Round-trip serialization: parse(serialize(rc)) == rc field-by-field.
inline std::string serialize_matpower_case(const RawCase& rc) {
  std::ostringstream os;
  os << "function mpc = case\n";
  os << "mpc.version = '2';\n";
  os << "mpc.baseMVA = " << detail::format_number(rc.base_mva) << ";\n";
  detail::write_matrix(os, "bus", rc.bus);
  detail::write_matrix(os, "gen", rc.gen);
  detail::write_matrix(os, "branch", rc.branch);
  detail::write_matrix(os, "gencost", rc.gencost);
  return os.str();
}

}  // namespace cigrid

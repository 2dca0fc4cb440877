#pragma once

// CPLEX LP text export of a MilpModel and a minimal reader for the subset
// the exporter writes (used to cross-check exports).

#include <cctype>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "milp_model.hpp"

namespace pinnmilp::milp {

inline std::string sanitize_lp_name(std::string_view raw) {
  std::string out;
  out.reserve(raw.size() + 1);
  for (char c : raw) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ? c : '_');
  if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front()))) out.insert(out.begin(), 'v');
  // 'e'/'E' followed by digits could be read as an exponent by some parsers.
  if ((out.front() == 'e' || out.front() == 'E') && out.size() > 1 &&
      std::isdigit(static_cast<unsigned char>(out[1]))) {
    out.insert(out.begin(), 'v');
  }
  return out;
}

namespace detail {

inline std::string lp_number(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::vector<std::string> unique_lp_names(const MilpModel& m) {
  std::vector<std::string> names;
  std::set<std::string> used;
  for (const auto& v : m.variables()) {
    std::string base = sanitize_lp_name(v.name);
    std::string name = base;
    for (int k = 1; used.count(name); ++k) name = base + "_" + std::to_string(k);
    used.insert(name);
    names.push_back(std::move(name));
  }
  return names;
}

inline void write_terms(std::ostream& out, const LinearExpr& e, const std::vector<std::string>& names,
                        bool with_constant) {
  const LinearExpr merged = e.merged();
  std::size_t on_line = 0;
  bool any = false;
  for (const auto& [v, c] : merged.terms) {
    out << (c < 0 ? " - " : " + ") << lp_number(std::abs(c)) << ' ' << names[v];
    any = true;
    if (++on_line == 8) {
      out << "\n   ";
      on_line = 0;
    }
  }
  if (with_constant && merged.constant != 0.0) {
    out << (merged.constant < 0 ? " - " : " + ") << lp_number(std::abs(merged.constant));
    any = true;
  }
  if (!any) out << " 0 " << names.front();
}

}  // namespace detail

/// CPLEX LP text with Minimize / Subject To / Bounds / Binaries / End.
inline std::string export_lp(const MilpModel& m, std::string_view title = "model") {
  if (m.num_variables() == 0) throw ModelError("export_lp: model has no variables");
  const auto names = detail::unique_lp_names(m);
  std::ostringstream out;
  out << "\\ " << sanitize_lp_name(title) << '\n';
  out << "Minimize\n obj:";
  detail::write_terms(out, m.objective(), names, true);
  out << "\nSubject To\n";
  std::set<std::string> row_names;
  for (const auto& c : m.constraints()) {
    std::string rn = sanitize_lp_name(c.name);
    for (int k = 1; row_names.count(rn); ++k) rn = sanitize_lp_name(c.name) + "_" + std::to_string(k);
    row_names.insert(rn);
    out << ' ' << rn << ':';
    LinearExpr lhs = c.expr;
    const double rhs = c.rhs - lhs.constant;
    lhs.constant = 0.0;
    detail::write_terms(out, lhs, names, false);
    switch (c.relation) {
      case Relation::LessEqual: out << " <= "; break;
      case Relation::GreaterEqual: out << " >= "; break;
      case Relation::Equal: out << " = "; break;
    }
    out << detail::lp_number(rhs) << '\n';
  }
  out << "Bounds\n";
  for (VarId v = 0; v < m.num_variables(); ++v) {
    const auto& var = m.variable(v);
    if (var.lower == var.upper) {
      out << ' ' << names[v] << " = " << detail::lp_number(var.lower) << '\n';
    } else {
      out << ' ' << detail::lp_number(var.lower) << " <= " << names[v] << " <= " << detail::lp_number(var.upper)
          << '\n';
    }
  }
  bool header = false;
  for (VarId v = 0; v < m.num_variables(); ++v) {
    if (!m.variable(v).is_binary) continue;
    if (!header) out << "Binaries\n";
    header = true;
    out << ' ' << names[v] << '\n';
  }
  out << "End\n";
  return out.str();
}

class LpParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<std::string> lp_tokens(const std::string& text) {
  std::vector<std::string> toks;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (c == '<' || c == '>' || c == '=') {
      std::string op(1, c);
      ++i;
      if (i < text.size() && (text[i] == '=' || text[i] == '<' || text[i] == '>')) op.push_back(text[i++]);
      if (op == "=<") op = "<=";
      if (op == "=>") op = ">=";
      toks.push_back(op);
    } else if (c == '+' || c == '-' || c == ':') {
      toks.emplace_back(1, c);
      ++i;
    } else {
      std::size_t j = i;
      // Numbers may carry exponents with signs (1e-05).
      const bool numeric = std::isdigit(static_cast<unsigned char>(c)) || c == '.';
      while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != ':' &&
             text[j] != '<' && text[j] != '>' && text[j] != '=' && text[j] != '\\') {
        if ((text[j] == '+' || text[j] == '-') &&
            !(numeric && j > i && (text[j - 1] == 'e' || text[j - 1] == 'E')))
          break;
        ++j;
      }
      toks.push_back(text.substr(i, j - i));
      i = j;
    }
  }
  return toks;
}

inline bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '.');
}

inline std::string lower_copy(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace detail

/// Reads the subset of LP format produced by export_lp. Every variable must
/// receive finite bounds in the Bounds section.
inline MilpModel parse_lp(const std::string& text) {
  using detail::is_number;
  const auto toks = detail::lp_tokens(text);
  enum class Section { None, Objective, Constraints, Bounds, Binaries, End };

  struct RawRow {
    std::string name;
    std::vector<std::pair<std::string, double>> terms;
    double constant = 0.0;
    std::string op;
    double rhs = 0.0;
  };
  RawRow objective;
  std::vector<RawRow> rows;
  std::map<std::string, std::pair<double, double>> bounds;
  std::vector<std::string> order;
  std::set<std::string> binaries;
  auto note_var = [&](const std::string& n) {
    if (!bounds.count(n)) {
      bounds[n] = {0.0, std::numeric_limits<double>::infinity()};
      order.push_back(n);
    }
  };

  // Parses "[name:] terms [op rhs]" starting at i.
  auto parse_row = [&](std::size_t& i, bool expect_op) {
    RawRow row;
    if (i + 1 < toks.size() && toks[i + 1] == ":") {
      row.name = toks[i];
      i += 2;
    }
    double sign = 1.0;
    while (i < toks.size()) {
      const std::string& t = toks[i];
      if (t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">") break;
      if (!expect_op && i + 1 < toks.size() && toks[i + 1] == ":") break;
      const std::string lt = detail::lower_copy(t);
      if (lt == "subject" || lt == "st" || lt == "s.t." || lt == "bounds" || lt == "binaries" || lt == "binary" ||
          lt == "end" || lt == "generals")
        break;
      if (t == "+") {
        ++i;
        continue;
      }
      if (t == "-") {
        sign = -sign;
        ++i;
        continue;
      }
      if (is_number(t)) {
        const double coef = sign * std::strtod(t.c_str(), nullptr);
        if (i + 1 < toks.size() && !is_number(toks[i + 1]) && toks[i + 1] != "+" && toks[i + 1] != "-" &&
            toks[i + 1] != "<=" && toks[i + 1] != ">=" && toks[i + 1] != "=" &&
            !(i + 2 < toks.size() && toks[i + 2] == ":") && detail::lower_copy(toks[i + 1]) != "subject" &&
            detail::lower_copy(toks[i + 1]) != "end" && detail::lower_copy(toks[i + 1]) != "bounds") {
          row.terms.emplace_back(toks[i + 1], coef);
          i += 2;
        } else {
          row.constant += coef;
          ++i;
        }
      } else {
        row.terms.emplace_back(t, sign);
        ++i;
      }
      sign = 1.0;
    }
    if (expect_op) {
      if (i >= toks.size()) throw LpParseError("LP: constraint without relation");
      row.op = toks[i++];
      double rsign = 1.0;
      if (i < toks.size() && (toks[i] == "-" || toks[i] == "+")) rsign = toks[i++] == "-" ? -1.0 : 1.0;
      if (i >= toks.size() || !is_number(toks[i])) throw LpParseError("LP: bad right-hand side");
      row.rhs = rsign * std::strtod(toks[i++].c_str(), nullptr);
    }
    return row;
  };

  auto signed_number = [&](std::size_t& i) {
    double s = 1.0;
    if (toks[i] == "-" || toks[i] == "+") s = toks[i++] == "-" ? -1.0 : 1.0;
    const std::string lt = detail::lower_copy(toks[i]);
    if (lt == "inf" || lt == "infinity") {
      ++i;
      return s * std::numeric_limits<double>::infinity();
    }
    if (!is_number(toks[i])) throw LpParseError("LP: expected number, got " + toks[i]);
    return s * std::strtod(toks[i++].c_str(), nullptr);
  };

  Section sec = Section::None;
  std::size_t i = 0;
  while (i < toks.size() && sec != Section::End) {
    const std::string lt = detail::lower_copy(toks[i]);
    if (lt == "minimize" || lt == "minimum" || lt == "min") {
      sec = Section::Objective;
      ++i;
      objective = parse_row(i, false);
      continue;
    }
    if (lt == "maximize" || lt == "max") throw LpParseError("LP: only minimization is supported");
    if (lt == "subject" && i + 1 < toks.size() && detail::lower_copy(toks[i + 1]) == "to") {
      sec = Section::Constraints;
      i += 2;
      continue;
    }
    if (lt == "st" || lt == "s.t.") {
      sec = Section::Constraints;
      ++i;
      continue;
    }
    if (lt == "bounds") {
      sec = Section::Bounds;
      ++i;
      continue;
    }
    if (lt == "binaries" || lt == "binary" || lt == "bin") {
      sec = Section::Binaries;
      ++i;
      continue;
    }
    if (lt == "end") {
      sec = Section::End;
      break;
    }
    switch (sec) {
      case Section::Constraints: rows.push_back(parse_row(i, true)); break;
      case Section::Bounds: {
        // "l <= x <= u" | "x = v" | "x >= l" | "x <= u" | "x free"
        if (is_number(toks[i]) || toks[i] == "-" || toks[i] == "+") {
          const double lo = signed_number(i);
          if (toks[i] != "<=") throw LpParseError("LP: malformed bound");
          ++i;
          const std::string name = toks[i++];
          note_var(name);
          bounds[name].first = lo;
          if (i < toks.size() && toks[i] == "<=") {
            ++i;
            bounds[name].second = signed_number(i);
          }
        } else {
          const std::string name = toks[i++];
          note_var(name);
          if (i < toks.size() && detail::lower_copy(toks[i]) == "free") {
            ++i;
            bounds[name] = {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
          } else {
            const std::string op = toks[i++];
            const double v = signed_number(i);
            if (op == "=") bounds[name] = {v, v};
            else if (op == "<=") bounds[name].second = v;
            else if (op == ">=") bounds[name].first = v;
            else throw LpParseError("LP: malformed bound");
          }
        }
        break;
      }
      case Section::Binaries:
        note_var(toks[i]);
        binaries.insert(toks[i]);
        ++i;
        break;
      default: throw LpParseError("LP: unexpected token " + toks[i]);
    }
  }
  if (sec != Section::End) throw LpParseError("LP: missing End");

  for (const auto& [n, c] : objective.terms) note_var(n);
  for (const auto& r : rows)
    for (const auto& [n, c] : r.terms) note_var(n);

  MilpModel m;
  std::map<std::string, VarId> ids;
  for (const auto& n : order) {
    auto [lo, hi] = bounds[n];
    const bool bin = binaries.count(n) > 0;
    if (bin && !bounds.count(n)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (bin) hi = std::min(hi, 1.0);
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw LpParseError("LP: variable " + n + " lacks finite bounds");
    ids[n] = m.add_variable(n, lo, hi, bin);
  }
  auto to_expr = [&](const RawRow& r) {
    LinearExpr e(r.constant);
    for (const auto& [n, c] : r.terms) e.add(ids.at(n), c);
    return e;
  };
  LinearExpr obj = to_expr(objective);
  m.set_objective(obj);
  for (const auto& r : rows) {
    const Relation rel = r.op == "=" ? Relation::Equal : (r.op[0] == '<' ? Relation::LessEqual : Relation::GreaterEqual);
    m.add_constraint(to_expr(r), rel, r.rhs, r.name);
  }
  return m;
}

}  // namespace pinnmilp::milp

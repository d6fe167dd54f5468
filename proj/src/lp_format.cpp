// CPLEX LP text format. Variables and rows are written with sanitized names
// (characters outside [A-Za-z0-9_.] become '_', and an index suffix keeps them
// unique); objective constants are written as a comment line.

#include <cmath>
#include <ostream>

#include "elmarket/lp.hpp"

namespace elmarket::lp {

namespace {

std::string sanitize(const std::string& name, const char* prefix, int index) {
  std::string out = prefix;
  out += std::to_string(index);
  if (!name.empty()) out += '_';
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '.';
    out += ok ? c : '_';
  }
  return out;
}

void write_terms(std::ostream& out, const std::vector<Term>& terms,
                 const std::vector<std::string>& names) {
  bool first = true;
  int on_line = 0;
  for (const auto& t : terms) {
    if (t.coef == 0.0) continue;
    out << (t.coef < 0.0 ? " - " : (first ? " " : " + ")) << std::abs(t.coef) << ' '
        << names[static_cast<std::size_t>(t.var)];
    first = false;
    if (++on_line % 8 == 0) out << "\n   ";
  }
}

}  // namespace

void write_lp_format(const LinearProgram& lp, std::ostream& out, const std::string& title) {
  out.precision(17);
  std::vector<std::string> names;
  for (int j = 0; j < lp.num_variables(); ++j) names.push_back(sanitize(lp.variable(j).name, "x", j));
  if (!title.empty()) out << "\\ " << title << '\n';
  if (lp.objective_constant() != 0.0) out << "\\ objective constant " << lp.objective_constant() << '\n';
  out << (lp.sense() == Sense::maximize ? "Maximize\n" : "Minimize\n") << " obj:";
  std::vector<Term> obj;
  for (int j = 0; j < lp.num_variables(); ++j) {
    if (lp.variable(j).objective != 0.0) obj.push_back({j, lp.variable(j).objective});
  }
  if (!obj.empty()) write_terms(out, obj, names);
  else if (!names.empty()) out << " 0 " << names.front();
  out << "\nSubject To\n";
  for (int i = 0; i < lp.num_constraints(); ++i) {
    const auto& r = lp.constraint(i);
    out << ' ' << sanitize(r.name, "c", i) << ':';
    bool nonzero = false;
    for (const auto& t : r.terms) nonzero = nonzero || t.coef != 0.0;
    if (nonzero) write_terms(out, r.terms, names);
    else if (!names.empty()) out << " 0 " << names.front();
    out << (r.relation == Relation::less_equal ? " <= " : r.relation == Relation::equal ? " = " : " >= ")
        << r.rhs << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < lp.num_variables(); ++j) {
    const auto& v = lp.variable(j);
    if (v.binary) continue;
    const bool lo_inf = !std::isfinite(v.lower);
    const bool up_inf = !std::isfinite(v.upper);
    if (lo_inf && up_inf) {
      out << ' ' << names[j] << " free\n";
    } else if (lo_inf) {
      out << " -inf <= " << names[j] << " <= " << v.upper << '\n';
    } else if (up_inf) {
      out << ' ' << names[j] << " >= " << v.lower << '\n';
    } else {
      out << ' ' << v.lower << " <= " << names[j] << " <= " << v.upper << '\n';
    }
  }
  bool header = false;
  for (int j = 0; j < lp.num_variables(); ++j) {
    if (!lp.variable(j).binary) continue;
    if (!header) out << "Binaries\n";
    header = true;
    out << ' ' << names[j] << '\n';
  }
  out << "End\n";
}

}  // namespace elmarket::lp

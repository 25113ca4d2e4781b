#include "regmod/problem_file.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace regmod {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Line {
  std::string_view text;  // trimmed
  std::size_t offset;     // byte offset of text within the file
};

std::vector<Line> split_lines(std::string_view text) {
  std::vector<Line> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view raw = text.substr(start, end - start);
    std::string_view t = trim(raw);
    const std::size_t lead = t.empty() ? 0 : static_cast<std::size_t>(t.data() - raw.data());
    if (!t.empty() && t.front() != '#') lines.push_back({t, start + lead});
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

int parse_int(std::string_view s, std::size_t offset, const char* what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(std::string("invalid integer for ") + what, offset);
  return v;
}

enum class Section { None, Ineq, Eq, Upper, Lower, Pcons };

}  // namespace

ProblemFile parse_problem(std::string_view text) {
  std::string name;
  int dp = -1;
  int dx = -1;
  bool have_header = false;
  Section section = Section::None;

  struct Pending {
    std::string_view rhs;
    std::size_t offset;
  };
  std::vector<Pending> ineq, eq, pcons;
  std::optional<Pending> upper, lower;

  for (const Line& line : split_lines(text)) {
    std::string_view t = line.text;
    if (t.front() == '[') {
      const std::size_t close = t.find(']');
      if (close == std::string_view::npos) throw ParseError("unterminated section header", line.offset);
      const std::string_view tag = t.substr(1, close - 1);
      std::string_view rest = trim(t.substr(close + 1));
      if (tag == "problem") {
        if (have_header) throw ParseError("duplicate [problem] section", line.offset);
        have_header = true;
        section = Section::None;
        while (!rest.empty()) {
          std::size_t sp = 0;
          while (sp < rest.size() && !std::isspace(static_cast<unsigned char>(rest[sp]))) ++sp;
          const std::string_view kv = rest.substr(0, sp);
          const std::size_t kv_off = line.offset + static_cast<std::size_t>(kv.data() - t.data());
          const std::size_t eqpos = kv.find('=');
          if (eqpos == std::string_view::npos) throw ParseError("expected key=value in [problem]", kv_off);
          const std::string_view key = kv.substr(0, eqpos);
          const std::string_view val = kv.substr(eqpos + 1);
          if (key == "name") {
            name = std::string(val);
          } else if (key == "dp") {
            dp = parse_int(val, kv_off, "dp");
          } else if (key == "dx") {
            dx = parse_int(val, kv_off, "dx");
          } else {
            throw ParseError("unknown [problem] key '" + std::string(key) + "'", kv_off);
          }
          rest = trim(rest.substr(sp));
        }
        continue;
      }
      if (!rest.empty()) throw ParseError("unexpected text after section header", line.offset);
      if (tag == "ineq") section = Section::Ineq;
      else if (tag == "eq") section = Section::Eq;
      else if (tag == "upper") section = Section::Upper;
      else if (tag == "lower") section = Section::Lower;
      else if (tag == "pcons") section = Section::Pcons;
      else throw ParseError("unknown section [" + std::string(tag) + "]", line.offset);
      continue;
    }

    const std::size_t eqpos = t.find('=');
    if (eqpos == std::string_view::npos) throw ParseError("expected '<label> = <expr>'", line.offset);
    const std::string_view label = trim(t.substr(0, eqpos));
    const std::string_view rhs = t.substr(eqpos + 1);
    const Pending pending{rhs, line.offset + eqpos + 1};

    auto numbered = [&](char prefix, std::vector<Pending>& list) {
      const std::string expected = std::string(1, prefix) + std::to_string(list.size() + 1);
      if (label != expected) {
        throw ParseError("expected label '" + expected + "', found '" + std::string(label) + "'", line.offset);
      }
      list.push_back(pending);
    };

    switch (section) {
      case Section::None: throw ParseError("constraint outside of a section", line.offset);
      case Section::Ineq: numbered('h', ineq); break;
      case Section::Eq: numbered('e', eq); break;
      case Section::Pcons: numbered('g', pcons); break;
      case Section::Upper:
        if (label != "G" || upper) throw ParseError("[upper] takes exactly one 'G = <expr>'", line.offset);
        upper = pending;
        break;
      case Section::Lower:
        if (label != "f" || lower) throw ParseError("[lower] takes exactly one 'f = <expr>'", line.offset);
        lower = pending;
        break;
    }
  }

  if (!have_header) throw ParseError("missing [problem] section", 0);
  if (dp < 0 || dx < 1) throw ParseError("[problem] needs dp >= 0 and dx >= 1", 0);

  ProblemFile out;
  auto parse_expr = [&](const Pending& pd, const std::string& label) {
    try {
      Expr e = Expr::parse(pd.rhs, dp, dx);
      if (e.abs_on_x()) out.warnings.push_back(label + ": abs(...) applied to an x-dependent term (nonsmooth in x)");
      return e;
    } catch (const ParseError& err) {
      throw ParseError(label + ": " + err.what(), pd.offset + err.offset());
    }
  };

  std::vector<Expr> ineq_e, eq_e;
  for (std::size_t i = 0; i < ineq.size(); ++i) ineq_e.push_back(parse_expr(ineq[i], "h" + std::to_string(i + 1)));
  for (std::size_t i = 0; i < eq.size(); ++i) eq_e.push_back(parse_expr(eq[i], "e" + std::to_string(i + 1)));
  out.system = ParametricSystem(name, dp, dx, std::move(ineq_e), std::move(eq_e));
  if (upper) out.upper = parse_expr(*upper, "G");
  if (lower) out.lower = parse_expr(*lower, "f");
  for (std::size_t j = 0; j < pcons.size(); ++j) {
    Expr g = parse_expr(pcons[j], "g" + std::to_string(j + 1));
    if (g.depends_on_x()) throw ParseError("g" + std::to_string(j + 1) + " must depend on p only", pcons[j].offset);
    out.pcons.push_back(std::move(g));
  }
  if (upper.has_value() != lower.has_value()) {
    throw ParseError("bilevel problems need both [upper] and [lower]", 0);
  }
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ProblemFile load_problem(const std::string& path) { return parse_problem(read_text_file(path)); }

std::string normalize_problem_text(std::string_view text) {
  std::string out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view t = trim(text.substr(start, end - start));
    if (!t.empty()) {
      bool in_space = false;
      for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
          in_space = true;
        } else {
          if (in_space) out.push_back(' ');
          in_space = false;
          out.push_back(c);
        }
      }
      out.push_back('\n');
    }
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

}  // namespace regmod

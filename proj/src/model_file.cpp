#include "mfg/model_file.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace mfg {

namespace {

struct Line {
  int number = 0;        // 1-based
  std::string text;      // comment-stripped, right-trimmed
};

struct Section {
  std::string name;
  int header_line = 0;
  std::vector<Line> lines;
};

std::string strip_comment(const std::string& raw) {
  auto pos = raw.find('#');
  std::string s = pos == std::string::npos ? raw : raw.substr(0, pos);
  while (!s.empty() &&
         std::isspace(static_cast<unsigned char>(s.back())))
    s.pop_back();
  return s;
}

int first_nonspace(const std::string& s) {
  int i = 0;
  while (i < static_cast<int>(s.size()) &&
         std::isspace(static_cast<unsigned char>(s[i])))
    ++i;
  return i;
}

std::vector<Section> split_sections(const std::string& text) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string s = strip_comment(raw);
    int start = first_nonspace(s);
    if (start == static_cast<int>(s.size())) continue;  // blank
    if (s[start] == '[') {
      auto close = s.find(']', start);
      if (close == std::string::npos)
        throw ParseError(line_no, start + 1, "unterminated section header");
      std::string name = s.substr(start + 1, close - start - 1);
      std::string rest = s.substr(close + 1);
      if (first_nonspace(rest) != static_cast<int>(rest.size()))
        throw ParseError(line_no, static_cast<int>(close) + 2,
                         "unexpected text after section header");
      for (const Section& prior : sections)
        if (prior.name == name)
          throw ParseError(line_no, start + 1,
                           "duplicate section [" + name + "] (first at line " +
                               std::to_string(prior.header_line) + ")");
      sections.push_back(Section{name, line_no, {}});
    } else {
      if (sections.empty())
        throw ParseError(line_no, start + 1,
                         "content before the first section header");
      sections.back().lines.push_back(Line{line_no, s});
    }
  }
  return sections;
}

// "key = value" splitter; returns the value substring and its column.
std::pair<std::string, int> split_key_value(const Line& line,
                                            const std::string& key) {
  int i = first_nonspace(line.text);
  auto eq = line.text.find('=');
  if (eq == std::string::npos)
    throw ParseError(line.number, i + 1,
                     "expected '" + key + " = ...'");
  return {line.text.substr(eq + 1), static_cast<int>(eq) + 2};
}

std::string trim(const std::string& s) {
  int a = first_nonspace(s);
  int b = static_cast<int>(s.size());
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_number(const std::string& text, int line, int col) {
  std::string t = trim(text);
  if (t.empty()) throw ParseError(line, col, "expected a number");
  char* end = nullptr;
  double v = std::strtod(t.c_str(), &end);
  if (end == t.c_str() || *end != '\0' || !std::isfinite(v))
    throw ParseError(line, col, "malformed number '" + t + "'");
  return v;
}

long parse_int(const std::string& text, int line, int col) {
  std::string t = trim(text);
  char* end = nullptr;
  long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end == t.c_str() || *end != '\0')
    throw ParseError(line, col, "malformed integer '" + t + "'");
  return v;
}

std::vector<double> parse_number_list(const Line& line, int col0) {
  std::vector<double> out;
  const std::string& s = line.text;
  int i = col0 - 1;
  while (i < static_cast<int>(s.size())) {
    while (i < static_cast<int>(s.size()) &&
           std::isspace(static_cast<unsigned char>(s[i])))
      ++i;
    if (i >= static_cast<int>(s.size())) break;
    int start = i;
    while (i < static_cast<int>(s.size()) &&
           !std::isspace(static_cast<unsigned char>(s[i])))
      ++i;
    out.push_back(
        parse_number(s.substr(start, i - start), line.number, start + 1));
  }
  return out;
}

int require_state_index(long v, int k, int line, int col,
                        const char* what) {
  if (v < 1 || v > k)
    throw ParseError(line, col,
                     std::string(what) + " " + std::to_string(v) +
                         " out of range 1.." + std::to_string(k));
  return static_cast<int>(v) - 1;
}

}  // namespace

ModelSpec parse_model_file(const std::string& text) {
  std::vector<Section> sections = split_sections(text);

  auto find = [&](const std::string& name) -> const Section* {
    for (const Section& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  };
  static const char* known[] = {"dimensions", "rates",    "control",
                                "cost",       "terminal", "labels"};
  for (const Section& s : sections) {
    bool ok = false;
    for (const char* name : known) ok = ok || s.name == name;
    if (!ok)
      throw ParseError(s.header_line, 1, "unknown section [" + s.name + "]");
  }
  for (const char* name : {"dimensions", "rates", "control", "cost",
                           "terminal"}) {
    if (!find(name))
      throw ParseError(1, 1,
                       "missing required section [" + std::string(name) + "]");
  }

  // [dimensions] first: everything else needs k.
  int k = 0;
  double horizon = 0.0, nu_max = -1.0;
  {
    const Section& dims = *find("dimensions");
    bool saw_k = false, saw_t = false, saw_nu = false;
    for (const Line& line : dims.lines) {
      int i = first_nonspace(line.text);
      auto [value, col] = split_key_value(line, "k|T|nu_max");
      std::string key =
          trim(line.text.substr(i, line.text.find('=') - i));
      if (key == "k") {
        if (saw_k) throw ParseError(line.number, i + 1, "duplicate key 'k'");
        long v = parse_int(value, line.number, col);
        if (v < 2)
          throw ParseError(line.number, col, "k must be at least 2");
        k = static_cast<int>(v);
        saw_k = true;
      } else if (key == "T") {
        if (saw_t) throw ParseError(line.number, i + 1, "duplicate key 'T'");
        horizon = parse_number(value, line.number, col);
        if (!(horizon > 0.0))
          throw ParseError(line.number, col, "T must be positive");
        saw_t = true;
      } else if (key == "nu_max") {
        if (saw_nu)
          throw ParseError(line.number, i + 1, "duplicate key 'nu_max'");
        nu_max = parse_number(value, line.number, col);
        if (nu_max < 0.0)
          throw ParseError(line.number, col, "nu_max must be >= 0");
        saw_nu = true;
      } else {
        throw ParseError(line.number, i + 1,
                         "unknown key '" + key +
                             "' in [dimensions] (expected k, T, nu_max)");
      }
    }
    if (!saw_k)
      throw ParseError(dims.header_line, 1, "[dimensions] must set k");
    if (!saw_t)
      throw ParseError(dims.header_line, 1, "[dimensions] must set T");
    if (!saw_nu)
      throw ParseError(dims.header_line, 1,
                       "[dimensions] must declare nu_max (Hypothesis A "
                       "requires a bounded kernel)");
  }

  ModelSpec spec;
  spec.k = k;
  spec.horizon = horizon;
  spec.rates = RateKernel::zero(k);
  spec.rates.nu_max = nu_max;
  spec.cost = CostSpec::zero(k);

  {
    const Section& rates = *find("rates");
    std::map<std::pair<int, int>, int> seen;
    for (const Line& line : rates.lines) {
      // I -> J : EXPR
      const std::string& s = line.text;
      int i = first_nonspace(s);
      auto arrow = s.find("->");
      auto colon = s.find(':');
      if (arrow == std::string::npos || colon == std::string::npos ||
          colon < arrow)
        throw ParseError(line.number, i + 1,
                         "expected 'i -> j : expression'");
      long from = parse_int(s.substr(i, arrow - i), line.number, i + 1);
      long to = parse_int(s.substr(arrow + 2, colon - arrow - 2), line.number,
                          static_cast<int>(arrow) + 3);
      int fi = require_state_index(from, k, line.number, i + 1, "state");
      int ti = require_state_index(to, k, line.number,
                                   static_cast<int>(arrow) + 3, "state");
      if (fi == ti)
        throw ParseError(line.number, i + 1,
                         "diagonal rate entries are derived, not declared");
      auto key = std::make_pair(fi, ti);
      if (seen.count(key))
        throw ParseError(line.number, i + 1,
                         "duplicate rate entry (first at line " +
                             std::to_string(seen[key]) + ")");
      seen[key] = line.number;
      spec.rates.entry(fi, ti) = parse_expression(
          s.substr(colon + 1), k, line.number, static_cast<int>(colon) + 2);
    }
  }

  {
    const Section& control = *find("control");
    std::optional<std::vector<double>> lower, upper;
    for (const Line& line : control.lines) {
      int i = first_nonspace(line.text);
      auto [value, col] = split_key_value(line, "lower|upper");
      std::string key = trim(line.text.substr(i, line.text.find('=') - i));
      Line value_line{line.number, std::string(col - 1, ' ') + value};
      std::vector<double> nums = parse_number_list(value_line, col);
      if (static_cast<int>(nums.size()) != k)
        throw ParseError(line.number, col,
                         "expected " + std::to_string(k) + " numbers, found " +
                             std::to_string(nums.size()));
      if (key == "lower") {
        if (lower) throw ParseError(line.number, i + 1, "duplicate 'lower'");
        lower = std::move(nums);
      } else if (key == "upper") {
        if (upper) throw ParseError(line.number, i + 1, "duplicate 'upper'");
        upper = std::move(nums);
      } else {
        throw ParseError(line.number, i + 1,
                         "unknown key '" + key +
                             "' in [control] (expected lower, upper)");
      }
    }
    if (!lower || !upper)
      throw ParseError(control.header_line, 1,
                       "[control] must set both lower and upper");
    spec.control.lower = Eigen::Map<Vec>(lower->data(), k);
    spec.control.upper = Eigen::Map<Vec>(upper->data(), k);
  }

  {
    const Section& cost = *find("cost");
    std::map<std::pair<int, int>, int> seen;
    for (const Line& line : cost.lines) {
      // J[j][l] = EXPR
      const std::string& s = line.text;
      int i = first_nonspace(s);
      if (s.compare(i, 2, "J[") != 0)
        throw ParseError(line.number, i + 1, "expected 'J[j][l] = expression'");
      auto b1 = s.find(']', i);
      if (b1 == std::string::npos || s.compare(b1, 2, "][") != 0)
        throw ParseError(line.number, i + 1, "expected 'J[j][l] = expression'");
      auto b2 = s.find(']', b1 + 2);
      auto eq = s.find('=', b2 == std::string::npos ? i : b2);
      if (b2 == std::string::npos || eq == std::string::npos)
        throw ParseError(line.number, i + 1, "expected 'J[j][l] = expression'");
      long j = parse_int(s.substr(i + 2, b1 - i - 2), line.number, i + 3);
      long l = parse_int(s.substr(b1 + 2, b2 - b1 - 2), line.number,
                         static_cast<int>(b1) + 3);
      int ji = require_state_index(j, k, line.number, i + 3, "cost row");
      int li = require_state_index(l, k, line.number,
                                   static_cast<int>(b1) + 3, "cost column");
      auto key = std::make_pair(ji, li);
      if (seen.count(key))
        throw ParseError(line.number, i + 1,
                         "duplicate cost entry (first at line " +
                             std::to_string(seen[key]) + ")");
      seen[key] = line.number;
      spec.cost.entry(ji, li) = parse_expression(
          s.substr(eq + 1), k, line.number, static_cast<int>(eq) + 2);
    }
  }

  {
    const Section& terminal = *find("terminal");
    std::vector<double> values;
    for (const Line& line : terminal.lines) {
      std::vector<double> nums = parse_number_list(line, 1);
      values.insert(values.end(), nums.begin(), nums.end());
      if (static_cast<int>(values.size()) > k)
        throw ParseError(line.number, 1,
                         "[terminal] lists more than k = " +
                             std::to_string(k) + " numbers");
    }
    if (static_cast<int>(values.size()) != k)
      throw ParseError(terminal.header_line, 1,
                       "[terminal] must list exactly k = " +
                           std::to_string(k) + " numbers");
    spec.terminal = Eigen::Map<Vec>(values.data(), k);
  }

  if (const Section* labels = find("labels")) {
    spec.labels.assign(k, "");
    std::vector<bool> seen(k, false);
    for (const Line& line : labels->lines) {
      int i = first_nonspace(line.text);
      auto eq = line.text.find('=');
      if (eq == std::string::npos)
        throw ParseError(line.number, i + 1, "expected 'state = name'");
      long idx = parse_int(line.text.substr(i, eq - i), line.number, i + 1);
      int si = require_state_index(idx, k, line.number, i + 1, "state");
      if (seen[si])
        throw ParseError(line.number, i + 1, "duplicate label for state " +
                                                 std::to_string(idx));
      seen[si] = true;
      spec.labels[si] = trim(line.text.substr(eq + 1));
    }
    for (int s = 0; s < k; ++s)
      if (!seen[s])
        throw ParseError(labels->header_line, 1,
                         "[labels] must name all k states or be absent");
  }

  spec.check_structure();
  return spec;
}

ModelSpec load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError("cannot open model file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model_file(buf.str());
}

std::string model_digest(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ULL;  // FNV-1a offset basis
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace mfg

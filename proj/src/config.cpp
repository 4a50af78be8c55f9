#include "steady_deform/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace sdeform {

namespace {

// ---------------------------------------------------------------- expressions

struct Token {
  enum Kind { number, ident, symbol, end } kind = end;
  double num = 0.0;
  std::string text;
};

std::vector<Token> tokenize(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char ch = s[i];
    if (std::isspace(static_cast<unsigned char>(ch))) {
      ++i;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s.substr(i), &used);
      } catch (const std::exception&) {
        throw ConfigError("malformed number at position " + std::to_string(i));
      }
      out.push_back({Token::number, v, s.substr(i, used)});
      i += used;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      std::size_t j = i;
      while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({Token::ident, 0.0, s.substr(i, j - i)});
      i = j;
      continue;
    }
    if (std::string("+-*/^()").find(ch) != std::string::npos) {
      out.push_back({Token::symbol, 0.0, std::string(1, ch)});
      ++i;
      continue;
    }
    throw ConfigError(std::string("unexpected character '") + ch + "'");
  }
  out.push_back({Token::end, 0.0, ""});
  return out;
}

class ExprParser {
 public:
  ExprParser(const std::string& text, const std::string& allowed) : toks_(tokenize(text)), allowed_(allowed) {}

  std::vector<Expression::Term> parse() {
    std::vector<Expression::Term> terms;
    double sign = 1.0;
    if (is_symbol("+") || is_symbol("-")) sign = take().text == "-" ? -1.0 : 1.0;
    while (true) {
      Expression::Term t = term();
      t.coef *= sign;
      terms.push_back(std::move(t));
      if (is_symbol("+") || is_symbol("-")) {
        sign = take().text == "-" ? -1.0 : 1.0;
        continue;
      }
      break;
    }
    if (peek().kind != Token::end) fail("unexpected '" + peek().text + "'");
    return terms;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }
  bool is_symbol(const char* s) const { return peek().kind == Token::symbol && peek().text == s; }
  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(what); }

  char variable(const std::string& name) const {
    char v = 0;
    if (name == "x" || name == "y" || name == "c") v = name[0];
    if (name == "r") v = 'y';
    if (!v) return 0;
    if (allowed_.find(v) == std::string::npos && !(name == "r" && allowed_.find('y') != std::string::npos))
      fail("variable '" + name + "' is not allowed here (allowed: " + allowed_ + ")");
    return v;
  }

  double number() {
    double v;
    if (peek().kind == Token::number)
      v = take().num;
    else if (peek().kind == Token::ident && peek().text == "pi") {
      take();
      v = kPi;
    } else
      fail("expected a number, got '" + peek().text + "'");
    return v;
  }

  Expression::Term term() {
    Expression::Term t;
    factor(t);
    while (true) {
      if (is_symbol("*")) {
        take();
        factor(t);
      } else if (is_symbol("/")) {
        take();
        const double d = number();
        if (d == 0.0) fail("division by zero");
        t.coef /= d;
      } else {
        break;
      }
    }
    return t;
  }

  void factor(Expression::Term& t) {
    const Token& tk = peek();
    if (tk.kind == Token::number || (tk.kind == Token::ident && tk.text == "pi")) {
      t.coef *= number();
      return;
    }
    if (tk.kind == Token::symbol && tk.text == "(") fail("parentheses are only allowed as trigonometric arguments");
    if (tk.kind != Token::ident) fail("unexpected '" + tk.text + "'");
    const std::string name = take().text;
    if (name == "cos" || name == "sin") {
      if (!is_symbol("(")) fail("expected '(' after " + name);
      take();
      Expression::Factor f;
      f.kind = name == "cos" ? Expression::Factor::cosine : Expression::Factor::sine;
      f.freq = 1.0;
      char var = 0;
      while (true) {
        if (peek().kind == Token::ident && peek().text != "pi") {
          if (var) fail("more than one variable inside " + name);
          var = variable(take().text);
          if (!var) fail("unknown name inside " + name);
        } else {
          f.freq *= number();
        }
        if (is_symbol("*")) {
          take();
          continue;
        }
        if (is_symbol("/")) {
          take();
          const double d = number();
          if (d == 0.0) fail("division by zero");
          f.freq /= d;
          if (is_symbol("*")) {
            take();
            continue;
          }
        }
        break;
      }
      if (!var) fail(name + " needs a variable argument");
      if (!is_symbol(")")) fail("expected ')' to close " + name);
      take();
      f.var = var;
      t.factors.push_back(f);
      return;
    }
    const char var = variable(name);
    if (!var) fail("unknown name '" + name + "'");
    Expression::Factor f;
    f.kind = Expression::Factor::power;
    f.var = var;
    f.exponent = 1;
    if (is_symbol("^")) {
      take();
      if (peek().kind != Token::number) fail("expected an integer exponent");
      const double e = take().num;
      if (e != std::floor(e) || e < 0 || e > 16) fail("exponents must be integers in 0..16");
      f.exponent = static_cast<int>(e);
    }
    t.factors.push_back(f);
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string allowed_;
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::string& allowed) {
  Expression e;
  try {
    e.terms_ = ExprParser(text, allowed).parse();
  } catch (const ConfigError& err) {
    throw ConfigError("expression \"" + text + "\": " + err.what());
  }
  e.text_ = text;
  return e;
}

Expression Expression::constant(double v) {
  Expression e;
  e.terms_.push_back(Term{v, {}});
  std::ostringstream os;
  os << std::setprecision(17) << v;
  e.text_ = os.str();
  return e;
}

double Expression::operator()(double x, double y, double c) const {
  double sum = 0.0;
  for (const Term& t : terms_) {
    double p = t.coef;
    for (const Factor& f : t.factors) {
      const double v = f.var == 'x' ? x : f.var == 'y' ? y : c;
      switch (f.kind) {
        case Factor::power: p *= std::pow(v, f.exponent); break;
        case Factor::cosine: p *= std::cos(f.freq * v); break;
        case Factor::sine: p *= std::sin(f.freq * v); break;
      }
    }
    sum += p;
  }
  return sum;
}

bool Expression::uses(char var) const {
  for (const Term& t : terms_)
    for (const Factor& f : t.factors)
      if (f.var == var) return true;
  return false;
}

// ---------------------------------------------------------------- table

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_str = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_str = !in_str;
    if (line[i] == '#' && !in_str) return line.substr(0, i);
  }
  return line;
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char ch : k)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '.')) return false;
  return k.front() != '.' && k.back() != '.';
}

double parse_number_literal(const std::string& s, int line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty())
    throw ConfigError("line " + std::to_string(line) + ": cannot parse value '" + s + "'");
  return v;
}

ConfigValue parse_value(const std::string& raw, int line) {
  const std::string s = trim(raw);
  if (s.empty()) throw ConfigError("line " + std::to_string(line) + ": missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"' || s.find('"', 1) != s.size() - 1)
      throw ConfigError("line " + std::to_string(line) + ": malformed string " + s);
    return s.substr(1, s.size() - 2);
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": unterminated array");
    std::vector<double> vals;
    const std::string body = trim(s.substr(1, s.size() - 2));
    if (!body.empty()) {
      std::stringstream ss(body);
      std::string item;
      while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        vals.push_back(parse_number_literal(item, line));
      }
    }
    return vals;
  }
  return parse_number_literal(s, line);
}

}  // namespace

ConfigTable parse_config_table(const std::string& text) {
  ConfigTable table;
  std::istringstream is(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("line " + std::to_string(line) + ": malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!valid_key(section)) throw ConfigError("line " + std::to_string(line) + ": invalid section name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line) + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    if (!valid_key(key)) throw ConfigError("line " + std::to_string(line) + ": invalid key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (table.count(full))
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + full + "' (first set on line " +
                        std::to_string(table.at(full).line) + ")");
    table[full] = ConfigEntry{parse_value(s.substr(eq + 1), line), line};
  }
  return table;
}

// ---------------------------------------------------------------- run config

namespace {

enum class Kind { number, integer, boolean, string, expr, array };

struct KeySpec {
  Kind kind;
  /// Models that accept the key; empty means all.
  std::vector<Model> models;
  /// Variables allowed in expressions.
  std::string vars;
};

const std::map<std::string, KeySpec>& key_specs() {
  static const std::map<std::string, KeySpec> specs = {
      {"model", {Kind::string, {}, ""}},
      {"out", {Kind::string, {}, ""}},
      {"grid.nx", {Kind::integer, {}, ""}},
      {"grid.ny", {Kind::integer, {}, ""}},
      {"grid.lx", {Kind::number, {}, ""}},
      {"grid.y_lo", {Kind::number, {}, ""}},
      {"grid.y_hi", {Kind::number, {}, ""}},
      {"base.v0", {Kind::expr, {Model::euler}, "y"}},
      {"base.psi0", {Kind::expr, {}, "y"}},
      {"base.theta0", {Kind::expr, {Model::boussinesq}, "c"}},
      {"base.c0", {Kind::expr, {Model::gs}, "c"}},
      {"base.pi0_prime", {Kind::expr, {Model::gs}, "c"}},
      {"base.lambda_override", {Kind::number, {}, ""}},
      {"target.theta", {Kind::expr, {Model::boussinesq}, "c"}},
      {"target.pi_prime", {Kind::expr, {Model::gs}, "c"}},
      {"boundary.bot_offset", {Kind::number, {}, ""}},
      {"boundary.top_offset", {Kind::number, {}, ""}},
      {"boundary.bot_cos", {Kind::array, {}, ""}},
      {"boundary.bot_sin", {Kind::array, {}, ""}},
      {"boundary.top_cos", {Kind::array, {}, ""}},
      {"boundary.top_sin", {Kind::array, {}, ""}},
      {"deform.rho", {Kind::expr, {}, "xy"}},
      {"deform.tol", {Kind::number, {}, ""}},
      {"deform.max_iters", {Kind::integer, {}, ""}},
      {"deform.dense_k", {Kind::boolean, {}, ""}},
      {"coefficients.a11", {Kind::expr, {}, "xy"}},
      {"coefficients.a12", {Kind::expr, {}, "xy"}},
      {"coefficients.a22", {Kind::expr, {}, "xy"}},
      {"coefficients.b1", {Kind::expr, {}, "xy"}},
      {"coefficients.b2", {Kind::expr, {}, "xy"}},
      {"sweep.parameter", {Kind::string, {}, ""}},
      {"sweep.values", {Kind::array, {}, ""}},
  };
  return specs;
}

// Short names accepted at top level.
const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> a = {
      {"nx", "grid.nx"},     {"ny", "grid.ny"},         {"lx", "grid.lx"},     {"y_lo", "grid.y_lo"},
      {"y_hi", "grid.y_hi"}, {"v0", "base.v0"},         {"psi0", "base.psi0"}, {"theta0", "base.theta0"},
      {"c0", "base.c0"},     {"rho", "deform.rho"},     {"tol", "deform.tol"}, {"max_iters", "deform.max_iters"},
  };
  return a;
}

std::string where(const std::string& key, int line) { return "config key '" + key + "' (line " + std::to_string(line) + ")"; }

double as_number(const std::string& key, const ConfigEntry& e) {
  if (const double* d = std::get_if<double>(&e.value)) return *d;
  if (const std::string* s = std::get_if<std::string>(&e.value)) {
    try {
      const Expression ex = Expression::parse(*s, "");
      return ex(0.0, 0.0, 0.0);
    } catch (const ConfigError& err) {
      throw ConfigError(where(key, e.line) + ": " + err.what());
    }
  }
  throw ConfigError(where(key, e.line) + ": expected a number");
}

}  // namespace

RunConfig config_from_table(const ConfigTable& input) {
  // resolve aliases
  ConfigTable table;
  for (const auto& [k, e] : input) {
    const auto al = aliases().find(k);
    const std::string full = al == aliases().end() ? k : al->second;
    if (table.count(full))
      throw ConfigError(where(k, e.line) + ": duplicates '" + full + "' set on line " +
                        std::to_string(table.at(full).line));
    table[full] = e;
  }
  for (const auto& [k, e] : table)
    if (!key_specs().count(k)) throw ConfigError("unknown " + where(k, e.line));

  RunConfig cfg;
  cfg.table = input;
  if (table.count("model")) {
    const auto& e = table.at("model");
    const std::string* s = std::get_if<std::string>(&e.value);
    if (!s) throw ConfigError(where("model", e.line) + ": expected a string");
    try {
      cfg.model = model_from_string(*s);
    } catch (const std::exception& err) {
      throw ConfigError(where("model", e.line) + ": " + err.what());
    }
  }
  if (cfg.model == Model::gs) {
    cfg.grid.y_lo = 0.5;
    cfg.grid.y_hi = 1.0;
  }

  for (const auto& [k, e] : table) {
    const KeySpec& spec = key_specs().at(k);
    if (!spec.models.empty() && std::find(spec.models.begin(), spec.models.end(), cfg.model) == spec.models.end())
      throw ConfigError(where(k, e.line) + ": not valid for model " + to_string(cfg.model));
    auto expr = [&]() {
      const std::string* s = std::get_if<std::string>(&e.value);
      if (const double* d = std::get_if<double>(&e.value)) return Expression::constant(*d);
      if (!s) throw ConfigError(where(k, e.line) + ": expected an expression string");
      try {
        return Expression::parse(*s, spec.vars);
      } catch (const ConfigError& err) {
        throw ConfigError(where(k, e.line) + ": " + err.what());
      }
    };
    auto integer = [&]() {
      const double v = as_number(k, e);
      if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(where(k, e.line) + ": expected an integer");
      return static_cast<int>(v);
    };
    auto array = [&]() {
      if (const auto* a = std::get_if<std::vector<double>>(&e.value)) return *a;
      throw ConfigError(where(k, e.line) + ": expected an array of numbers");
    };
    auto boolean = [&]() {
      if (const bool* b = std::get_if<bool>(&e.value)) return *b;
      throw ConfigError(where(k, e.line) + ": expected true or false");
    };
    auto string = [&]() {
      if (const auto* s = std::get_if<std::string>(&e.value)) return *s;
      throw ConfigError(where(k, e.line) + ": expected a string");
    };

    if (k == "model") continue;
    if (k == "out") cfg.out_dir = string();
    else if (k == "grid.nx") cfg.grid.nx = integer();
    else if (k == "grid.ny") cfg.grid.ny = integer();
    else if (k == "grid.lx") cfg.grid.lx = as_number(k, e);
    else if (k == "grid.y_lo") cfg.grid.y_lo = as_number(k, e);
    else if (k == "grid.y_hi") cfg.grid.y_hi = as_number(k, e);
    else if (k == "base.v0") cfg.v0 = expr();
    else if (k == "base.psi0") cfg.psi0 = expr();
    else if (k == "base.theta0") cfg.theta0 = expr();
    else if (k == "base.c0") cfg.c0 = expr();
    else if (k == "base.pi0_prime") cfg.pi0_prime = expr();
    else if (k == "base.lambda_override") cfg.lambda_override = as_number(k, e);
    else if (k == "target.theta") cfg.theta = expr();
    else if (k == "target.pi_prime") cfg.pi_prime = expr();
    else if (k == "boundary.bot_offset") cfg.boundary.bot.offset = as_number(k, e);
    else if (k == "boundary.top_offset") cfg.boundary.top.offset = as_number(k, e);
    else if (k == "boundary.bot_cos") cfg.boundary.bot.cos_amp = array();
    else if (k == "boundary.bot_sin") cfg.boundary.bot.sin_amp = array();
    else if (k == "boundary.top_cos") cfg.boundary.top.cos_amp = array();
    else if (k == "boundary.top_sin") cfg.boundary.top.sin_amp = array();
    else if (k == "deform.rho") cfg.rho = expr();
    else if (k == "deform.tol") cfg.tol_iter = as_number(k, e);
    else if (k == "deform.max_iters") cfg.max_iters = integer();
    else if (k == "deform.dense_k") cfg.dense_k = boolean();
    else if (k == "coefficients.a11") cfg.coeffs[0] = expr();
    else if (k == "coefficients.a12") cfg.coeffs[1] = expr();
    else if (k == "coefficients.a22") cfg.coeffs[2] = expr();
    else if (k == "coefficients.b1") cfg.coeffs[3] = expr();
    else if (k == "coefficients.b2") cfg.coeffs[4] = expr();
    else if (k == "sweep.parameter") cfg.sweep_parameter = string();
    else if (k == "sweep.values") cfg.sweep_values = array();
  }

  auto line_of = [&](const std::string& k) { return table.count(k) ? table.at(k).line : 0; };
  try {
    cfg.grid.validate();
  } catch (const std::exception& err) {
    throw ConfigError(std::string("grid: ") + err.what());
  }
  if (!(cfg.tol_iter > 0.0)) throw ConfigError(where("deform.tol", line_of("deform.tol")) + ": must be positive");
  if (cfg.max_iters < 1)
    throw ConfigError(where("deform.max_iters", line_of("deform.max_iters")) + ": must be at least 1");
  if (cfg.v0 && cfg.psi0)
    throw ConfigError(where("base.psi0", line_of("base.psi0")) + ": give either base.v0 or base.psi0");
  if (cfg.model == Model::gs && cfg.pi0_prime && cfg.psi0)
    throw ConfigError(where("base.pi0_prime", line_of("base.pi0_prime")) + ": give either base.psi0 or base.pi0_prime");
  for (const auto* w : {&cfg.boundary.bot, &cfg.boundary.top}) {
    const double amp = std::abs(w->offset) +
                       [&] {
                         double s = 0.0;
                         for (double a : w->cos_amp) s += std::abs(a);
                         for (double a : w->sin_amp) s += std::abs(a);
                         return s;
                       }();
    if (!std::isfinite(amp)) throw ConfigError("boundary: amplitudes must be finite");
  }
  if (cfg.boundary.amplitude(cfg.grid) * 2.0 >= cfg.grid.y_hi - cfg.grid.y_lo)
    throw ConfigError("boundary: the perturbed walls may intersect");
  if (!cfg.sweep_parameter.empty() && !table.count("sweep.values"))
    throw ConfigError(where("sweep.parameter", line_of("sweep.parameter")) + ": sweep.values is missing");
  // rho must be periodic in x
  for (const auto& t : cfg.rho.terms())
    for (const auto& f : t.factors)
      if (f.var == 'x' && f.kind != Expression::Factor::power) {
        const double k = f.freq * cfg.grid.lx / (2.0 * kPi);
        if (std::abs(k - std::round(k)) > 1e-9)
          throw ConfigError(where("deform.rho", line_of("deform.rho")) + ": x-frequency " + std::to_string(f.freq) +
                            " is not periodic on lx");
      } else if (f.var == 'x') {
        throw ConfigError(where("deform.rho", line_of("deform.rho")) + ": powers of x are not periodic");
      }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) { return config_from_table(parse_config_table(text)); }

RunConfig parse_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig with_parameter(const RunConfig& cfg, const std::string& parameter, double value) {
  std::string key = parameter;
  int index = -1;
  const auto br = parameter.find('[');
  if (br != std::string::npos) {
    if (parameter.back() != ']') throw ConfigError("sweep parameter '" + parameter + "': malformed index");
    key = parameter.substr(0, br);
    try {
      index = std::stoi(parameter.substr(br + 1, parameter.size() - br - 2));
    } catch (const std::exception&) {
      throw ConfigError("sweep parameter '" + parameter + "': malformed index");
    }
    if (index < 0) throw ConfigError("sweep parameter '" + parameter + "': negative index");
  }
  const auto al = aliases().find(key);
  if (al != aliases().end()) key = al->second;
  const auto spec = key_specs().find(key);
  if (spec == key_specs().end()) throw ConfigError("sweep parameter '" + parameter + "' is not a config key");
  const Kind kind = spec->second.kind;
  if ((index >= 0) != (kind == Kind::array) || kind == Kind::boolean || kind == Kind::string)
    throw ConfigError("sweep parameter '" + parameter + "' is not a numeric leaf");

  ConfigTable table;
  // drop alias spellings of the key so the override is unambiguous
  for (const auto& [k, e] : cfg.table) {
    const auto a = aliases().find(k);
    const std::string full = a == aliases().end() ? k : a->second;
    table[full] = e;
  }
  ConfigEntry& e = table[key];
  if (kind == Kind::array) {
    std::vector<double> arr;
    if (const auto* a = std::get_if<std::vector<double>>(&e.value)) arr = *a;
    if (static_cast<std::size_t>(index) >= arr.size()) arr.resize(index + 1, 0.0);
    arr[index] = value;
    e.value = arr;
  } else {
    e.value = value;
  }
  return config_from_table(table);
}

// ---------------------------------------------------------------- construction

namespace {

Eigen::ArrayXd sample_y(const Expression& e, const GridSpec& g) {
  Eigen::ArrayXd out(g.ny);
  for (int j = 0; j < g.ny; ++j) out[j] = e(0.0, g.y(j), 0.0);
  return out;
}

Profile profile_on(const Eigen::ArrayXd& knots, const Expression& e) {
  return Profile::from_function(knots, [&](double c) { return e(0.0, 0.0, c); });
}

}  // namespace

BaseState make_base(const RunConfig& cfg) {
  const GridSpec& g = cfg.grid;
  BaseState st;
  switch (cfg.model) {
    case Model::euler:
      if (cfg.psi0)
        st = build_euler_base_from_psi(g, sample_y(*cfg.psi0, g));
      else
        st = build_euler_base(g, sample_y(cfg.v0 ? *cfg.v0 : Expression::constant(1.0), g));
      break;
    case Model::boussinesq: {
      const Eigen::ArrayXd psi0 = sample_y(cfg.psi0 ? *cfg.psi0 : Expression::parse("-y", "y"), g);
      const Expression th = cfg.theta0 ? *cfg.theta0 : Expression::parse("-c", "c");
      st = build_boussinesq_base(g, psi0, profile_on(psi0, th));
      break;
    }
    case Model::gs: {
      const Expression c0 = cfg.c0 ? *cfg.c0 : Expression::parse("c", "c");
      if (cfg.pi0_prime) {
        Eigen::ArrayXd knots = Eigen::ArrayXd::LinSpaced(g.ny, 0.0, 1.0);
        st = build_gs_base_from_profiles(g, profile_on(knots, *cfg.pi0_prime), profile_on(knots, c0), 0.0, 1.0);
      } else {
        const Eigen::ArrayXd psi0 = sample_y(cfg.psi0 ? *cfg.psi0 : Expression::parse("4/3*y^2 - 1/3", "y"), g);
        st = build_gs_base(g, psi0, profile_on(psi0, c0));
      }
      break;
    }
  }
  if (cfg.lambda_override) st.op.lambda.setConstant(*cfg.lambda_override);
  return st;
}

PreparedDeform make_deform_config(const RunConfig& cfg, const BaseState& base,
                                  const std::function<void(const std::string&)>& log) {
  const GridSpec& g = cfg.grid;
  PreparedDeform out;
  DeformConfig& dc = out.cfg;
  dc.boundary = cfg.boundary;
  dc.tol_iter = cfg.tol_iter;
  dc.max_iters = cfg.max_iters;
  dc.dense_k = cfg.dense_k;
  ScalarField rho = ScalarField::sample(g, [&](double x, double y) { return cfg.rho(x, y); });
  if (!rho.all_finite() || rho.values().minCoeff() <= 0.0)
    throw ConfigError("deform.rho must be positive on the grid (minimum " + std::to_string(rho.values().minCoeff()) +
                      ")");
  const double vol = cfg.boundary.volume(g), mass = integrate(rho);
  out.rho_factor = vol / mass;
  rho *= out.rho_factor;
  if (std::abs(out.rho_factor - 1.0) > 1e-14 && log) {
    std::ostringstream msg;
    msg << std::setprecision(15) << "rho normalized by factor " << out.rho_factor << " (integral " << mass
        << ", volume " << vol << ")";
    log(msg.str());
  }
  dc.rho = rho;
  if (std::any_of(cfg.coeffs.begin(), cfg.coeffs.end(), [](const auto& c) { return c.has_value(); })) {
    const auto coeffs = cfg.coeffs;
    dc.coeffs.delta = [coeffs](double x, double y) {
      std::array<double, 5> d{};
      for (int m = 0; m < 5; ++m) d[m] = coeffs[m] ? (*coeffs[m])(x, y) : 0.0;
      return d;
    };
  }
  const Eigen::ArrayXd& knots = base.geo.psi0;
  if (cfg.model == Model::boussinesq && cfg.theta) {
    const Profile th = profile_on(knots, *cfg.theta);
    SeparableG G;
    G.terms.push_back({[](double y) { return y; }, th.derivative()});
    dc.G = G;
    out.theta = th;
  } else if (cfg.model == Model::boussinesq) {
    out.theta = base.Theta0;
  }
  if (cfg.model == Model::gs && cfg.pi_prime) {
    SeparableG G;
    G.terms.push_back({[](double r) { return -r * r; }, profile_on(knots, *cfg.pi_prime)});
    dc.G = G;
  }
  dc.validate();
  return out;
}

}  // namespace sdeform

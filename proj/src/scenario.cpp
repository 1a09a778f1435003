#include "hybrid/scenario.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "hybrid/errors.hpp"

namespace hybrid {
namespace {

namespace pt = boost::property_tree;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// "section.key" -> 1-based line, for diagnostics (ptree drops positions).
std::map<std::string, long> index_lines(std::string_view text) {
  std::map<std::string, long> out;
  std::string section;
  long line_no = 0;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == ';' || t[0] == '#') continue;
    if (t.front() == '[') {
      section = trim(std::string_view(t).substr(1, t.find(']') - 1));
      out.emplace(section, line_no);
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = trim(std::string_view(t).substr(0, eq));
    out.emplace(section.empty() ? key : section + "." + key, line_no);
  }
  return out;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string origin, std::map<std::string, long> lines)
      : tree_(tree), origin_(std::move(origin)), lines_(std::move(lines)) {}

  long line_of(const std::string& path) const {
    const auto it = lines_.find(path);
    return it == lines_.end() ? 0 : it->second;
  }

  [[noreturn]] void fail(const std::string& path, const std::string& what) const {
    throw ParseError(origin_, line_of(path), path + ": " + what);
  }

  std::optional<std::string> raw(const std::string& path) const {
    if (auto v = tree_.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return trim(*v);
    return std::nullopt;
  }

  std::optional<double> real(const std::string& path) const {
    const auto s = raw(path);
    if (!s) return std::nullopt;
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc{} || p != s->data() + s->size()) fail(path, "expected a number, got '" + *s + "'");
    return v;
  }

  template <class Int = count_t>
  std::optional<Int> integer(const std::string& path) const {
    const auto s = raw(path);
    if (!s) return std::nullopt;
    Int v = 0;
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc{} || p != s->data() + s->size()) fail(path, "expected an integer, got '" + *s + "'");
    return v;
  }

  std::optional<bool> boolean(const std::string& path) const {
    const auto s = raw(path);
    if (!s) return std::nullopt;
    if (*s == "true" || *s == "1" || *s == "yes") return true;
    if (*s == "false" || *s == "0" || *s == "no") return false;
    fail(path, "expected true or false, got '" + *s + "'");
  }

  void reject_unknown(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [key, child] : tree_) {
      if (child.empty() && !child.data().empty()) {
        if (!schema.at("").count(key)) fail(key, "unknown key");
        continue;
      }
      const auto sec = schema.find(key);
      if (sec == schema.end() || key.empty()) fail(key, "unknown section");
      for (const auto& [sub, unused] : child) {
        (void)unused;
        if (!sec->second.count(sub)) fail(key + "." + sub, "unknown key");
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::string origin_;
  std::map<std::string, long> lines_;
};

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"", {"name"}},
      {"params",
       {"n_consumers", "p_nonsurge", "p_surge", "p_bad", "qos_target", "qos_target_ns", "qos_target_s",
        "qos_target_b"}},
      {"cost_model",
       {"builtin", "name", "per_item_main", "per_item_prosumer", "horizon_years", "discount", "fit_range",
        "smooth_amplitude", "smooth_rate"}},
      {"solver", {"optimality_gap", "verify_with_oracle", "multistart", "max_shared_items"}},
      {"aimd",
       {"alpha", "beta", "gamma", "z_init", "q_init", "max_iterations", "seed", "convergence_window",
        "convergence_tol", "lambda_min", "shared_draw", "shared_pool", "prosumers"}},
  };
  return s;
}

std::vector<DiscountBreakpoint> parse_discount(const Reader& r, const std::string& path,
                                               const std::string& text) {
  std::vector<DiscountBreakpoint> out;
  std::istringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    const auto colon = item.find(':');
    if (colon == std::string::npos) r.fail(path, "breakpoint '" + item + "' is not quantity:fraction");
    DiscountBreakpoint bp;
    const std::string q = trim(std::string_view(item).substr(0, colon));
    const std::string d = trim(std::string_view(item).substr(colon + 1));
    const auto rq = std::from_chars(q.data(), q.data() + q.size(), bp.min_quantity);
    const auto rd = std::from_chars(d.data(), d.data() + d.size(), bp.discount);
    if (rq.ec != std::errc{} || rq.ptr != q.data() + q.size() || rd.ec != std::errc{} ||
        rd.ptr != d.data() + d.size()) {
      r.fail(path, "breakpoint '" + item + "' is not quantity:fraction");
    }
    out.push_back(bp);
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ScenarioFile builtin_for(bool car, count_t n, int pct) {
  ScenarioFile s;
  s.name = std::string(car ? "car" : "charger") + "-n" + std::to_string(n) + "-" + std::to_string(pct);
  s.params.n_consumers = n;
  if (car) {
    s.params.p_nonsurge = 0.1;
    s.params.p_surge = 0.3;
  } else {
    s.params.p_nonsurge = 0.005;
    s.params.p_surge = 0.015;
  }
  s.params.p_bad = 0.01;
  s.params = s.params.with_targets(pct / 100.0);
  s.cost_model_ref = car ? "car-mg4-2025" : "charger-dc60-2025";
  s.cost_model = builtin_cost_model(s.cost_model_ref);
  if (car) {
    // Fixed pools of the best-effort experiments.
    static const std::map<count_t, std::pair<count_t, count_t>> pools{
        {1000, {120, 215}}, {5000, {545, 1040}}, {10000, {1060, 2065}}, {50000, {5150, 10200}}};
    if (const auto it = pools.find(n); it != pools.end()) {
      s.shared_pool = it->second.first;
      s.prosumers = it->second.second;
    }
  }
  return s;
}

}  // namespace

void ScenarioFile::validate() const {
  params.validate();
  cost_model.validate();
  solver.validate();
  aimd.validate();
  if (shared_pool && (*shared_pool < 1 || *shared_pool > params.n_consumers)) {
    throw ValidationError("shared_pool", "must lie in [1, n_consumers]");
  }
  if (prosumers && *prosumers < 1) throw ValidationError("prosumers", "must be >= 1");
}

ScenarioFile parse_scenario(std::string_view text, const std::string& origin) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ParseError(origin, static_cast<long>(e.line()), e.message());
  }
  const Reader r(tree, origin, index_lines(text));
  r.reject_unknown(schema());

  ScenarioFile s;
  s.name = r.raw("name").value_or("");

  auto& p = s.params;
  if (!r.raw("params.n_consumers")) r.fail("params.n_consumers", "required");
  p.n_consumers = *r.integer("params.n_consumers");
  p.p_nonsurge = r.real("params.p_nonsurge").value_or(p.p_nonsurge);
  p.p_surge = r.real("params.p_surge").value_or(p.p_surge);
  p.p_bad = r.real("params.p_bad").value_or(p.p_bad);
  if (auto all = r.real("params.qos_target")) p = p.with_targets(*all);
  p.qos_target_ns = r.real("params.qos_target_ns").value_or(p.qos_target_ns);
  p.qos_target_s = r.real("params.qos_target_s").value_or(p.qos_target_s);
  p.qos_target_b = r.real("params.qos_target_b").value_or(p.qos_target_b);

  if (auto ref = r.raw("cost_model.builtin")) {
    for (const char* key : {"name", "per_item_main", "per_item_prosumer", "horizon_years", "discount",
                            "fit_range", "smooth_amplitude", "smooth_rate"}) {
      const std::string path = std::string("cost_model.") + key;
      if (r.raw(path)) r.fail(path, "not allowed together with builtin");
    }
    s.cost_model_ref = *ref;
    s.cost_model = builtin_cost_model(*ref);
  } else if (tree.get_child_optional("cost_model")) {
    auto& m = s.cost_model;
    m.name = r.raw("cost_model.name").value_or("custom");
    for (const char* key : {"per_item_main", "per_item_prosumer", "discount"}) {
      if (!r.raw(std::string("cost_model.") + key)) r.fail(std::string("cost_model.") + key, "required");
    }
    m.per_item_main = *r.real("cost_model.per_item_main");
    m.per_item_prosumer = *r.real("cost_model.per_item_prosumer");
    m.horizon_years = r.integer("cost_model.horizon_years").value_or(1);
    m.fit_range = r.integer("cost_model.fit_range").value_or(m.fit_range);
    m.discount = DiscountSchedule(parse_discount(r, "cost_model.discount", *r.raw("cost_model.discount")));
    const auto a = r.real("cost_model.smooth_amplitude");
    const auto b = r.real("cost_model.smooth_rate");
    if (a.has_value() != b.has_value()) {
      r.fail(a ? "cost_model.smooth_amplitude" : "cost_model.smooth_rate",
             "smooth_amplitude and smooth_rate go together");
    }
    m.smooth = a ? SmoothDiscount{*a, *b} : fit_smooth_discount(m.discount, m.fit_range);
  } else {
    s.cost_model_ref = "car-mg4-2025";
    s.cost_model = builtin_cost_model(s.cost_model_ref);
  }

  auto& o = s.solver;
  o.optimality_gap = r.real("solver.optimality_gap").value_or(o.optimality_gap);
  o.verify_with_oracle = r.boolean("solver.verify_with_oracle").value_or(o.verify_with_oracle);
  o.multistart = static_cast<int>(r.integer("solver.multistart").value_or(o.multistart));
  o.max_shared_items = r.integer("solver.max_shared_items");

  auto& a = s.aimd;
  a.alpha = r.real("aimd.alpha").value_or(a.alpha);
  a.beta = r.real("aimd.beta").value_or(a.beta);
  a.gamma = r.real("aimd.gamma");
  a.z_init = r.real("aimd.z_init");
  a.q_init = r.real("aimd.q_init");
  a.max_iterations = r.integer("aimd.max_iterations").value_or(a.max_iterations);
  a.seed = r.integer<std::uint64_t>("aimd.seed").value_or(a.seed);
  a.convergence_window = r.integer("aimd.convergence_window").value_or(a.convergence_window);
  a.convergence_tol = r.real("aimd.convergence_tol").value_or(a.convergence_tol);
  a.lambda_min = r.real("aimd.lambda_min").value_or(a.lambda_min);
  a.shared_draw = r.boolean("aimd.shared_draw").value_or(a.shared_draw);
  s.shared_pool = r.integer("aimd.shared_pool");
  s.prosumers = r.integer("aimd.prosumers");

  s.validate();
  return s;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open scenario file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

std::string format_scenario(const ScenarioFile& s) {
  std::ostringstream out;
  if (!s.name.empty()) out << "name = " << s.name << "\n\n";
  const auto& p = s.params;
  out << "[params]\n"
      << "n_consumers = " << p.n_consumers << "\n"
      << "p_nonsurge = " << fmt(p.p_nonsurge) << "\n"
      << "p_surge = " << fmt(p.p_surge) << "\n"
      << "p_bad = " << fmt(p.p_bad) << "\n"
      << "qos_target_ns = " << fmt(p.qos_target_ns) << "\n"
      << "qos_target_s = " << fmt(p.qos_target_s) << "\n"
      << "qos_target_b = " << fmt(p.qos_target_b) << "\n\n";

  out << "[cost_model]\n";
  if (!s.cost_model_ref.empty()) {
    out << "builtin = " << s.cost_model_ref << "\n\n";
  } else {
    const auto& m = s.cost_model;
    out << "name = " << m.name << "\n"
        << "per_item_main = " << fmt(m.per_item_main) << "\n"
        << "per_item_prosumer = " << fmt(m.per_item_prosumer) << "\n"
        << "horizon_years = " << m.horizon_years << "\n"
        << "discount = ";
    const auto& bps = m.discount.breakpoints();
    for (size_t i = 0; i < bps.size(); ++i) {
      out << (i ? ", " : "") << bps[i].min_quantity << ":" << fmt(bps[i].discount);
    }
    out << "\n"
        << "fit_range = " << m.fit_range << "\n"
        << "smooth_amplitude = " << fmt(m.smooth.amplitude) << "\n"
        << "smooth_rate = " << fmt(m.smooth.rate) << "\n\n";
  }

  const auto& o = s.solver;
  out << "[solver]\n"
      << "optimality_gap = " << fmt(o.optimality_gap) << "\n"
      << "verify_with_oracle = " << (o.verify_with_oracle ? "true" : "false") << "\n"
      << "multistart = " << o.multistart << "\n";
  if (o.max_shared_items) out << "max_shared_items = " << *o.max_shared_items << "\n";
  out << "\n";

  const auto& a = s.aimd;
  out << "[aimd]\n"
      << "alpha = " << fmt(a.alpha) << "\n"
      << "beta = " << fmt(a.beta) << "\n";
  if (a.gamma) out << "gamma = " << fmt(*a.gamma) << "\n";
  if (a.z_init) out << "z_init = " << fmt(*a.z_init) << "\n";
  if (a.q_init) out << "q_init = " << fmt(*a.q_init) << "\n";
  out << "max_iterations = " << a.max_iterations << "\n"
      << "seed = " << a.seed << "\n"
      << "convergence_window = " << a.convergence_window << "\n"
      << "convergence_tol = " << fmt(a.convergence_tol) << "\n"
      << "lambda_min = " << fmt(a.lambda_min) << "\n";
  if (a.shared_draw) out << "shared_draw = true\n";
  if (s.shared_pool) out << "shared_pool = " << *s.shared_pool << "\n";
  if (s.prosumers) out << "prosumers = " << *s.prosumers << "\n";
  return out.str();
}

void save_scenario(const ScenarioFile& s, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError(path.string(), 0, "cannot write scenario file");
  out << format_scenario(s);
  if (!out) throw ParseError(path.string(), 0, "write failed");
}

namespace {

const std::regex& builtin_pattern() {
  static const std::regex re(R"(^(car|charger)-n([0-9]+)(?:-([0-9]{1,2}))?$)");
  return re;
}

}  // namespace

bool is_builtin_scenario_name(std::string_view name) {
  return std::regex_match(std::string(name), builtin_pattern());
}

ScenarioFile builtin_scenario(std::string_view name) {
  std::smatch m;
  const std::string s(name);
  if (!std::regex_match(s, m, builtin_pattern())) {
    throw ValidationError("scenario", "unknown built-in scenario '" + s + "'");
  }
  const count_t n = std::stoll(m[2].str());
  const int pct = m[3].matched ? std::stoi(m[3].str()) : 98;
  if (n < 1) throw ValidationError("n_consumers", "must be >= 1");
  if (pct < 1) throw ValidationError("qos_target", "percentage must lie in [1, 99]");
  ScenarioFile out = builtin_for(m[1].str() == "car", n, pct);
  out.name = s;
  return out;
}

std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> out;
  for (const char* kind : {"car", "charger"}) {
    for (int n : {1000, 5000, 10000, 50000}) {
      for (int pct : {98, 99}) out.push_back(std::string(kind) + "-n" + std::to_string(n) + "-" + std::to_string(pct));
    }
  }
  return out;
}

ScenarioFile resolve_scenario(std::string_view name_or_path) {
  if (is_builtin_scenario_name(name_or_path)) return builtin_scenario(name_or_path);
  return load_scenario(std::filesystem::path(name_or_path));
}

}  // namespace hybrid

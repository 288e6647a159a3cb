#include "kmt/report.hpp"

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <sstream>

#include "kmt/errors.hpp"

namespace kmt::report {

Format parse_format(std::string_view name) {
  if (name == "json") return Format::Json;
  if (name == "csv") return Format::Csv;
  throw InvalidParameter("format must be json or csv");
}

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw InvalidParameter("not a number: " + s);
  }
  return j.get<double>();
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct CellText {
  std::string operator()(long v) const { return std::to_string(v); }
  std::string operator()(double v) const { return format_double(v); }
  std::string operator()(const std::string& v) const { return csv_field(v); }
};

Json opt(const std::optional<long>& v) { return v ? Json(*v) : Json(nullptr); }
Json opt(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

Json fit_json(const stats::LinearFit& f) {
  return Json{{"intercept", number(f.intercept)}, {"slope", number(f.slope)}, {"r2", number(f.r2)}};
}

Json violation_json(const lemmas::Violation& v) {
  return Json{{"check", v.check}, {"m", v.m},     {"k", v.k},
              {"l", v.l},         {"lhs", v.lhs}, {"relation", v.relation},
              {"rhs", v.rhs}};
}

lemmas::Violation violation_from(const Json& j) {
  lemmas::Violation v;
  v.check = j.at("check").get<std::string>();
  v.m = j.at("m").get<long>();
  v.k = j.at("k").get<long>();
  v.l = j.at("l").get<long>();
  v.lhs = j.at("lhs").get<std::string>();
  v.relation = j.at("relation").get<std::string>();
  v.rhs = j.at("rhs").get<std::string>();
  return v;
}

}  // namespace

std::string to_csv(const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += csv_field(table.header[i]);
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += std::visit(CellText{}, row[i]);
    }
    out += '\n';
  }
  return out;
}

Json to_json(const lemmas::LemmaReport& r) {
  Json params = Json::object();
  for (const auto& [k, v] : r.params) params[k] = v;
  Json rows = Json::array();
  for (const auto& row : r.rows)
    rows.push_back(
        Json{{"param", row.param}, {"pass", row.pass}, {"worst_margin", number(row.worst_margin)}, {"checks", row.checks}});
  Json viol = Json::array(), below = Json::array();
  for (const auto& v : r.violations) viol.push_back(violation_json(v));
  for (const auto& v : r.below_threshold) below.push_back(violation_json(v));
  Json values = Json::object();
  for (const auto& [k, v] : r.values) values[k] = number(v);
  return Json{{"id", r.id},
              {"params", params},
              {"pass", r.pass},
              {"checks", r.checks},
              {"worst_margin", number(r.worst_margin)},
              {"threshold", opt(r.threshold)},
              {"threshold_even", opt(r.threshold_even)},
              {"violations", viol},
              {"below_threshold", below},
              {"values", values},
              {"rows", rows}};
}

lemmas::LemmaReport lemma_from_json(const Json& j) {
  lemmas::LemmaReport r;
  r.id = j.at("id").get<std::string>();
  for (const auto& [k, v] : j.at("params").items()) r.params.emplace_back(k, v.get<long>());
  r.pass = j.at("pass").get<bool>();
  r.checks = j.at("checks").get<long>();
  r.worst_margin = number_from(j.at("worst_margin"));
  if (!j.at("threshold").is_null()) r.threshold = j.at("threshold").get<long>();
  if (!j.at("threshold_even").is_null()) r.threshold_even = j.at("threshold_even").get<long>();
  for (const auto& v : j.at("violations")) r.violations.push_back(violation_from(v));
  for (const auto& v : j.at("below_threshold")) r.below_threshold.push_back(violation_from(v));
  for (const auto& [k, v] : j.at("values").items()) r.values.emplace_back(k, number_from(v));
  for (const auto& row : j.at("rows")) {
    lemmas::SummaryRow s;
    s.param = row.at("param").get<long>();
    s.pass = row.at("pass").get<bool>();
    s.worst_margin = number_from(row.at("worst_margin"));
    s.checks = row.at("checks").get<long>();
    r.rows.push_back(s);
  }
  return r;
}

Table lemma_summary_table(const std::vector<lemmas::LemmaReport>& reports) {
  Table t{{"m", "lemma", "pass", "worst_margin"}, {}};
  for (const auto& r : reports)
    for (const auto& row : r.rows) t.rows.push_back({row.param, r.id, long{row.pass}, row.worst_margin});
  return t;
}

Table violation_table(const std::vector<lemmas::LemmaReport>& reports) {
  Table t{{"lemma", "check", "m", "k", "l", "lhs", "relation", "rhs"}, {}};
  for (const auto& r : reports)
    for (const auto& v : r.violations) t.rows.push_back({r.id, v.check, v.m, v.k, v.l, v.lhs, v.relation, v.rhs});
  return t;
}

Json to_json(const coupling::WalkPairSweep& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows)
    rows.push_back(Json{{"n", r.n},
                        {"abs_margin", to_string(r.abs_margin)},
                        {"diff_margin", to_string(r.diff_margin)},
                        {"pairs", r.pairs},
                        {"pass", r.pass}});
  return Json{{"n_max", s.n_max}, {"threshold", opt(s.threshold)}, {"pass", s.pass}, {"rows", rows}};
}

Json to_json(const coupling::WalkPairCoupling& c) {
  Json cells = Json::array();
  for (const auto& cell : c.cells)
    cells.push_back(Json{{"s_n", cell.s_n}, {"s_4n", cell.s_4n}, {"mass", to_string(cell.mass)}});
  return Json{{"n", c.n},
              {"abs_margin", to_string(c.abs_margin)},
              {"diff_margin", to_string(c.diff_margin)},
              {"marginals_exact", c.abs_table.marginals_exact()},
              {"non_crossing", c.abs_table.non_crossing()},
              {"pass", c.pass},
              {"cells", cells}};
}

Json to_json(const coupling::QuantileSweep& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows)
    rows.push_back(Json{{"n", r.n},
                        {"abs_margin", number(r.abs_margin)},
                        {"diff_margin", number(r.diff_margin)},
                        {"points", r.points},
                        {"pass", r.pass}});
  return Json{{"n_max", s.n_max}, {"threshold", opt(s.threshold)}, {"pass", s.pass}, {"rows", rows}};
}

Json to_json(const coupling::ChainTrajectory& t) {
  Json z = Json::array(), exact = Json::array();
  for (double v : t.z) z.push_back(number(v));
  for (bool b : t.exact_step) exact.push_back(b);
  return Json{{"n", t.n}, {"sign", t.sign}, {"s", t.s}, {"z", z}, {"exact_step", exact}};
}

Table walk_pair_table(const coupling::WalkPairSweep& s) {
  Table t{{"n", "abs_margin", "diff_margin", "pairs", "pass"}, {}};
  for (const auto& r : s.rows)
    t.rows.push_back({long{r.n}, to_string(r.abs_margin), to_string(r.diff_margin), r.pairs, long{r.pass}});
  return t;
}

Table quantile_table(const coupling::QuantileSweep& s) {
  Table t{{"n", "abs_margin", "diff_margin", "points", "pass"}, {}};
  for (const auto& r : s.rows) t.rows.push_back({long{r.n}, r.abs_margin, r.diff_margin, r.points, long{r.pass}});
  return t;
}

Json to_json(const stein::SteinCoefficient& t) {
  Json values = Json::array();
  for (const auto& v : t.values()) values.push_back(to_string(v));
  return Json{{"offset", to_string(t.offset())}, {"values", values}};
}

Json to_json(const stein::CrossCheckReport& r) {
  return Json{{"n_max", r.n_max},
              {"laws", r.laws},
              {"closed_form_checks", r.closed_form_checks},
              {"convolution_checks", r.convolution_checks},
              {"scaling_checks", r.scaling_checks},
              {"mismatch_count", r.mismatch_count},
              {"mismatches", r.mismatches},
              {"pass", r.pass}};
}

Json to_json(const stein::StationaryCorpus& c) {
  Json cases = Json::array();
  for (const auto& s : c.cases)
    cases.push_back(Json{{"label", s.label},
                         {"states", s.states},
                         {"class_size", s.class_size},
                         {"closed_classes", s.closed_classes},
                         {"residual", number(s.residual)},
                         {"marginal_error", number(s.marginal_error)},
                         {"diagonal_mass", opt(s.diagonal_mass)},
                         {"error", s.error},
                         {"pass", s.pass}});
  return Json{{"max_states", c.max_states}, {"pass", c.pass}, {"cases", cases}};
}

Json to_json(const stein::FunctionalReport& f) {
  return Json{{"theta", number(f.params.theta)},
              {"a", f.params.a},
              {"delta", number(f.params.delta)},
              {"mu", number(f.params.mu)},
              {"p_tail", number(f.p_tail)},
              {"tail_mid", number(f.tail_mid)},
              {"tail_rhs", number(f.tail_rhs)},
              {"mgf", number(f.mgf)},
              {"mgf_rhs", number(f.mgf_rhs)},
              {"exp_rhs", number(f.exp_rhs)},
              {"tail_ok", f.tail_ok},
              {"mgf_ok", f.mgf_ok},
              {"exp_ok", f.exp_ok}};
}

Json to_json(const stein::BinomialPairReport& r) {
  Json fs = Json::array();
  for (const auto& f : r.functionals) fs.push_back(to_json(f));
  return Json{{"n", r.n},
              {"theta", number(r.theta)},
              {"functional", number(r.functional)},
              {"hat_bound", number(r.hat_bound)},
              {"states", r.states},
              {"class_size", r.class_size},
              {"residual", number(r.residual)},
              {"marginal_error", number(r.marginal_error)},
              {"pass", r.pass},
              {"functionals", fs}};
}

Json to_json(const stein::BinomialSweep& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows) rows.push_back(to_json(r));
  return Json{{"theta", number(s.theta)},
              {"kappa", number(s.kappa)},
              {"plateau_spread", number(s.plateau_spread)},
              {"pass", s.pass},
              {"rows", rows}};
}

Json to_json(const stein::HypergeoPairReport& r) {
  Json values = Json::array(), fs = Json::array();
  for (double v : r.values) values.push_back(number(v));
  for (const auto& f : r.functionals) fs.push_back(to_json(f));
  return Json{{"n", r.n},
              {"k", r.k},
              {"s", r.s},
              {"part", r.part},
              {"values", values},
              {"states", r.states},
              {"class_size", r.class_size},
              {"residual", number(r.residual)},
              {"marginal_error", number(r.marginal_error)},
              {"functionals_ok", r.functionals_ok},
              {"expectation_failures", r.expectation_failures},
              {"functionals", fs}};
}

Json to_json(const stein::HypergeoSweep& s) {
  Json thetas = Json::array(), doubling = Json::array(), bias = Json::array();
  for (double t : s.thetas) thetas.push_back(number(t));
  for (const auto& r : s.doubling) doubling.push_back(to_json(r));
  for (const auto& r : s.bias) {
    Json j = to_json(r);
    j.erase("functionals");
    bias.push_back(std::move(j));
  }
  return Json{{"thetas", thetas},
              {"theta_hat", opt(s.theta_hat)},
              {"m_hat", number(s.m_hat)},
              {"part2_checks", s.part2_checks},
              {"functionals_ok", s.functionals_ok},
              {"expectation_failures", s.expectation_failures},
              {"expectation_failing_instances", s.expectation_failing_instances},
              {"pass", s.pass},
              {"doubling", doubling},
              {"bias", bias}};
}

Json to_json(const stein::HoeffdingReport& r) {
  return Json{{"n", r.n},
              {"k", r.k},
              {"p", to_string(r.p)},
              {"lambda", number(r.lambda)},
              {"a", number(r.a)},
              {"b", number(r.b)},
              {"lin", {number(r.lin_wo), number(r.lin_w), number(r.lin_bound)}},
              {"quad", {number(r.quad_wo), number(r.quad_w), number(r.quad_bound)}},
              {"sq", {number(r.sq_wo), number(r.sq_w), number(r.sq_bound)}},
              {"pass", r.pass}};
}

Json to_json(const stein::HoeffdingSweep& s) {
  Json failures = Json::array();
  for (const auto& r : s.failures) failures.push_back(to_json(r));
  return Json{{"checks", s.checks}, {"violations", s.violations}, {"pass", s.pass}, {"failures", failures}};
}

Table stationary_table(const stein::StationaryCorpus& c) {
  Table t{{"label", "states", "class_size", "closed_classes", "residual", "marginal_error", "diagonal_mass", "pass"}, {}};
  for (const auto& s : c.cases)
    t.rows.push_back({s.label, static_cast<long>(s.states), static_cast<long>(s.class_size),
                      static_cast<long>(s.closed_classes), s.residual, s.marginal_error,
                      s.diagonal_mass ? Cell{*s.diagonal_mass} : Cell{std::string()}, long{s.pass}});
  return t;
}

Table binomial_table(const stein::BinomialSweep& s) {
  Table t{{"n", "theta", "functional", "hat_bound", "states", "class_size", "residual", "marginal_error", "pass"}, {}};
  for (const auto& r : s.rows)
    t.rows.push_back({long{r.n}, r.theta, r.functional, r.hat_bound, static_cast<long>(r.states),
                      static_cast<long>(r.class_size), r.residual, r.marginal_error, long{r.pass}});
  return t;
}

Table hypergeo_table(const stein::HypergeoSweep& s) {
  Table t{{"part", "n", "k", "s", "theta", "value"}, {}};
  auto add = [&](const stein::HypergeoPairReport& r) {
    for (std::size_t i = 0; i < r.values.size(); ++i)
      t.rows.push_back({long{r.part}, long{r.n}, long{r.k}, long{r.s}, r.thetas[i], r.values[i]});
  };
  for (const auto& r : s.doubling) add(r);
  for (const auto& r : s.bias) add(r);
  return t;
}

Json to_json(const ep::EpExperiment& e) {
  Json rows = Json::array();
  for (const auto& r : e.rows) {
    Json tails = Json::array();
    for (const auto& t : r.tails)
      tails.push_back(Json{{"x", number(t.x)},
                           {"empirical", number(t.empirical)},
                           {"bound", number(t.bound)},
                           {"se", number(t.se)},
                           {"ok", t.ok}});
    rows.push_back(Json{{"n", r.n},
                        {"depth", r.depth},
                        {"mean_d", number(r.mean_d)},
                        {"sd_d", number(r.sd_d)},
                        {"q50_d", number(r.q50_d)},
                        {"q90_d", number(r.q90_d)},
                        {"q99_d", number(r.q99_d)},
                        {"mean_delta_g", number(r.mean_delta_g)},
                        {"mean_delta_w0", number(r.mean_delta_w0)},
                        {"mean_chi2max", number(r.mean_chi2max)},
                        {"checked_nodes", r.checked_nodes},
                        {"lemma_violations", r.lemma_violations},
                        {"chi2_tails", tails}});
  }
  return Json{{"config",
               {{"n", e.config.n_list},
                {"reps", e.config.reps},
                {"seed", e.config.seed},
                {"depth_rule", e.config.depth_rule},
                {"lemma_threshold", e.config.tree.lemma_threshold}}},
              {"fit", fit_json(e.fit)},
              {"max_d_over_log", number(e.max_d_over_log)},
              {"monotone", e.monotone},
              {"tails_ok", e.tails_ok},
              {"pass", e.pass},
              {"rows", rows}};
}

Table ep_summary_table(const ep::EpExperiment& e) {
  Table t{{"n", "depth", "mean_d", "sd_d", "q50_d", "q90_d", "q99_d", "mean_delta_g", "mean_delta_w0", "mean_chi2max",
           "lemma_violations"},
          {}};
  for (const auto& r : e.rows)
    t.rows.push_back({r.n, long{r.depth}, r.mean_d, r.sd_d, r.q50_d, r.q90_d, r.q99_d, r.mean_delta_g, r.mean_delta_w0,
                      r.mean_chi2max, r.lemma_violations});
  return t;
}

Table ep_sample_table(const ep::EpExperiment& e) {
  Table t{{"n", "rep", "D_n", "delta_Gn", "delta_W0", "chi2max"}, {}};
  for (std::size_t i = 0; i < e.samples.size(); ++i)
    for (std::size_t r = 0; r < e.samples[i].size(); ++r) {
      const auto& s = e.samples[i][r];
      t.rows.push_back({s.n, static_cast<long>(r), s.d_n, s.delta_g, s.delta_w0, s.chi2max});
    }
  return t;
}

namespace {

Json rw_config(const rw::RwConfig& c) {
  const auto& in = c.induction;
  return Json{{"n", c.n_list},
              {"t", c.t_list},
              {"lambda", c.lambdas},
              {"reps", c.reps},
              {"seed", c.seed},
              {"induction",
               {{"A", number(in.A)},
                {"B", number(in.B)},
                {"lambda0", number(in.lambda0)},
                {"theta1", number(in.theta1)},
                {"M", number(in.M)},
                {"gamma", number(in.gamma)},
                {"alpha0", number(in.alpha0)}}}};
}

}  // namespace

Json to_json(const rw::BridgeExperiment& e) {
  Json rows = Json::array();
  for (const auto& r : e.rows)
    rows.push_back(Json{{"n", r.n},
                        {"t", r.t},
                        {"lambda", number(r.lambda)},
                        {"mgf", number(r.mgf)},
                        {"log_mgf", number(r.log_mgf)},
                        {"rhs", number(r.rhs)},
                        {"mean_t_star", number(r.mean_t_star)},
                        {"median_t_star", number(r.median_t_star)},
                        {"below_rhs", r.below_rhs},
                        {"pathwise_violations", r.pathwise_violations}});
  return Json{{"config", rw_config(e.config)},
              {"a_hat", number(e.a_hat)},
              {"b_hat", number(e.b_hat)},
              {"fit", fit_json(e.fit)},
              {"median_monotone", e.median_monotone},
              {"pathwise_violations", e.pathwise_violations},
              {"pass", e.pass},
              {"rows", rows}};
}

Json to_json(const rw::FullExperiment& e) {
  Json rows = Json::array();
  for (const auto& r : e.rows)
    rows.push_back(Json{{"n", r.n},
                        {"mean_dev", number(r.mean_dev)},
                        {"sd_dev", number(r.sd_dev)},
                        {"median_dev", number(r.median_dev)},
                        {"q90_dev", number(r.q90_dev)},
                        {"pathwise_violations", r.pathwise_violations}});
  return Json{{"config", rw_config(e.config)},
              {"fit", fit_json(e.fit)},
              {"pathwise_violations", e.pathwise_violations},
              {"pass", e.pass},
              {"rows", rows}};
}

Table bridge_summary_table(const rw::BridgeExperiment& e) {
  Table t{{"n", "t", "lambda", "mgf", "log_mgf", "rhs", "mean_t_star", "median_t_star", "pathwise_violations"}, {}};
  for (const auto& r : e.rows)
    t.rows.push_back({r.n, r.t, r.lambda, r.mgf, r.log_mgf, r.rhs, r.mean_t_star, r.median_t_star, r.pathwise_violations});
  return t;
}

Table full_summary_table(const rw::FullExperiment& e) {
  Table t{{"n", "mean_dev", "sd_dev", "median_dev", "q90_dev", "pathwise_violations"}, {}};
  for (const auto& r : e.rows)
    t.rows.push_back({r.n, r.mean_dev, r.sd_dev, r.median_dev, r.q90_dev, r.pathwise_violations});
  return t;
}

Table bridge_sample_table(const rw::BridgeExperiment& e) {
  Table t{{"n", "t", "rep", "T_star"}, {}};
  std::size_t i = 0;
  for (long n : e.config.n_list)
    for (long tt : e.config.t_list) {
      for (std::size_t r = 0; r < e.t_star[i].size(); ++r)
        t.rows.push_back({n, tt, static_cast<long>(r), e.t_star[i][r]});
      ++i;
    }
  return t;
}

Table full_sample_table(const rw::FullExperiment& e) {
  Table t{{"n", "rep", "max_dev"}, {}};
  for (std::size_t i = 0; i < e.max_dev.size(); ++i)
    for (std::size_t r = 0; r < e.max_dev[i].size(); ++r)
      t.rows.push_back({e.config.n_list[i], static_cast<long>(r), e.max_dev[i][r]});
  return t;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

Json to_json(const RunManifest& m) {
  Json outputs = Json::array();
  for (const auto& o : m.outputs) outputs.push_back(Json{{"name", o.name}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  return Json{{"command", m.command},  {"args", m.args},         {"params", m.params},
              {"seed", m.seed},        {"version", m.version},   {"started", m.started},
              {"finished", m.finished}, {"exit_code", m.exit_code}, {"outputs", outputs}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.args = j.at("args").get<std::vector<std::string>>();
  m.params = j.at("params");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.version = j.at("version").get<std::string>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  m.exit_code = j.at("exit_code").get<int>();
  for (const auto& o : j.at("outputs"))
    m.outputs.push_back({o.at("name").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uintmax_t>()});
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::array<char, 32> buf{};
  std::strftime(buf.data(), buf.size(), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf.data();
}

}  // namespace kmt::report

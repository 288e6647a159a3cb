#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "kmt/cli.hpp"
#include "kmt/errors.hpp"
#include "kmt/report.hpp"

namespace kmt {

void set_thread_count(int jobs) {
  if (jobs > 0) omp_set_num_threads(jobs);
}

}  // namespace kmt

namespace kmt::cli {

namespace fs = std::filesystem;
using report::Json;

namespace {

struct Globals {
  std::string out_dir = "kmt-out";
  std::string out;
  std::string format = "json";
  int jobs = 0;
  std::uint64_t seed = 1;
  std::string config;
};

struct LemmaOpts {
  int m_max = 300;
  int h_max = 10;
  int grid = 10000;
  int n_max = 500;
  std::vector<std::string> suites{"mass", "shifted", "ratio", "tail", "entropy", "ash"};
};

struct SteinOpts {
  int n_max = 64;
  std::string kind = "binomial";
  std::optional<int> n;
  int k = 0;
  int s = 0;
  std::string p = "1/2";
};

struct CoupleOpts {
  std::string theorem;
  std::string target;
  std::optional<int> n;
  std::optional<int> n_max;
  int n_min = 6;
  std::optional<int> k;
  std::optional<int> s;
  std::optional<double> theta;
  std::string theta_grid;
  std::size_t exact_solve_limit = 0;
  int depth = 3;
  std::size_t table_limit = std::size_t{1} << 15;
  std::size_t max_states = 10000;
  std::vector<double> lambdas{-1, -0.5, 0.25, 1};
  std::vector<double> as{-1, 0, 1};
  std::vector<double> bs{0, 0.2, 0.45};
};

struct EpOpts {
  std::vector<long> n{256, 1024, 4096};
  long reps = 2000;
  std::string depth_rule = "ceil-log2";
  long lemma_threshold = 1;
  std::size_t node_cap = std::size_t{1} << 23;
};

struct RwOpts {
  std::string mode = "bridge";
  std::vector<long> n{256, 1024, 4096};
  std::vector<long> t{0};
  std::vector<double> lambda{0.1};
  long reps = 2000;
  std::optional<double> M, gamma, theta1, alpha0, A;
};

struct ReportOpts {
  std::string manifest;
  std::string replay;
};

struct Outcome {
  std::string stem;
  bool pass = true;
  std::vector<std::pair<std::string, std::string>> files;  // name, content
  std::vector<std::string> lines;
};

std::string pass_word(bool ok) { return ok ? "PASS" : "FAIL"; }

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

void emit(Outcome& out, report::Format f, const Json& j, const std::vector<std::pair<std::string, report::Table>>& tables) {
  if (f == report::Format::Json) {
    out.files.emplace_back(out.stem + ".json", report::dump(j));
    return;
  }
  for (const auto& [suffix, table] : tables) out.files.emplace_back(out.stem + suffix + ".csv", report::to_csv(table));
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> g;
  if (text.find(':') != std::string::npos) {
    double a = 0, b = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(text);
    if (!(ss >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || b < a)
      throw InvalidParameter("theta grid must be a:b:step or a comma list");
    const long count = static_cast<long>(std::floor((b - a) / step + 1e-9));
    for (long i = 0; i <= count; ++i) g.push_back(a + static_cast<double>(i) * step);
    return g;
  }
  std::istringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      g.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw InvalidParameter("bad theta grid entry: " + item);
    }
  }
  if (g.empty()) throw InvalidParameter("empty theta grid");
  return g;
}

Outcome verify_lemmas(const LemmaOpts& o, report::Format f) {
  Outcome out{"verify-lemmas", true, {}, {}};
  std::vector<lemmas::LemmaReport> reports;
  std::vector<std::string> skipped;
  auto want = [&](const char* name) { return std::find(o.suites.begin(), o.suites.end(), name) != o.suites.end(); };
  for (const auto& s : o.suites)
    if (s != "mass" && s != "shifted" && s != "ratio" && s != "tail" && s != "entropy" && s != "ash")
      throw InvalidParameter("unknown suite: " + s);
  if (want("mass")) reports.push_back(lemmas::check_mass_domination(o.m_max));
  if (want("shifted")) reports.push_back(lemmas::check_shifted_domination(o.m_max));
  if (want("ratio")) {
    if (o.m_max >= 2)
      reports.push_back(lemmas::check_ratio_monotonicity(o.m_max, o.h_max));
    else
      skipped.push_back("ratio-monotonicity");
  }
  if (want("tail")) reports.push_back(lemmas::check_tail_domination(o.m_max));
  if (want("entropy")) reports.push_back(lemmas::check_entropy_bound(o.grid));
  if (want("ash")) reports.push_back(lemmas::check_ash_sandwich(o.n_max));

  Json list = Json::array();
  for (const auto& r : reports) {
    out.pass = out.pass && r.pass;
    list.push_back(report::to_json(r));
    std::string line = r.id + ": " + pass_word(r.pass) + " checks=" + std::to_string(r.checks) +
                       " violations=" + std::to_string(r.violations.size());
    if (r.threshold) line += " threshold=" + std::to_string(*r.threshold);
    out.lines.push_back(line);
    for (std::size_t i = 0; i < r.violations.size() && i < 5; ++i) {
      const auto& v = r.violations[i];
      out.lines.push_back("  " + v.check + " m=" + std::to_string(v.m) + " k=" + std::to_string(v.k) +
                          " l=" + std::to_string(v.l) + ": " + v.lhs + " " + v.relation + " " + v.rhs);
    }
  }
  for (const auto& s : skipped) out.lines.push_back(s + ": skipped (needs m-max >= 2)");
  Json j{{"m_max", o.m_max}, {"h_max", o.h_max}, {"grid", o.grid}, {"n_max", o.n_max},
         {"skipped", skipped}, {"pass", out.pass}, {"reports", list}};
  emit(out, f, j, {{"", report::lemma_summary_table(reports)}, {"-violations", report::violation_table(reports)}});
  return out;
}

Outcome stein_command(const SteinOpts& o, report::Format f) {
  if (!o.n) {
    Outcome out{"stein", true, {}, {}};
    const auto r = stein::cross_validate_stein(o.n_max);
    out.pass = r.pass;
    out.lines.push_back("stein cross-validation: " + pass_word(r.pass) + " laws=" + std::to_string(r.laws) +
                        " convolutions=" + std::to_string(r.convolution_checks) +
                        " mismatches=" + std::to_string(r.mismatch_count));
    for (const auto& m : r.mismatches) out.lines.push_back("  " + m);
    report::Table t{{"n_max", "laws", "closed_form_checks", "convolution_checks", "scaling_checks", "mismatches", "pass"},
                    {{long{r.n_max}, r.laws, r.closed_form_checks, r.convolution_checks, r.scaling_checks,
                      r.mismatch_count, long{r.pass}}}};
    emit(out, f, report::to_json(r), {{"", t}});
    return out;
  }
  Outcome out{"stein-coefficient", true, {}, {}};
  const int n = *o.n;
  std::optional<LatticePMF> pmf;
  std::optional<stein::SteinCoefficient> closed;
  Json params;
  if (o.kind == "binomial") {
    const Rational p = parse_rational(o.p);
    pmf = make_centered_binomial(n, p);
    closed = stein::stein_binomial(n, p);
    params = {{"kind", o.kind}, {"n", n}, {"p", to_string(p)}};
  } else if (o.kind == "hypergeometric") {
    pmf = make_hypergeometric(n, o.k, o.s, HypergeoForm::Centered);
    closed = stein::stein_hypergeometric(n, o.k, o.s);
    params = {{"kind", o.kind}, {"n", n}, {"k", o.k}, {"s", o.s}};
  } else {
    throw InvalidParameter("kind must be binomial or hypergeometric");
  }
  const auto oracle = stein::stein_from_pmf(*pmf);
  const auto scaled = stein::stein_scale_perturb(*closed, *pmf);
  const bool closed_ok = oracle == *closed;
  const bool scaled_ok = stein::stein_from_pmf(perturb_scale(*pmf)) == scaled;
  const bool balance_ok = stein::valid_pair(*closed, *pmf);
  out.pass = closed_ok && scaled_ok && balance_ok;
  out.lines.push_back("stein coefficient: " + pass_word(out.pass));
  Json j{{"params", params},
         {"coefficient", report::to_json(*closed)},
         {"scaled", report::to_json(scaled)},
         {"closed_form_matches", closed_ok},
         {"scaling_matches", scaled_ok},
         {"detailed_balance", balance_ok},
         {"pass", out.pass}};
  report::Table t{{"x", "T"}, {}};
  for (std::size_t i = 0; i < closed->size(); ++i) t.rows.push_back({to_string(pmf->atom(i)), to_string(closed->value(i))});
  emit(out, f, j, {{"", t}});
  return out;
}

std::string couple_target(const CoupleOpts& o) {
  std::string from_theorem;
  if (!o.theorem.empty()) {
    if (o.theorem == "1.4")
      from_theorem = "walk-pair";
    else if (o.theorem == "1.5")
      from_theorem = "binomial";
    else if (o.theorem == "1.6")
      from_theorem = "hypergeo";
    else
      throw InvalidParameter("theorem must be 1.4, 1.5 or 1.6");
  }
  if (!from_theorem.empty() && !o.target.empty() && o.target != from_theorem)
    throw InvalidParameter("--theorem and --target disagree");
  std::string t = from_theorem.empty() ? o.target : from_theorem;
  if (t.empty()) throw InvalidParameter("couple needs --target or --theorem");
  return t;
}

Outcome couple_command(const CoupleOpts& o, const Globals& g, report::Format f) {
  const std::string target = couple_target(o);
  Outcome out{"couple-" + target, true, {}, {}};
  stein::SolveOptions solve;
  solve.exact_limit = o.exact_solve_limit;

  if (target == "walk-pair") {
    if (o.n) {
      const auto c = coupling::signed_couple_2s_4s(*o.n);
      out.pass = c.pass;
      out.lines.push_back("walk pair n=" + std::to_string(c.n) + ": " + pass_word(c.pass) +
                          " abs_margin=" + to_string(c.abs_margin) + " diff_margin=" + to_string(c.diff_margin));
      report::Table t{{"s_n", "s_4n", "mass"}, {}};
      for (const auto& cell : c.cells) t.rows.push_back({cell.s_n, cell.s_4n, to_string(cell.mass)});
      emit(out, f, report::to_json(c), {{"", t}});
      return out;
    }
    const auto s = coupling::sweep_walk_pair(o.n_max.value_or(2000));
    out.pass = s.pass;
    out.lines.push_back("walk pair sweep: " + pass_word(s.pass) + " n0=" +
                        (s.threshold ? std::to_string(*s.threshold) : std::string("none")));
    emit(out, f, report::to_json(s), {{"", report::walk_pair_table(s)}});
    return out;
  }
  if (target == "quantile") {
    if (o.n) {
      coupling::QuantileSweep s;
      s.n_max = *o.n;
      s.rows.push_back(coupling::gaussian_quantile_check(*o.n));
      s.pass = s.rows[0].pass;
      out.pass = s.pass;
      out.lines.push_back("quantile check n=" + std::to_string(*o.n) + ": " + pass_word(s.pass));
      emit(out, f, report::to_json(s), {{"", report::quantile_table(s)}});
      return out;
    }
    const auto s = coupling::sweep_gaussian_quantile(o.n_max.value_or(4096));
    out.pass = s.pass;
    out.lines.push_back("quantile sweep: " + pass_word(s.pass) +
                        " threshold=" + (s.threshold ? std::to_string(*s.threshold) : std::string("none")));
    emit(out, f, report::to_json(s), {{"", report::quantile_table(s)}});
    return out;
  }
  if (target == "chain") {
    coupling::ChainOptions co;
    co.table_limit = o.table_limit;
    const auto t = coupling::chain_sample(o.n.value_or(2), o.depth, g.seed, co);
    out.lines.push_back("chain sample: " + std::to_string(t.s.size()) + " levels");
    report::Table tab{{"level", "s", "z", "exact"}, {}};
    for (std::size_t i = 0; i < t.s.size(); ++i)
      tab.rows.push_back({static_cast<long>(i), static_cast<long>(t.s[i]), t.z[i],
                          long{i < t.exact_step.size() ? static_cast<bool>(t.exact_step[i]) : false}});
    emit(out, f, report::to_json(t), {{"", tab}});
    return out;
  }
  if (target == "binomial") {
    const double theta = o.theta.value_or(0.25);
    if (!stein::binomial_theta_admissible(theta))
      throw InvalidParameter("theta=" + fmt(theta) + " violates 8 theta^2 e^(2 theta) < 1");
    if (o.n) {
      const auto r = stein::couple_binomials(*o.n, theta, solve);
      out.pass = r.pass;
      out.lines.push_back("binomial pair n=" + std::to_string(r.n) + ": " + pass_word(r.pass) +
                          " functional=" + fmt(r.functional));
      stein::BinomialSweep s;
      s.theta = theta;
      s.rows.push_back(r);
      emit(out, f, report::to_json(r), {{"", report::binomial_table(s)}});
      return out;
    }
    const auto s = stein::sweep_binomials(o.n_max.value_or(64), theta, Exec::Parallel, solve);
    out.pass = s.pass;
    out.lines.push_back("binomial sweep: " + pass_word(s.pass) + " kappa=" + fmt(s.kappa) +
                        " plateau_spread=" + fmt(s.plateau_spread));
    emit(out, f, report::to_json(s), {{"", report::binomial_table(s)}});
    return out;
  }
  if (target == "hypergeo") {
    std::vector<double> thetas = o.theta ? std::vector<double>{*o.theta}
                                         : (o.theta_grid.empty() ? stein::default_theta_grid() : parse_grid(o.theta_grid));
    if (o.n) {
      if (!o.k) throw InvalidParameter("hypergeo instance needs --k");
      const auto r = o.s ? stein::couple_hypergeos_bias(*o.n, *o.k, *o.s, thetas, solve)
                         : stein::couple_hypergeos_doubling(*o.n, *o.k, thetas, solve);
      out.pass = r.functionals_ok && r.residual <= 1e-10 && r.marginal_error <= 1e-9;
      out.lines.push_back("hypergeo pair: " + pass_word(out.pass) +
                          " expectation_failures=" + std::to_string(r.expectation_failures));
      stein::HypergeoSweep s;
      s.thetas = thetas;
      (o.s ? s.bias : s.doubling).push_back(r);
      emit(out, f, report::to_json(r), {{"", report::hypergeo_table(s)}});
      return out;
    }
    const auto s = stein::sweep_hypergeos(o.n_min, o.n_max.value_or(48), thetas, Exec::Parallel, solve);
    out.pass = s.pass;
    out.lines.push_back("hypergeo sweep: " + pass_word(s.pass) +
                        " theta_hat=" + (s.theta_hat ? fmt(*s.theta_hat) : std::string("none")) +
                        " M_hat=" + fmt(s.m_hat) + " part2_checks=" + std::to_string(s.part2_checks) +
                        " expectation_failures=" + std::to_string(s.expectation_failures));
    emit(out, f, report::to_json(s), {{"", report::hypergeo_table(s)}});
    return out;
  }
  if (target == "hoeffding") {
    const auto s = stein::sweep_hoeffding(o.n_max.value_or(40), o.lambdas, o.as, o.bs);
    out.pass = s.pass;
    out.lines.push_back("hoeffding sweep: " + pass_word(s.pass) + " checks=" + std::to_string(s.checks) +
                        " violations=" + std::to_string(s.violations));
    report::Table t{{"checks", "violations", "pass"}, {{s.checks, s.violations, long{s.pass}}}};
    emit(out, f, report::to_json(s), {{"", t}});
    return out;
  }
  if (target == "stationary") {
    const auto c = stein::check_stationary_corpus(o.max_states);
    out.pass = c.pass;
    long bad = 0;
    for (const auto& x : c.cases) bad += x.pass ? 0 : 1;
    out.lines.push_back("stationary corpus: " + pass_word(c.pass) + " cases=" + std::to_string(c.cases.size()) +
                        " failing=" + std::to_string(bad));
    emit(out, f, report::to_json(c), {{"", report::stationary_table(c)}});
    return out;
  }
  throw InvalidParameter("unknown couple target: " + target);
}

Outcome embed_ep(const EpOpts& o, const Globals& g, report::Format f) {
  Outcome out{"embed-ep", true, {}, {}};
  ep::EpConfig c;
  c.n_list = o.n;
  c.reps = o.reps;
  c.seed = g.seed;
  c.depth_rule = o.depth_rule;
  c.tree.lemma_threshold = o.lemma_threshold;
  c.tree.node_cap = o.node_cap;
  const auto e = ep::run_ep_experiment(c);
  out.pass = e.pass;
  out.lines.push_back("embed-ep: " + pass_word(e.pass) + " fit_r2=" + fmt(e.fit.r2) +
                      " tails_ok=" + (e.tails_ok ? "yes" : "no"));
  for (const auto& r : e.rows)
    out.lines.push_back("  n=" + std::to_string(r.n) + " mean_D=" + fmt(r.mean_d) +
                        " violations=" + std::to_string(r.lemma_violations));
  emit(out, f, report::to_json(e), {{"", report::ep_sample_table(e)}, {"-summary", report::ep_summary_table(e)}});
  return out;
}

Outcome embed_rw(const RwOpts& o, const Globals& g, report::Format f) {
  rw::RwConfig c;
  c.n_list = o.n;
  c.t_list = o.t;
  c.lambdas = o.lambda;
  c.reps = o.reps;
  c.seed = g.seed;
  if (o.M || o.gamma || o.theta1 || o.alpha0 || o.A) {
    const rw::InductionConfig d;
    c.induction = rw::InductionConfig::from(o.M.value_or(d.M), o.gamma.value_or(d.gamma), o.theta1.value_or(d.theta1),
                                            o.alpha0.value_or(d.alpha0), o.A.value_or(d.A));
  }
  if (o.mode == "bridge") {
    Outcome out{"embed-rw-bridge", true, {}, {}};
    const auto e = rw::run_bridge_experiment(c);
    out.pass = e.pass;
    out.lines.push_back("embed-rw bridge: " + pass_word(e.pass) + " fit_r2=" + fmt(e.fit.r2) +
                        " A_hat=" + fmt(e.a_hat) + " pathwise_violations=" + std::to_string(e.pathwise_violations));
    emit(out, f, report::to_json(e),
         {{"", report::bridge_sample_table(e)}, {"-summary", report::bridge_summary_table(e)}});
    return out;
  }
  if (o.mode == "full") {
    Outcome out{"embed-rw-full", true, {}, {}};
    const auto e = rw::run_full_experiment(c);
    out.pass = e.pass;
    out.lines.push_back("embed-rw full: " + pass_word(e.pass) + " fit_r2=" + fmt(e.fit.r2) +
                        " pathwise_violations=" + std::to_string(e.pathwise_violations));
    emit(out, f, report::to_json(e), {{"", report::full_sample_table(e)}, {"-summary", report::full_summary_table(e)}});
    return out;
  }
  throw InvalidParameter("mode must be bridge or full");
}

// key = value lines become --key value arguments unless the flag is already present.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream in(path);
  if (!in) throw InvalidParameter("cannot read config file " + path);
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InvalidParameter("config line without '=': " + line);
    const std::string key = "--" + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const bool present = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == key || a.rfind(key + "=", 0) == 0;
    });
    if (present) continue;
    args.push_back(key);
    if (value != "true") args.push_back(value);
  }
  return args;
}

std::vector<std::string> replayable_args(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--out-dir" || a == "--out" || a == "--config") {
      ++i;
      continue;
    }
    if (a.rfind("--out-dir=", 0) == 0 || a.rfind("--out=", 0) == 0 || a.rfind("--config=", 0) == 0) continue;
    out.push_back(a);
  }
  return out;
}

Json option_params(const CLI::App& app) {
  Json j = Json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config" || name == "out-dir" || name == "out") continue;
    if (opt->count() > 0) {
      const auto& res = opt->results();
      std::string joined;
      for (std::size_t i = 0; i < res.size(); ++i) joined += (i ? "," : "") + res[i];
      j[name] = opt->get_expected_min() == 0 && joined.empty() ? "true" : joined;
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

std::vector<report::OutputFile> write_outputs(const Outcome& out, const fs::path& dir, const std::string& main_name) {
  std::vector<report::OutputFile> files;
  for (std::size_t i = 0; i < out.files.size(); ++i) {
    const std::string name = i == 0 && !main_name.empty() ? main_name : out.files[i].first;
    const std::string& content = out.files[i].second;
    report::write_file(dir / name, content);
    files.push_back({name, report::sha256_hex(content), content.size()});
  }
  return files;
}

int verify_manifest(const fs::path& path) {
  const auto m = report::manifest_from_json(Json::parse(report::read_file(path)));
  const fs::path dir = path.parent_path();
  bool ok = true;
  for (const auto& o : m.outputs) {
    std::string digest;
    try {
      digest = report::sha256_hex(report::read_file(dir / o.name));
    } catch (const IoError&) {
      digest = "missing";
    }
    const bool same = digest == o.sha256;
    ok = ok && same;
    std::cout << (same ? "MATCH " : "DIFFER ") << o.name << "\n";
  }
  std::cout << "manifest " << path.string() << ": " << pass_word(ok) << "\n";
  return ok ? 0 : 1;
}

int replay_manifest(const fs::path& path, const std::string& out_dir, bool out_dir_given) {
  const auto m = report::manifest_from_json(Json::parse(report::read_file(path)));
  const fs::path dir = out_dir_given ? fs::path(out_dir) : path.parent_path() / "replay";
  std::vector<std::string> args = m.args;
  args.push_back("--out-dir");
  args.push_back(dir.string());
  const int code = run_command(args);
  fs::path replay_manifest_path;
  fs::file_time_type newest{};
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.size() <= 14 || name.substr(name.size() - 14) != ".manifest.json") continue;
    if (replay_manifest_path.empty() || entry.last_write_time() > newest) {
      replay_manifest_path = entry.path();
      newest = entry.last_write_time();
    }
  }
  if (replay_manifest_path.empty()) throw IoError("replay produced no manifest in " + dir.string());
  const auto r = report::manifest_from_json(Json::parse(report::read_file(replay_manifest_path)));
  bool ok = code == m.exit_code && r.outputs.size() == m.outputs.size();
  for (std::size_t i = 0; i < std::min(r.outputs.size(), m.outputs.size()); ++i) {
    const bool same = r.outputs[i].sha256 == m.outputs[i].sha256;
    ok = ok && same;
    std::cout << (same ? "MATCH " : "DIFFER ") << m.outputs[i].name << " " << m.outputs[i].sha256 << "\n";
  }
  std::cout << "replay of " << path.string() << ": " << (ok ? "identical" : "different") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int run_command(const std::vector<std::string>& raw_args) {
  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  CLI::App app{"Exact verification suites and strong-approximation simulators for simple random walks", "kmtc"};
  app.require_subcommand(1, 1);
  app.option_defaults()->always_capture_default();
  Globals g;
  auto add_globals = [&](CLI::App* a) {
    a->add_option("--out-dir", g.out_dir, "directory for reports and the manifest");
    a->add_option("--out", g.out, "path of the main report (sets the output directory to its parent)");
    a->add_option("--format", g.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    a->add_option("--jobs", g.jobs, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    a->add_option("--seed", g.seed, "root seed");
    a->add_option("--config", g.config, "key = value file; flags take precedence");
  };
  add_globals(&app);

  LemmaOpts lo;
  auto* lem = app.add_subcommand("verify-lemmas", "exact binomial inequality suites");
  lem->add_option("--m-max", lo.m_max, "largest m")->check(CLI::PositiveNumber);
  lem->add_option("--h-max", lo.h_max, "largest h for the ratio suite")->check(CLI::PositiveNumber);
  lem->add_option("--grid", lo.grid, "grid size for the entropy bound")->check(CLI::Range(2, 100000000));
  lem->add_option("--n-max", lo.n_max, "largest n for the Ash sandwich")->check(CLI::Range(2, 100000));
  lem->add_option("--suite", lo.suites, "subset of mass,shifted,ratio,tail,entropy,ash")->delimiter(',');

  SteinOpts so;
  auto* st = app.add_subcommand("stein", "Stein coefficient calculus and its cross-validation");
  st->add_option("--n-max", so.n_max, "largest n of the cross-validation corpus")->check(CLI::Range(2, 512));
  st->add_option("--kind", so.kind, "binomial or hypergeometric (single instance)");
  st->add_option("--n", so.n, "single instance size");
  st->add_option("--k", so.k, "draws (hypergeometric)");
  st->add_option("--s", so.s, "box sum (hypergeometric)");
  st->add_option("--p", so.p, "success probability as p/q (binomial)");

  CoupleOpts co;
  auto* cp = app.add_subcommand("couple", "exact couplings and stationary joint chains");
  cp->add_option("--theorem", co.theorem, "alias: 1.4 walk-pair, 1.5 binomial, 1.6 hypergeo");
  cp->add_option("--target", co.target, "walk-pair, quantile, chain, binomial, hypergeo, hoeffding or stationary")
      ->check(CLI::IsMember({"walk-pair", "quantile", "chain", "binomial", "hypergeo", "hoeffding", "stationary"}));
  cp->add_option("--n", co.n, "single instance");
  cp->add_option("--n-max", co.n_max, "sweep upper end");
  cp->add_option("--n-min", co.n_min, "sweep lower end (hypergeo)");
  cp->add_option("--k", co.k, "draws (hypergeo)");
  cp->add_option("--s", co.s, "box sum (hypergeo part 2)");
  cp->add_option("--theta", co.theta, "single theta");
  cp->add_option("--theta-grid", co.theta_grid, "a:b:step or comma list");
  cp->add_option("--exact-solve-limit", co.exact_solve_limit, "also solve classes up to this size in rationals");
  cp->add_option("--depth", co.depth, "chain depth")->check(CLI::PositiveNumber);
  cp->add_option("--table-limit", co.table_limit, "largest exact table for the chain sampler");
  cp->add_option("--max-states", co.max_states, "state budget of the stationary corpus");
  cp->add_option("--lambdas", co.lambdas, "Hoeffding lambda grid")->delimiter(',');
  cp->add_option("--as", co.as, "Hoeffding a grid")->delimiter(',');
  cp->add_option("--bs", co.bs, "Hoeffding b grid, each in [0, 1/2)")->delimiter(',');

  EpOpts eo;
  auto* ep = app.add_subcommand("embed-ep", "dyadic empirical-process embedding Monte Carlo");
  ep->add_option("--n", eo.n, "sample sizes")->delimiter(',');
  ep->add_option("--reps", eo.reps, "replications per n")->check(CLI::Range(2L, 100000000L));
  ep->add_option("--depth-rule", eo.depth_rule, "ceil-log2, floor-log2 or fixed:K");
  ep->add_option("--lemma-threshold", eo.lemma_threshold, "node checks apply from this count on");
  ep->add_option("--node-cap", eo.node_cap, "largest tree size");

  RwOpts ro;
  auto* rwc = app.add_subcommand("embed-rw", "recursive random-walk embedding Monte Carlo");
  rwc->add_option("--mode", ro.mode, "bridge or full")->check(CLI::IsMember({"bridge", "full"}));
  rwc->add_option("--n", ro.n, "walk lengths")->delimiter(',');
  rwc->add_option("--t", ro.t, "bridge endpoints")->delimiter(',');
  rwc->add_option("--lambda", ro.lambda, "exponential moment parameters")->delimiter(',');
  rwc->add_option("--reps", ro.reps, "replications")->check(CLI::Range(2L, 100000000L));
  rwc->add_option("--M", ro.M, "induction constant M");
  rwc->add_option("--gamma", ro.gamma, "induction constant gamma");
  rwc->add_option("--theta1", ro.theta1, "induction constant theta1");
  rwc->add_option("--alpha0", ro.alpha0, "induction constant alpha0");
  rwc->add_option("--A", ro.A, "induction constant A");

  ReportOpts po;
  auto* rp = app.add_subcommand("report", "check or replay a run manifest");
  rp->add_option("--manifest", po.manifest, "verify the digests listed in a manifest");
  rp->add_option("--replay", po.replay, "re-run a manifest and compare digests");

  for (CLI::App* sub : {lem, st, cp, ep, rwc, rp}) sub->fallthrough();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  set_thread_count(g.jobs > 0 ? g.jobs : omp_get_num_procs());
  CLI::App* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();

  try {
    if (chosen == rp) {
      if (po.manifest.empty() == po.replay.empty()) throw InvalidParameter("report needs exactly one of --manifest, --replay");
      if (!po.manifest.empty()) return verify_manifest(po.manifest);
      return replay_manifest(po.replay, g.out_dir, app.get_option("--out-dir")->count() > 0);
    }

    const report::Format f = report::parse_format(g.format);
    report::RunManifest manifest;
    manifest.command = command;
    manifest.args = replayable_args(args);
    manifest.seed = g.seed;
    manifest.started = report::utc_timestamp();

    Outcome out;
    if (chosen == lem)
      out = verify_lemmas(lo, f);
    else if (chosen == st)
      out = stein_command(so, f);
    else if (chosen == cp)
      out = couple_command(co, g, f);
    else if (chosen == ep)
      out = embed_ep(eo, g, f);
    else
      out = embed_rw(ro, g, f);

    fs::path dir = g.out_dir;
    std::string main_name;
    if (!g.out.empty()) {
      const fs::path p = g.out;
      dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      main_name = p.filename().string();
    }
    manifest.outputs = write_outputs(out, dir, main_name);
    manifest.exit_code = out.pass ? 0 : 1;
    Json params = option_params(app);
    const Json sub_params = option_params(*chosen);
    for (const auto& [k, v] : sub_params.items()) params[k] = v;
    manifest.params = params;
    manifest.finished = report::utc_timestamp();
    const std::string stem = fs::path(manifest.outputs.empty() ? out.stem : manifest.outputs[0].name).stem().string();
    report::write_file(dir / (stem + ".manifest.json"), report::dump(report::to_json(manifest)));

    for (const auto& line : out.lines) std::cout << line << "\n";
    std::cout << command << ": " << pass_word(out.pass) << " (" << manifest.outputs.size() << " files in "
              << dir.string() << ")\n";
    return manifest.exit_code;
  } catch (const InvalidParameter& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const CapabilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
}

int run_command(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_command(args);
}

}  // namespace kmt::cli

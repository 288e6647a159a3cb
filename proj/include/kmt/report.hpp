#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kmt/kmt_embed.hpp"
#include "kmt/lemma_verify.hpp"
#include "kmt/monotone_coupling.hpp"
#include "kmt/rw_embed.hpp"
#include "kmt/stein_markov.hpp"

namespace kmt::report {

inline constexpr std::string_view kToolVersion = "kmtc 1.0.0";

using Json = nlohmann::ordered_json;

enum class Format { Json, Csv };
Format parse_format(std::string_view name);

// Finite doubles become numbers; inf and nan become the strings "inf", "-inf", "nan".
Json number(double x);
double number_from(const Json& j);

// 17 significant digits.
std::string format_double(double x);

using Cell = std::variant<long, double, std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

std::string to_csv(const Table& table);

Json to_json(const lemmas::LemmaReport& r);
lemmas::LemmaReport lemma_from_json(const Json& j);
// Columns m, lemma, pass, worst_margin.
Table lemma_summary_table(const std::vector<lemmas::LemmaReport>& reports);
Table violation_table(const std::vector<lemmas::LemmaReport>& reports);

Json to_json(const coupling::WalkPairSweep& s);
Json to_json(const coupling::WalkPairCoupling& c);
Json to_json(const coupling::QuantileSweep& s);
Json to_json(const coupling::ChainTrajectory& t);
Table walk_pair_table(const coupling::WalkPairSweep& s);
Table quantile_table(const coupling::QuantileSweep& s);

Json to_json(const stein::SteinCoefficient& t);
Json to_json(const stein::CrossCheckReport& r);
Json to_json(const stein::StationaryCorpus& c);
Json to_json(const stein::FunctionalReport& f);
Json to_json(const stein::BinomialPairReport& r);
Json to_json(const stein::BinomialSweep& s);
Json to_json(const stein::HypergeoPairReport& r);
Json to_json(const stein::HypergeoSweep& s);
Json to_json(const stein::HoeffdingReport& r);
Json to_json(const stein::HoeffdingSweep& s);
Table stationary_table(const stein::StationaryCorpus& c);
Table binomial_table(const stein::BinomialSweep& s);
Table hypergeo_table(const stein::HypergeoSweep& s);

Json to_json(const ep::EpExperiment& e);
Table ep_summary_table(const ep::EpExperiment& e);
// Columns n, rep, D_n, delta_Gn, delta_W0, chi2max.
Table ep_sample_table(const ep::EpExperiment& e);

Json to_json(const rw::BridgeExperiment& e);
Json to_json(const rw::FullExperiment& e);
Table bridge_summary_table(const rw::BridgeExperiment& e);
Table full_summary_table(const rw::FullExperiment& e);
// Columns n, t, rep, T_star.
Table bridge_sample_table(const rw::BridgeExperiment& e);
// Columns n, rep, max_dev.
Table full_sample_table(const rw::FullExperiment& e);

// Two-space indented JSON with a trailing newline.
std::string dump(const Json& j);

// Throws IoError when the file cannot be created or written.
void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view bytes);

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::vector<std::string> args;  // subcommand arguments without output placement flags
  Json params;
  std::uint64_t seed = 0;
  std::string version{kToolVersion};
  std::string started, finished;
  int exit_code = 0;
  std::vector<OutputFile> outputs;
};

Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

std::string utc_timestamp();

}  // namespace kmt::report

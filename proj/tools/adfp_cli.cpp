// Copyright 2026 The adfp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pthread.h>
#include <signal.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "adfp/adfp.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;
constexpr std::uint64_t kDefaultTrainSeed = 7;

int exit_code_for(adfp::ErrorCode code) {
  switch (code) {
    case adfp::ErrorCode::kInvalidArgument: return kExitUsage;
    case adfp::ErrorCode::kInternal: return kExitInternal;
    default: return kExitData;
  }
}

void print_error(std::string_view kind, std::string_view message, int exit_code) {
  json j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = exit_code;
  std::cerr << j.dump() << '\n';
}

struct Globals {
  std::string config;
  std::string registry = "adf-v1";
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
};

// One manifest line per run, appended to <out-dir>/manifest.jsonl.
struct Manifest {
  json config = json::object();
  json inputs = json::array();
  json outputs = json::array();
  json metrics = json::object();
  std::optional<std::uint64_t> seed;
  std::string registry_version;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) adfp::fail(adfp::ErrorCode::kIo, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    adfp::fail(adfp::ErrorCode::kMalformed, path + ": " + e.what());
  }
}

std::ifstream open_in(const std::string& path, Manifest& m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) adfp::fail(adfp::ErrorCode::kIo, "cannot open " + path);
  m.inputs.push_back(path);
  return in;
}

class Output {
 public:
  Output(const Globals& g, const std::string& name, Manifest& m) {
    fs::path p(name);
    if (p.is_relative()) p = fs::path(g.out_dir) / p;
    path_ = p.string();
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) adfp::fail(adfp::ErrorCode::kIo, "cannot write " + path_);
    m.outputs.push_back(path_);
  }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) adfp::fail(adfp::ErrorCode::kIo, "write failed on " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

std::vector<adfp::Sample> read_samples(const std::string& path, const adfp::AttributeRegistry& reg,
                                       Manifest& m) {
  auto in = open_in(path, m);
  return adfp::read_samples_jsonl(in, reg);
}

std::vector<adfp::FingerprintGroup> read_groups(const std::string& path, Manifest& m) {
  auto in = open_in(path, m);
  return adfp::read_groups_jsonl(in);
}

adfp::ClassifierParams classifier_params(const Globals& g, Manifest& m) {
  adfp::ClassifierParams p;
  if (!g.config.empty()) p = adfp::classifier_params_from_json(read_json_file(g.config));
  p.validate();
  m.config = adfp::classifier_params_to_json(p);
  return p;
}

json report_summary(const std::map<adfp::DeviceConfig, adfp::VulnerabilityReport>& reports) {
  json j = json::object();
  for (const auto& [config, r] : reports) {
    j[config.key()] = {{"N_f", r.n_f}, {"TV", r.tv}, {"MV", r.mv}, {"A", r.accuracy}};
  }
  return j;
}

adfp::Channel parse_channel_flag(const std::string& s) {
  if (s != "web" && s != "app") {
    adfp::fail(adfp::ErrorCode::kInvalidArgument, "channel must be web or app");
  }
  return adfp::parse_channel(s);
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void append_manifest(const Globals& g, const std::string& command,
                     const std::vector<std::string>& argv, const Manifest& m, int exit_code,
                     double wall_s, const std::string& started) {
  json j;
  j["command"] = command;
  j["argv"] = argv;
  j["started_at"] = started;
  j["exit_code"] = exit_code;
  j["registry_version"] = m.registry_version;
  j["seed"] = m.seed ? json(*m.seed) : json(nullptr);
  j["config"] = m.config;
  j["inputs"] = m.inputs;
  j["outputs"] = m.outputs;
  j["metrics"] = m.metrics;
  j["wall_clock_s"] = wall_s;
  std::error_code ec;
  fs::create_directories(g.out_dir, ec);
  std::ofstream out(fs::path(g.out_dir) / "manifest.jsonl", std::ios::app);
  if (out) out << j.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adfp: ad-delivered fingerprint vulnerability toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config,
                 "JSON config for the subcommand (generator spec, collect config, classifier "
                 "params or selector config)");
  app.add_option("--seed", g.seed, "Random seed (synth: overrides the spec seed; train and "
                                   "simulate default to 7)");
  app.add_option("--registry", g.registry, "Registry tag or registry JSON path")
      ->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for outputs and manifest.jsonl")
      ->capture_default_str();

  Manifest manifest;
  std::function<void()> action;
  std::string command;
  auto registry = [&]() {
    auto reg = adfp::load_registry(g.registry);
    manifest.registry_version = reg.version();
    return reg;
  };

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic raw sample set");
  std::string synth_out = "samples.jsonl";
  std::optional<std::uint64_t> synth_devices;
  std::string synth_oracle;
  synth->add_option("--out", synth_out, "Output JSONL (relative to --out-dir)")
      ->capture_default_str();
  synth->add_option("--devices", synth_devices, "Override the number of devices");
  synth->add_option("--oracle", synth_oracle,
                    "Also write the generator's uniqueness oracle as JSONL");
  synth->callback([&] {
    command = "synth";
    action = [&] {
      const auto reg = registry();
      auto spec = g.config.empty() ? adfp::benchmark_spec()
                                   : adfp::generator_spec_from_json(read_json_file(g.config));
      if (!g.config.empty()) manifest.inputs.push_back(g.config);
      if (g.seed) spec.population.seed = *g.seed;
      if (synth_devices) spec.population.n_devices = *synth_devices;
      manifest.seed = spec.population.seed;
      manifest.config = adfp::generator_spec_to_json(spec);
      const auto samples = adfp::generate(spec, reg);
      Output out(g, synth_out, manifest);
      adfp::write_samples_jsonl(out.stream(), samples, reg);
      out.close();
      manifest.metrics["samples"] = samples.size();
      if (!synth_oracle.empty()) {
        const auto oracle = adfp::oracle_uniqueness(samples, reg);
        Output o(g, synth_oracle, manifest);
        for (const auto& [key, label] : oracle) {
          json j;
          j["config"] = key.first.key();
          j["digest"] = key.second;
          j["gt"] = label.ground_truth;
          j["n_samples"] = label.n_samples;
          j["n_ad_ids"] = label.ad_ids.size();
          o.stream() << j.dump() << '\n';
        }
        o.close();
        manifest.metrics["oracle_keys"] = oracle.size();
      }
    };
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP collection endpoint until SIGINT/SIGTERM");
  std::optional<std::string> serve_host;
  std::optional<int> serve_port;
  std::optional<std::string> serve_storage;
  serve->add_option("--host", serve_host, "Listen address (overrides config and environment)");
  serve->add_option("--port", serve_port, "Listen port (overrides config and environment)");
  serve->add_option("--storage-dir", serve_storage, "Segment directory (overrides config and "
                                                    "environment)");
  serve->callback([&] {
    command = "serve";
    action = [&] {
      auto cfg = adfp::load_collect_config(g.config);
      if (serve_host) cfg.listen_host = *serve_host;
      if (serve_port) cfg.listen_port = *serve_port;
      if (serve_storage) cfg.storage_dir = *serve_storage;
      cfg.validate();
      manifest.config = adfp::collect_config_to_json(cfg);
      const auto reg = adfp::load_registry(cfg.registry);
      manifest.registry_version = reg.version();
      sigset_t set;
      sigemptyset(&set);
      sigaddset(&set, SIGINT);
      sigaddset(&set, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &set, nullptr);
      adfp::CollectServer server(cfg, reg);
      std::thread waiter([&] {
        int sig = 0;
        sigwait(&set, &sig);
        server.stop();
      });
      std::cerr << json{{"status", "listening"},
                        {"host", cfg.listen_host},
                        {"port", cfg.listen_port},
                        {"storage_dir", cfg.storage_dir}}
                       .dump()
                << '\n';
      const bool ok = server.listen();
      if (!ok) {
        pthread_kill(waiter.native_handle(), SIGTERM);
      }
      waiter.join();
      manifest.metrics = server.service().stats_json();
      if (!ok) {
        adfp::fail(adfp::ErrorCode::kIo, "cannot listen on " + cfg.listen_host + ":" +
                                             std::to_string(cfg.listen_port));
      }
    };
  });

  // export
  auto* exp = app.add_subcommand("export", "Export stored samples from a collect storage dir");
  std::string export_out = "export.jsonl";
  std::optional<std::string> export_storage;
  adfp::TimeRange export_range;
  exp->add_option("--storage-dir", export_storage, "Segment directory (default from config)");
  exp->add_option("--from", export_range.from, "First UTC second (inclusive)");
  exp->add_option("--to", export_range.to, "Last UTC second (exclusive)");
  exp->add_option("--out", export_out, "Output JSONL")->capture_default_str();
  exp->callback([&] {
    command = "export";
    action = [&] {
      auto cfg = adfp::load_collect_config(g.config);
      if (export_storage) cfg.storage_dir = *export_storage;
      manifest.config = adfp::collect_config_to_json(cfg);
      manifest.registry_version = cfg.registry;
      if (!fs::is_directory(cfg.storage_dir)) {
        adfp::fail(adfp::ErrorCode::kIo, "no storage dir " + cfg.storage_dir);
      }
      adfp::SampleStore store(cfg.storage_dir, false);
      manifest.inputs.push_back(cfg.storage_dir);
      Output out(g, export_out, manifest);
      store.export_raw(out.stream(), export_range);
      out.close();
      manifest.metrics["quarantined_segments"] = store.quarantined();
    };
  });

  // filter
  auto* filter = app.add_subcommand("filter", "Keep samples with an ad ID, no DNT, all keys");
  std::string filter_in;
  std::string filter_out = "filtered.jsonl";
  filter->add_option("--in", filter_in, "Raw sample JSONL")->required();
  filter->add_option("--out", filter_out, "Output JSONL")->capture_default_str();
  filter->callback([&] {
    command = "filter";
    action = [&] {
      const auto reg = registry();
      const auto samples = read_samples(filter_in, reg, manifest);
      const auto kept = adfp::filter_raw(samples);
      Output out(g, filter_out, manifest);
      adfp::write_samples_jsonl(out.stream(), kept, reg);
      out.close();
      std::size_t with_ad_id = 0;
      for (const auto& s : samples) with_ad_id += s.ad_id ? 1 : 0;
      manifest.metrics = {{"input", samples.size()},
                          {"retained", kept.size()},
                          {"with_ad_id", with_ad_id}};
    };
  });

  // fingerprint
  auto* fpr = app.add_subcommand("fingerprint", "Group samples into a fingerprint dataset");
  std::string fp_in;
  std::string fp_out = "fingerprints.jsonl";
  std::string fp_policy;
  std::size_t fp_partitions = 1;
  fpr->add_option("--in", fp_in, "Filtered sample JSONL")->required();
  fpr->add_option("--out", fp_out, "Output JSONL")->capture_default_str();
  fpr->add_option("--policy", fp_policy, "Blocking policy name or file applied first");
  fpr->add_option("--partitions", fp_partitions, "Concurrent digest partitions")
      ->capture_default_str()
      ->check(CLI::Range(1, 64));
  fpr->callback([&] {
    command = "fingerprint";
    action = [&] {
      const auto reg = registry();
      const auto samples = read_samples(fp_in, reg, manifest);
      std::optional<adfp::BlockingPolicy> policy;
      if (!fp_policy.empty()) {
        policy = adfp::resolve_policy(fp_policy, reg);
        manifest.config["policy"] = adfp::policy_to_json(*policy);
      }
      manifest.config["partitions"] = fp_partitions;
      const auto ds = adfp::build_fingerprint_dataset(samples, reg, fp_partitions,
                                                      policy ? &*policy : nullptr);
      Output out(g, fp_out, manifest);
      adfp::write_groups_jsonl(out.stream(), ds.groups, reg);
      out.close();
      std::size_t unique = 0;
      for (const auto& gr : ds.groups) unique += gr.ground_truth;
      manifest.metrics = {{"samples", samples.size()},
                          {"groups", ds.groups.size()},
                          {"singletons", ds.singletons},
                          {"unique_groups", unique}};
    };
  });

  // stats
  auto* stats = app.add_subcommand("stats", "Per-configuration discrimination statistics CSV");
  std::string stats_in;
  std::string stats_out = "stats.csv";
  std::string stats_weighting = "groups";
  stats->add_option("--in", stats_in, "Fingerprint dataset JSONL")->required();
  stats->add_option("--out", stats_out, "Output CSV")->capture_default_str();
  stats->add_option("--weighting", stats_weighting, "groups or samples")
      ->capture_default_str()
      ->check(CLI::IsMember({"groups", "samples"}));
  stats->callback([&] {
    command = "stats";
    action = [&] {
      const auto reg = registry();
      const auto groups = read_groups(stats_in, manifest);
      manifest.config["weighting"] = stats_weighting;
      const auto report = adfp::compute_stats(groups, reg,
                                              stats_weighting == "samples"
                                                  ? adfp::StatsWeighting::kSamples
                                                  : adfp::StatsWeighting::kGroups);
      Output out(g, stats_out, manifest);
      adfp::write_stats_csv(out.stream(), report);
      out.close();
      for (const auto& [config, n] : report.reported_count) {
        manifest.metrics["reported_count"][config.key()] = n;
      }
    };
  });

  // train
  auto* train = app.add_subcommand("train", "Train per-channel classifiers, label every group");
  std::string train_in;
  std::string train_out = "measured.jsonl";
  train->add_option("--in", train_in, "Fingerprint dataset JSONL")->required();
  train->add_option("--out", train_out, "Measured dataset JSONL")->capture_default_str();
  train->callback([&] {
    command = "train";
    action = [&] {
      const auto reg = registry();
      const auto params = classifier_params(g, manifest);
      const std::uint64_t seed = g.seed.value_or(kDefaultTrainSeed);
      manifest.seed = seed;
      auto groups = read_groups(train_in, manifest);
      if (groups.empty()) adfp::fail(adfp::ErrorCode::kEmptyInput, "no groups in " + train_in);
      const auto models = adfp::measure_uniqueness(groups, reg, params, seed);
      for (const auto& [ch, clf] : models) {
        const std::string tag(adfp::to_string(ch));
        Output model(g, "model-" + tag + ".json", manifest);
        model.stream() << adfp::classifier_to_json(clf).dump() << '\n';
        model.close();
        Output folds(g, "folds-" + tag + ".csv", manifest);
        adfp::write_fold_metrics_csv(folds.stream(), clf);
        folds.close();
        double acc = 0.0;
        for (const auto& f : clf.cv_metrics) acc += f.accuracy;
        manifest.metrics["mean_fold_accuracy"][tag] =
            acc / static_cast<double>(clf.cv_metrics.size());
      }
      Output out(g, train_out, manifest);
      adfp::write_groups_jsonl(out.stream(), groups, reg);
      out.close();
    };
  });

  // report
  auto* rep = app.add_subcommand("report", "TV / MV / accuracy per configuration");
  std::string rep_in;
  std::string rep_out = "reports.csv";
  std::string rep_shares;
  std::string rep_weighting = "groups";
  rep->add_option("--in", rep_in, "Measured dataset JSONL")->required();
  rep->add_option("--out", rep_out, "Output CSV")->capture_default_str();
  rep->add_option("--shares", rep_shares, "Market share CSV; writes extrapolation.json");
  rep->add_option("--weighting", rep_weighting, "groups or samples")
      ->capture_default_str()
      ->check(CLI::IsMember({"groups", "samples"}));
  rep->callback([&] {
    command = "report";
    action = [&] {
      const auto groups = read_groups(rep_in, manifest);
      manifest.config["weighting"] = rep_weighting;
      const auto reports = adfp::vulnerability_by_config(
          groups, rep_weighting == "samples" ? adfp::MetricWeighting::kSamples
                                             : adfp::MetricWeighting::kGroups);
      Output out(g, rep_out, manifest);
      adfp::write_reports_csv(out.stream(), reports);
      out.close();
      manifest.metrics["reports"] = report_summary(reports);
      if (!rep_shares.empty()) {
        auto in = open_in(rep_shares, manifest);
        const auto shares = adfp::read_shares_csv(in);
        std::map<adfp::DeviceConfig, double> mv;
        std::map<adfp::DeviceConfig, double> tv;
        for (const auto& [config, r] : reports) {
          mv[config] = r.mv;
          tv[config] = r.tv;
        }
        std::map<std::string, adfp::MarketShareTable> by_universe;
        for (const auto& row : shares.rows) by_universe[row.pattern.device_type].rows.push_back(row);
        json ex = json::object();
        for (const auto& [universe, table] : by_universe) {
          ex[universe] = {{"MV", adfp::extrapolate(mv, table)},
                          {"TV", adfp::extrapolate(tv, table)}};
        }
        Output eo(g, "extrapolation.json", manifest);
        eo.stream() << ex.dump(2) << '\n';
        eo.close();
        manifest.metrics["extrapolation"] = ex;
      }
    };
  });

  // select
  auto* sel = app.add_subcommand("select", "Choose meta-attributes to block from a stats CSV");
  std::string sel_stats;
  std::string sel_out = "policy.json";
  std::string sel_name = "selected";
  bool sel_reconstruction = false;
  std::optional<double> sel_cmin;
  std::optional<double> sel_hmin;
  std::vector<std::string> sel_include;
  std::vector<std::string> sel_exclude;
  sel->add_option("--stats", sel_stats, "Stats CSV (stats output or the discrimination table)")
      ->required();
  sel->add_option("--out", sel_out, "Output policy JSON")->capture_default_str();
  sel->add_option("--name", sel_name, "Policy name")->capture_default_str();
  sel->add_flag("--shieldf-overrides", sel_reconstruction,
                "Start from the overrides that reproduce the ShieldF set");
  sel->add_option("--cardinality-min", sel_cmin, "Block when |S| exceeds this");
  sel->add_option("--entropy-min", sel_hmin, "Block when h reaches this");
  sel->add_option("--include", sel_include, "Always block this meta-attribute");
  sel->add_option("--exclude", sel_exclude, "Never block this meta-attribute");
  sel->callback([&] {
    command = "select";
    action = [&] {
      const auto reg = registry();
      adfp::SelectorConfig cfg = sel_reconstruction
                                     ? adfp::SelectorConfig::shieldf_reconstruction()
                                     : adfp::SelectorConfig{};
      if (!g.config.empty()) cfg = adfp::selector_config_from_json(read_json_file(g.config), cfg);
      if (sel_cmin) cfg.cardinality_min = *sel_cmin;
      if (sel_hmin) cfg.entropy_min = *sel_hmin;
      cfg.include_overrides.insert(sel_include.begin(), sel_include.end());
      cfg.exclude_overrides.insert(sel_exclude.begin(), sel_exclude.end());
      manifest.config = adfp::selector_config_to_json(cfg);
      auto in = open_in(sel_stats, manifest);
      const auto report = adfp::read_stats_csv(in);
      auto policy = adfp::select_blockset(report, cfg);
      policy.name = sel_name;
      adfp::validate_policy(policy, reg);
      Output out(g, sel_out, manifest);
      out.stream() << adfp::policy_to_json(policy).dump(2) << '\n';
      out.close();
      manifest.metrics["blocked"] = policy.blocked;
      std::cout << adfp::policy_to_json(policy).dump() << '\n';
    };
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "Retrain under blocking policies, compare metrics");
  std::string sim_in;
  std::string sim_out = "comparison.csv";
  std::vector<std::string> sim_policies = {"shieldf"};
  std::string sim_channel = "web";
  sim->add_option("--in", sim_in, "Filtered sample JSONL")->required();
  sim->add_option("--out", sim_out, "Output CSV")->capture_default_str();
  sim->add_option("--policy", sim_policies, "Policy names or files (repeatable)")
      ->capture_default_str();
  sim->add_option("--channel", sim_channel, "web or app")
      ->capture_default_str()
      ->check(CLI::IsMember({"web", "app"}));
  sim->callback([&] {
    command = "simulate";
    action = [&] {
      const auto reg = registry();
      const auto params = classifier_params(g, manifest);
      const std::uint64_t seed = g.seed.value_or(kDefaultTrainSeed);
      manifest.seed = seed;
      const auto samples = read_samples(sim_in, reg, manifest);
      std::vector<adfp::BlockingPolicy> policies;
      for (const auto& p : sim_policies) policies.push_back(adfp::resolve_policy(p, reg));
      json pj = json::array();
      for (const auto& p : policies) pj.push_back(adfp::policy_to_json(p));
      manifest.config["policies"] = pj;
      const auto results = adfp::benchmark_masks(samples, policies, reg,
                                                 parse_channel_flag(sim_channel), params, seed);
      Output out(g, sim_out, manifest);
      adfp::write_comparison_csv(out.stream(), results);
      out.close();
      for (const auto& r : results) {
        json d = json::object();
        for (const auto& [config, delta] : r.deltas) {
          d[config.key()] = {{"dTV_pct", adfp::format_delta(delta.tv)},
                             {"dMV_pct", adfp::format_delta(delta.mv)},
                             {"dA_pct", adfp::format_delta(delta.accuracy)}};
        }
        manifest.metrics[r.policy] = d;
      }
    };
  });

  // plot
  auto* plt = app.add_subcommand("plot", "Static SVG charts from report, stats or comparison CSVs");
  std::string plot_kind;
  std::string plot_in;
  std::string plot_out;
  std::string plot_metric = "dTV_pct";
  plt->add_option("--kind", plot_kind, "metrics (reports CSV), entropy (stats CSV) or deltas "
                                       "(comparison CSV)")
      ->required()
      ->check(CLI::IsMember({"metrics", "entropy", "deltas"}));
  plt->add_option("--in", plot_in, "Input CSV")->required();
  plt->add_option("--out", plot_out, "Output SVG (default <kind>.svg)");
  plt->add_option("--metric", plot_metric, "deltas only: dTV_pct, dMV_pct or dA_pct")
      ->capture_default_str()
      ->check(CLI::IsMember({"dTV_pct", "dMV_pct", "dA_pct"}));
  plt->callback([&] {
    command = "plot";
    action = [&] {
      auto in = open_in(plot_in, manifest);
      manifest.config = {{"kind", plot_kind}, {"metric", plot_metric}};
      std::string svg;
      if (plot_kind == "metrics") {
        svg = adfp::plot::render_bars(adfp::plot::metrics_chart(adfp::read_reports_csv(in)));
      } else if (plot_kind == "entropy") {
        svg = adfp::plot::render_heatmap(adfp::plot::entropy_heatmap(adfp::read_stats_csv(in)));
      } else {
        svg = adfp::plot::render_bars(adfp::plot::deltas_chart(in, plot_metric));
      }
      Output out(g, plot_out.empty() ? plot_kind + ".svg" : plot_out, manifest);
      out.stream() << svg;
      out.close();
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  const std::vector<std::string> args(argv, argv + argc);
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  try {
    std::error_code ec;
    fs::create_directories(g.out_dir, ec);
    if (ec) adfp::fail(adfp::ErrorCode::kIo, "cannot create out dir " + g.out_dir);
    // Commands that never touch the registry still record the active tag.
    try {
      manifest.registry_version = adfp::load_registry(g.registry).version();
    } catch (const adfp::Error&) {
      manifest.registry_version = g.registry;
    }
    action();
  } catch (const adfp::Error& e) {
    code = exit_code_for(e.code());
    print_error(adfp::to_string(e.code()), e.what(), code);
  } catch (const std::exception& e) {
    code = kExitInternal;
    print_error("internal", e.what(), code);
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  append_manifest(g, command, args, manifest, code, wall, started);
  return code;
}

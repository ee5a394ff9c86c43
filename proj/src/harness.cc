// Copyright 2026 The ctrace Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctrace/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "text_util.h"

namespace ctrace {
namespace {

using Json = nlohmann::json;
using OJson = nlohmann::ordered_json;

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << content;
  if (!out) throw InvalidArgument("write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool is_fair(PolicyKind k) {
  return k == PolicyKind::kFairDegGreedy || k == PolicyKind::kFairDepRound;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Config reading. Every object is checked against its allowed keys so typos
// fail loudly.
void check_keys(const Json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw InvalidArgument(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok |= it.key() == a;
    if (!ok) throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void read_opt(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<std::uint64_t> read_seeds(const Json& j, const std::string& where) {
  if (j.contains("seeds")) {
    if (j.contains("trials")) {
      throw InvalidArgument(where + ": give either seeds or trials, not both");
    }
    return j.at("seeds").get<std::vector<std::uint64_t>>();
  }
  if (j.contains("trials")) {
    const int trials = j.at("trials").get<int>();
    if (trials < 1) throw InvalidArgument(where + ": trials must be at least 1");
    const std::uint64_t first = j.value("first_seed", std::uint64_t{1});
    std::vector<std::uint64_t> out;
    for (int i = 0; i < trials; ++i) out.push_back(first + i);
    return out;
  }
  return {};
}

NetworkSource network_from_json(const Json& j) {
  check_keys(j, "network",
             {"saved", "edges", "attributes", "generate", "demographics", "compliance_noise",
              "demographics_seed", "augment", "augment_seed"});
  NetworkSource src;
  read_opt(j, "saved", src.saved_prefix);
  read_opt(j, "edges", src.edge_file);
  read_opt(j, "attributes", src.attr_file);
  if (j.contains("generate")) {
    const Json& g = j.at("generate");
    check_keys(g, "network.generate",
               {"nodes", "mean_degree", "kind", "degree_sigma", "rewire_probability",
                "duration_median", "duration_sigma", "target_mean_q", "seed"});
    read_opt(g, "nodes", src.gen.nodes);
    read_opt(g, "mean_degree", src.gen.mean_degree);
    if (g.contains("kind")) src.gen.kind = parse_generator_kind(g.at("kind").get<std::string>());
    read_opt(g, "degree_sigma", src.gen.degree_sigma);
    read_opt(g, "rewire_probability", src.gen.rewire_probability);
    read_opt(g, "duration_median", src.gen.duration_median);
    read_opt(g, "duration_sigma", src.gen.duration_sigma);
    read_opt(g, "target_mean_q", src.gen.target_mean_q);
    read_opt(g, "seed", src.gen.seed);
  }
  read_opt(j, "demographics", src.demographics);
  read_opt(j, "compliance_noise", src.compliance_noise);
  read_opt(j, "demographics_seed", src.demographics_seed);
  read_opt(j, "augment", src.augment);
  read_opt(j, "augment_seed", src.augment_seed);
  return src;
}

OJson network_to_json(const NetworkSource& src) {
  OJson j;
  if (!src.saved_prefix.empty()) j["saved"] = src.saved_prefix;
  if (!src.edge_file.empty()) {
    j["edges"] = src.edge_file;
    j["attributes"] = src.attr_file;
  }
  OJson g;
  g["nodes"] = src.gen.nodes;
  g["mean_degree"] = src.gen.mean_degree;
  g["kind"] = generator_kind_name(src.gen.kind);
  g["degree_sigma"] = src.gen.degree_sigma;
  g["rewire_probability"] = src.gen.rewire_probability;
  g["duration_median"] = src.gen.duration_median;
  g["duration_sigma"] = src.gen.duration_sigma;
  g["target_mean_q"] = src.gen.target_mean_q;
  g["seed"] = src.gen.seed;
  j["generate"] = g;
  j["demographics"] = src.demographics;
  j["compliance_noise"] = src.compliance_noise;
  j["demographics_seed"] = src.demographics_seed;
  j["augment"] = src.augment;
  j["augment_seed"] = src.augment_seed;
  return j;
}

void simulation_from_json(const Json& j, SimulationConfig& sim) {
  check_keys(j, "simulation",
             {"initial_infections", "intervention_start", "quarantine_length", "horizon",
              "latent_compliance", "exposure_caps", "harvest_policy"});
  read_opt(j, "initial_infections", sim.initial_infections);
  read_opt(j, "intervention_start", sim.intervention_start);
  read_opt(j, "quarantine_length", sim.quarantine_length);
  read_opt(j, "horizon", sim.horizon);
  read_opt(j, "latent_compliance", sim.latent_compliance);
  if (j.contains("exposure_caps") && !j.at("exposure_caps").is_null()) {
    PerLabel<double> caps;
    caps.fill(kInfinity);
    const Json& c = j.at("exposure_caps");
    if (!c.is_object()) throw InvalidArgument("simulation.exposure_caps must be an object");
    for (auto it = c.begin(); it != c.end(); ++it) {
      caps[label_index(parse_label(it.key()))] =
          it.value().is_null() ? kInfinity : it.value().get<double>();
    }
    sim.exposure_caps = caps;
  }
}

OJson simulation_to_json(const SimulationConfig& sim) {
  OJson j;
  j["initial_infections"] = sim.initial_infections;
  j["intervention_start"] = sim.intervention_start;
  j["quarantine_length"] = sim.quarantine_length;
  j["horizon"] = sim.horizon;
  j["latent_compliance"] = sim.latent_compliance;
  if (sim.exposure_caps) {
    OJson c;
    for (Label l : kAllLabels) {
      const double v = (*sim.exposure_caps)[label_index(l)];
      c[std::string(1, label_code(l))] = std::isfinite(v) ? OJson(v) : OJson(nullptr);
    }
    j["exposure_caps"] = c;
  }
  return j;
}

}  // namespace

BudgetEstimate estimate_budget(double population, double tracers_per_capita,
                               double contacts_low, double contacts_high) {
  if (!(population > 0.0)) throw InvalidArgument("population must be positive");
  if (!(tracers_per_capita > 0.0)) throw InvalidArgument("tracer rate must be positive");
  if (!(contacts_low > 0.0) || contacts_high < contacts_low) {
    throw InvalidArgument("contacts per tracer must be a positive range");
  }
  BudgetEstimate e;
  e.tracers_exact = population * tracers_per_capita;
  e.tracers = static_cast<int>(std::llround(e.tracers_exact));
  e.tracers_low = static_cast<int>(std::floor(e.tracers_exact + 1e-9));
  e.tracers_high = static_cast<int>(std::ceil(e.tracers_exact - 1e-9));
  e.budget_low = static_cast<int>(std::llround(e.tracers_exact * contacts_low));
  e.budget_high = static_cast<int>(std::llround(e.tracers_exact * contacts_high));
  return e;
}

TracingMode parse_tracing_mode(std::string_view name) {
  if (name == "manual") return TracingMode::kManual;
  if (name == "digital") return TracingMode::kDigital;
  if (name == "full-information" || name == "full") return TracingMode::kFullInformation;
  throw InvalidArgument("unknown mode '" + std::string(name) + "'");
}

std::string tracing_mode_name(TracingMode mode) {
  switch (mode) {
    case TracingMode::kManual: return "manual";
    case TracingMode::kDigital: return "digital";
    case TracingMode::kFullInformation: return "full-information";
  }
  return "?";
}

bool policy_allowed(TracingMode mode, PolicyKind kind) {
  switch (mode) {
    case TracingMode::kFullInformation:
      return true;
    case TracingMode::kManual:
      return kind != PolicyKind::kPrivateDegGreedy;
    case TracingMode::kDigital:
      return kind == PolicyKind::kPrivateDegGreedy || kind == PolicyKind::kDegGreedy ||
             kind == PolicyKind::kDepRound || kind == PolicyKind::kRandom ||
             kind == PolicyKind::kNone;
  }
  return false;
}

ContactNetwork build_network(const NetworkSource& src) {
  ContactNetwork net;
  if (!src.saved_prefix.empty()) {
    net = load_saved_network(src.saved_prefix);
  } else if (!src.edge_file.empty()) {
    if (src.attr_file.empty()) throw InvalidArgument("network.edges needs network.attributes");
    net = calibrate_transmissions(load_network(src.edge_file, src.attr_file),
                                  src.gen.target_mean_q)
              .network;
  } else {
    net = generate_network(src.gen);
    if (src.demographics == "montgomery") {
      net = assign_demographics(net, kMontgomeryFractions, kBaseCompliance,
                                src.compliance_noise, src.demographics_seed);
    } else if (src.demographics == "albemarle") {
      PerLabel<double> f = kAlbemarleFractions;
      double sum = 0;
      for (double v : f) sum += v;
      for (double& v : f) v /= sum;
      net = assign_demographics(net, f, kBaseCompliance, src.compliance_noise,
                                src.demographics_seed);
    } else if (src.demographics != "none") {
      throw InvalidArgument("unknown demographics '" + src.demographics + "'");
    }
  }
  if (src.augment > 0.0) {
    net = augment_network(net, src.augment, src.augment_seed);
  }
  return net;
}

void ExperimentSpec::validate() const {
  if (policies.empty()) throw InvalidArgument("experiment needs at least one policy");
  if (seeds.empty()) throw InvalidArgument("experiment needs at least one seed (trials >= 1)");
  if (threads < 1) throw InvalidArgument("threads must be at least 1");
  for (PolicyKind k : policies) {
    if (!policy_allowed(mode, k)) {
      throw InvalidArgument("policy " + policy_kind_name(k) + " is not available in " +
                            tracing_mode_name(mode) + " mode");
    }
  }
  for (double b : budgets) {
    if (!(b >= 0.0)) throw InvalidArgument("budgets must be non-negative");
    if (mode != TracingMode::kDigital && b != std::floor(b)) {
      throw InvalidArgument("budgets must be whole numbers outside digital mode");
    }
  }
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw InvalidArgument("duplicate seeds");
  SimulationConfig probe = sim;
  probe.budget = 0;
  probe.validate();
}

ExperimentSpec experiment_spec_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError("config", 1, e.what());
  }
  try {
    check_keys(j, "config",
               {"network", "mode", "policies", "budgets", "seeds", "trials", "first_seed",
                "fairness", "simulation", "privacy", "seg_degree", "output", "threads",
                "bench"});
    ExperimentSpec spec;
    if (j.contains("network")) spec.network = network_from_json(j.at("network"));
    if (j.contains("mode")) spec.mode = parse_tracing_mode(j.at("mode").get<std::string>());
    if (j.contains("policies")) {
      spec.policies.clear();
      for (const auto& p : j.at("policies")) {
        spec.policies.push_back(parse_policy_kind(p.get<std::string>()));
      }
    }
    if (j.contains("budgets")) spec.budgets = j.at("budgets").get<std::vector<double>>();
    if (j.contains("seeds") || j.contains("trials")) spec.seeds = read_seeds(j, "config");
    if (j.contains("fairness")) {
      const Json& f = j.at("fairness");
      if (f.is_string()) {
        spec.fairness = {parse_fairness_policy(f.get<std::string>())};
      } else {
        for (const auto& x : f) spec.fairness.push_back(parse_fairness_policy(x.get<std::string>()));
      }
    }
    if (j.contains("simulation")) simulation_from_json(j.at("simulation"), spec.sim);
    if (j.contains("privacy")) {
      const Json& p = j.at("privacy");
      check_keys(p, "privacy", {"epsilon", "p"});
      read_opt(p, "epsilon", spec.privacy.epsilon);
      read_opt(p, "p", spec.privacy.p);
    }
    if (j.contains("seg_degree")) {
      const Json& s = j.at("seg_degree");
      check_keys(s, "seg_degree", {"high_fraction", "high_share"});
      read_opt(s, "high_fraction", spec.seg.high_fraction);
      read_opt(s, "high_share", spec.seg.high_share);
    }
    read_opt(j, "output", spec.output_dir);
    read_opt(j, "threads", spec.threads);
    spec.validate();
    return spec;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  return experiment_spec_from_json(read_text(path));
}

std::string experiment_spec_to_json(const ExperimentSpec& spec) {
  OJson j;
  j["network"] = network_to_json(spec.network);
  j["mode"] = tracing_mode_name(spec.mode);
  OJson pol = OJson::array();
  for (PolicyKind k : spec.policies) pol.push_back(policy_kind_name(k));
  j["policies"] = pol;
  j["budgets"] = spec.budgets;
  j["seeds"] = spec.seeds;
  OJson fair = OJson::array();
  for (FairnessPolicy f : spec.fairness) fair.push_back(fairness_policy_name(f));
  j["fairness"] = fair;
  j["simulation"] = simulation_to_json(spec.sim);
  j["privacy"] = {{"epsilon", spec.privacy.epsilon}, {"p", spec.privacy.p}};
  j["seg_degree"] = {{"high_fraction", spec.seg.high_fraction},
                     {"high_share", spec.seg.high_share}};
  j["output"] = spec.output_dir;
  j["threads"] = spec.threads;
  return j.dump(2) + "\n";
}

ContactNetwork apply_mode(const ContactNetwork& net, TracingMode mode) {
  if (mode != TracingMode::kDigital || net.num_nodes() == 0) return net;
  double mean = 0.0;
  for (double c : net.compliances()) mean += c;
  mean /= net.num_nodes();
  return net.with_attributes(std::vector<Label>(net.labels().begin(), net.labels().end()),
                             std::vector<double>(net.num_nodes(), mean / 2.0));
}

std::vector<int> resolve_budgets(const ExperimentSpec& spec, int population) {
  std::vector<int> out;
  if (spec.budgets.empty()) {
    if (spec.mode == TracingMode::kDigital) {
      for (double pct : {0.5, 1.0, 2.0}) {
        out.push_back(static_cast<int>(std::llround(pct / 100.0 * population)));
      }
    } else {
      const BudgetEstimate e = estimate_budget(population);
      out = {e.budget_low, static_cast<int>(std::llround((e.budget_low + e.budget_high) / 2.0)),
             e.budget_high};
    }
  } else {
    for (double b : spec.budgets) {
      out.push_back(spec.mode == TracingMode::kDigital
                        ? static_cast<int>(std::llround(b / 100.0 * population))
                        : static_cast<int>(b));
    }
  }
  // Keep the given order but drop repeats.
  std::vector<int> unique;
  for (int b : out) {
    if (std::find(unique.begin(), unique.end(), b) == unique.end()) unique.push_back(b);
  }
  return unique;
}

std::string RunKey::policy_label() const {
  std::string s = policy_kind_name(policy);
  if (fairness) s += "-" + fairness_policy_name(*fairness);
  return s;
}

std::string RunKey::label() const {
  return policy_label() + "_b" + std::to_string(budget) + "_s" + std::to_string(seed);
}

SummaryStat summarize(std::span<const double> values) {
  SummaryStat s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / values.size();
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (values.size() - 1));
  }
  return s;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const ContactNetwork& net) {
  spec.validate();
  const std::vector<int> budgets = resolve_budgets(spec, net.num_nodes());
  std::vector<RunKey> keys;
  for (PolicyKind kind : spec.policies) {
    std::vector<std::optional<FairnessPolicy>> fair;
    if (is_fair(kind)) {
      if (spec.fairness.empty()) fair.push_back(FairnessPolicy::kA);
      for (FairnessPolicy f : spec.fairness) fair.push_back(f);
    } else {
      fair.push_back(std::nullopt);
    }
    for (const auto& f : fair) {
      for (int b : budgets) {
        for (std::uint64_t seed : spec.seeds) keys.push_back({kind, f, b, seed});
      }
    }
  }

  // One policy object per kind; EC caches its centrality vector.
  std::map<PolicyKind, Policy> policies;
  for (PolicyKind kind : spec.policies) {
    PolicyConfig pc;
    pc.kind = kind;
    pc.privacy = spec.privacy;
    pc.seg = spec.seg;
    policies.emplace(kind, make_policy(pc, &net));
  }

  ExperimentResult result;
  result.runs.resize(keys.size());
  std::atomic<std::size_t> next{0};
  std::mutex failure_mu;
  std::optional<std::size_t> failed_index;
  std::string failure;

  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= keys.size()) return;
      {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (failed_index) return;
      }
      const RunKey& key = keys[i];
      SimulationConfig cfg = spec.sim;
      cfg.budget = key.budget;
      cfg.seed = key.seed;
      cfg.policy.kind = key.policy;
      cfg.policy.privacy = spec.privacy;
      cfg.policy.seg = spec.seg;
      cfg.fairness = key.fairness;
      try {
        RunResult& r = result.runs[i];
        r.key = key;
        r.trajectory = run_mdp(net, policies.at(key.policy), cfg);
        r.metrics = trajectory_metrics(r.trajectory);
        r.total_infected = r.trajectory.total_infected();
        r.total_requested = r.trajectory.total_requested();
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failed_index || i < *failed_index) {
          failed_index = i;
          failure = e.what();
        }
      }
    }
  };
  const int threads = std::min<int>(spec.threads, std::max<std::size_t>(keys.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failed_index) {
    const RunKey& key = keys[*failed_index];
    throw ContractViolation("run " + key.label() + " failed (replay with policy " +
                            key.policy_label() + ", budget " + std::to_string(key.budget) +
                            ", seed " + std::to_string(key.seed) + "): " + failure);
  }

  // Aggregate consecutive runs sharing (policy, fairness, budget).
  for (std::size_t i = 0; i < result.runs.size();) {
    std::size_t j = i;
    std::vector<double> pct, peak, peak_t;
    while (j < result.runs.size() && result.runs[j].key.policy == result.runs[i].key.policy &&
           result.runs[j].key.fairness == result.runs[i].key.fairness &&
           result.runs[j].key.budget == result.runs[i].key.budget) {
      pct.push_back(result.runs[j].metrics.total_infection_pct);
      peak.push_back(result.runs[j].metrics.peak_known_infections);
      peak_t.push_back(result.runs[j].metrics.peak_timestep);
      ++j;
    }
    Aggregate a;
    a.policy = result.runs[i].key.policy;
    a.fairness = result.runs[i].key.fairness;
    a.budget = result.runs[i].key.budget;
    a.runs = static_cast<int>(j - i);
    a.total_infection_pct = summarize(pct);
    a.peak_known_infections = summarize(peak);
    a.peak_timestep = summarize(peak_t);
    result.aggregates.push_back(a);
    if (a.fairness) {
      result.fairness_table.push_back({a.policy, a.budget, *a.fairness, a.total_infection_pct});
    }
    i = j;
  }
  return result;
}

std::string runs_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "policy,fairness,budget,seed,total_infection_pct,total_infected,"
         "peak_known_infections,peak_timestep,total_requested\n";
  for (const RunResult& r : result.runs) {
    out << policy_kind_name(r.key.policy) << ','
        << (r.key.fairness ? fairness_policy_name(*r.key.fairness) : "") << ','
        << r.key.budget << ',' << r.key.seed << ','
        << text::format_double(r.metrics.total_infection_pct) << ',' << r.total_infected << ','
        << r.metrics.peak_known_infections << ',' << r.metrics.peak_timestep << ','
        << r.total_requested << '\n';
  }
  return out.str();
}

namespace {

OJson stat_json(const SummaryStat& s) { return OJson{{"mean", s.mean}, {"std", s.std}}; }

}  // namespace

std::string experiment_summary_json(const ExperimentResult& result) {
  OJson j;
  OJson aggs = OJson::array();
  for (const Aggregate& a : result.aggregates) {
    OJson x;
    x["policy"] = policy_kind_name(a.policy);
    x["fairness"] = a.fairness ? OJson(fairness_policy_name(*a.fairness)) : OJson(nullptr);
    x["budget"] = a.budget;
    x["runs"] = a.runs;
    x["total_infection_pct"] = stat_json(a.total_infection_pct);
    x["peak_known_infections"] = stat_json(a.peak_known_infections);
    x["peak_timestep"] = stat_json(a.peak_timestep);
    aggs.push_back(x);
  }
  j["aggregates"] = aggs;
  OJson fair = OJson::array();
  for (const FairnessCell& c : result.fairness_table) {
    fair.push_back({{"algorithm", policy_kind_name(c.algorithm)},
                    {"budget", c.budget},
                    {"fairness", fairness_policy_name(c.fairness)},
                    {"total_infection_pct", stat_json(c.total_infection_pct)}});
  }
  j["fairness_table"] = fair;
  return j.dump(2) + "\n";
}

std::string fairness_table_csv(const ExperimentResult& result) {
  std::ostringstream out;
  out << "algorithm,budget,fairness,mean_total_infection_pct,std_total_infection_pct\n";
  for (const FairnessCell& c : result.fairness_table) {
    out << policy_kind_name(c.algorithm) << ',' << c.budget << ','
        << fairness_policy_name(c.fairness) << ','
        << text::format_double(c.total_infection_pct.mean) << ','
        << text::format_double(c.total_infection_pct.std) << '\n';
  }
  return out.str();
}

void write_experiment(const ExperimentSpec& spec, const ExperimentResult& result,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "trajectories");
  for (const RunResult& r : result.runs) {
    write_text((fs::path(dir) / "trajectories" / (r.key.label() + ".csv")).string(),
               trajectory_csv(r.trajectory));
  }
  write_text((fs::path(dir) / "runs.csv").string(), runs_csv(result));
  write_text((fs::path(dir) / "summary.json").string(), experiment_summary_json(result));
  write_text((fs::path(dir) / "config.json").string(), experiment_spec_to_json(spec));
  if (!result.fairness_table.empty()) {
    write_text((fs::path(dir) / "fairness_table.csv").string(), fairness_table_csv(result));
  }
  std::vector<EpicurveEntry> entries;
  std::vector<std::string> names;
  names.reserve(result.runs.size());
  for (const RunResult& r : result.runs) {
    names.push_back(r.key.policy_label() + "_b" + std::to_string(r.key.budget));
  }
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    entries.push_back({names[i], result.runs[i].key.seed, &result.runs[i].trajectory});
  }
  emit_epicurve(entries, (fs::path(dir) / "epicurve.csv").string(), spec.sim.horizon);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const ContactNetwork net = apply_mode(build_network(spec.network), spec.mode);
  ExperimentResult result = run_experiment(spec, net);
  if (!spec.output_dir.empty()) write_experiment(spec, result, spec.output_dir);
  return result;
}

namespace {

int curve_length(std::span<const EpicurveEntry> entries, int pad_to) {
  int len = 0;
  for (const EpicurveEntry& e : entries) {
    if (e.trajectory == nullptr || e.trajectory->records.empty()) {
      throw InvalidArgument("epicurve entry without a trajectory");
    }
    len = std::max(len, e.trajectory->records.back().timestep + 1);
  }
  return std::max(len, pad_to + 1);
}

std::vector<int> padded_curve(const Trajectory& t, int len) {
  std::vector<int> curve(len, 0);
  for (const TrajectoryRecord& r : t.records) {
    if (r.timestep < len) curve[r.timestep] = r.i2;
  }
  return curve;
}

}  // namespace

std::string epicurve_csv(std::span<const EpicurveEntry> entries, int pad_to) {
  if (entries.empty()) throw InvalidArgument("no trajectories to emit");
  const int len = curve_length(entries, pad_to);
  std::ostringstream out;
  out << "policy,seed,timestep,I2\n";
  for (const EpicurveEntry& e : entries) {
    const std::vector<int> curve = padded_curve(*e.trajectory, len);
    for (int t = 0; t < len; ++t) {
      out << e.policy << ',' << e.seed << ',' << t << ',' << curve[t] << '\n';
    }
  }
  return out.str();
}

std::vector<EpicurvePeak> epicurve_peaks(std::span<const EpicurveEntry> entries, int pad_to) {
  if (entries.empty()) throw InvalidArgument("no trajectories to summarize");
  const int len = curve_length(entries, pad_to);
  std::vector<std::string> order;
  std::map<std::string, std::vector<const EpicurveEntry*>> groups;
  for (const EpicurveEntry& e : entries) {
    if (!groups.count(e.policy)) order.push_back(e.policy);
    groups[e.policy].push_back(&e);
  }
  std::vector<EpicurvePeak> out;
  for (const std::string& policy : order) {
    const auto& members = groups[policy];
    EpicurvePeak p;
    p.policy = policy;
    p.runs = static_cast<int>(members.size());
    std::vector<double> mean(len, 0.0);
    for (const EpicurveEntry* e : members) {
      const std::vector<int> curve = padded_curve(*e->trajectory, len);
      for (int t = 0; t < len; ++t) mean[t] += curve[t];
      const TrajectoryMetrics m = trajectory_metrics(*e->trajectory);
      p.mean_peak += m.peak_known_infections;
      p.mean_peak_timestep += m.peak_timestep;
    }
    for (double& v : mean) v /= p.runs;
    p.mean_peak /= p.runs;
    p.mean_peak_timestep /= p.runs;
    for (int t = 0; t < len; ++t) {
      if (mean[t] > p.mean_curve_peak) {
        p.mean_curve_peak = mean[t];
        p.mean_curve_peak_timestep = t;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::string epicurve_summary_json(std::span<const EpicurvePeak> peaks) {
  OJson arr = OJson::array();
  for (const EpicurvePeak& p : peaks) {
    arr.push_back({{"policy", p.policy},
                   {"runs", p.runs},
                   {"mean_curve_peak", p.mean_curve_peak},
                   {"mean_curve_peak_timestep", p.mean_curve_peak_timestep},
                   {"mean_peak", p.mean_peak},
                   {"mean_peak_timestep", p.mean_peak_timestep}});
  }
  return OJson{{"peaks", arr}}.dump(2) + "\n";
}

std::vector<EpicurvePeak> emit_epicurve(std::span<const EpicurveEntry> entries,
                                        const std::string& path, int pad_to) {
  const std::string csv = epicurve_csv(entries, pad_to);
  std::vector<EpicurvePeak> peaks = epicurve_peaks(entries, pad_to);
  write_text(path, csv);
  std::string stem = path;
  if (stem.size() > 4 && stem.substr(stem.size() - 4) == ".csv") stem.resize(stem.size() - 4);
  write_text(stem + "_summary.json", epicurve_summary_json(peaks));
  return peaks;
}

std::string bench_algorithm_name(BenchAlgorithm a) {
  switch (a) {
    case BenchAlgorithm::kDegGreedy: return "deg_greedy";
    case BenchAlgorithm::kDepRound: return "dep_round";
    case BenchAlgorithm::kSegDegree: return "seg_degree";
    case BenchAlgorithm::kRandom: return "random";
  }
  return "?";
}

std::vector<HarvestedInstance> harvest_instances(const ContactNetwork& net,
                                                 const BenchSpec& spec) {
  std::vector<HarvestedInstance> out;
  const Policy inner = make_policy(spec.sim.policy, &net);
  for (std::uint64_t seed : spec.seeds) {
    if (static_cast<int>(out.size()) >= spec.max_instances) break;
    SimulationConfig cfg = spec.sim;
    cfg.budget = spec.budget;
    cfg.seed = seed;
    cfg.fairness.reset();
    cfg.exposure_caps.reset();
    int query = 0;
    Policy recorder = [&](const MinExposedInstance& inst, std::uint64_t s) {
      const int t = query++;
      if (static_cast<int>(out.size()) < spec.max_instances && inst.num_v1() > 0 &&
          inst.num_v2() > 0 && inst.num_v1() <= spec.max_v1) {
        out.push_back({seed, t, inst});
      }
      return inner(inst, s);
    };
    run_mdp(net, recorder, cfg);
  }
  return out;
}

namespace {

double factor_of(double objective, double opt, double tol) {
  if (opt > 1e-12) return objective / opt;
  return objective <= tol ? 1.0 : kInfinity;
}

}  // namespace

BenchReport bench_instances(std::span<const HarvestedInstance> instances,
                            const BenchSpec& spec) {
  if (spec.rounding_seeds < 1) throw InvalidArgument("rounding_seeds must be at least 1");
  BenchReport report;
  const double tol = spec.tol;
  for (const HarvestedInstance& h : instances) {
    const MinExposedInstance& inst = h.instance;
    BenchRecord rec;
    rec.source_seed = h.seed;
    rec.query = h.query;
    rec.num_infected = static_cast<int>(inst.infected.size());
    rec.num_v1 = inst.num_v1();
    rec.num_v2 = inst.num_v2();
    rec.num_edges = static_cast<int>(inst.edges.size());
    rec.max_v2_degree = inst.max_v2_degree;
    rec.budget = inst.budget;

    MilpBuildOptions plain;
    plain.label_budgets = false;
    plain.exposure_caps = false;
    const MinExposedProgram prog = build_milp(inst, plain);
    const FractionalSolution lp = solve_lp(prog, inst);
    rec.lp_value = lp.objective;
    auto t0 = std::chrono::steady_clock::now();
    const MilpResult bb = solve_milp_bb(prog, inst, spec.bb);
    rec.milp_seconds = seconds_since(t0);
    rec.milp_value = bb.objective;
    rec.proven = bb.proven_optimal;
    if (!rec.proven) ++report.unproven;
    if (rec.lp_value > rec.milp_value + tol) ++rec.sandwich_violations;
    if (std::fabs(milp_objective_value(inst, bb.q) - bb.objective) > tol) {
      ++rec.sandwich_violations;
    }

    auto check_q = [&](const QuarantineSet& q) {
      check_feasible(inst, q);
      const double f = objective_exact(inst, q);
      if (rec.proven && rec.milp_value > f + tol) ++rec.sandwich_violations;
      if (rec.lp_value > f + tol) ++rec.sandwich_violations;
      return f;
    };

    for (BenchAlgorithm a : kBenchAlgorithms) {
      AlgorithmScore& sc = rec.scores[static_cast<int>(a)];
      t0 = std::chrono::steady_clock::now();
      if (a == BenchAlgorithm::kDegGreedy) {
        sc.objective = check_q(deg_greedy(inst));
      } else {
        double sum = 0.0;
        for (int k = 0; k < spec.rounding_seeds; ++k) {
          const std::uint64_t s = derive_seed(h.seed, {static_cast<std::uint64_t>(h.query),
                                                       static_cast<std::uint64_t>(a),
                                                       static_cast<std::uint64_t>(k)});
          QuarantineSet q;
          if (a == BenchAlgorithm::kDepRound) {
            // Same as policy_dep_round, with the LP solved once.
            q = inst.budget == 0 ? QuarantineSet{} : dep_round(lp.x, inst.budget, s).selected;
          } else if (a == BenchAlgorithm::kSegDegree) {
            q = seg_degree(inst, s);
          } else {
            q = random_policy(inst, s);
          }
          sum += check_q(q);
        }
        sc.objective = sum / spec.rounding_seeds;
      }
      sc.seconds = seconds_since(t0);
      sc.factor = factor_of(sc.objective, rec.milp_value, tol);
    }
    if (rec.proven) {
      for (BenchAlgorithm a : {BenchAlgorithm::kDegGreedy, BenchAlgorithm::kDepRound}) {
        const double f = rec.scores[static_cast<int>(a)].factor;
        if (!(f >= 1.0 - tol && f <= rec.max_v2_degree + tol)) ++rec.bound_violations;
      }
    }
    report.sandwich_violations += rec.sandwich_violations;
    report.bound_violations += rec.bound_violations;
    report.records.push_back(rec);
  }

  // |V1| quartile cuts over all records.
  std::vector<int> sizes;
  for (const BenchRecord& r : report.records) sizes.push_back(r.num_v1);
  std::sort(sizes.begin(), sizes.end());
  std::array<int, 3> cuts{};
  if (!sizes.empty()) {
    for (int k = 1; k <= 3; ++k) cuts[k - 1] = sizes[k * sizes.size() / 4];
  }
  report.buckets.resize(4);
  std::array<std::array<std::vector<double>, 4>, 4> by_bucket;
  std::array<std::vector<double>, 4> overall;
  for (int b = 0; b < 4; ++b) {
    report.buckets[b].bucket = b;
    report.buckets[b].min_v1 = std::numeric_limits<int>::max();
  }
  for (BenchRecord& r : report.records) {
    r.bucket = 0;
    for (int c : cuts) r.bucket += r.num_v1 > c;
    BenchBucket& bk = report.buckets[r.bucket];
    ++bk.count;
    bk.min_v1 = std::min(bk.min_v1, r.num_v1);
    bk.max_v1 = std::max(bk.max_v1, r.num_v1);
    if (!r.proven) continue;
    for (int a = 0; a < 4; ++a) {
      by_bucket[r.bucket][a].push_back(r.scores[a].factor);
      overall[a].push_back(r.scores[a].factor);
      bk.max_factor[a] = std::max(bk.max_factor[a], r.scores[a].factor);
    }
  }
  for (int b = 0; b < 4; ++b) {
    if (report.buckets[b].count == 0) report.buckets[b].min_v1 = 0;
    for (int a = 0; a < 4; ++a) report.buckets[b].factor[a] = summarize(by_bucket[b][a]);
  }
  for (int a = 0; a < 4; ++a) report.factor[a] = summarize(overall[a]);
  return report;
}

BenchReport bench_approx(const BenchSpec& spec) {
  const ContactNetwork net = apply_mode(build_network(spec.network), spec.mode);
  const std::vector<HarvestedInstance> inst = harvest_instances(net, spec);
  BenchReport report = bench_instances(inst, spec);
  if (!spec.output_dir.empty()) write_bench(report, spec.output_dir);
  return report;
}

std::string bench_records_csv(const BenchReport& report) {
  std::ostringstream out;
  out << "source_seed,query,I,V1,V2,E,D,B,bucket,lp,milp,proven";
  for (BenchAlgorithm a : kBenchAlgorithms) {
    out << ',' << bench_algorithm_name(a) << "_objective," << bench_algorithm_name(a)
        << "_factor";
  }
  out << ",sandwich_violations,bound_violations\n";
  for (const BenchRecord& r : report.records) {
    out << r.source_seed << ',' << r.query << ',' << r.num_infected << ',' << r.num_v1
        << ',' << r.num_v2 << ',' << r.num_edges << ',' << r.max_v2_degree << ',' << r.budget
        << ',' << r.bucket << ',' << text::format_double(r.lp_value) << ','
        << text::format_double(r.milp_value) << ',' << (r.proven ? 1 : 0);
    for (const AlgorithmScore& s : r.scores) {
      out << ',' << text::format_double(s.objective) << ',' << text::format_double(s.factor);
    }
    out << ',' << r.sandwich_violations << ',' << r.bound_violations << '\n';
  }
  return out.str();
}

std::string bench_summary_json(const BenchReport& report) {
  OJson j;
  j["instances"] = report.records.size();
  j["unproven"] = report.unproven;
  j["sandwich_violations"] = report.sandwich_violations;
  j["bound_violations"] = report.bound_violations;
  OJson overall;
  for (BenchAlgorithm a : kBenchAlgorithms) {
    overall[bench_algorithm_name(a)] = stat_json(report.factor[static_cast<int>(a)]);
  }
  j["factor"] = overall;
  OJson buckets = OJson::array();
  for (const BenchBucket& b : report.buckets) {
    OJson x;
    x["bucket"] = b.bucket;
    x["count"] = b.count;
    x["min_v1"] = b.min_v1;
    x["max_v1"] = b.max_v1;
    OJson f;
    for (BenchAlgorithm a : kBenchAlgorithms) {
      OJson s = stat_json(b.factor[static_cast<int>(a)]);
      s["max"] = b.max_factor[static_cast<int>(a)];
      f[bench_algorithm_name(a)] = s;
    }
    x["factor"] = f;
    buckets.push_back(x);
  }
  j["buckets"] = buckets;
  return j.dump(2) + "\n";
}

void write_bench(const BenchReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_text((fs::path(dir) / "bench_records.csv").string(), bench_records_csv(report));
  write_text((fs::path(dir) / "bench_summary.json").string(), bench_summary_json(report));
  // Wall times live apart so the two files above are reproducible.
  std::ostringstream t;
  t << "source_seed,query,milp_seconds";
  for (BenchAlgorithm a : kBenchAlgorithms) t << ',' << bench_algorithm_name(a) << "_seconds";
  t << '\n';
  for (const BenchRecord& r : report.records) {
    t << r.source_seed << ',' << r.query << ',' << r.milp_seconds;
    for (const AlgorithmScore& s : r.scores) t << ',' << s.seconds;
    t << '\n';
  }
  write_text((fs::path(dir) / "bench_timing.csv").string(), t.str());
}

BenchSpec bench_spec_from_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ParseError("config", 1, e.what());
  }
  try {
    check_keys(j, "config",
               {"network", "mode", "policies", "budgets", "seeds", "trials", "first_seed",
                "fairness", "simulation", "privacy", "seg_degree", "output", "threads",
                "bench"});
    BenchSpec spec;
    if (j.contains("network")) spec.network = network_from_json(j.at("network"));
    if (j.contains("mode")) spec.mode = parse_tracing_mode(j.at("mode").get<std::string>());
    if (j.contains("simulation")) {
      simulation_from_json(j.at("simulation"), spec.sim);
      if (j.at("simulation").contains("harvest_policy")) {
        spec.sim.policy.kind =
            parse_policy_kind(j.at("simulation").at("harvest_policy").get<std::string>());
      }
    }
    read_opt(j, "output", spec.output_dir);
    if (j.contains("bench")) {
      const Json& b = j.at("bench");
      check_keys(b, "bench",
                 {"budget", "seeds", "trials", "first_seed", "max_instances", "max_v1",
                  "rounding_seeds", "tol", "node_limit", "time_limit_seconds", "output"});
      read_opt(b, "budget", spec.budget);
      if (b.contains("seeds") || b.contains("trials")) spec.seeds = read_seeds(b, "bench");
      read_opt(b, "max_instances", spec.max_instances);
      read_opt(b, "max_v1", spec.max_v1);
      read_opt(b, "rounding_seeds", spec.rounding_seeds);
      read_opt(b, "tol", spec.tol);
      read_opt(b, "node_limit", spec.bb.node_limit);
      read_opt(b, "time_limit_seconds", spec.bb.time_limit_seconds);
      read_opt(b, "output", spec.output_dir);
    }
    if (spec.budget < 0) throw InvalidArgument("bench.budget must be non-negative");
    if (spec.seeds.empty()) throw InvalidArgument("bench needs at least one seed");
    return spec;
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
}

}  // namespace ctrace

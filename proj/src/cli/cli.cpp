#include "polyfactor/cli/cli.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "polyfactor/inference/representation.hpp"
#include "polyfactor/models/model_file.hpp"

namespace polyfactor::cli {

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string absolute(const std::string& path) { return fs::absolute(path).lexically_normal().string(); }

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) {
    throw std::runtime_error("cannot write '" + path.string() + "'");
  }
}

// Everything a command line can say, before normalization.
struct Options {
  std::string model;
  std::string data;
  std::vector<std::string> query;
  std::vector<std::string> evidence;
  std::string format;
  std::string representation;
  std::vector<std::string> representations;
  std::size_t particles = 10000;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  double ess_fraction = ProjectionPolicy{}.ess_fraction;
  bool no_moment_match = false;
  bool no_resample = false;
  std::string out;
  std::string manifest;
  std::string replay_manifest;
  std::string out_dir;
};

double parse_evidence_value(const std::string& text, const std::string& item) {
  if (text == "true") {
    return 1.0;
  }
  if (text == "false") {
    return 0.0;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size()) {
      return v;
    }
  } catch (const std::exception&) {
  }
  fail(ErrorCode::invalid_argument, "evidence '" + item + "': value must be true, false or a number");
}

Representation default_representation(const StateSpaceModel& model) {
  if (model.state.all_discrete()) {
    return Representation::table;
  }
  return model.state.discrete_part().empty() ? Representation::gaussian : Representation::hybrid_parametric;
}

Json policy_json(const Options& o) {
  Json p;
  p["moment_match"] = !o.no_moment_match;
  p["resample"] = !o.no_resample;
  p["ess_fraction"] = o.ess_fraction;
  return p;
}

// Normalized argument object: absolute paths, every default made explicit.
Json normalize(const std::string& command, const Options& o) {
  Json args;
  args["model"] = absolute(o.model);
  if (command == "query") {
    args["query"] = o.query;
    Json evidence = Json::object();
    for (const auto& item : o.evidence) {
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) {
        fail(ErrorCode::invalid_argument, "evidence '" + item + "' is not of the form name=value");
      }
      evidence[item.substr(0, eq)] = parse_evidence_value(item.substr(eq + 1), item);
    }
    args["evidence"] = std::move(evidence);
    args["format"] = o.format.empty() ? "csv" : o.format;
    return args;
  }
  const ModelDocument doc = load_model(o.model);
  const std::uint64_t default_seed = doc.quadrant ? doc.quadrant->seed : 1;
  if (command == "simulate") {
    args["steps"] = o.steps.value_or(doc.quadrant ? doc.quadrant->horizon : 100);
    args["seed"] = o.seed.value_or(default_seed);
    return args;
  }
  args["data"] = absolute(o.data);
  if (command == "compare-reps") {
    Json reps = Json::array();
    for (const auto& r : o.representations) {
      reps.push_back(to_string(parse_representation(r)));
    }
    args["representations"] = std::move(reps);
  } else {
    args["representation"] = o.representation.empty() ? std::string(to_string(default_representation(doc.state_space())))
                                                       : std::string(to_string(parse_representation(o.representation)));
    args["format"] = o.format.empty() ? "csv" : o.format;
  }
  args["particles"] = o.particles;
  args["seed"] = o.seed.value_or(default_seed);
  args["policy"] = policy_json(o);
  return args;
}

std::vector<fs::path> output_paths(const std::string& command, const std::string& out, std::size_t count) {
  std::vector<fs::path> paths;
  if (out.empty()) {
    return paths;
  }
  paths.emplace_back(absolute(out));
  if (command == "compare-reps" && count > 1) {
    paths.push_back(fs::path(paths.front()).replace_extension(".summary.json"));
  }
  return paths;
}

Json manifest_for(const std::string& command, const Json& args, const std::vector<std::string>& argv,
                  const std::vector<Output>& outputs, const std::vector<fs::path>& paths, const std::string& started) {
  Json m;
  m["format"] = kManifestFormat;
  m["version"] = kManifestVersion;
  m["tool_version"] = kToolVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["arguments"] = args;
  if (args.contains("representation")) {
    m["representation"] = args["representation"];
  } else if (args.contains("representations")) {
    m["representation"] = args["representations"];
  } else {
    m["representation"] = nullptr;
  }
  m["seed"] = args.contains("seed") ? args["seed"] : Json();
  m["particles"] = args.contains("particles") ? args["particles"] : Json();
  m["projection_policy"] = args.contains("policy") ? args["policy"] : Json();
  Json inputs = Json::array();
  for (const char* role : {"model", "data"}) {
    if (args.contains(role)) {
      const std::string path = args[role].get<std::string>();
      inputs.push_back({{"role", role}, {"path", path}, {"sha256", sha256_hex(read_file(path))}});
    }
  }
  m["inputs"] = std::move(inputs);
  Json outs = Json::array();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    outs.push_back({{"role", outputs[i].role},
                    {"path", i < paths.size() ? Json(paths[i].string()) : Json()},
                    {"sha256", sha256_hex(outputs[i].content)}});
  }
  m["outputs"] = std::move(outs);
  m["started_at"] = started;
  m["finished_at"] = utc_now();
  return m;
}

int replay(const Options& o, std::ostream& out, std::ostream& err) {
  Json m;
  try {
    m = Json::parse(read_file(o.replay_manifest));
  } catch (const Json::parse_error& e) {
    fail(ErrorCode::parse_error, "manifest is not valid JSON: " + std::string(e.what()));
  }
  if (m.value("format", "") != kManifestFormat || m.value("version", 0) != kManifestVersion) {
    fail(ErrorCode::schema_error, fmt::format("not a {} version {} file", kManifestFormat, kManifestVersion));
  }
  try {
    for (const auto& input : m.at("inputs")) {
      const std::string path = input.at("path").get<std::string>();
      const std::string found = sha256_hex(read_file(path));
      if (found != input.at("sha256").get<std::string>()) {
        fail(ErrorCode::invalid_argument, fmt::format("input '{}' changed since the run ({})", path, found));
      }
    }
    const std::vector<Output> outputs = execute(m.at("command").get<std::string>(), m.at("arguments"));
    bool all_match = outputs.size() == m.at("outputs").size();
    for (std::size_t i = 0; i < outputs.size() && i < m.at("outputs").size(); ++i) {
      const Json& recorded = m["outputs"][i];
      const std::string hash = sha256_hex(outputs[i].content);
      const bool match = outputs[i].role == recorded.at("role") && hash == recorded.at("sha256");
      all_match = all_match && match;
      out << fmt::format("{} {} {}\n", outputs[i].role, hash, match ? "match" : "MISMATCH");
      if (!o.out_dir.empty()) {
        const Json& p = recorded.at("path");
        const std::string name = p.is_null() ? outputs[i].role + ".out" : fs::path(p.get<std::string>()).filename().string();
        fs::create_directories(o.out_dir);
        write_file(fs::path(o.out_dir) / name, outputs[i].content);
      }
    }
    if (!all_match) {
      err << "polyfactor: replay produced different outputs\n";
      return kExitRuntime;
    }
  } catch (const Json::exception& e) {
    fail(ErrorCode::schema_error, std::string("manifest: ") + e.what());
  }
  return kExitOk;
}

void add_output_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--out", o.out, "Output file (default: stdout)");
  cmd->add_option("--manifest", o.manifest, "Run manifest path (default: <out> with extension .manifest.json)");
}

void add_run_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--data", o.data, "Observation CSV")->required();
  cmd->add_option("--particles", o.particles, "Particle count for sample representations")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Random seed (default: the model's, else 1)");
  cmd->add_option("--ess-fraction", o.ess_fraction, "Resample when ESS < fraction * n")->check(CLI::Range(0.0, 1.0));
  cmd->add_flag("--no-moment-match", o.no_moment_match, "Keep mixtures and truncated Gaussians unprojected");
  cmd->add_flag("--no-resample", o.no_resample, "Never resample particles");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representation-agnostic factor inference", "polyfactor"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  Options o;
  const std::vector<std::string> reps{"table", "gaussian", "sample", "hybrid-parametric", "hybrid-sample"};

  auto* query = app.add_subcommand("query", "Posterior over query variables by variable elimination");
  query->add_option("model", o.model, "Model file")->required();
  query->add_option("--query", o.query, "Query variables")->required()->delimiter(',');
  query->add_option("--evidence", o.evidence, "Observed values name=value (true/false or a number)")->delimiter(',');
  query->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  add_output_options(query, o);

  for (const char* name : {"filter", "smooth"}) {
    auto* cmd = app.add_subcommand(name, std::string(name) == "filter" ? "Forward filtering" : "Forward-backward smoothing");
    cmd->add_option("model", o.model, "Model file")->required();
    cmd->add_option("--rep", o.representation, "Representation")->check(CLI::IsMember(reps));
    cmd->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    add_run_options(cmd, o);
    add_output_options(cmd, o);
  }

  auto* sim = app.add_subcommand("simulate", "Sample states and observations from a state-space model");
  sim->add_option("model", o.model, "Model file")->required();
  sim->add_option("--T,--steps", o.steps, "Number of steps (default: the model's horizon, else 100)");
  sim->add_option("--seed", o.seed, "Random seed (default: the model's, else 1)");
  add_output_options(sim, o);

  auto* cmp = app.add_subcommand("compare-reps", "Filter the same data under several representations");
  cmp->add_option("model", o.model, "Model file")->required();
  cmp->add_option("--reps", o.representations, "Representations, comma separated")
      ->required()
      ->delimiter(',')
      ->check(CLI::IsMember(reps));
  add_run_options(cmp, o);
  cmp->add_option("--out", o.out, "Trajectory CSV; the summary goes next to it as .summary.json")->required();
  cmp->add_option("--manifest", o.manifest, "Run manifest path (default: <out> with extension .manifest.json)");

  auto* rep = app.add_subcommand("replay", "Re-run a manifest and compare output hashes");
  rep->add_option("manifest", o.replay_manifest, "Manifest file")->required();
  rep->add_option("--out-dir", o.out_dir, "Also write the replayed outputs here");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "replay") {
      return replay(o, out, err);
    }
    const std::string started = utc_now();
    const Json normalized = normalize(command, o);
    const std::vector<Output> outputs = execute(command, normalized);
    const auto paths = output_paths(command, o.out, outputs.size());
    if (paths.empty()) {
      out << outputs.front().content;
    }
    for (std::size_t i = 0; i < paths.size(); ++i) {
      write_file(paths[i], outputs[i].content);
    }
    std::string manifest = o.manifest;
    if (manifest.empty() && !o.out.empty()) {
      manifest = fs::path(absolute(o.out)).replace_extension(".manifest.json").string();
    }
    if (!manifest.empty()) {
      std::vector<std::string> argv{"polyfactor"};
      argv.insert(argv.end(), args.begin(), args.end());
      write_file(manifest, manifest_for(command, normalized, argv, outputs, paths, started).dump(2) + "\n");
    }
    return kExitOk;
  } catch (const FactorError& e) {
    err << "polyfactor: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "polyfactor: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace polyfactor::cli

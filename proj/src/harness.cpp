#include "varpg/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "varpg/errors.hpp"
#include "varpg/softmax_policy.hpp"
#include "varpg/version.hpp"

namespace varpg {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

std::string g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::string section, key, value;
  int line = 0;
};

std::vector<Field> tokenize(const std::string& text) {
  std::vector<Field> fields;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw invalid_input("config line " + std::to_string(lineno) + ": expected key = value");
    fields.push_back({section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)), lineno});
  }
  return fields;
}

double parse_double(const Field& f) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(f.value, &pos);
    if (pos != f.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw invalid_input("config line " + std::to_string(f.line) + ": bad number for " + f.key);
  }
}

long parse_int(const Field& f) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(f.value, &pos);
    if (pos != f.value.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw invalid_input("config line " + std::to_string(f.line) + ": bad integer for " + f.key);
  }
}

}  // namespace

void RunConfig::validate() const {
  if (seeds.empty()) throw invalid_input("config: seeds must be non-empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw invalid_input("config: seeds must be distinct");
  if (log_every < 1) throw invalid_input("config: log_every must be >= 1");
  if (algo != "reinforce" && algo != "ppo")
    throw invalid_input("config: algo must be reinforce or ppo");
  if (max_steps < 1) throw invalid_input("config: max_steps must be >= 1");
  train.validate();
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::optional<double> metric_alpha;
  std::optional<Metric> metric;
  bool lr_value_set = false;

  for (const Field& f : tokenize(text)) {
    const std::string where = "config line " + std::to_string(f.line) + ": ";
    if (f.section == "run") {
      if (f.key == "name") cfg.name = f.value;
      else if (f.key == "seeds") {
        cfg.seeds.clear();
        std::istringstream ss(f.value);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
          tok = trim(tok);
          if (!tok.empty()) cfg.seeds.push_back(std::stoull(tok));
        }
      } else if (f.key == "out_dir") cfg.out_dir = f.value;
      else if (f.key == "log_every") cfg.log_every = static_cast<int>(parse_int(f));
      else throw invalid_input(where + "unknown [run] key " + f.key);
    } else if (f.section == "env") {
      if (f.key == "map_file") cfg.map_file = f.value;
      else if (f.key == "map_inline") cfg.map_inline = f.value;
      else if (f.key == "noise") {
        if (!noise_from_name(f.value, cfg.noise))
          throw invalid_input(where + "unknown noise kind " + f.value);
      } else if (f.key == "gamma") cfg.gamma = parse_double(f);
      else if (f.key == "max_steps") cfg.max_steps = static_cast<int>(parse_int(f));
      else if (f.key == "step_reward") cfg.step_reward = parse_double(f);
      else throw invalid_input(where + "unknown [env] key " + f.key);
    } else if (f.section == "train") {
      if (f.key == "algo") cfg.algo = f.value;
      else if (f.key == "metric") {
        metric = metric_from_name(f.value);
        if (!metric) throw invalid_input(where + "unknown metric " + f.value);
      } else if (f.key == "alpha") metric_alpha = parse_double(f);
      else if (f.key == "lambda") cfg.train.lambda = parse_double(f);
      else if (f.key == "iterations") cfg.train.iterations = static_cast<int>(parse_int(f));
      else if (f.key == "batch_size") cfg.train.batch_size = static_cast<int>(parse_int(f));
      else if (f.key == "inner_updates") cfg.train.inner_updates = static_cast<int>(parse_int(f));
      else if (f.key == "lr_policy") cfg.train.lr_policy = parse_double(f);
      else if (f.key == "lr_value") {
        cfg.train.lr_value = parse_double(f);
        lr_value_set = true;
      } else if (f.key == "is_clip") cfg.train.is_clip = parse_double(f);
      else if (f.key == "ppo_clip") cfg.train.ppo_clip = parse_double(f);
      else if (f.key == "gae_lambda") cfg.train.gae_lambda = parse_double(f);
      else if (f.key == "value_minibatch")
        cfg.train.value_minibatch = static_cast<int>(parse_int(f));
      else if (f.key == "quantile_method") {
        if (f.value == "lower") cfg.train.qmethod = QuantileMethod::LowerOrderStat;
        else if (f.value == "linear") cfg.train.qmethod = QuantileMethod::LinearInterpolation;
        else throw invalid_input(where + "quantile_method must be lower or linear");
      } else if (f.key == "optimizer") {
        if (f.value == "sgd") cfg.train.optimizer = OptimizerState::Kind::Sgd;
        else if (f.value == "adam") cfg.train.optimizer = OptimizerState::Kind::Adam;
        else throw invalid_input(where + "optimizer must be sgd or adam");
      } else if (f.key == "greedy_rate") cfg.train.greedy_rate = f.value == "true";
      else throw invalid_input(where + "unknown [train] key " + f.key);
    } else {
      throw invalid_input(where + "unknown section [" + f.section + "]");
    }
  }
  if (metric) cfg.train.metric = MetricKind::make(*metric, metric_alpha);
  if (!lr_value_set) cfg.train.lr_value = 10.0 * cfg.train.lr_policy;  // ten times policy rate
  cfg.train.gamma = cfg.gamma;
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = parse_run_config(buf.str());
  if (!cfg.map_file.empty()) {
    // resolve relative to the config file
    const fs::path p(cfg.map_file);
    if (p.is_relative()) cfg.map_file = (fs::path(path).parent_path() / p).string();
    if (!fs::exists(cfg.map_file))
      throw invalid_input("config: map file does not exist: " + cfg.map_file);
  }
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[run]\n";
  out << "name = " << cfg.name << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) out << (i ? "," : "") << cfg.seeds[i];
  out << "\n";
  if (!cfg.out_dir.empty()) out << "out_dir = " << cfg.out_dir << "\n";
  out << "log_every = " << cfg.log_every << "\n";
  out << "\n[env]\n";
  if (!cfg.map_file.empty()) out << "map_file = " << cfg.map_file << "\n";
  if (!cfg.map_inline.empty()) out << "map_inline = " << cfg.map_inline << "\n";
  out << "noise = " << noise_name(cfg.noise) << "\n";
  out << "gamma = " << g17(cfg.gamma) << "\n";
  out << "max_steps = " << cfg.max_steps << "\n";
  out << "step_reward = " << g17(cfg.step_reward) << "\n";
  out << "\n[train]\n";
  out << "algo = " << cfg.algo << "\n";
  out << "metric = " << metric_name(cfg.train.metric.metric) << "\n";
  if (cfg.train.metric.alpha) out << "alpha = " << g17(*cfg.train.metric.alpha) << "\n";
  out << "lambda = " << g17(cfg.train.lambda) << "\n";
  out << "iterations = " << cfg.train.iterations << "\n";
  out << "batch_size = " << cfg.train.batch_size << "\n";
  out << "inner_updates = " << cfg.train.inner_updates << "\n";
  out << "lr_policy = " << g17(cfg.train.lr_policy) << "\n";
  out << "lr_value = " << g17(cfg.train.lr_value) << "\n";
  out << "is_clip = " << g17(cfg.train.is_clip) << "\n";
  out << "ppo_clip = " << g17(cfg.train.ppo_clip) << "\n";
  out << "gae_lambda = " << g17(cfg.train.gae_lambda) << "\n";
  out << "value_minibatch = " << cfg.train.value_minibatch << "\n";
  out << "quantile_method = "
      << (cfg.train.qmethod == QuantileMethod::LowerOrderStat ? "lower" : "linear") << "\n";
  out << "optimizer = "
      << (cfg.train.optimizer == OptimizerState::Kind::Adam ? "adam" : "sgd") << "\n";
  out << "greedy_rate = " << (cfg.train.greedy_rate ? "true" : "false") << "\n";
  return out.str();
}

std::string config_hash(const std::string& canonical_text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

GridMaze maze_from_config(const RunConfig& cfg) {
  std::string text;
  if (!cfg.map_file.empty()) {
    std::ifstream in(cfg.map_file);
    if (!in) throw invalid_input("config: cannot open map file " + cfg.map_file);
    std::stringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  } else if (!cfg.map_inline.empty()) {
    text = cfg.map_inline;
    std::replace(text.begin(), text.end(), '|', '\n');
  } else {
    text = kDefaultMazeText;
  }
  GridMaze maze = parse_map(text);
  maze.gamma = cfg.gamma;
  maze.max_steps = cfg.max_steps;
  maze.step_reward = cfg.step_reward;
  return maze;
}

namespace {

std::string resolve_out_dir(const RunConfig& cfg, const std::string& override_dir) {
  std::string dir = !override_dir.empty() ? override_dir
                    : !cfg.out_dir.empty() ? cfg.out_dir
                                           : "runs/" + cfg.name;
  const char* root = std::getenv("VARPG_OUT_ROOT");
  if (root && *root && fs::path(dir).is_relative()) dir = (fs::path(root) / dir).string();
  return dir;
}

void write_csv_row(std::ofstream& out, std::uint64_t seed, const IterationLog& log) {
  out << seed << ',' << log.iteration << ',' << g17(log.mean_return) << ','
      << g17(log.risk_averse_rate) << ',' << g17(log.variability) << ','
      << g17(log.grad_variance) << ',' << g17(log.mean_grad_norm) << ','
      << g17(log.variability_grad_norm) << ',' << (log.degenerate_downgrade ? 1 : 0) << '\n';
}

}  // namespace

int run_experiment(const std::string& config_path, const std::string& out_override,
                   std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  const std::string out_dir = resolve_out_dir(cfg, out_override);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  const std::string canonical = serialize_run_config(cfg);
  const std::string hash = config_hash(canonical);

  std::ofstream manifest(fs::path(out_dir) / "manifest.jsonl", std::ios::app);
  std::size_t failures = 0;

  for (const std::uint64_t seed : cfg.seeds) {
    const std::string csv_name = "seed_" + std::to_string(seed) + ".csv";
    nlohmann::json entry = {
        {"name", cfg.name},         {"seed", seed},
        {"config_hash", hash},      {"version", kVersion},
        {"csv_schema", kCsvSchemaVersion}, {"csv", csv_name},
        {"metric", metric_name(cfg.train.metric.metric)},
        {"lambda", cfg.train.lambda}, {"noise", noise_name(cfg.noise)},
        {"algo", cfg.algo},
    };
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const GridMaze maze = maze_from_config(cfg);
      NoiseSpec noise;
      noise.kind = cfg.noise;
      PolicyParams policy = PolicyParams::zeros(static_cast<std::size_t>(maze.n_states()), 4);
      ValueParams value = ValueParams::zeros(static_cast<std::size_t>(maze.n_states()));
      TrainConfig train = cfg.train;
      train.seed = seed;

      std::ofstream csv(fs::path(out_dir) / csv_name);
      csv << "# varpg-csv v" << kCsvSchemaVersion << " name=" << cfg.name
          << " metric=" << metric_name(cfg.train.metric.metric)
          << " lambda=" << g17(cfg.train.lambda) << " noise=" << noise_name(cfg.noise)
          << " algo=" << cfg.algo << " seed=" << seed << "\n";
      csv << "seed,iteration,mean_return,risk_averse_rate,variability,grad_variance,"
             "mean_grad_norm,variability_grad_norm,degenerate\n";

      std::size_t downgrades = 0;
      const LogSink sink = [&](const IterationLog& il) {
        if (il.degenerate_downgrade) ++downgrades;
        if (il.iteration % cfg.log_every == 0) write_csv_row(csv, seed, il);
      };
      if (cfg.algo == "ppo")
        train_ppo_variability(maze, noise, policy, value, train, sink);
      else
        train_reinforce_variability(maze, noise, policy, value, train, sink);

      save_checkpoint((fs::path(out_dir) / ("seed_" + std::to_string(seed) + ".params")).string(),
                      policy, value);
      entry["iterations"] = cfg.train.iterations;
      entry["estimator_downgrades"] = downgrades;
      entry["status"] = "ok";
    } catch (const std::exception& e) {
      err << "seed " << seed << " failed: " << e.what() << "\n";
      entry["status"] = "failed";
      entry["error"] = e.what();
      ++failures;
    }
    entry["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    manifest << entry.dump() << "\n";
    log << "seed " << seed << ": " << entry["status"].get<std::string>() << "\n";
  }
  if (failures == cfg.seeds.size()) return 1;
  return 0;
}

namespace {

struct CsvStats {
  std::string name, metric, lambda, noise, algo;
  std::size_t rows = 0;
  double ret = 0.0, rate = 0.0, vari = 0.0;  // means over the tail window
};

bool read_csv_stats(const fs::path& path, int window, CsvStats& out) {
  std::ifstream in(path);
  if (!in) return false;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# varpg-csv", 0) != 0) return false;
  // header comment fields: key=value tokens
  std::istringstream head(line);
  std::string tok;
  while (head >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = tok.substr(0, eq), value = tok.substr(eq + 1);
    if (key == "name") out.name = value;
    else if (key == "metric") out.metric = value;
    else if (key == "lambda") out.lambda = value;
    else if (key == "noise") out.noise = value;
    else if (key == "algo") out.algo = value;
  }
  std::getline(in, line);  // column header
  struct Row {
    double ret, rate, vari;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r{};
    std::istringstream ss(line);
    std::string field;
    int idx = 0;
    bool ok = true;
    while (std::getline(ss, field, ',')) {
      try {
        if (idx == 2) r.ret = std::stod(field);
        else if (idx == 3) r.rate = std::stod(field);
        else if (idx == 4) r.vari = std::stod(field);
      } catch (...) {
        ok = false;
      }
      ++idx;
    }
    if (ok && idx >= 8) rows.push_back(r);
  }
  if (rows.empty()) return false;
  const std::size_t take = std::min<std::size_t>(rows.size(), static_cast<std::size_t>(window));
  for (std::size_t i = rows.size() - take; i < rows.size(); ++i) {
    out.ret += rows[i].ret;
    out.rate += rows[i].rate;
    out.vari += rows[i].vari;
  }
  out.ret /= static_cast<double>(take);
  out.rate /= static_cast<double>(take);
  out.vari /= static_cast<double>(take);
  out.rows = rows.size();
  return true;
}

}  // namespace

int emit_summary(const std::string& run_dir, std::ostream& out, std::ostream& err, int window) {
  if (!fs::is_directory(run_dir)) {
    err << "summarize: not a directory: " << run_dir << "\n";
    return 1;
  }
  std::vector<fs::path> csvs;
  for (const auto& entry : fs::directory_iterator(run_dir))
    if (entry.path().extension() == ".csv" &&
        entry.path().filename().string().rfind("seed_", 0) == 0)
      csvs.push_back(entry.path());
  std::sort(csvs.begin(), csvs.end());

  // group by (name, metric, lambda, noise, algo)
  std::map<std::string, std::vector<CsvStats>> groups;
  std::size_t warnings = 0;
  for (const fs::path& p : csvs) {
    CsvStats stats;
    if (!read_csv_stats(p, window, stats)) {
      err << "summarize: skipping unreadable " << p.filename().string() << "\n";
      ++warnings;
      continue;
    }
    groups[stats.name + "," + stats.metric + "," + stats.lambda + "," + stats.noise + "," +
           stats.algo]
        .push_back(stats);
  }
  if (groups.empty()) {
    err << "summarize: no usable CSV files in " << run_dir << "\n";
    return 1;
  }
  out << "name,metric,lambda,noise,algo,seeds,mean_return,risk_averse_rate,variability\n";
  for (const auto& [key, rows] : groups) {
    double ret = 0.0, rate = 0.0, vari = 0.0;
    for (const CsvStats& s : rows) {
      ret += s.ret;
      rate += s.rate;
      vari += s.vari;
    }
    const double n = static_cast<double>(rows.size());
    char buf[128];
    std::snprintf(buf, sizeof buf, ",%zu,%.6g,%.6g,%.6g", rows.size(), ret / n, rate / n,
                  vari / n);
    out << key << buf << "\n";
  }
  if (warnings) err << "summarize: " << warnings << " file(s) skipped\n";
  return 0;
}

}  // namespace varpg

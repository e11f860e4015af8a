#include "hcjoin/job.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>
#include <utility>

#include "hcjoin/io.hpp"

namespace hcj {

namespace {

class QueryLexer {
 public:
  explicit QueryLexer(const std::string& text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool done() {
    skip_space();
    return pos_ >= text_.size();
  }

  bool accept(std::string_view token) {
    skip_space();
    if (text_.compare(pos_, token.size(), token) == 0) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view token) {
    if (!accept(token)) fail("expected '" + std::string(token) + "'");
  }

  std::string identifier() {
    skip_space();
    const auto start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected an identifier");
    return text_.substr(start, pos_ - start);
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("query syntax error at offset " + std::to_string(pos_) + ": " + what);
  }

 private:
  const std::string& text_;
  std::size_t pos_ = 0;
};

std::vector<std::string> parse_term(QueryLexer& lexer, std::string& name) {
  name = lexer.identifier();
  lexer.expect("(");
  std::vector<std::string> vars;
  if (!lexer.accept(")")) {
    do {
      vars.push_back(lexer.identifier());
    } while (lexer.accept(","));
    lexer.expect(")");
  }
  return vars;
}

std::uint64_t checked_power_of_two(const nlohmann::json& value, const std::string& what) {
  if (!value.is_number_unsigned() && !(value.is_number_integer() && value.get<std::int64_t>() > 0)) {
    throw ConfigError(what + " must be a positive integer");
  }
  const auto v = value.get<std::uint64_t>();
  if (!is_power_of_two(v)) throw ConfigError(what + " must be a power of two, got " + std::to_string(v));
  return v;
}

}  // namespace

void RunConfig::validate() const {
  if (!is_power_of_two(threads)) throw ConfigError("threads must be a power of two, got " + std::to_string(threads));
  for (const auto& [var, share] : shares) {
    if (!is_power_of_two(share)) throw ConfigError("share of '" + var + "' must be a power of two");
  }
  if (output == OutputMode::kFile && output_file.empty()) throw ConfigError("output file path is empty");
}

Query parse_query(const std::string& text) {
  QueryLexer lexer(text);
  std::string head_name;
  const auto head = parse_term(lexer, head_name);
  if (!lexer.accept(":-") && !lexer.accept(":=")) lexer.fail("expected ':-'");

  Query query;
  query.variables = head;
  {
    std::set<std::string> unique(head.begin(), head.end());
    if (unique.size() != head.size()) throw ConfigError("head repeats a variable");
  }
  do {
    std::string relation;
    const auto vars = parse_term(lexer, relation);
    Atom atom;
    atom.relation = relation;
    for (const auto& v : vars) {
      const auto it = std::find(query.variables.begin(), query.variables.end(), v);
      if (it == query.variables.end()) {
        throw ConfigError("variable '" + v + "' of atom '" + relation + "' is not in the head");
      }
      atom.vars.push_back(static_cast<VarId>(it - query.variables.begin()));
    }
    query.atoms.push_back(std::move(atom));
  } while (lexer.accept(","));
  lexer.accept(".");
  if (!lexer.done()) lexer.fail("trailing input");
  query.validate();
  return query;
}

JobSpec parse_job_json(const nlohmann::json& job, std::filesystem::path base_dir) {
  if (!job.is_object()) throw ConfigError("job must be a JSON object");
  JobSpec spec;
  spec.base_dir = std::move(base_dir);

  if (!job.contains("query") || !job["query"].is_string()) throw ConfigError("job needs a \"query\" string");
  spec.query = parse_query(job["query"].get<std::string>());

  if (!job.contains("relations") || !job["relations"].is_object()) throw ConfigError("job needs a \"relations\" object");
  for (const auto& [name, path] : job["relations"].items()) {
    if (!path.is_string()) throw ConfigError("relation '" + name + "' must map to a file path");
    spec.relation_paths[name] = path.get<std::string>();
  }
  for (const auto& atom : spec.query.atoms) {
    if (!spec.relation_paths.contains(atom.relation)) {
      throw ConfigError("atom references unknown relation '" + atom.relation + "'");
    }
  }

  auto& config = spec.config;
  if (job.contains("threads")) config.threads = checked_power_of_two(job["threads"], "threads");
  if (job.contains("workers")) config.workers = job["workers"].get<std::size_t>();
  if (job.contains("symmetrize")) config.symmetrize = job["symmetrize"].get<bool>();
  if (job.contains("rewrite")) config.rewrite = job["rewrite"].get<bool>();
  if (job.contains("instrument")) config.instrument = job["instrument"].get<bool>();
  if (job.contains("seed")) config.seed = job["seed"].get<std::uint64_t>();

  if (job.contains("output")) {
    const auto& output = job["output"];
    if (output.is_string() && output == "count") {
      config.output = OutputMode::kCount;
    } else if (output.is_string() && output == "tuples") {
      config.output = OutputMode::kTuples;
    } else if (output.is_object() && output.contains("file") && output["file"].is_string()) {
      config.output = OutputMode::kFile;
      config.output_file = output["file"].get<std::string>();
    } else {
      throw ConfigError("output must be \"count\", \"tuples\" or {\"file\": path}");
    }
  }

  if (job.contains("order") && !job["order"].is_null()) {
    config.order = job["order"].get<std::vector<std::string>>();
    std::set<std::string> unique(config.order.begin(), config.order.end());
    if (config.order.size() != spec.query.num_variables() || unique.size() != config.order.size()) {
      throw ConfigError("order must list every query variable exactly once");
    }
    for (const auto& v : config.order) spec.query.variable_id(v);
  }
  if (job.contains("shares") && !job["shares"].is_null()) {
    for (const auto& [var, share] : job["shares"].items()) {
      spec.query.variable_id(var);
      config.shares[var] = checked_power_of_two(share, "share of '" + var + "'");
    }
  }
  config.validate();
  return spec;
}

JobSpec parse_job_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open job file '" + path.string() + "'");
  nlohmann::json job;
  try {
    in >> job;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("job file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  try {
    return parse_job_json(job, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("job file '" + path.string() + "': " + e.what());
  }
}

nlohmann::json emit_job(const JobSpec& spec) {
  nlohmann::json job;
  job["query"] = spec.query.to_string();
  job["relations"] = spec.relation_paths;
  const auto& config = spec.config;
  job["threads"] = config.threads;
  if (config.workers != 0) job["workers"] = config.workers;
  job["symmetrize"] = config.symmetrize;
  job["rewrite"] = config.rewrite;
  job["instrument"] = config.instrument;
  job["seed"] = config.seed;
  switch (config.output) {
    case OutputMode::kCount:
      job["output"] = "count";
      break;
    case OutputMode::kTuples:
      job["output"] = "tuples";
      break;
    case OutputMode::kFile:
      job["output"] = {{"file", config.output_file}};
      break;
  }
  if (!config.order.empty()) job["order"] = config.order;
  if (!config.shares.empty()) job["shares"] = config.shares;
  return job;
}

Catalog load_catalog(const JobSpec& spec) {
  std::map<std::string, std::shared_ptr<const Relation>> relations;
  // Names mapped to the same file share one loaded copy.
  std::map<std::string, std::shared_ptr<const Relation>> by_path;
  for (const auto& atom : spec.query.atoms) {
    if (relations.contains(atom.relation)) continue;
    std::filesystem::path path = spec.relation_paths.at(atom.relation);
    if (path.is_relative() && !spec.base_dir.empty()) path = spec.base_dir / path;
    const auto key = path.lexically_normal().string();
    auto& loaded = by_path[key];
    if (!loaded) loaded = std::make_shared<const Relation>(load_relation(path, atom.vars.size(), spec.config.symmetrize));
    relations[atom.relation] = loaded;
  }
  return Catalog::for_query(spec.query, std::move(relations));
}

LoadedJob parse_job(const std::filesystem::path& path) {
  LoadedJob loaded;
  loaded.spec = parse_job_file(path);
  loaded.catalog = load_catalog(loaded.spec);
  return loaded;
}

std::size_t physical_cores() {
  std::set<std::pair<std::string, std::string>> cores;
  const std::filesystem::path root("/sys/devices/system/cpu");
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(root, ec)) {
    const auto name = entry.path().filename().string();
    if (name.rfind("cpu", 0) != 0 || name.size() < 4 || !std::isdigit(static_cast<unsigned char>(name[3]))) continue;
    std::ifstream core(entry.path() / "topology" / "core_id");
    std::ifstream package(entry.path() / "topology" / "physical_package_id");
    std::string core_id, package_id;
    if (core >> core_id && package >> package_id) cores.emplace(package_id, core_id);
  }
  if (!cores.empty()) return cores.size();
  return std::thread::hardware_concurrency();
}

std::size_t default_workers() {
  if (const char* env = std::getenv("HC_WORKERS")) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const auto cores = physical_cores();
  return cores > 0 ? cores : 4;
}

}  // namespace hcj

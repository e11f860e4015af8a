#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "hcjoin/types.hpp"

namespace hcj {

inline constexpr std::uint64_t kDefaultThreads = 1024;
inline constexpr std::uint64_t kDefaultSeed = 0x5eed'c0de'2024'0001ULL;

enum class OutputMode { kCount, kTuples, kFile };

struct RunConfig {
  // Number of logical tasks P; a power of two.
  std::uint64_t threads = kDefaultThreads;
  // Physical parallelism cap; 0 means "detect".
  std::size_t workers = 0;
  OutputMode output = OutputMode::kCount;
  std::string output_file;
  bool symmetrize = false;
  // Optimizer overrides.
  std::vector<std::string> order;
  std::map<std::string, std::uint64_t> shares;
  bool rewrite = true;
  bool instrument = false;
  std::uint64_t seed = kDefaultSeed;

  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

struct JobSpec {
  Query query;
  // Relation name -> file path as written in the job file.
  std::map<std::string, std::string> relation_paths;
  RunConfig config;
  // Directory used to resolve relative relation paths.
  std::filesystem::path base_dir;

  bool operator==(const JobSpec& other) const {
    return query == other.query && relation_paths == other.relation_paths && config == other.config;
  }
};

// Parses "Q(X,Y,Z) :- R(X,Y), S(Y,Z), T(X,Z)." (":=" is accepted in place of ":-").
Query parse_query(const std::string& text);

JobSpec parse_job_json(const nlohmann::json& job, std::filesystem::path base_dir = {});
JobSpec parse_job_file(const std::filesystem::path& path);
nlohmann::json emit_job(const JobSpec& job);

// Loads every relation referenced by the job. Relations are deduplicated; CSV arity comes
// from the first atom that references the relation.
Catalog load_catalog(const JobSpec& job);

struct LoadedJob {
  JobSpec spec;
  Catalog catalog;
};

LoadedJob parse_job(const std::filesystem::path& path);

// Distinct (package, core) pairs under sysfs; falls back to hardware_concurrency.
std::size_t physical_cores();

// Physical core count when detectable, else 4. HC_WORKERS overrides.
std::size_t default_workers();

}  // namespace hcj

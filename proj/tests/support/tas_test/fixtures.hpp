#pragma once

#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "tas/orchestrator.hpp"
#include "tas/web_env.hpp"

namespace tas_test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(TAS_FIXTURE_DIR) / name; }

inline std::shared_ptr<const tas::Corpus> fixture_corpus(const std::string& name) {
  return std::make_shared<const tas::Corpus>(tas::load_corpus(fixture(name) / "corpus.json"));
}

inline tas::TaskSpec fixture_task(const std::string& name) { return tas::load_task_spec(fixture(name) / "task.json"); }

inline tas::ColumnSpec col(std::string name, tas::ColumnKind kind, std::string description = "") {
  return tas::ColumnSpec{std::move(name), kind, std::move(description), std::nullopt};
}

// Name(Key), City(Info), Email(Info).
inline tas::Schema people_schema() {
  tas::Schema s;
  s.task_mode = tas::TaskMode::Wide;
  s.columns = {col("Name", tas::ColumnKind::Key), col("City", tas::ColumnKind::Info),
               col("Email", tas::ColumnKind::Info)};
  return s;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto p = std::filesystem::temp_directory_path() / ("tas-" + tag + "-" + std::to_string(rng()));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace tas_test

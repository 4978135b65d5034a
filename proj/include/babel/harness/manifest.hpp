// Run manifests: artifact registry with content hashes, idempotence.
#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "babel/common.hpp"

namespace babel::harness {

namespace fs = std::filesystem;

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// write-temp-then-rename
inline void write_atomic(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) throw Error("cannot write: " + tmp);
    f.write(content.data(), (std::streamsize)content.size());
  }
  fs::rename(tmp, path);
}

inline std::string file_sha256(const std::string& path) {
  return sha256_hex(read_file(path));
}

struct Artifact {
  std::string path;  // relative to the run directory
  std::string kind;
  std::string sha256;
};

struct RunManifest {
  std::string config_hash;
  std::string kind;
  std::string status = "incomplete";  // complete | failed | incomplete
  std::string failure;                // stage error message, when failed
  std::vector<Artifact> artifacts;
  double wall_seconds = 0;
  std::string run_dir;

  void add(const std::string& run_dir_abs, const std::string& rel_path,
           const std::string& artifact_kind) {
    Artifact a;
    a.path = rel_path;
    a.kind = artifact_kind;
    a.sha256 = file_sha256((fs::path(run_dir_abs) / rel_path).string());
    artifacts.push_back(std::move(a));
  }

  bool has_kind(const std::string& k) const {
    for (const auto& a : artifacts)
      if (a.kind == k) return true;
    return false;
  }

  std::vector<Artifact> of_kind(const std::string& k) const {
    std::vector<Artifact> r;
    for (const auto& a : artifacts)
      if (a.kind == k) r.push_back(a);
    return r;
  }

  std::string abs_path(const Artifact& a) const {
    return (fs::path(run_dir) / a.path).string();
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash;
    j["kind"] = kind;
    j["status"] = status;
    if (!failure.empty()) j["failure"] = failure;
    j["wall_seconds"] = wall_seconds;
    auto arr = nlohmann::ordered_json::array();
    for (const auto& a : artifacts)
      arr.push_back({{"path", a.path}, {"kind", a.kind}, {"sha256", a.sha256}});
    j["artifacts"] = arr;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j,
                               const std::string& run_dir_abs) {
    RunManifest m;
    m.config_hash = j.at("config_hash");
    m.kind = j.at("kind");
    m.status = j.at("status");
    m.failure = j.value("failure", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.run_dir = run_dir_abs;
    for (const auto& aj : j.at("artifacts"))
      m.artifacts.push_back({aj.at("path"), aj.at("kind"), aj.at("sha256")});
    return m;
  }

  void save() const {
    write_atomic((fs::path(run_dir) / "manifest.json").string(),
                 to_json().dump(2) + "\n");
  }

  static std::optional<RunManifest> try_load(const std::string& run_dir_abs) {
    fs::path p = fs::path(run_dir_abs) / "manifest.json";
    if (!fs::exists(p)) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(read_file(p.string()));
    return from_json(j, run_dir_abs);
  }

  // Every listed artifact exists and matches its recorded hash.
  bool verify() const {
    for (const auto& a : artifacts) {
      fs::path p = fs::path(run_dir) / a.path;
      if (!fs::exists(p)) return false;
      if (file_sha256(p.string()) != a.sha256) return false;
    }
    return true;
  }
};

}  // namespace babel::harness

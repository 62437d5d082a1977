#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "coopdrive/core.hpp"

// Every CLI run writes one manifest next to its outputs: subcommand, full
// config snapshot, seeds, input/output hashes and wall-clock timings. The
// manifest is diagnostic metadata; deterministic artifacts (reports,
// checkpoints, episodes) never embed timing.

namespace coopdrive {

using json = nlohmann::ordered_json;

inline uint64_t hash_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot hash missing file: " + path);
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[1 << 16];
    while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
        h = fnv1a(buf, static_cast<size_t>(f.gcount()), h);
    }
    return h;
}

class RunManifest {
  public:
    explicit RunManifest(std::string subcommand) {
        doc_["tool"] = "coopdrive";
        doc_["subcommand"] = std::move(subcommand);
        doc_["config"] = json::object();
        doc_["inputs"] = json::array();
        doc_["outputs"] = json::array();
        doc_["timings_ms"] = json::object();
    }

    template <typename T>
    void config(const std::string& key, const T& value) {
        doc_["config"][key] = value;
    }

    void input(const std::string& path) {
        doc_["inputs"].push_back({{"path", path}, {"fnv1a", hash_file(path)}});
    }

    void output(const std::string& path) {
        doc_["outputs"].push_back({{"path", path}, {"fnv1a", hash_file(path)}});
    }

    void timing(const std::string& key, double ms) { doc_["timings_ms"][key] = ms; }

    json& raw() { return doc_; }

    void write(const std::string& path) const {
        std::ofstream f(path, std::ios::trunc);
        if (!f) throw ConfigError("cannot write manifest: " + path);
        f << doc_.dump(2) << "\n";
    }

  private:
    json doc_;
};

}  // namespace coopdrive

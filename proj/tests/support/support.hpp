#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "triage/model.hpp"

namespace triage::testing {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(TRIAGE_DATA_DIR) / relative;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);

/// Classifier backed by a plain function of the sentence text.
class FunctionClassifier final : public Classifier {
 public:
  using Fn = std::function<PredictionTriple(const std::string&)>;
  FunctionClassifier(Fn fn, std::string version = "stub") : fn_(std::move(fn)), version_(std::move(version)) {}
  std::vector<PredictionTriple> predict(std::span<const std::string> texts) const override {
    std::vector<PredictionTriple> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(fn_(t));
    return out;
  }
  std::string version() const override { return version_; }

 private:
  Fn fn_;
  std::string version_;
};

}  // namespace triage::testing

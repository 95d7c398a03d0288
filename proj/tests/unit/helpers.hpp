#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "td3sched/domain.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("td3sched_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline td3sched::StateVector random_state(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> flat(4 * n);
  for (double& x : flat) x = u(rng);
  return td3sched::StateVector::from_flat(flat);
}

inline td3sched::ActionVector random_action(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> c(td3sched::kCpuMin, td3sched::kCpuMax);
  std::uniform_real_distribution<double> m(td3sched::kMemMin, td3sched::kMemMax);
  std::vector<double> cpu(n);
  std::vector<double> mem(n);
  for (std::size_t i = 0; i < n; ++i) {
    cpu[i] = c(rng);
    mem[i] = m(rng);
  }
  return td3sched::ActionVector(std::move(cpu), std::move(mem));
}

inline td3sched::Transition random_transition(std::size_t n, std::mt19937_64& rng, double reward = 0.0,
                                              bool done = false) {
  return td3sched::Transition{random_state(n, rng), random_action(n, rng), reward, random_state(n, rng), done};
}

}  // namespace testing

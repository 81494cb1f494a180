#pragma once

#include <doctest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "swei/error.hpp"
#include "swei/rng.hpp"
#include "swei/types.hpp"

namespace swei::test {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("swei_" + tag + "_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline SpaceTimePlot random_plot(Rng& rng, std::size_t n_x, std::size_t n_t,
                                 MotionKind kind = MotionKind::displacement) {
  std::vector<float> data(n_x * n_t);
  for (auto& v : data) v = static_cast<float>(rng.normal());
  return SpaceTimePlot(n_x, n_t, 1e-4 * (1.0 + rng.uniform()), 1e-4 * (1.0 + rng.uniform()),
                       std::move(data), kind);
}

/// Runs `fn` and checks that it throws swei::Error with `code`.
template <typename Fn>
void check_errc(Fn&& fn, Errc code) {
  try {
    fn();
    FAIL("expected error " << to_string(code));
  } catch (const Error& e) {
    CHECK_MESSAGE(e.code() == code, "got " << to_string(e.code()) << " (" << e.what() << ")");
  }
}

}  // namespace swei::test

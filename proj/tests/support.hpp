#pragma once

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "uhd/bucketed.hpp"
#include "uhd/rng.hpp"
#include "uhd/sparse_vector.hpp"

namespace testing {

inline uhd::SparseVector<float> random_sparse(uhd::Rng& rng, uhd::Dim n, std::size_t nnz, bool positive = true) {
  std::vector<uhd::Dim> dims(n);
  for (uhd::Dim i = 0; i < n; ++i) dims[i] = i;
  rng.shuffle(dims);
  dims.resize(std::min<std::size_t>(nnz, n));
  std::sort(dims.begin(), dims.end());
  std::vector<uhd::SparseEntry<float>> e;
  for (auto d : dims) {
    float w = static_cast<float>(rng.uniform(0.05, 1.0));
    if (!positive && rng.uniform() < 0.5) w = -w;
    e.push_back({d, w});
  }
  return uhd::SparseVector<float>(n, std::move(e));
}

inline uhd::BucketedRepresentation<float> random_rep(uhd::Rng& rng, const std::vector<uhd::BucketDescriptor>& buckets,
                                                     std::size_t nnz) {
  uhd::BucketedRepresentation<float> r;
  for (const auto& b : buckets) r.add(b, uhd::l2_normalize(random_sparse(rng, b.dim, nnz)));
  return r;
}

/// Fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() / ("uhd-test-" + tag + "-" + std::to_string(::getpid()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace testing

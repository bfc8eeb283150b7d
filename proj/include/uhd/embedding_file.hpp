#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "uhd/dense.hpp"

namespace uhd {

/// One text's per-layer token embeddings as stored in a UHDE file.
struct EmbeddingRecord {
  std::string id;
  std::vector<DenseTokenMatrix<float>> layers;  // layer indices 1..V
};

/// Sequential reader of the UHDE format: "UHDE", u32 version = 1,
/// u32 layer count, u32 hidden size, then records of u32 id length, id
/// bytes, u32 token count and layer-major, token-major float32 values.
class EmbeddingFileReader {
 public:
  explicit EmbeddingFileReader(const std::string& path);

  std::uint32_t layer_count() const { return layers_; }
  std::uint32_t hidden_size() const { return hidden_; }

  /// Next record in file order, or nullopt at a clean end of file.
  std::optional<EmbeddingRecord> next();

 private:
  bool read_exact(void* dst, std::size_t n, bool allow_clean_eof);

  std::string path_;
  std::ifstream in_;
  std::uint32_t layers_ = 0;
  std::uint32_t hidden_ = 0;
  std::size_t record_ = 0;
};

class EmbeddingFileWriter {
 public:
  EmbeddingFileWriter(const std::string& path, std::uint32_t layer_count, std::uint32_t hidden_size);

  void write(const std::string& id, const std::vector<DenseTokenMatrix<float>>& layers);
  void close();

 private:
  std::ofstream out_;
  std::uint32_t layers_;
  std::uint32_t hidden_;
};

/// Reads every record of a UHDE file.
std::vector<EmbeddingRecord> read_embedding_file(const std::string& path);

inline constexpr std::uint32_t kEmbeddingFileVersion = 1;

}  // namespace uhd

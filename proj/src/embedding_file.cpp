#include "uhd/embedding_file.hpp"

#include <cmath>
#include <cstring>

#include "uhd/error.hpp"

namespace uhd {

namespace {
constexpr char kMagic[4] = {'U', 'H', 'D', 'E'};
constexpr std::uint32_t kMaxIdBytes = 1u << 20;
}  // namespace

EmbeddingFileReader::EmbeddingFileReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
  if (!in_) throw DataError("cannot open embedding file " + path);
  char magic[4];
  if (!read_exact(magic, 4, false) || std::memcmp(magic, kMagic, 4) != 0) {
    throw FormatError(path + ": not a UHDE embedding file");
  }
  std::uint32_t version = 0;
  read_exact(&version, 4, false);
  if (version != kEmbeddingFileVersion) {
    throw FormatError(path + ": unsupported UHDE version " + std::to_string(version));
  }
  read_exact(&layers_, 4, false);
  read_exact(&hidden_, 4, false);
  if (layers_ == 0 || hidden_ == 0) throw CorruptFile(path + ": header has zero layers or hidden size");
}

bool EmbeddingFileReader::read_exact(void* dst, std::size_t n, bool allow_clean_eof) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in_.gcount());
  if (got == n) return true;
  if (got == 0 && allow_clean_eof && in_.eof()) return false;
  throw CorruptFile(path_ + ": truncated record " + std::to_string(record_));
}

std::optional<EmbeddingRecord> EmbeddingFileReader::next() {
  std::uint32_t id_len = 0;
  if (!read_exact(&id_len, 4, true)) return std::nullopt;
  if (id_len > kMaxIdBytes) throw CorruptFile(path_ + ": implausible id length in record " + std::to_string(record_));
  EmbeddingRecord rec;
  rec.id.resize(id_len);
  read_exact(rec.id.data(), id_len, false);
  std::uint32_t tokens = 0;
  read_exact(&tokens, 4, false);
  if (tokens == 0) throw CorruptFile(path_ + ": record " + rec.id + " has zero tokens");
  for (std::uint32_t j = 0; j < layers_; ++j) {
    DenseTokenMatrix<float> m{j + 1, RowMatrix<float>(tokens, hidden_)};
    read_exact(m.values.data(), static_cast<std::size_t>(tokens) * hidden_ * sizeof(float), false);
    if (!m.values.allFinite()) throw DataError(path_ + ": nonfinite value in record " + rec.id);
    rec.layers.push_back(std::move(m));
  }
  ++record_;
  return rec;
}

EmbeddingFileWriter::EmbeddingFileWriter(const std::string& path, std::uint32_t layer_count, std::uint32_t hidden_size)
    : out_(path, std::ios::binary | std::ios::trunc), layers_(layer_count), hidden_(hidden_size) {
  if (!out_) throw DataError("cannot write embedding file " + path);
  if (layer_count == 0 || hidden_size == 0) throw InvalidArgument("UHDE needs at least one layer and h >= 1");
  out_.write(kMagic, 4);
  out_.write(reinterpret_cast<const char*>(&kEmbeddingFileVersion), 4);
  out_.write(reinterpret_cast<const char*>(&layers_), 4);
  out_.write(reinterpret_cast<const char*>(&hidden_), 4);
}

void EmbeddingFileWriter::write(const std::string& id, const std::vector<DenseTokenMatrix<float>>& layers) {
  if (layers.size() != layers_) throw InvalidArgument("UHDE record layer count mismatch");
  const auto tokens = layers.front().values.rows();
  if (tokens < 1) throw InvalidArgument("UHDE record needs at least one token");
  for (const auto& l : layers) {
    if (l.values.rows() != tokens || l.values.cols() != hidden_) throw InvalidArgument("UHDE record shape mismatch");
    if (!l.values.allFinite()) throw DataError("UHDE record " + id + " has nonfinite values");
  }
  const auto id_len = static_cast<std::uint32_t>(id.size());
  const auto t = static_cast<std::uint32_t>(tokens);
  out_.write(reinterpret_cast<const char*>(&id_len), 4);
  out_.write(id.data(), id_len);
  out_.write(reinterpret_cast<const char*>(&t), 4);
  for (const auto& l : layers) {
    out_.write(reinterpret_cast<const char*>(l.values.data()),
               static_cast<std::streamsize>(l.values.size() * sizeof(float)));
  }
  if (!out_) throw DataError("write failed for UHDE record " + id);
}

void EmbeddingFileWriter::close() {
  out_.flush();
  out_.close();
}

std::vector<EmbeddingRecord> read_embedding_file(const std::string& path) {
  EmbeddingFileReader reader(path);
  std::vector<EmbeddingRecord> out;
  while (auto rec = reader.next()) out.push_back(std::move(*rec));
  return out;
}

}  // namespace uhd

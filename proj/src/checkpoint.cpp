#include "uhd/checkpoint.hpp"

#include <cstring>

#include "uhd/binary_io.hpp"

namespace uhd {

namespace {

constexpr char kMagic[4] = {'U', 'H', 'D', 'W'};

void write_matrix_row_major(ByteWriter& w, const Matrix<float>& m) {
  const RowMatrix<float> rm = m;
  w.floats(std::span<const float>(rm.data(), static_cast<std::size_t>(rm.size())));
}

Matrix<float> read_matrix_row_major(ByteReader& r, std::uint32_t rows, std::uint32_t cols) {
  RowMatrix<float> rm(rows, cols);
  r.floats(std::span<float>(rm.data(), static_cast<std::size_t>(rm.size())));
  return rm;
}

BucketMode infer_mode(const std::vector<PlanEntry<float>>& entries) {
  if (entries.size() == 1) return BucketMode::single;
  bool same_layer = true;
  for (const auto& e : entries) same_layer = same_layer && e.layer == entries.front().layer;
  return same_layer ? BucketMode::horizontal : BucketMode::vertical;
}

}  // namespace

std::string serialize_checkpoint(const Model<float>& model) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(model.plan.size()));
  for (const auto& e : model.plan) {
    w.u32(e.layer);
    w.u32(e.aspect);
    w.u32(static_cast<std::uint32_t>(e.wta.input_size()));
    w.u32(static_cast<std::uint32_t>(e.wta.output_size()));
    w.u32(static_cast<std::uint32_t>(e.wta.train_k()));
    w.f32(static_cast<float>(e.wta.sparsity()));
  }
  for (const auto& e : model.plan) {
    const std::size_t h = e.wta.input_size(), n = e.wta.output_size();
    std::string bits((h * n + 7) / 8, '\0');
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        if (e.wta.mask()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) != 0.0f) {
          const std::size_t bit = i * n + d;
          bits[bit / 8] = static_cast<char>(bits[bit / 8] | (1 << (bit % 8)));
        }
      }
    }
    w.bytes(bits);
    write_matrix_row_major(w, e.wta.weight());
    w.floats(std::span<const float>(e.wta.bias().data(), n));
  }
  if (!model.encoder) {
    w.u8(0);
    return std::move(w.buffer());
  }
  const auto& enc = *model.encoder;
  w.u8(1);
  w.u32(static_cast<std::uint32_t>(enc.vocab_size()));
  w.u32(static_cast<std::uint32_t>(enc.hidden_size()));
  w.u32(static_cast<std::uint32_t>(enc.depth()));
  w.u8(static_cast<std::uint8_t>(enc.activation()));
  w.floats(std::span<const float>(enc.embeddings().data(), static_cast<std::size_t>(enc.embeddings().size())));
  for (const auto& l : enc.layers()) {
    w.u32(l.window);
    write_matrix_row_major(w, l.weight);
    w.floats(std::span<const float>(l.bias.data(), static_cast<std::size_t>(l.bias.size())));
  }
  const auto& tok = model.tokenizer;
  w.u8(tok.lowercase ? 1 : 0);
  w.u32(static_cast<std::uint32_t>(tok.max_query_tokens));
  w.u32(static_cast<std::uint32_t>(tok.max_doc_tokens));
  w.u32(tok.unknown_id);
  w.u32(static_cast<std::uint32_t>(tok.words.size()));
  for (const auto& word : tok.words) {
    w.u32(static_cast<std::uint32_t>(word.size()));
    w.bytes(word);
  }
  return std::move(w.buffer());
}

Model<float> deserialize_checkpoint(std::string_view bytes, const std::string& context) {
  ByteReader r(bytes, context);
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(context + ": not a UHDW checkpoint");
  r.bytes(4);
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw FormatError(context + ": unsupported checkpoint version " + std::to_string(version));
  const auto count = r.u32();
  if (count == 0) throw CorruptFile(context + ": empty bucket plan");
  struct Header {
    std::uint32_t layer, aspect, h, n, k;
    float sparsity;
  };
  std::vector<Header> headers(count);
  for (auto& hd : headers) {
    hd = {r.u32(), r.u32(), r.u32(), r.u32(), r.u32(), r.f32()};
    if (hd.h == 0 || hd.n == 0 || hd.k == 0 || hd.k > hd.n) throw CorruptFile(context + ": invalid bucket header");
    if (static_cast<std::uint64_t>(hd.h) * hd.n * 4 > r.remaining()) throw CorruptFile(context + ": truncated bucket");
  }
  std::vector<PlanEntry<float>> entries;
  for (const auto& hd : headers) {
    const std::size_t h = hd.h, n = hd.n;
    const auto bits = r.bytes((h * n + 7) / 8);
    Matrix<float> mask(hd.h, hd.n);
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t d = 0; d < n; ++d) {
        const std::size_t bit = i * n + d;
        mask(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) =
            (static_cast<unsigned char>(bits[bit / 8]) >> (bit % 8)) & 1 ? 1.0f : 0.0f;
      }
    }
    Matrix<float> weight = read_matrix_row_major(r, hd.h, hd.n);
    Vector<float> bias(hd.n);
    r.floats(std::span<float>(bias.data(), n));
    if (!weight.allFinite() || !bias.allFinite()) throw DataError(context + ": nonfinite WTA parameters");
    if (weight.cwiseProduct(Matrix<float>::Ones(hd.h, hd.n) - mask).cwiseAbs().maxCoeff() != 0.0f) {
      throw CorruptFile(context + ": masked weight is nonzero");
    }
    try {
      entries.push_back({hd.layer, hd.aspect, WtaLayer<float>(std::move(weight), std::move(bias), std::move(mask), hd.k, hd.sparsity)});
    } catch (const InvalidArgument& e) {
      throw CorruptFile(context + ": " + e.what());
    }
  }
  Model<float> model;
  try {
    const auto mode = infer_mode(entries);
    model.plan = BucketPlan<float>(mode, std::move(entries));
  } catch (const InvalidArgument& e) {
    throw CorruptFile(context + ": " + e.what());
  }
  const auto flag = r.u8();
  if (flag == 1) {
    const auto vocab = r.u32(), h = r.u32(), depth = r.u32();
    const auto act = r.u8();
    if (vocab == 0 || h == 0 || act > 3) throw CorruptFile(context + ": invalid encoder header");
    if (static_cast<std::uint64_t>(vocab) * h * 4 > r.remaining()) throw CorruptFile(context + ": truncated encoder");
    RowMatrix<float> emb(vocab, h);
    r.floats(std::span<float>(emb.data(), static_cast<std::size_t>(emb.size())));
    std::vector<MixingLayer<float>> layers(depth);
    for (auto& l : layers) {
      l.window = r.u32();
      l.weight = read_matrix_row_major(r, h, h);
      l.bias.resize(h);
      r.floats(std::span<float>(l.bias.data(), h));
    }
    try {
      model.encoder = ToyEncoder<float>(std::move(emb), std::move(layers), static_cast<Activation>(act));
    } catch (const InvalidArgument& e) {
      throw CorruptFile(context + ": " + e.what());
    }
    auto& tok = model.tokenizer;
    tok.lowercase = r.u8() != 0;
    tok.max_query_tokens = r.u32();
    tok.max_doc_tokens = r.u32();
    tok.unknown_id = r.u32();
    const auto words = r.u32();
    if (words > r.remaining()) throw CorruptFile(context + ": truncated vocabulary");
    tok.words.reserve(words);
    for (std::uint32_t i = 0; i < words; ++i) tok.words.emplace_back(r.bytes(r.u32()));
    try {
      tok.reindex();
    } catch (const InvalidArgument& e) {
      throw CorruptFile(context + ": " + e.what());
    }
    if (tok.vocab_size() != vocab) throw CorruptFile(context + ": vocabulary size disagrees with embedding table");
  } else if (flag != 0) {
    throw CorruptFile(context + ": bad encoder flag");
  }
  if (!r.at_end()) throw CorruptFile(context + ": trailing bytes");
  return model;
}

void write_checkpoint(const Model<float>& model, const std::string& path) {
  write_file_bytes(path, serialize_checkpoint(model));
}

Model<float> read_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file_bytes(path), path); }

}  // namespace uhd

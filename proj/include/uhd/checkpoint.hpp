#pragma once

#include <string>

#include "uhd/model.hpp"

namespace uhd {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// UHDW checkpoint: "UHDW", u32 version, bucket plan (u32 count; per bucket
/// u32 layer, u32 aspect, u32 h, u32 n, u32 train_k, f32 sparsity), per
/// bucket the mask bitset, W (h x n row-major float32) and b; then a flag
/// byte and, when set, the toy encoder (u32 vocab, u32 h, u32 depth,
/// u8 activation, embeddings, per layer u32 window + W + b) followed by its
/// tokenizer (u8 lowercase, u32 max query tokens, u32 max doc tokens,
/// u32 unknown id, u32 word count, length-prefixed words).
std::string serialize_checkpoint(const Model<float>& model);
Model<float> deserialize_checkpoint(std::string_view bytes, const std::string& context = "checkpoint");

void write_checkpoint(const Model<float>& model, const std::string& path);
Model<float> read_checkpoint(const std::string& path);

}  // namespace uhd

#include "uhd/index_io.hpp"

#include <boost/crc.hpp>
#include <cstring>

#include "uhd/binary_io.hpp"
#include "uhd/error.hpp"

namespace uhd {

namespace {
constexpr char kMagic[4] = {'U', 'H', 'D', 'I'};
using Crc64Xz = boost::crc_optimal<64, 0x42F0E1EBA9EA3693ULL, ~0ULL, ~0ULL, true, true>;
}  // namespace

std::uint64_t crc64_xz(std::string_view bytes) {
  Crc64Xz crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

std::string serialize_index(const InvertedIndex& index) {
  ByteWriter w;
  w.raw(kMagic, 4);
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.buckets().size()));
  w.u32(static_cast<std::uint32_t>(index.doc_count()));
  for (const auto& id : index.doc_ids()) {
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.bytes(id);
  }
  for (const auto& bucket : index.buckets()) {
    w.u32(bucket.descriptor.layer);
    w.u32(bucket.descriptor.aspect);
    w.u32(bucket.descriptor.dim);
    w.f32(bucket.descriptor.weight);
    w.u32(static_cast<std::uint32_t>(bucket.active_dims()));
    for (Dim d = 0; d < bucket.postings.size(); ++d) {
      const auto& list = bucket.postings[d];
      if (list.empty()) continue;
      w.u32(d);
      w.u32(static_cast<std::uint32_t>(list.size()));
      for (const auto& p : list) {
        w.u32(p.doc);
        w.f32(p.weight);
      }
    }
  }
  w.u64(crc64_xz(w.buffer()));
  return std::move(w.buffer());
}

InvertedIndex deserialize_index(std::string_view bytes, const std::string& context) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError(context + ": not a UHDI index");
  if (bytes.size() < 8) throw CorruptFile(context + ": truncated header");
  {
    ByteReader version_reader(bytes.substr(4, 4), context);
    const auto version = version_reader.u32();
    if (version != kIndexVersion) throw FormatError(context + ": unsupported index version " + std::to_string(version));
  }
  if (bytes.size() < 20) throw CorruptFile(context + ": truncated index");
  const auto body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8), context);
  if (tail.u64() != crc64_xz(body)) throw CorruptFile(context + ": checksum mismatch");

  ByteReader r(body, context);
  r.bytes(8);
  const auto bucket_count = r.u32();
  const auto docs = r.u32();
  if (docs > r.remaining() / 4) throw CorruptFile(context + ": doc table larger than file");
  std::vector<std::string> ids;
  ids.reserve(docs);
  for (std::uint32_t i = 0; i < docs; ++i) ids.emplace_back(r.bytes(r.u32()));
  std::vector<BucketIndex> buckets;
  for (std::uint32_t b = 0; b < bucket_count; ++b) {
    BucketIndex bucket;
    bucket.descriptor.layer = r.u32();
    bucket.descriptor.aspect = r.u32();
    bucket.descriptor.dim = r.u32();
    bucket.descriptor.weight = r.f32();
    if (bucket.descriptor.dim > (1u << 28)) throw CorruptFile(context + ": implausible bucket dimensionality");
    bucket.postings.resize(bucket.descriptor.dim);
    const auto dims = r.u32();
    long last = -1;
    for (std::uint32_t i = 0; i < dims; ++i) {
      const auto d = r.u32();
      if (d >= bucket.descriptor.dim || static_cast<long>(d) <= last) throw CorruptFile(context + ": bad dimension id");
      last = d;
      const auto len = r.u32();
      if (len > r.remaining() / 8) throw CorruptFile(context + ": posting list larger than file");
      auto& list = bucket.postings[d];
      list.reserve(len);
      for (std::uint32_t p = 0; p < len; ++p) {
        const auto doc = r.u32();
        list.push_back({doc, r.f32()});
      }
    }
    buckets.push_back(std::move(bucket));
  }
  if (!r.at_end()) throw CorruptFile(context + ": trailing bytes before checksum");
  try {
    return InvertedIndex(std::move(buckets), std::move(ids));
  } catch (const Error& e) {
    throw CorruptFile(context + ": " + e.what());
  }
}

void write_index(const InvertedIndex& index, const std::string& path) { write_file_bytes(path, serialize_index(index)); }

InvertedIndex read_index(const std::string& path) { return deserialize_index(read_file_bytes(path), path); }

}  // namespace uhd

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "labelassoc/encoder.hpp"
#include "labelassoc/error.hpp"

static_assert(std::endian::native == std::endian::little, "file formats assume a little-endian host");

namespace labelassoc {

namespace {

constexpr char kMagic[4] = {'W', 'C', 'S', 'M'};

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void floats(std::span<const float> v) { bytes(v.data(), v.size_bytes()); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  void bytes(void* p, std::size_t n) {
    if (n > in_.size() - pos_) {
      throw InputError("truncated model file: need " + std::to_string(pos_ + n) + " bytes, have " +
                       std::to_string(in_.size()));
    }
    std::memcpy(p, in_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, sizeof v);
    return v;
  }
  void floats(std::span<float> v) { bytes(v.data(), v.size_bytes()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_model(const EncoderModel& model) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.bytes(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.dim()));
  w.u32(static_cast<std::uint32_t>(model.max_seq_len()));
  w.u32(static_cast<std::uint32_t>(model.vocab_size()));
  for (const auto& token : model.vocab().tokens()) {
    w.u32(static_cast<std::uint32_t>(token.size()));
    w.bytes(token.data(), token.size());
  }
  w.floats(model.token_embeddings());
  w.floats(model.projection_weight());
  w.floats(model.projection_bias());
  return out;
}

EncoderModel deserialize_model(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw InputError("bad magic: not a model file");
  const auto version = r.u32();
  if (version != kModelFormatVersion) {
    throw InputError("model format version mismatch: file " + std::to_string(version) + ", expected " +
                     std::to_string(kModelFormatVersion));
  }
  const auto dim = r.u32();
  const auto max_seq_len = r.u32();
  const auto vocab_size = r.u32();
  if (dim == 0 || max_seq_len == 0 || vocab_size == 0) throw InputError("model header has a zero field");
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) {
    const auto len = r.u32();
    std::string token(len, '\0');
    r.bytes(token.data(), len);
    tokens.push_back(std::move(token));
  }
  EncoderModel model(Vocabulary::from_tokens(std::move(tokens)), dim, max_seq_len);
  r.floats(model.token_embeddings());
  r.floats(model.projection_weight());
  r.floats(model.projection_bias());
  if (!r.done()) throw InputError("trailing bytes after model payload");
  return model;
}

void save_model(const EncoderModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failure on " + path.string());
}

EncoderModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace labelassoc

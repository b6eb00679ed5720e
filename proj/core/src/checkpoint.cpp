#include "persel/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <zlib.h>

namespace persel::harness {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'E', 'L', 'C', 'K', 'P', '1'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(static_cast<char>(v)); }
  void u16(std::uint16_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void i64(std::int64_t v) { le(static_cast<std::uint64_t>(v)); }
  void f64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    le(bits);
  }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    le(bits);
  }
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    bytes_.insert(bytes_.end(), c, c + n);
  }
  void str(const std::string& s) {
    if (s.size() > UINT16_MAX) throw std::runtime_error("checkpoint: string too long");
    u16(static_cast<std::uint16_t>(s.size()));
    raw(s.data(), s.size());
  }
  void long_str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  const std::vector<char>& bytes() const { return bytes_; }
  std::size_t size() const { return bytes_.size(); }

 private:
  template <typename T>
  void le(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i)
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::vector<char> bytes_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : data_(data), size_(size) {}
  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint16_t u16() { return le<std::uint16_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  std::int64_t i64() { return static_cast<std::int64_t>(le<std::uint64_t>()); }
  double f64() {
    const std::uint64_t bits = le<std::uint64_t>();
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  float f32() {
    const std::uint32_t bits = le<std::uint32_t>();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str() {
    const std::size_t n = u16();
    const char* p = take(n);
    return std::string(p, n);
  }
  std::string long_str() {
    const std::size_t n = u64();
    const char* p = take(n);
    return std::string(p, n);
  }
  const char* take(std::size_t n) {
    if (pos_ + n > size_) throw std::runtime_error("checkpoint: truncated file");
    const char* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }

 private:
  template <typename T>
  T le() {
    const char* p = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  const char* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const void* data, std::size_t n) {
  return static_cast<std::uint32_t>(
      crc32(0L, static_cast<const Bytef*>(data), static_cast<uInt>(n)));
}

void write_tensor(Writer& w, const nd::Tensor& t, CheckpointDtype dtype) {
  w.u8(static_cast<std::uint8_t>(dtype));
  w.u8(static_cast<std::uint8_t>(t.rank()));
  for (nd::Index d : t.shape()) w.u64(static_cast<std::uint64_t>(d));
  Writer values;
  if (dtype == CheckpointDtype::f64) {
    for (double v : t.values()) values.f64(v);
  } else {
    for (double v : t.values()) values.f32(static_cast<float>(v));
  }
  w.raw(values.bytes().data(), values.size());
  w.u32(crc_of(values.bytes().data(), values.size()));
}

nd::Tensor read_tensor(Reader& r) {
  const auto dtype = static_cast<CheckpointDtype>(r.u8());
  const int rank = r.u8();
  std::vector<nd::Index> shape;
  for (int i = 0; i < rank; ++i) shape.push_back(static_cast<nd::Index>(r.u64()));
  nd::Tensor t(shape);
  const std::size_t elem = dtype == CheckpointDtype::f64 ? 8 : 4;
  const std::size_t nbytes = static_cast<std::size_t>(t.numel()) * elem;
  const char* raw = r.take(nbytes);
  const std::uint32_t want = crc_of(raw, nbytes);
  Reader vr(raw, nbytes);
  for (nd::Index i = 0; i < t.numel(); ++i)
    t.at(i) = dtype == CheckpointDtype::f64 ? vr.f64() : static_cast<double>(vr.f32());
  if (r.u32() != want) throw std::runtime_error("checkpoint: tensor checksum mismatch");
  return t;
}

}  // namespace

void save_checkpoint(const matchers::Matcher& matcher, const CheckpointMeta& meta,
                     const std::string& path, CheckpointDtype dtype) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kVersion);
  w.u8(static_cast<std::uint8_t>(dtype));
  w.long_str(matcher.config().canonical_text());

  const corpus::Vocab& vocab = matcher.vocab();
  w.u64(vocab.word_list().size());
  for (const std::string& word : vocab.word_list()) w.str(word);
  w.u64(vocab.char_list().size());
  for (char c : vocab.char_list()) w.u8(static_cast<std::uint8_t>(c));
  write_tensor(w, vocab.fixed(), dtype);
  write_tensor(w, vocab.trained(), dtype);

  w.i64(meta.step);
  w.f64(meta.best_hits1);
  w.u64(meta.seed);
  w.str(meta.persona_side);
  w.str(meta.persona_version);
  w.u8(meta.ablate_context ? 1 : 0);

  const nd::ParamStore& params = matcher.params();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& [name, p] : params) {
    w.str(name);
    write_tensor(w, p.value, dtype);
  }

  // trailer: total payload length + whole-file checksum
  const std::uint64_t payload = w.size();
  const std::uint32_t crc = crc_of(w.bytes().data(), w.size());
  w.u64(payload);
  w.u32(crc);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.size()));
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 16) throw std::runtime_error("checkpoint: truncated file");

  // verify the trailer first
  Reader trailer(bytes.data() + bytes.size() - 12, 12);
  const std::uint64_t payload = trailer.u64();
  const std::uint32_t want_crc = trailer.u32();
  if (payload + 12 != bytes.size()) throw std::runtime_error("checkpoint: length mismatch");
  if (crc_of(bytes.data(), payload) != want_crc)
    throw std::runtime_error("checkpoint: file checksum mismatch");

  Reader r(bytes.data(), payload);
  if (std::memcmp(r.take(sizeof(kMagic)), kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic");
  if (r.u32() != kVersion) throw std::runtime_error("checkpoint: unsupported version");
  r.u8();  // stored dtype, already encoded per tensor

  matchers::ModelConfig config = matchers::ModelConfig::from_canonical_text(r.long_str());

  std::vector<std::string> words(r.u64());
  for (auto& word : words) word = r.str();
  std::vector<char> chars(r.u64());
  for (auto& c : chars) c = static_cast<char>(r.u8());
  nd::Tensor fixed = read_tensor(r);
  nd::Tensor trained = read_tensor(r);
  corpus::Vocab vocab = corpus::Vocab::from_parts(std::move(words), std::move(chars),
                                                  std::move(fixed), std::move(trained));

  LoadedCheckpoint out;
  out.meta.step = r.i64();
  out.meta.best_hits1 = r.f64();
  out.meta.seed = r.u64();
  out.meta.persona_side = r.str();
  out.meta.persona_version = r.str();
  out.meta.ablate_context = r.u8() != 0;

  out.matcher = matchers::Matcher::create(config, std::move(vocab), /*init_seed=*/0);
  const std::uint32_t count = r.u32();
  if (count != out.matcher->params().size())
    throw std::runtime_error("checkpoint: parameter count mismatch for this config");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.str();
    if (!out.matcher->params().contains(name))
      throw std::runtime_error("checkpoint: unknown parameter '" + name + "' for this config");
    nd::Param& p = out.matcher->params().at(name);
    nd::Tensor t = read_tensor(r);
    if (!(t.shape() == p.value.shape()))
      throw std::runtime_error("checkpoint: shape mismatch for parameter '" + name + "'");
    p.value = std::move(t);
  }
  return out;
}

}  // namespace persel::harness

#include "fggan/checkpoint.hpp"

#include <cstring>
#include <fstream>

namespace fggan {

namespace {

constexpr char kMagic[4] = {'F', 'G', 'G', 'N'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(out, bits);
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
  }
  std::string str(std::size_t len) {
    need(len);
    std::string s = bytes_.substr(pos_, len);
    pos_ += len;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw ParseError("checkpoint '" + path_ + "': truncated file");
    }
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  unsigned char byte() { return static_cast<unsigned char>(bytes_[pos_++]); }
  const std::string& bytes_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

const Tensor& Checkpoint::require(const std::string& name) const {
  const Tensor* t = find(name);
  if (!t) throw ParseError("checkpoint: missing tensor '" + name + "'");
  return *t;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(kMagic, 4);
  put_u32(out, ckpt.version);
  put_u64(out, ckpt.tensors.size());
  for (const auto& [name, tensor] : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
    for (std::size_t d : tensor.shape) put_u64(out, d);
    for (double v : tensor.data) put_f64(out, v);
  }
  const std::string meta = ckpt.meta.dump();
  put_u64(out, meta.size());
  out += meta;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed for '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for reading");
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r(bytes, path);
  const std::string magic = r.str(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw ParseError("checkpoint '" + path + "': bad magic bytes");
  }
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != kCheckpointVersion) {
    throw ParseError("checkpoint '" + path + "': format version " +
                     std::to_string(ckpt.version) + ", this build reads version " +
                     std::to_string(kCheckpointVersion));
  }
  const std::uint64_t count = r.u64();
  ckpt.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    std::string name = r.str(name_len);
    const std::uint32_t rank = r.u32();
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t k = 0; k < rank; ++k) shape[k] = static_cast<std::size_t>(r.u64());
    Tensor t(shape);
    for (double& v : t.data) v = r.f64();
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  const std::uint64_t meta_len = r.u64();
  const std::string meta = r.str(meta_len);
  if (!r.at_end()) throw ParseError("checkpoint '" + path + "': trailing bytes");
  try {
    ckpt.meta = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("checkpoint '" + path + "': bad metadata: " + std::string(e.what()));
  }
  return ckpt;
}

}  // namespace fggan

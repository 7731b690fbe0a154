#include "tcnseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "tcnseg/error.hpp"

namespace tcnseg {

namespace {

void put_u8(std::string& out, std::uint8_t v) { out.push_back(static_cast<char>(v)); }

void put_u16(std::string& out, std::uint16_t v) {
  for (int i = 0; i < 2; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw CheckpointError("checkpoint corrupt at byte " + std::to_string(pos_) + ": " + what);
  }

  void read_raw(void* dst, std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) fail(std::string("truncated ") + what);
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    read_raw(&v, 1, what);
    return v;
  }

  std::uint16_t u16(const char* what) {
    std::uint16_t v = 0;
    for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(u8(what)) << (8 * i);
    return v;
  }

  std::uint32_t u32(const char* what) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8(what)) << (8 * i);
    return v;
  }

  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8(what)) << (8 * i);
    return v;
  }

  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

  std::string str(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) fail(std::string("truncated ") + what);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void put_tensor(std::string& out, const std::string& name, const Tensor& t) {
  put_u16(out, static_cast<std::uint16_t>(name.size()));
  out.append(name);
  put_u8(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t e : t.shape()) put_u64(out, e);
  for (std::size_t i = 0; i < t.size(); ++i) put_f64(out, t[i]);
}

Tensor read_tensor(Reader& in, std::string& name) {
  const std::uint16_t name_len = in.u16("tensor name length");
  name = in.str(name_len, "tensor name");
  const std::uint8_t rank = in.u8("tensor rank");
  if (rank > 3) in.fail("tensor rank " + std::to_string(rank) + " unsupported");
  std::vector<std::size_t> shape(rank);
  std::size_t numel = 1;
  for (std::size_t d = 0; d < rank; ++d) {
    shape[d] = static_cast<std::size_t>(in.u64("tensor extent"));
    numel *= shape[d];
  }
  std::vector<double> values(numel);
  for (std::size_t i = 0; i < numel; ++i) values[i] = in.f64("tensor data");
  return Tensor::from_values(std::move(shape), std::move(values));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  std::string out;
  out.append(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u8(out, kCheckpointVersion);

  const std::string config_text = serialize_config(ckpt.config);
  put_u32(out, static_cast<std::uint32_t>(config_text.size()));
  out.append(config_text);

  const std::u32string& entries = ckpt.vocab.entries();
  put_u32(out, static_cast<std::uint32_t>(entries.size()));
  for (char32_t c : entries) put_u32(out, static_cast<std::uint32_t>(c));

  const auto named = named_tensors(ckpt.params);
  if (ckpt.adam.first_moment.size() != named.size() ||
      ckpt.adam.second_moment.size() != named.size()) {
    throw CheckpointError("checkpoint: Adam state does not match the parameter list");
  }
  put_u32(out, static_cast<std::uint32_t>(3 * named.size()));
  for (const auto& [name, tensor] : named) put_tensor(out, name, *tensor);
  for (std::size_t i = 0; i < named.size(); ++i) {
    put_tensor(out, "adam.m." + named[i].first, ckpt.adam.first_moment[i]);
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    put_tensor(out, "adam.v." + named[i].first, ckpt.adam.second_moment[i]);
  }

  put_u64(out, ckpt.adam.step);
  put_u32(out, ckpt.epoch);
  put_u8(out, ckpt.has_best_dev_f ? 1 : 0);
  put_f64(out, ckpt.best_dev_f);
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  Reader in(bytes);
  char magic[sizeof(kCheckpointMagic)];
  in.read_raw(magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError("checkpoint corrupt at byte 0: bad magic");
  }
  const std::uint8_t version = in.u8("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(kCheckpointVersion) +
                          ")");
  }

  Checkpoint ckpt;
  const std::uint32_t config_len = in.u32("config length");
  ckpt.config = parse_config(in.str(config_len, "config block"), "checkpoint config");

  const std::uint32_t vocab_count = in.u32("vocabulary count");
  for (std::uint32_t i = 0; i < vocab_count; ++i) {
    ckpt.vocab.add(static_cast<char32_t>(in.u32("vocabulary entry")));
  }

  // Rebuild the expected parameter skeleton from config + vocabulary, then
  // demand that the stored records match it name by name, shape by shape.
  Rng scratch(0);
  ckpt.params = init_params(ckpt.config.conv, ckpt.vocab.size(), scratch);
  auto named = named_tensors(ckpt.params);
  ckpt.adam.first_moment.resize(named.size());
  ckpt.adam.second_moment.resize(named.size());

  const std::uint32_t records = in.u32("tensor count");
  if (records != 3 * named.size()) {
    in.fail("expected " + std::to_string(3 * named.size()) + " tensor records, found " +
            std::to_string(records));
  }
  for (std::uint32_t r = 0; r < records; ++r) {
    const std::size_t record_offset = in.offset();
    std::string name;
    Tensor tensor = read_tensor(in, name);
    std::string base = name;
    Tensor* dest = nullptr;
    if (name.rfind("adam.m.", 0) == 0) {
      base = name.substr(7);
    } else if (name.rfind("adam.v.", 0) == 0) {
      base = name.substr(7);
    }
    std::size_t slot = named.size();
    for (std::size_t i = 0; i < named.size(); ++i) {
      if (named[i].first == base) {
        slot = i;
        break;
      }
    }
    if (slot == named.size()) {
      throw CheckpointError("checkpoint corrupt at byte " + std::to_string(record_offset) +
                            ": unexpected tensor '" + name + "'");
    }
    if (name.rfind("adam.m.", 0) == 0) {
      dest = &ckpt.adam.first_moment[slot];
    } else if (name.rfind("adam.v.", 0) == 0) {
      dest = &ckpt.adam.second_moment[slot];
    } else {
      dest = named[slot].second;
      if (tensor.shape() != dest->shape()) {
        throw CheckpointError("checkpoint tensor '" + name + "' has shape " +
                              shape_string(tensor) + " but the config implies " +
                              shape_string(*dest));
      }
    }
    *dest = std::move(tensor);
  }
  for (std::size_t i = 0; i < named.size(); ++i) {
    if (ckpt.adam.first_moment[i].shape() != named[i].second->shape() ||
        ckpt.adam.second_moment[i].shape() != named[i].second->shape()) {
      throw CheckpointError("checkpoint: Adam moments for '" + named[i].first +
                            "' do not match the parameter shape");
    }
  }

  ckpt.adam.step = in.u64("adam step");
  ckpt.epoch = in.u32("epoch");
  ckpt.has_best_dev_f = in.u8("best flag") != 0;
  ckpt.best_dev_f = in.f64("best dev F");
  if (!in.done()) {
    in.fail("trailing bytes after footer");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CheckpointError("cannot open checkpoint for writing: " + path);
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CheckpointError("failed writing checkpoint: " + path);
  }
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CheckpointError("cannot open checkpoint: " + path);
  }
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace tcnseg

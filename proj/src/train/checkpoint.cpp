// SPDX-License-Identifier: Apache-2.0

#include "tvae/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "tvae/errors.hpp"

namespace tvae {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'V', 'A', 'E', 'C', 'K', 'P', 'T'};

enum class FieldType : std::uint8_t { F64 = 1, U64 = 2, Bytes = 3 };

struct Field {
  FieldType type;
  std::string payload;
};

class Writer {
 public:
  template <typename T>
  void put(T v) {
    char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    buf_.append(b, sizeof(T));
  }
  void put_bytes(std::string_view s) { buf_.append(s); }

  void field(const std::string& name, FieldType type, std::string_view payload) {
    put<std::uint16_t>(static_cast<std::uint16_t>(name.size()));
    put_bytes(name);
    put<std::uint8_t>(static_cast<std::uint8_t>(type));
    put<std::uint64_t>(payload.size());
    put_bytes(payload);
    ++fields_;
  }
  void f64(const std::string& name, std::span<const double> v) {
    field(name, FieldType::F64, {reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)});
  }
  void u64(const std::string& name, std::span<const std::uint64_t> v) {
    field(name, FieldType::U64, {reinterpret_cast<const char*>(v.data()), v.size() * sizeof(std::uint64_t)});
  }
  void bytes(const std::string& name, std::string_view s) { field(name, FieldType::Bytes, s); }

  std::string& buffer() { return buf_; }
  std::uint32_t fields() const { return fields_; }

 private:
  std::string buf_;
  std::uint32_t fields_ = 0;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CorruptCheckpoint("checkpoint is truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string pack_sets(const VariationalSets& sets) {
  const std::size_t H = sets.num_latents();
  std::string out;
  out.reserve((sets.size() * sets.set_size() * H + 7) / 8);
  std::uint8_t acc = 0;
  int nbits = 0;
  for (std::size_t n = 0; n < sets.size(); ++n) {
    for (const auto& z : sets[n]) {
      for (std::size_t h = 0; h < H; ++h) {
        acc |= static_cast<std::uint8_t>(z[h] ? 1U << nbits : 0U);
        if (++nbits == 8) {
          out.push_back(static_cast<char>(acc));
          acc = 0;
          nbits = 0;
        }
      }
    }
  }
  if (nbits) out.push_back(static_cast<char>(acc));
  return out;
}

VariationalSets unpack_sets(std::size_t N, std::size_t S, std::size_t H, std::string_view packed) {
  if (packed.size() != (N * S * H + 7) / 8) throw CorruptCheckpoint("variational set payload has the wrong size");
  VariationalSets sets(N, S, H);
  std::size_t bit = 0;
  for (std::size_t n = 0; n < N; ++n) {
    auto& phi = sets[n];
    phi.reserve(S);
    for (std::size_t s = 0; s < S; ++s) {
      BinaryLatentState z(H);
      for (std::size_t h = 0; h < H; ++h, ++bit) {
        z.set(h, (static_cast<unsigned char>(packed[bit / 8]) >> (bit % 8)) & 1U);
      }
      phi.push_back(std::move(z));
    }
  }
  return sets;
}

template <typename T>
std::vector<T> as_vector(const Field& f, FieldType expected, const std::string& name) {
  if (f.type != expected || f.payload.size() % sizeof(T) != 0) {
    throw CorruptCheckpoint("checkpoint field '" + name + "' has an unexpected type or size");
  }
  std::vector<T> v(f.payload.size() / sizeof(T));
  std::memcpy(v.data(), f.payload.data(), f.payload.size());
  return v;
}

const Field& require(const std::map<std::string, Field>& fields, const std::string& name) {
  auto it = fields.find(name);
  if (it == fields.end()) throw CorruptCheckpoint("checkpoint is missing field '" + name + "'");
  return it->second;
}

}  // namespace

Checkpoint make_checkpoint(const TrainState& state, const std::string& config_digest) {
  Checkpoint ck;
  ck.theta = state.theta;
  ck.sets = state.sets;
  ck.adam = state.adam;
  ck.epoch = state.epoch;
  std::ostringstream rng;
  rng << state.shuffle_rng;
  ck.rng_state = rng.str();
  ck.config_digest = config_digest;
  ck.pending_hidden_layers = state.pending_hidden_layers;
  return ck;
}

TrainState restore_state(const Checkpoint& ck) {
  TrainState s;
  s.theta = ck.theta;
  s.sets = ck.sets;
  s.adam = ck.adam;
  s.epoch = ck.epoch;
  std::istringstream rng(ck.rng_state);
  rng >> s.shuffle_rng;
  if (rng.fail()) throw CorruptCheckpoint("checkpoint RNG state cannot be parsed");
  s.pending_hidden_layers = ck.pending_hidden_layers;
  return s;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
  Writer w;
  w.put_bytes({kMagic, sizeof kMagic});
  w.put<std::uint32_t>(ck.format_version);
  const std::size_t count_pos = w.buffer().size();
  w.put<std::uint32_t>(0);

  const auto& net = ck.theta.net;
  std::vector<std::uint64_t> dims(net.layer_dims().begin(), net.layer_dims().end());
  w.u64("net.layer_dims", dims);
  w.bytes("net.hidden_activation", to_string(net.hidden_activation()));
  w.bytes("net.output_activation", to_string(net.output_activation()));
  w.f64("net.params", net.params());
  w.f64("theta.pi", ck.theta.pi);
  const double sigma2[1] = {ck.theta.sigma2};
  w.f64("theta.sigma2", sigma2);
  const std::uint64_t shape[3] = {ck.sets.size(), ck.sets.set_size(), ck.sets.num_latents()};
  w.u64("sets.shape", shape);
  w.bytes("sets.bits", pack_sets(ck.sets));
  w.f64("adam.first_moment", ck.adam.first_moment);
  w.f64("adam.second_moment", ck.adam.second_moment);
  const std::uint64_t step[1] = {ck.adam.step_count};
  w.u64("adam.step_count", step);
  const double hyper[3] = {ck.adam.hyper.beta1, ck.adam.hyper.beta2, ck.adam.hyper.eps};
  w.f64("adam.hyper", hyper);
  const std::uint64_t progress[2] = {static_cast<std::uint64_t>(ck.epoch), ck.pending_hidden_layers};
  w.u64("train.progress", progress);
  w.bytes("train.rng_state", ck.rng_state);
  w.bytes("train.config_digest", ck.config_digest);

  auto& buf = w.buffer();
  const std::uint32_t count = w.fields();
  std::memcpy(buf.data() + count_pos, &count, sizeof count);
  const std::uint64_t checksum = fnv1a(buf);
  w.put<std::uint64_t>(checksum);

  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint: " + path.string());
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw CheckpointError("failed while writing checkpoint: " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  Reader r(data);
  if (r.get_bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) {
    throw CorruptCheckpoint("not a tvae checkpoint (bad magic): " + path.string());
  }
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointFormatVersion) throw VersionMismatch(version, kCheckpointFormatVersion);
  if (data.size() < sizeof kMagic + 8 + 8) throw CorruptCheckpoint("checkpoint is truncated");
  std::uint64_t stored = 0;
  std::memcpy(&stored, data.data() + data.size() - 8, 8);
  if (stored != fnv1a(std::string_view(data).substr(0, data.size() - 8))) {
    throw CorruptCheckpoint("checkpoint checksum mismatch (file truncated or damaged): " + path.string());
  }

  const auto count = r.get<std::uint32_t>();
  std::map<std::string, Field> fields;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.get<std::uint16_t>();
    std::string name(r.get_bytes(name_len));
    const auto type = r.get<std::uint8_t>();
    if (type < 1 || type > 3) throw CorruptCheckpoint("checkpoint field '" + name + "' has unknown type");
    const auto len = r.get<std::uint64_t>();
    fields[name] = Field{static_cast<FieldType>(type), std::string(r.get_bytes(len))};
  }
  if (r.pos() + 8 != data.size()) throw CorruptCheckpoint("checkpoint has trailing bytes");

  Checkpoint ck;
  ck.format_version = version;
  try {
    const auto dims64 = as_vector<std::uint64_t>(require(fields, "net.layer_dims"), FieldType::U64, "net.layer_dims");
    std::vector<std::size_t> dims(dims64.begin(), dims64.end());
    DecoderNet net(dims, activation_from_string(require(fields, "net.hidden_activation").payload),
                   activation_from_string(require(fields, "net.output_activation").payload));
    const auto params = as_vector<double>(require(fields, "net.params"), FieldType::F64, "net.params");
    if (params.size() != net.num_params()) throw CorruptCheckpoint("decoder parameter count does not match layout");
    std::copy(params.begin(), params.end(), net.params().begin());
    ck.theta.net = std::move(net);
    ck.theta.pi = as_vector<double>(require(fields, "theta.pi"), FieldType::F64, "theta.pi");
    const auto sigma2 = as_vector<double>(require(fields, "theta.sigma2"), FieldType::F64, "theta.sigma2");
    if (sigma2.size() != 1) throw CorruptCheckpoint("theta.sigma2 must hold one value");
    ck.theta.sigma2 = sigma2[0];
    ck.theta.validate();

    const auto shape = as_vector<std::uint64_t>(require(fields, "sets.shape"), FieldType::U64, "sets.shape");
    if (shape.size() != 3) throw CorruptCheckpoint("sets.shape must hold N, S, H");
    ck.sets = unpack_sets(shape[0], shape[1], shape[2], require(fields, "sets.bits").payload);

    ck.adam.first_moment = as_vector<double>(require(fields, "adam.first_moment"), FieldType::F64, "adam.first_moment");
    ck.adam.second_moment =
        as_vector<double>(require(fields, "adam.second_moment"), FieldType::F64, "adam.second_moment");
    const auto step = as_vector<std::uint64_t>(require(fields, "adam.step_count"), FieldType::U64, "adam.step_count");
    const auto hyper = as_vector<double>(require(fields, "adam.hyper"), FieldType::F64, "adam.hyper");
    if (step.size() != 1 || hyper.size() != 3) throw CorruptCheckpoint("malformed Adam state");
    ck.adam.step_count = step[0];
    ck.adam.hyper = {hyper[0], hyper[1], hyper[2]};

    const auto progress = as_vector<std::uint64_t>(require(fields, "train.progress"), FieldType::U64, "train.progress");
    if (progress.size() != 2) throw CorruptCheckpoint("malformed training progress");
    ck.epoch = static_cast<int>(progress[0]);
    ck.pending_hidden_layers = progress[1];
    ck.rng_state = require(fields, "train.rng_state").payload;
    ck.config_digest = require(fields, "train.config_digest").payload;
  } catch (const InvalidInput& e) {
    throw CorruptCheckpoint(std::string("checkpoint content is inconsistent: ") + e.what());
  }
  return ck;
}

}  // namespace tvae

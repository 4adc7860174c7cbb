#include "goalflow/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

namespace goalflow::nn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'G', 'F', 'L', 'O', 'W', 'C', 'K', 'P'};

template <typename T>
void put(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw CheckpointError("checkpoint truncated");
  }
  return v;
}

std::string get_string(std::ifstream& in, std::uint64_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), static_cast<std::streamsize>(n))) {
    throw CheckpointError("checkpoint truncated");
  }
  return s;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, sizeof(Scalar));
  const std::string meta = checkpoint.metadata.dump();
  put<std::uint64_t>(out, meta.size());
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  put<std::uint64_t>(out, checkpoint.tensors.size());
  for (const auto& [name, t] : checkpoint.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(t.data().data()),
              static_cast<std::streamsize>(t.size() * sizeof(Scalar)));
  }
  if (!out) throw CheckpointError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw CheckpointError(path.string() + " is not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto scalar_bytes = get<std::uint32_t>(in);
  if (scalar_bytes != sizeof(Scalar)) {
    throw CheckpointError("checkpoint precision is " + std::to_string(scalar_bytes * 8) +
                          "-bit, this build uses " + std::to_string(sizeof(Scalar) * 8) + "-bit");
  }
  Checkpoint ck;
  const auto meta_len = get<std::uint64_t>(in);
  try {
    ck.metadata = nlohmann::json::parse(get_string(in, meta_len));
  } catch (const nlohmann::json::parse_error& e) {
    throw CheckpointError(std::string("checkpoint metadata is malformed: ") + e.what());
  }
  const auto count = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_string(in, get<std::uint32_t>(in));
    const auto ndim = get<std::uint32_t>(in);
    Shape shape(ndim);
    for (auto& d : shape) d = get<std::uint64_t>(in);
    Tensor t(shape);
    if (t.size() && !in.read(reinterpret_cast<char*>(t.data().data()),
                             static_cast<std::streamsize>(t.size() * sizeof(Scalar)))) {
      throw CheckpointError("checkpoint truncated in tensor " + name);
    }
    ck.tensors.emplace(std::move(name), std::move(t));
  }
  return ck;
}

}  // namespace goalflow::nn

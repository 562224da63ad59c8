#pragma once

// Binary checkpoint: config snapshot, epoch, parameter arrays and the
// training pairs in effect when it was written. Values are stored raw so a
// restore is bit-exact.
//
// Layout (native byte order):
//   "OTIEACK1" | u32 scalar bytes | u64 epoch | str config
//   | u64 param count | { str name | u64 rows | u64 cols | scalars } ...
//   | u64 pair count | { i64 left | i64 right } ...
// where str = u64 length + bytes.

#include "otiea/kg_data.hpp"
#include "otiea/parameters.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace otiea {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
struct Checkpoint {
  std::string config_text;
  std::uint64_t epoch = 0;
  ParameterStore<Scalar> parameters;
  std::vector<AlignedPair> train_pairs;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'O', 'T', 'I', 'E', 'A', 'C', 'K', '1'};

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint");
  return v;
}

inline std::string get_string(std::istream& in) {
  auto n = get<std::uint64_t>(in);
  if (n > (1ull << 32)) throw CheckpointError("corrupt checkpoint string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw CheckpointError("truncated checkpoint");
  return s;
}

}  // namespace detail

template <typename Scalar>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<Scalar>& ck) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("cannot write " + path.string());
  out.write(detail::kCheckpointMagic, sizeof detail::kCheckpointMagic);
  detail::put<std::uint32_t>(out, sizeof(Scalar));
  detail::put<std::uint64_t>(out, ck.epoch);
  detail::put_string(out, ck.config_text);
  detail::put<std::uint64_t>(out, ck.parameters.all().size());
  for (const auto& [name, m] : ck.parameters.all()) {
    detail::put_string(out, name);
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.rows()));
    detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
  }
  detail::put<std::uint64_t>(out, ck.train_pairs.size());
  for (const auto& p : ck.train_pairs) {
    detail::put<std::int64_t>(out, p.left);
    detail::put<std::int64_t>(out, p.right);
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof detail::kCheckpointMagic];
  in.read(magic, sizeof magic);
  if (!in || !std::equal(magic, magic + sizeof magic, detail::kCheckpointMagic)) {
    throw CheckpointError(path.string() + " is not a checkpoint");
  }
  if (detail::get<std::uint32_t>(in) != sizeof(Scalar)) {
    throw CheckpointError("checkpoint scalar width does not match");
  }
  Checkpoint<Scalar> ck;
  ck.epoch = detail::get<std::uint64_t>(in);
  ck.config_text = detail::get_string(in);
  const auto count = detail::get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto name = detail::get_string(in);
    const auto rows = static_cast<Index>(detail::get<std::uint64_t>(in));
    const auto cols = static_cast<Index>(detail::get<std::uint64_t>(in));
    ck.parameters.declare(name, rows, cols);
    auto& m = ck.parameters.at(name);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m.size())));
    if (!in) throw CheckpointError("truncated parameter " + name);
  }
  const auto pairs = detail::get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < pairs; ++i) {
    auto l = detail::get<std::int64_t>(in);
    auto r = detail::get<std::int64_t>(in);
    ck.train_pairs.push_back({static_cast<Index>(l), static_cast<Index>(r)});
  }
  return ck;
}

// Throws unless `loaded` has exactly the names and shapes of `expected`.
template <typename Scalar>
void check_compatible(const ParameterStore<Scalar>& loaded, const ParameterStore<Scalar>& expected) {
  for (const auto& [name, m] : expected.all()) {
    if (!loaded.contains(name)) throw CheckpointError("checkpoint lacks parameter " + name);
    const auto& got = loaded.at(name);
    if (got.rows() != m.rows() || got.cols() != m.cols()) {
      throw CheckpointError("parameter " + name + " has shape " + std::to_string(got.rows()) + "x" +
                            std::to_string(got.cols()) + ", expected " + std::to_string(m.rows()) +
                            "x" + std::to_string(m.cols()));
    }
  }
  if (loaded.all().size() != expected.all().size()) {
    throw CheckpointError("checkpoint has parameters the configuration does not declare");
  }
}

}  // namespace otiea

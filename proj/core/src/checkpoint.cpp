#include "nhdp/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <type_traits>

#include "nhdp/errors.hpp"

namespace nhdp {
namespace {

constexpr std::array<char, 8> kMagic{'N', 'H', 'D', 'P', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T> && (sizeof(T) == 4 || sizeof(T) == 8));
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  unsigned char bytes[sizeof(T)];
  for (std::size_t k = 0; k < sizeof(T); ++k) bytes[k] = static_cast<unsigned char>(bits >> (8 * k));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw ParseError("checkpoint truncated", 0);
  U bits = 0;
  for (std::size_t k = 0; k < sizeof(T); ++k) bits |= static_cast<U>(bytes[k]) << (8 * k);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  const auto& m = ck.model;
  m.validate();
  // Write to a sibling file and rename so a crash never leaves a torn checkpoint.
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kVersion);
    put<std::uint32_t>(out, m.tree.include_root() ? 1u : 0u);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.tree.depth()));
    for (int w : m.tree.truncation().widths) put<std::uint32_t>(out, static_cast<std::uint32_t>(w));
    for (double h : {m.hyper.alpha, m.hyper.beta, m.hyper.gamma1, m.hyper.gamma2, m.hyper.lambda0}) put<double>(out, h);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(m.vocab_size));
    put<std::int64_t>(out, m.step_count);
    put<std::uint64_t>(out, ck.seed);
    put<std::int64_t>(out, ck.docs_seen);
    for (double x : m.lambda) put<double>(out, x);
    for (double x : m.tau1) put<double>(out, x);
    for (double x : m.tau2) put<double>(out, x);
    if (!out) throw IoError("write failed for checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw ParseError("not an nhdp checkpoint", 0);
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw CompatibilityError("unsupported checkpoint version " + std::to_string(version));
  const bool include_root = get<std::uint32_t>(in) != 0;
  const auto levels = get<std::uint32_t>(in);
  if (levels == 0 || levels > 64) throw ParseError("checkpoint has an invalid depth", 0);
  Truncation trunc;
  for (std::uint32_t l = 0; l < levels; ++l) trunc.widths.push_back(static_cast<int>(get<std::uint32_t>(in)));
  Hyperparameters hyper;
  hyper.alpha = get<double>(in);
  hyper.beta = get<double>(in);
  hyper.gamma1 = get<double>(in);
  hyper.gamma2 = get<double>(in);
  hyper.lambda0 = get<double>(in);
  const auto V = static_cast<int>(get<std::uint32_t>(in));

  Checkpoint ck;
  auto& m = ck.model;
  try {
    m = make_prior_model(TruncatedTree(trunc, include_root), hyper, V);
  } catch (const ConfigError& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what(), 0);
  }
  m.step_count = get<std::int64_t>(in);
  ck.seed = get<std::uint64_t>(in);
  ck.docs_seen = get<std::int64_t>(in);
  for (double& x : m.lambda) x = get<double>(in);
  for (double& x : m.tau1) x = get<double>(in);
  for (double& x : m.tau2) x = get<double>(in);
  if (in.peek() != std::char_traits<char>::eof()) throw ParseError("trailing bytes after checkpoint", 0);
  m.validate();
  return ck;
}

}  // namespace nhdp

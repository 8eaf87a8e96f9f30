#include "flowedit/parameter_store.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "flowedit/error.hpp"

namespace flowedit {

namespace {

constexpr std::array<char, 8> kMagic = {'F', 'E', 'D', 'I', 'T', 'C', 'K', 'P'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T read_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes;
  in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T));
  require(static_cast<bool>(in), ErrorCode::io, "checkpoint truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

ParameterStore::ParameterStore(const ParameterStore& other) : index_(other.index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) params_.push_back(std::make_unique<Parameter>(*p));
}

ParameterStore& ParameterStore::operator=(const ParameterStore& other) {
  if (this != &other) {
    ParameterStore copy(other);
    *this = std::move(copy);
  }
  return *this;
}

Parameter& ParameterStore::add(std::string name, Tensor init) {
  require(!contains(name), ErrorCode::invalid_argument, "duplicate parameter '" + name + "'");
  require(init.all_finite(), ErrorCode::non_finite, "non-finite initial value for '" + name + "'");
  auto param = std::make_unique<Parameter>();
  param->grad = Tensor(init.rows(), init.cols());
  param->value = std::move(init);
  param->name = name;
  index_.emplace(std::move(name), params_.size());
  params_.push_back(std::move(param));
  return *params_.back();
}

Parameter& ParameterStore::get(std::string_view name) {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::invalid_argument,
          "unknown parameter '" + std::string(name) + "'");
  return *params_[it->second];
}

const Parameter& ParameterStore::get(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->get(name);
}

bool ParameterStore::contains(std::string_view name) const { return index_.contains(name); }

std::size_t ParameterStore::scalar_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

std::vector<Parameter*> ParameterStore::with_prefix(std::string_view prefix) {
  std::vector<Parameter*> out;
  for (auto& p : params_)
    if (std::string_view(p->name).starts_with(prefix)) out.push_back(p.get());
  return out;
}

void ParameterStore::assign_values(const ParameterStore& other) {
  require(other.size() == size(), ErrorCode::shape_mismatch, "parameter stores differ in size");
  for (auto& p : params_) {
    const Parameter& src = other.get(p->name);
    require(src.value.same_shape(p->value), ErrorCode::shape_mismatch,
            "shape mismatch for '" + p->name + "'");
    p->value = src.value;
  }
}

bool bit_equal(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if ((*ia)->name != (*ib)->name || !bit_equal((*ia)->value, (*ib)->value)) return false;
  }
  return true;
}

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  out.write(kMagic.data(), kMagic.size());
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(store.size()));
  for (const auto& p : store) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(p->name.size()));
    out.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_le<std::uint32_t>(out, 2);
    write_le<std::uint64_t>(out, p->value.rows());
    write_le<std::uint64_t>(out, p->value.cols());
    for (double v : p->value.values()) write_le<double>(out, v);
  }
  require(static_cast<bool>(out), ErrorCode::io, "write failed for '" + path.string() + "'");
}

ParameterStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open checkpoint '" + path.string() + "'");
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  require(static_cast<bool>(in) && magic == kMagic, ErrorCode::io,
          "'" + path.string() + "' is not a checkpoint");
  const auto version = read_le<std::uint32_t>(in);
  require(version == kCheckpointVersion, ErrorCode::version_mismatch,
          "checkpoint version " + std::to_string(version) + " unsupported (expected " +
              std::to_string(kCheckpointVersion) + ")");
  const auto count = read_le<std::uint32_t>(in);
  ParameterStore store;
  for (std::uint32_t e = 0; e < count; ++e) {
    const auto name_len = read_le<std::uint32_t>(in);
    require(name_len < 4096, ErrorCode::io, "corrupt checkpoint entry name");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndims = read_le<std::uint32_t>(in);
    require(ndims >= 1 && ndims <= 2, ErrorCode::io, "unsupported rank in checkpoint entry '" + name + "'");
    std::uint64_t rows = read_le<std::uint64_t>(in);
    std::uint64_t cols = ndims == 2 ? read_le<std::uint64_t>(in) : 1;
    require(rows * cols < (1ull << 32), ErrorCode::io, "corrupt checkpoint entry '" + name + "'");
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = read_le<double>(in);
    store.add(std::move(name), Tensor(rows, cols, std::move(data)));
  }
  return store;
}

}  // namespace flowedit

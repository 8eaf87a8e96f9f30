#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "flowedit/tensor.hpp"

namespace flowedit {

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named trainable arrays with gradient slots. Names are namespaced with a
// '/' separator ("velocity/w0", "encoder/embed", ...). Iteration order is
// insertion order, which keeps optimizer updates and checkpoints
// deterministic. Parameter addresses are stable for the lifetime of the store.
class ParameterStore {
 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore& other);
  ParameterStore& operator=(const ParameterStore& other);
  ParameterStore(ParameterStore&&) noexcept = default;
  ParameterStore& operator=(ParameterStore&&) noexcept = default;

  Parameter& add(std::string name, Tensor init);
  Parameter& get(std::string_view name);
  const Parameter& get(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const noexcept;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  void zero_grad();
  // Parameters whose name starts with `prefix`.
  std::vector<Parameter*> with_prefix(std::string_view prefix);

  // Copies values (not gradients) from `other`; names and shapes must match.
  void assign_values(const ParameterStore& other);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

bool bit_equal(const ParameterStore& a, const ParameterStore& b);

// Checkpoint file:
//   magic "FEDITCKP" (8 bytes), version u32, entry count u32, then per entry
//   name length u32, name bytes, dim count u32, dims u64..., payload f64...
// All integers and floats little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const ParameterStore& store, const std::filesystem::path& path);
ParameterStore load_checkpoint(const std::filesystem::path& path);

}  // namespace flowedit

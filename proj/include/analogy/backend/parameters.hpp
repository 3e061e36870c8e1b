#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "analogy/backend/tensor.hpp"

namespace analogy::ad {

/// Named, ordered collection of leaf tensors that persist across training steps.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
  };

  void add(std::string name, Tensor value);
  bool contains(std::string_view name) const;
  const Tensor& at(std::string_view name) const;
  Tensor& at(std::string_view name);

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Tensor> tensors() const;
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t scalar_count() const;

  /// Independent copy: fresh leaves, same names, shapes and values.
  ParameterSet deep_copy() const;

  /// Copies values from `other`; names and shapes must match exactly.
  void assign_from(const ParameterSet& other);

  /// FNV-1a over names, shapes and the raw bytes of every value.
  std::uint64_t fingerprint() const;

  bool operator==(const ParameterSet& other) const;

 private:
  std::vector<Entry> entries_;
};

}  // namespace analogy::ad

#include "analogy/backend/parameters.hpp"

#include <algorithm>
#include <cstring>
#include <stdexcept>

namespace analogy::ad {

namespace {

constexpr std::uint64_t kFnvOffset = 1469598103934665603ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

}  // namespace

void ParameterSet::add(std::string name, Tensor value) {
  if (!value.defined()) throw std::invalid_argument("parameter '" + name + "' is undefined");
  if (!value.is_leaf()) throw std::invalid_argument("parameter '" + name + "' is not a leaf");
  if (contains(name)) throw std::invalid_argument("duplicate parameter name '" + name + "'");
  value.set_requires_grad(true);
  entries_.push_back({std::move(name), std::move(value)});
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const Entry& e) { return e.name == name; });
}

const Tensor& ParameterSet::at(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

Tensor& ParameterSet::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParameterSet&>(*this).at(name));
}

std::vector<Tensor> ParameterSet::tensors() const {
  std::vector<Tensor> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.value);
  return out;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.numel();
  return n;
}

ParameterSet ParameterSet::deep_copy() const {
  ParameterSet copy;
  for (const auto& e : entries_) copy.add(e.name, e.value.clone());
  return copy;
}

void ParameterSet::assign_from(const ParameterSet& other) {
  if (other.entries_.size() != entries_.size()) {
    throw std::invalid_argument("parameter sets differ in size");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& src = other.entries_[i];
    auto& dst = entries_[i];
    if (src.name != dst.name || src.value.shape() != dst.value.shape()) {
      throw std::invalid_argument("parameter mismatch at '" + dst.name + "'");
    }
    auto from = src.value.values();
    std::copy(from.begin(), from.end(), dst.value.mutable_values().begin());
  }
}

std::uint64_t ParameterSet::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& e : entries_) {
    fnv_bytes(h, e.name.data(), e.name.size());
    for (int d : e.value.shape()) fnv_bytes(h, &d, sizeof d);
    auto v = e.value.values();
    fnv_bytes(h, v.data(), v.size() * sizeof(double));
  }
  return h;
}

bool ParameterSet::operator==(const ParameterSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || a.value.shape() != b.value.shape()) return false;
    auto va = a.value.values();
    auto vb = b.value.values();
    if (std::memcmp(va.data(), vb.data(), va.size() * sizeof(double)) != 0) return false;
  }
  return true;
}

}  // namespace analogy::ad

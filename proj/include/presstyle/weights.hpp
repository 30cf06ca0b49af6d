#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "presstyle/tensor.hpp"

namespace ptn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered collection of named parameter tensors. Order is registration order
// and is what the optimizer and the PTNW file iterate in.
class ParamStore {
 public:
  Tensor& add(const std::string& name, Tensor value);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool has(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t count() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }
  Tensor& tensor(std::size_t i) { return values_[i]; }
  const Tensor& tensor(std::size_t i) const { return values_[i]; }

  std::vector<Tensor*> pointers();

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
  std::map<std::string, std::size_t> index_;
};

// Versioned binary weight blob: magic PTNW, format version u16, u32 parameter
// count, then per parameter u32 name length + UTF-8 name, u32 rank + dims as
// u32, and 32-bit little-endian values.
void save_weights(const ParamStore& params, const std::string& path);
ParamStore load_weights(const std::string& path);

}  // namespace ptn

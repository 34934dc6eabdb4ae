#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "entnet/tensor.hpp"

namespace entnet {

/// A trainable tensor with its gradient and optimizer moment slots.
struct Parameter {
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;
  Tensor first_moment;
  Tensor second_moment;
  // Frozen parameters take part in the forward pass but receive no updates.
  bool frozen = false;

  void zero_grad();
};

/// Owns parameters in insertion order; addresses stay stable for the
/// lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(std::string name, Tensor value);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace entnet

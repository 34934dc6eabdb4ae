#include "entnet/parameter.hpp"

#include "entnet/error.hpp"

namespace entnet {

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(value.shape()),
      first_moment(value.shape()),
      second_moment(value.shape()) {}

void Parameter::zero_grad() { grad.fill(0.0); }

Parameter& ParameterSet::add(std::string name, Tensor value) {
  if (find(name) != nullptr) {
    fail(ErrorCode::kBadConfig, "duplicate parameter name " + name);
  }
  params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(value)));
  return *params_.back();
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

Parameter& ParameterSet::at(const std::string& name) {
  Parameter* p = find(name);
  if (p == nullptr) fail(ErrorCode::kBadConfig, "no parameter named " + name);
  return *p;
}

const Parameter& ParameterSet::at(const std::string& name) const {
  const Parameter* p = find(name);
  if (p == nullptr) fail(ErrorCode::kBadConfig, "no parameter named " + name);
  return *p;
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->zero_grad();
}

}  // namespace entnet

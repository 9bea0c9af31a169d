#include "tseg/optim.hpp"

#include <cmath>

namespace tseg {

template <typename T>
void ParamSetT<T>::add(std::string name, TensorPtrT<T> tensor, bool frozen) {
  require(tensor != nullptr, ErrorCode::precondition, "param_set: null tensor");
  require(index_.count(name) == 0, ErrorCode::precondition, "param_set: duplicate parameter name");
  index_.emplace(name, entries_.size());
  entries_.push_back(Entry{std::move(name), std::move(tensor), frozen});
}

template <typename T>
TensorPtrT<T> ParamSetT<T>::get(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::precondition, "param_set: unknown parameter name");
  return entries_[it->second].tensor;
}

template <typename T>
bool ParamSetT<T>::frozen(const std::string& name) const {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::precondition, "param_set: unknown parameter name");
  return entries_[it->second].frozen;
}

template <typename T>
void ParamSetT<T>::set_frozen(const std::string& name, bool frozen) {
  auto it = index_.find(name);
  require(it != index_.end(), ErrorCode::precondition, "param_set: unknown parameter name");
  entries_[it->second].frozen = frozen;
}

template <typename T>
int ParamSetT<T>::set_frozen_prefix(std::string_view prefix, bool frozen) {
  int count = 0;
  for (Entry& e : entries_) {
    if (e.name.size() >= prefix.size() && std::string_view(e.name).substr(0, prefix.size()) == prefix) {
      e.frozen = frozen;
      ++count;
    }
  }
  return count;
}

namespace {

template <typename T>
void check_grad_finite(const typename ParamSetT<T>::Entry& entry) {
  for (const T& g : entry.tensor->grad()) {
    if (!std::isfinite(g)) {
      fail(ErrorCode::numeric, "optimizer: non-finite gradient for " + entry.name);
    }
  }
}

}  // namespace

template <typename T>
void sgd_step(ParamSetT<T>& params, T lr) {
  for (auto& entry : params.entries()) {
    if (entry.frozen) {
      entry.tensor->zero_grad();
      continue;
    }
    require(entry.tensor->has_grad(), ErrorCode::precondition,
            "sgd_step: missing gradient on non-frozen parameter");
    check_grad_finite<T>(entry);
    std::vector<T>& p = entry.tensor->data();
    const std::vector<T>& g = entry.tensor->grad();
    for (std::size_t i = 0; i < p.size(); ++i) p[i] -= lr * g[i];
    entry.tensor->zero_grad();
  }
}

template <typename T>
void AdamT<T>::step(ParamSetT<T>& params) {
  ++step_count_;
  const double bc1 = 1.0 - std::pow(double(options_.beta1), double(step_count_));
  const double bc2 = 1.0 - std::pow(double(options_.beta2), double(step_count_));
  const T inv_bc1 = T(1.0 / bc1);
  const T inv_bc2 = T(1.0 / bc2);
  for (auto& entry : params.entries()) {
    if (entry.frozen) {
      entry.tensor->zero_grad();
      continue;
    }
    require(entry.tensor->has_grad(), ErrorCode::precondition,
            "adam_step: missing gradient on non-frozen parameter");
    check_grad_finite<T>(entry);
    Moments& mom = state_[entry.name];
    std::vector<T>& p = entry.tensor->data();
    const std::vector<T>& g = entry.tensor->grad();
    if (mom.m.empty()) {
      mom.m.assign(p.size(), T(0));
      mom.v.assign(p.size(), T(0));
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      mom.m[i] = options_.beta1 * mom.m[i] + (T(1) - options_.beta1) * g[i];
      mom.v[i] = options_.beta2 * mom.v[i] + (T(1) - options_.beta2) * g[i] * g[i];
      const T m_hat = mom.m[i] * inv_bc1;
      const T v_hat = mom.v[i] * inv_bc2;
      p[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
    entry.tensor->zero_grad();
  }
}

template <typename T>
void clip_grad_norm(ParamSetT<T>& params, T max_norm) {
  require(max_norm > T(0), ErrorCode::precondition, "clip_grad_norm: max_norm must be positive");
  double sq_sum = 0.0;
  for (const auto& entry : params.entries()) {
    if (entry.frozen || !entry.tensor->has_grad()) continue;
    for (const T& g : entry.tensor->grad()) sq_sum += double(g) * double(g);
  }
  const double norm = std::sqrt(sq_sum);
  if (norm <= double(max_norm)) return;
  const T scale = T(double(max_norm) / norm);
  for (auto& entry : params.entries()) {
    if (entry.frozen || !entry.tensor->has_grad()) continue;
    for (T& g : entry.tensor->grad()) g *= scale;
  }
}

template class ParamSetT<float>;
template class ParamSetT<double>;
template class AdamT<float>;
template class AdamT<double>;
template void sgd_step<float>(ParamSetT<float>&, float);
template void sgd_step<double>(ParamSetT<double>&, double);
template void clip_grad_norm<float>(ParamSetT<float>&, float);
template void clip_grad_norm<double>(ParamSetT<double>&, double);

}  // namespace tseg

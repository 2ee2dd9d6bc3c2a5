#include "fedexprox/envelope.hpp"

#include <cmath>
#include <string>

#include "fedexprox/errors.hpp"
#include "spectral.hpp"

namespace fedexprox {
namespace {

void check_index(std::size_t i, std::size_t n) {
  if (i >= n) {
    throw ContractError("client index " + std::to_string(i) +
                        " out of range for " + std::to_string(n) + " clients");
  }
}

}  // namespace

EnvelopeContext::EnvelopeContext(
    double gamma, std::shared_ptr<std::vector<ClientObjective>> clients)
    : gamma_(gamma), clients_(std::move(clients)) {
  if (!(gamma_ > 0.0) || !std::isfinite(gamma_)) {
    throw ContractError("envelope context requires gamma > 0");
  }
  if (!clients_ || clients_->empty()) {
    throw ContractError("envelope context requires at least one client");
  }
  dim_ = client_dim(clients_->front());
  for (const auto& c : *clients_) {
    if (client_dim(c) != dim_) {
      throw ContractError("client " + std::to_string(c.id) +
                          " has dimension " + std::to_string(client_dim(c)) +
                          ", expected " + std::to_string(dim_));
    }
  }
  infima_.reserve(clients_->size());
  prox_zero_.reserve(clients_->size());
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(dim_);
  double sum = 0.0;
  for (auto& c : *clients_) {
    prepare_prox(c, gamma_);
    infima_.push_back(client_infimum(c));
    prox_zero_.push_back(prox(c, gamma_, zero));
    sum += infima_.back();
  }
  average_infimum_ = sum / static_cast<double>(clients_->size());
}

const ClientObjective& EnvelopeContext::client(std::size_t i) const {
  check_index(i, n());
  return (*clients_)[i];
}

double EnvelopeContext::client_envelope_infimum(std::size_t i) const {
  check_index(i, n());
  return infima_[i];
}

const Eigen::VectorXd& EnvelopeContext::prox_at_zero(std::size_t i) const {
  check_index(i, n());
  return prox_zero_[i];
}

double moreau_value(const EnvelopeContext& ctx, std::size_t i,
                    const Eigen::VectorXd& x) {
  const ClientObjective& c = ctx.client(i);
  const Eigen::VectorXd p = prox(c, ctx.gamma(), x);
  return objective_value(c, p) + (x - p).squaredNorm() / (2.0 * ctx.gamma());
}

Eigen::VectorXd moreau_grad(const EnvelopeContext& ctx, std::size_t i,
                            const Eigen::VectorXd& x) {
  const ClientObjective& c = ctx.client(i);
  return (x - prox(c, ctx.gamma(), x)) / ctx.gamma();
}

Eigen::VectorXd moreau_hessian_apply(const EnvelopeContext& ctx, std::size_t i,
                                     const Eigen::VectorXd& v) {
  const ClientObjective& c = ctx.client(i);
  const Eigen::VectorXd step = prox(c, ctx.gamma(), v) - ctx.prox_at_zero(i);
  return (v - step) / ctx.gamma();
}

double average_envelope_value(const EnvelopeContext& ctx,
                              const Eigen::VectorXd& x) {
  double sum = 0.0;
  for (std::size_t i = 0; i < ctx.n(); ++i) sum += moreau_value(ctx, i, x);
  return sum / static_cast<double>(ctx.n());
}

Eigen::VectorXd average_envelope_grad(const EnvelopeContext& ctx,
                                      const Eigen::VectorXd& x) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.size());
  for (std::size_t i = 0; i < ctx.n(); ++i) sum += moreau_grad(ctx, i, x);
  return sum / static_cast<double>(ctx.n());
}

EnvelopeSmoothness envelope_smoothness(const EnvelopeContext& ctx) {
  const std::size_t n = ctx.n();
  bool any_smooth = false;
  bool all_smooth = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (client_is_smooth(ctx.client(i))) {
      any_smooth = true;
    } else {
      all_smooth = false;
    }
  }
  if (any_smooth && !all_smooth) {
    throw ContractError(
        "envelope smoothness needs a homogeneous client list (all smooth or "
        "none)");
  }

  EnvelopeSmoothness out;
  out.per_client.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (all_smooth) {
      const double li = *smoothness_constant(ctx.client(i));
      out.per_client.push_back(li / (1.0 + ctx.gamma() * li));
    } else {
      out.per_client.push_back(1.0 / ctx.gamma());
    }
  }
  const auto apply = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(v.size());
    for (std::size_t i = 0; i < n; ++i) sum += moreau_hessian_apply(ctx, i, v);
    return Eigen::VectorXd(sum / static_cast<double>(n));
  };
  out.l_gamma = detail::lambda_max(apply, ctx.dim());
  return out;
}

}  // namespace fedexprox

#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <vector>

#include "fedexprox/objectives.hpp"

namespace fedexprox {

struct EnvelopeSmoothness {
  // Smoothness constant of the averaged envelope (1/n) sum_i M_i.
  double l_gamma = 0.0;
  // Per-client envelope constants: L_i / (1 + gamma L_i) on the smooth
  // path, 1/gamma when no client is smooth.
  std::vector<double> per_client;
};

// Fixes a regularization level gamma over a client list.  Construction is
// the configuration point: prox factorizations for gamma are populated,
// per-client envelope infima and prox(0) offsets are cached.  Afterwards
// the context is read-only and safe to share across workers.
class EnvelopeContext {
 public:
  EnvelopeContext(double gamma,
                  std::shared_ptr<std::vector<ClientObjective>> clients);

  double gamma() const { return gamma_; }
  std::size_t n() const { return clients_->size(); }
  Eigen::Index dim() const { return dim_; }
  const ClientObjective& client(std::size_t i) const;

  // inf_x M_i(x); the envelope shares its infimum with the term itself.
  double client_envelope_infimum(std::size_t i) const;
  // (1/n) sum_i inf M_i, which equals inf of the averaged envelope when
  // the clients share a minimizer (the interpolation regime).
  double average_envelope_infimum() const { return average_infimum_; }
  const Eigen::VectorXd& prox_at_zero(std::size_t i) const;

 private:
  double gamma_;
  std::shared_ptr<std::vector<ClientObjective>> clients_;
  Eigen::Index dim_ = 0;
  std::vector<double> infima_;
  std::vector<Eigen::VectorXd> prox_zero_;
  double average_infimum_ = 0.0;
};

// M_i(x) = f_i(prox_i(x)) + ||x - prox_i(x)||^2 / (2 gamma).
double moreau_value(const EnvelopeContext& ctx, std::size_t i,
                    const Eigen::VectorXd& x);
// grad M_i(x) = (x - prox_i(x)) / gamma.
Eigen::VectorXd moreau_grad(const EnvelopeContext& ctx, std::size_t i,
                            const Eigen::VectorXd& x);
// Hessian-vector product of M_i.  The prox maps here are affine, so the
// exact product is (v - (prox_i(v) - prox_i(0))) / gamma; it is validated
// against finite differences of moreau_grad in the test suite.
Eigen::VectorXd moreau_hessian_apply(const EnvelopeContext& ctx, std::size_t i,
                                     const Eigen::VectorXd& v);

// Averages over all clients in ascending index order.
double average_envelope_value(const EnvelopeContext& ctx,
                              const Eigen::VectorXd& x);
Eigen::VectorXd average_envelope_grad(const EnvelopeContext& ctx,
                                      const Eigen::VectorXd& x);

// Spectral estimate of the averaged-envelope constant plus the per-client
// constants.  Requires a homogeneous client list: all smooth or none.
EnvelopeSmoothness envelope_smoothness(const EnvelopeContext& ctx);

}  // namespace fedexprox

#pragma once

#include <string>
#include <vector>

#include "pinncert/quad.hpp"

namespace pinncert {

// One additive contribution coef * inner^power to a residual aggregate.
struct PoweredTerm {
  std::string name;
  double coef = 1;
  double inner = 0;
  double power = 1;

  double value() const;
};

struct BoundBreakdown {
  std::vector<PoweredTerm> terms;
  double aggregate = 0;  // sum of term values
  double factor = 1;     // growth wrap applied to the aggregate
  double value = 0;      // final bound
};

// p / (rate (p-1)) * (exp(rate (p-1) T / p) - 1), evaluated through expm1.
double gronwall_factor(double p, double rate, double T);

// aggregate^(q/p) * gronwall_factor(p, q, T) * exp(q * lambda_l1). Terms are
// matched against required_names; a missing name is a structural error.
BoundBreakdown parabolic_bound(const std::vector<PoweredTerm>& terms,
                               const std::vector<std::string>& required_names, double p, double q,
                               double T, double lambda_l1);

// aggregate * (exp(R (p-1) T) - 1) / (R (p-1)) * exp(p * lambda_l1), R > 0.
BoundBreakdown genpar_bound(const std::vector<PoweredTerm>& terms,
                            const std::vector<std::string>& required_names, double R, double p,
                            double T, double lambda_l1);

// aggregate * (exp(2T) - 1) / 2 * exp(2 lambda_A + lambda_F).
BoundBreakdown hyperbolic_bound(const std::vector<PoweredTerm>& terms,
                                const std::vector<std::string>& required_names, double T,
                                double lambda_A, double lambda_F);

// p^(q/p) * (gamma_rho + Lambda^p * r_eq / p)^(q/p).
double elliptic_bound(double gamma_rho, double Lambda, double r_eq, double p, double q);

// Plain sum of value^power contributions with unit constants.
double asymptotic_bound(const std::vector<PoweredTerm>& terms);

}  // namespace pinncert

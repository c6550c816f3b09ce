#include "pinncert/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace pinncert {

double PoweredTerm::value() const {
  if (!(inner >= 0)) throw std::invalid_argument("PoweredTerm '" + name + "': negative inner value");
  return coef * std::pow(inner, power);
}

double gronwall_factor(double p, double rate, double T) {
  if (!(p > 1)) throw std::domain_error("gronwall_factor: p must be > 1");
  if (!(T >= 0)) throw std::domain_error("gronwall_factor: T must be >= 0");
  const double r = rate * (p - 1.0);
  if (r == 0) return T;
  return p / r * std::expm1(r * T / p);
}

namespace {

double checked_aggregate(const std::vector<PoweredTerm>& terms,
                         const std::vector<std::string>& required_names) {
  for (const auto& req : required_names) {
    bool found = false;
    for (const auto& t : terms)
      if (t.name == req) {
        found = true;
        break;
      }
    if (!found) throw std::invalid_argument("bound assembly: missing term '" + req + "'");
  }
  double s = 0;
  for (const auto& t : terms) s += t.value();
  return s;
}

}  // namespace

BoundBreakdown parabolic_bound(const std::vector<PoweredTerm>& terms,
                               const std::vector<std::string>& required_names, double p, double q,
                               double T, double lambda_l1) {
  BoundBreakdown b;
  b.terms = terms;
  b.aggregate = checked_aggregate(terms, required_names);
  b.factor = gronwall_factor(p, q, T) * std::exp(q * lambda_l1);
  b.value = std::pow(b.aggregate, q / p) * b.factor;
  return b;
}

BoundBreakdown genpar_bound(const std::vector<PoweredTerm>& terms,
                            const std::vector<std::string>& required_names, double R, double p,
                            double T, double lambda_l1) {
  if (!(R > 0)) throw std::domain_error("genpar_bound: rate must be positive");
  if (!(p > 1)) throw std::domain_error("genpar_bound: p must be > 1");
  BoundBreakdown b;
  b.terms = terms;
  b.aggregate = checked_aggregate(terms, required_names);
  b.factor = std::expm1(R * (p - 1.0) * T) / (R * (p - 1.0)) * std::exp(p * lambda_l1);
  b.value = b.aggregate * b.factor;
  return b;
}

BoundBreakdown hyperbolic_bound(const std::vector<PoweredTerm>& terms,
                                const std::vector<std::string>& required_names, double T,
                                double lambda_A, double lambda_F) {
  BoundBreakdown b;
  b.terms = terms;
  b.aggregate = checked_aggregate(terms, required_names);
  b.factor = 0.5 * std::expm1(2.0 * T) * std::exp(2.0 * lambda_A + lambda_F);
  b.value = b.aggregate * b.factor;
  return b;
}

double elliptic_bound(double gamma_rho, double Lambda, double r_eq, double p, double q) {
  if (!(p > 1)) throw std::domain_error("elliptic_bound: p must be > 1");
  if (!(gamma_rho >= 0) || !(r_eq >= 0) || !(Lambda >= 0))
    throw std::invalid_argument("elliptic_bound: negative input");
  return std::pow(p, q / p) * std::pow(gamma_rho + std::pow(Lambda, p) * r_eq / p, q / p);
}

double asymptotic_bound(const std::vector<PoweredTerm>& terms) {
  double s = 0;
  for (const auto& t : terms) s += t.value();
  return s;
}

}  // namespace pinncert

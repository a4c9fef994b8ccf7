#include "nsieve/stick_breaking.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "nsieve/numerics.hpp"

namespace nsieve {

WLaw WLaw::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("WLaw::beta: parameters must be positive");
  }
  WLaw w;
  w.kind = Kind::Beta;
  w.a = a;
  w.b = b;
  return w;
}

double WLaw::sample(Rng& rng) const {
  if (kind == Kind::Uniform01) return rng.uniform01();
  return rng.beta(a, b);
}

double WLaw::density(double w, double one_minus_w) const {
  if (kind == Kind::Uniform01) return 1.0;
  const double lb = log_gamma(a + b) - log_gamma(a) - log_gamma(b);
  return std::exp(lb + (a - 1.0) * std::log(w) + (b - 1.0) * std::log(one_minus_w));
}

double WLaw::cdf(double w) const {
  if (w <= 0.0) return 0.0;
  if (w >= 1.0) return 1.0;
  if (kind == Kind::Uniform01) return w;
  if (b == 1.0) return std::exp(a * std::log(w));
  if (a == 1.0) return -std::expm1(b * std::log1p(-w));
  return reg_inc_beta(a, b, w);
}

WLaw WLaw::from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "uniform") return uniform01();
    throw std::invalid_argument("WLaw: unknown law '" + s + "'");
  }
  if (j.is_object() && j.contains("beta")) {
    const auto& p = j.at("beta");
    return beta(p.at(0).get<double>(), p.at(1).get<double>());
  }
  throw std::invalid_argument("WLaw: expected \"uniform\" or {\"beta\":[a,b]}");
}

nlohmann::json WLaw::to_json() const {
  if (kind == Kind::Uniform01) return "uniform";
  return nlohmann::json{{"beta", {a, b}}};
}

EnvironmentCase EnvironmentCase::case_a(WLaw w) {
  EnvironmentCase e;
  e.kind_ = Kind::A;
  e.w_ = w;
  return e;
}

EnvironmentCase EnvironmentCase::case_b(double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("case B: alpha must be > 0");
  EnvironmentCase e;
  e.kind_ = Kind::B;
  e.alpha_ = alpha;
  return e;
}

EnvironmentCase EnvironmentCase::case_c(double alpha, double theta) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::invalid_argument("case C: alpha must be in (0,1)");
  }
  if (!(theta > -alpha)) {
    throw std::invalid_argument("case C: theta must be > -alpha");
  }
  EnvironmentCase e;
  e.kind_ = Kind::C;
  e.alpha_ = alpha;
  e.theta_ = theta;
  return e;
}

double EnvironmentCase::sample_w(std::uint64_t r, Rng& rng) const {
  switch (kind_) {
    case Kind::A:
      return w_.sample(rng);
    case Kind::B:
      // Beta(alpha r, 1) by inverse CDF: U^{1/(alpha r)}
      for (;;) {
        const double w = std::exp(std::log(rng.uniform01()) /
                                  (alpha_ * static_cast<double>(r)));
        if (w > 0.0 && w < 1.0) return w;
      }
    case Kind::C:
      return rng.beta(theta_ + alpha_ * static_cast<double>(r), 1.0 - alpha_);
  }
  throw std::logic_error("unreachable");
}

EnvironmentCase EnvironmentCase::from_json(const nlohmann::json& j) {
  const std::string c = j.at("case").get<std::string>();
  if (c == "A") return case_a(WLaw::from_json(j.at("w")));
  if (c == "B") return case_b(j.at("alpha").get<double>());
  if (c == "C") return case_c(j.at("alpha").get<double>(), j.at("theta").get<double>());
  throw std::invalid_argument("EnvironmentCase: case must be A, B or C");
}

EnvironmentCase EnvironmentCase::parse(const std::string& text) {
  if (text == "gem01" || text == "uniform") return gem01();
  if (text.rfind("beta:", 0) == 0) {
    std::istringstream in(text.substr(5));
    double a = 0, b = 0;
    char comma = 0;
    if (in >> a >> comma >> b && comma == ',') return case_a(WLaw::beta(a, b));
    throw std::invalid_argument("env: expected beta:a,b");
  }
  if (text.rfind("caseB:", 0) == 0) {
    return case_b(std::stod(text.substr(6)));
  }
  if (text.rfind("caseC:", 0) == 0) {
    std::istringstream in(text.substr(6));
    double a = 0, t = 0;
    char comma = 0;
    if (in >> a >> comma >> t && comma == ',') return case_c(a, t);
    throw std::invalid_argument("env: expected caseC:alpha,theta");
  }
  if (!text.empty() && text.front() == '{') {
    return from_json(nlohmann::json::parse(text));
  }
  throw std::invalid_argument("env: unknown environment '" + text + "'");
}

nlohmann::json EnvironmentCase::to_json() const {
  switch (kind_) {
    case Kind::A:
      return nlohmann::json{{"case", "A"}, {"w", w_.to_json()}};
    case Kind::B:
      return nlohmann::json{{"case", "B"}, {"alpha", alpha_}};
    case Kind::C:
      return nlohmann::json{{"case", "C"}, {"alpha", alpha_}, {"theta", theta_}};
  }
  throw std::logic_error("unreachable");
}

std::string EnvironmentCase::describe() const {
  return to_json().dump();
}

ProbabilityStream::Step ProbabilityStream::next() {
  if (exhausted()) {
    throw std::runtime_error("ProbabilityStream: residual mass exhausted");
  }
  const double w = env_.sample_w(index_, rng_);
  const double p = residual_ * (1.0 - w);
  residual_ *= w;
  ++index_;
  return {p, residual_};
}

}  // namespace nsieve

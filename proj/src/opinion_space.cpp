#include "compass/opinion_space.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace compass {

namespace {

// fmod is exact, and the single period shift afterwards is exact as well
// (Sterbenz), so representable boundary values survive unchanged.
inline double wrap(double x) noexcept {
  double y = std::fmod(x, 2.0);
  if (y > 1.0) {
    y -= 2.0;
  } else if (y <= -1.0) {
    y += 2.0;
  }
  return y;
}

}  // namespace

std::string_view to_string(OpinionSpace space) {
  switch (space) {
    case OpinionSpace::circle:
      return "circle";
    case OpinionSpace::interval:
      return "interval";
  }
  return "unknown";
}

OpinionSpace opinion_space_from_string(std::string_view name) {
  if (name == "circle") return OpinionSpace::circle;
  if (name == "interval") return OpinionSpace::interval;
  throw std::invalid_argument("unknown opinion space '" + std::string(name) +
                              "' (expected \"circle\" or \"interval\")");
}

double mod_s(double x) {
  if (!std::isfinite(x)) {
    throw std::invalid_argument("mod_s: non-finite input");
  }
  return wrap(x);
}

double circle_dist(double x, double y) noexcept {
  const double d = std::fabs(x - y);
  return d <= 1.0 ? d : 2.0 - d;
}

IntervalValue::IntervalValue(double v) : value_(v) {
  if (!(v >= 0.0 && v <= 1.0)) {
    std::ostringstream msg;
    msg << "interval opinion " << v << " outside [0, 1]";
    throw std::invalid_argument(msg.str());
  }
}

void ModelParams::validate() const {
  if (!(mu > 0.0 && mu <= 0.5)) {
    std::ostringstream msg;
    msg << "mu = " << mu << " outside the legal range (0, 1/2]";
    throw std::invalid_argument(msg.str());
  }
  if (!(theta > 0.0)) {
    std::ostringstream msg;
    msg << "theta = " << theta << " outside the legal range (0, inf]";
    throw std::invalid_argument(msg.str());
  }
}

namespace detail {

std::pair<double, double> compass_step(double x_u, double x_v, const ModelParams& params,
                                       TieBit tie) noexcept {
  const double gap = std::fabs(x_u - x_v);
  if (params.theta != unbounded_confidence && (gap <= 1.0 ? gap : 2.0 - gap) > params.theta) {
    return {x_u, x_v};
  }
  if (gap < 1.0) {
    const double step = params.mu * (x_v - x_u);
    return {x_u + step, x_v - step};
  }
  if (gap > 1.0) {
    // The short arc runs through the +-1 point: each agent moves outward.
    const double step = params.mu * (2.0 - gap);
    return {wrap(x_u + step * sign_of(x_u)), wrap(x_v + step * sign_of(x_v))};
  }
  int sign_u = sign_of(x_u);
  int sign_v = sign_of(x_v);
  if (sign_u == 0) sign_u = -sign_v;
  if (sign_v == 0) sign_v = -sign_u;
  const double step = (tie == TieBit::first ? -params.mu : params.mu);
  return {wrap(x_u + step * sign_u), wrap(x_v + step * sign_v)};
}

std::pair<double, double> deffuant_step(double x_u, double x_v, const ModelParams& params) noexcept {
  if (std::fabs(x_u - x_v) > params.theta) {
    return {x_u, x_v};
  }
  const double step = params.mu * (x_v - x_u);
  return {x_u + step, x_v - step};
}

}  // namespace detail

std::pair<CircleValue, CircleValue> update_pair_compass(CircleValue x_u, CircleValue x_v,
                                                        const ModelParams& params, TieBit tie) {
  const auto [u, v] = detail::compass_step(x_u.value(), x_v.value(), params, tie);
  return {CircleValue(u), CircleValue(v)};
}

std::pair<IntervalValue, IntervalValue> update_pair_deffuant(IntervalValue x_u, IntervalValue x_v,
                                                             const ModelParams& params) {
  const auto [u, v] = detail::deffuant_step(x_u.value(), x_v.value(), params);
  return {IntervalValue(u), IntervalValue(v)};
}

}  // namespace compass

#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>

namespace compass {

/// Which state space the opinions live in.
///
/// `circle` is the quotient R/2Z represented on (-1, 1]; `interval` is the
/// closed unit interval used by the classical bounded-confidence model.
enum class OpinionSpace : std::uint8_t { circle = 0, interval = 1 };

std::string_view to_string(OpinionSpace space);
OpinionSpace opinion_space_from_string(std::string_view name);

/// Canonical representative of [x] in (-1, 1].
///
/// Throws std::invalid_argument for NaN or infinite input. The result is
/// never -1: an input congruent to 1 maps to exactly 1.
double mod_s(double x);

/// Geodesic distance on the circle of circumference 2, in [0, 1].
double circle_dist(double x, double y) noexcept;

/// A point of the circle, always stored as its representative in (-1, 1].
class CircleValue {
 public:
  CircleValue() = default;
  /// Wraps any finite real onto the circle.
  explicit CircleValue(double raw) : value_(mod_s(raw)) {}

  double value() const noexcept { return value_; }

  friend bool operator==(CircleValue, CircleValue) = default;

 private:
  double value_ = 0.0;
};

/// A point of [0, 1]. Construction outside the interval throws.
class IntervalValue {
 public:
  IntervalValue() = default;
  explicit IntervalValue(double v);

  double value() const noexcept { return value_; }

  friend bool operator==(IntervalValue, IntervalValue) = default;

 private:
  double value_ = 0.0;
};

inline constexpr double unbounded_confidence = std::numeric_limits<double>::infinity();

/// Convergence parameter mu in (0, 1/2] and confidence bound theta > 0
/// (infinity disables the bound).
struct ModelParams {
  double mu = 0.5;
  double theta = unbounded_confidence;

  /// Throws std::invalid_argument naming the legal range on violation.
  void validate() const;
  bool bounded() const noexcept { return theta != unbounded_confidence; }
};

/// Chooses between the two geodesics when interacting opinions are antipodal.
enum class TieBit : std::uint8_t { first = 1, second = 2 };

/// Sign convention of the update: sgn(0) = 0.
inline int sign_of(double x) noexcept { return (x > 0.0) - (x < 0.0); }

/// Compass pairwise update. Both agents move a fraction mu of their geodesic
/// distance towards each other; for antipodal pairs `tie` selects the
/// geodesic. When theta is bounded the pair only moves if its circle
/// distance is at most theta.
///
/// A tied pair containing 0 (partner exactly 1) uses -sgn(partner) in place
/// of sgn(0), so both still move along one common geodesic.
std::pair<CircleValue, CircleValue> update_pair_compass(CircleValue x_u, CircleValue x_v,
                                                        const ModelParams& params, TieBit tie);

/// Bounded-confidence update on [0, 1]. The sum of the pair is preserved
/// whenever the update fires.
std::pair<IntervalValue, IntervalValue> update_pair_deffuant(IntervalValue x_u, IntervalValue x_v,
                                                             const ModelParams& params);

namespace detail {

// Unchecked kernels shared by the engine's hot loop.
std::pair<double, double> compass_step(double x_u, double x_v, const ModelParams& params,
                                       TieBit tie) noexcept;
std::pair<double, double> deffuant_step(double x_u, double x_v, const ModelParams& params) noexcept;

}  // namespace detail

}  // namespace compass

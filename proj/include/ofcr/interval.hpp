#pragma once

// Real intervals with explicit endpoint openness, and finite unions of them.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace ofcr {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class Interval {
 public:
  /// The empty set.
  Interval() = default;

  Interval(double lo, double hi, bool lo_open, bool hi_open)
      : lo_(lo), hi_(hi), lo_open_(lo_open || std::isinf(lo)), hi_open_(hi_open || std::isinf(hi)), empty_(false) {
    if (std::isnan(lo) || std::isnan(hi)) throw std::invalid_argument("interval endpoint is NaN");
    if (lo > hi) throw std::invalid_argument("interval lower endpoint exceeds upper endpoint");
    if (lo == hi && (lo_open_ || hi_open_)) {
      throw std::invalid_argument("degenerate interval must be closed; use Interval::empty()");
    }
  }

  static Interval empty() { return {}; }
  static Interval open(double lo, double hi) { return {lo, hi, true, true}; }
  static Interval closed(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval point(double v) { return {v, v, false, false}; }
  static Interval whole() { return {-kInf, kInf, true, true}; }

  bool is_empty() const { return empty_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  bool lo_open() const { return lo_open_; }
  bool hi_open() const { return hi_open_; }
  double width() const { return empty_ ? 0.0 : hi_ - lo_; }

  bool contains(double v) const {
    if (empty_) return false;
    const bool above = v > lo_ || (v == lo_ && !lo_open_);
    const bool below = v < hi_ || (v == hi_ && !hi_open_);
    return above && below;
  }

  /// *this is a subset of other. The empty set is a subset of everything.
  bool subset_of(const Interval& other) const {
    if (empty_) return true;
    if (other.empty_) return false;
    const bool lo_ok = other.lo_ < lo_ || (other.lo_ == lo_ && (!other.lo_open_ || lo_open_));
    const bool hi_ok = hi_ < other.hi_ || (hi_ == other.hi_ && (!other.hi_open_ || hi_open_));
    return lo_ok && hi_ok;
  }

  bool intersects(const Interval& other) const {
    if (empty_ || other.empty_) return false;
    // Greatest lower bound and least upper bound of the intersection.
    double lo = lo_;
    bool lo_open = lo_open_;
    if (other.lo_ > lo || (other.lo_ == lo && other.lo_open_)) {
      lo = other.lo_;
      lo_open = other.lo_open_;
    }
    double hi = hi_;
    bool hi_open = hi_open_;
    if (other.hi_ < hi || (other.hi_ == hi && other.hi_open_)) {
      hi = other.hi_;
      hi_open = other.hi_open_;
    }
    if (lo < hi) return true;
    return lo == hi && !lo_open && !hi_open;
  }

  friend bool operator==(const Interval& a, const Interval& b) {
    if (a.empty_ || b.empty_) return a.empty_ == b.empty_;
    return a.lo_ == b.lo_ && a.hi_ == b.hi_ && a.lo_open_ == b.lo_open_ && a.hi_open_ == b.hi_open_;
  }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
  bool lo_open_ = true;
  bool hi_open_ = true;
  bool empty_ = true;
};

/// Finite union of intervals. Pieces are kept sorted and merged wherever
/// they overlap or touch, so an interval lies inside the union exactly when
/// it lies inside one piece.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> pieces) {
    for (const auto& p : pieces) {
      if (!p.is_empty()) pieces_.push_back(p);
    }
    normalize();
  }
  IntervalSet(std::initializer_list<Interval> pieces) : IntervalSet(std::vector<Interval>(pieces)) {}

  const std::vector<Interval>& pieces() const { return pieces_; }
  bool is_empty() const { return pieces_.empty(); }

  bool contains(double v) const {
    return std::any_of(pieces_.begin(), pieces_.end(), [v](const Interval& p) { return p.contains(v); });
  }
  bool intersects(const Interval& iv) const {
    return std::any_of(pieces_.begin(), pieces_.end(), [&](const Interval& p) { return p.intersects(iv); });
  }
  bool contains_interval(const Interval& iv) const {
    if (iv.is_empty()) return true;
    return std::any_of(pieces_.begin(), pieces_.end(), [&](const Interval& p) { return iv.subset_of(p); });
  }
  bool intersects(const IntervalSet& other) const {
    return std::any_of(other.pieces_.begin(), other.pieces_.end(),
                       [&](const Interval& p) { return intersects(p); });
  }

 private:
  void normalize() {
    std::sort(pieces_.begin(), pieces_.end(), [](const Interval& a, const Interval& b) {
      if (a.lo() != b.lo()) return a.lo() < b.lo();
      return !a.lo_open() && b.lo_open();
    });
    std::vector<Interval> merged;
    for (const auto& p : pieces_) {
      if (!merged.empty()) {
        const Interval& last = merged.back();
        const bool touch = p.lo() < last.hi() || (p.lo() == last.hi() && !(p.lo_open() && last.hi_open()));
        if (touch) {
          double hi = last.hi();
          bool hi_open = last.hi_open();
          if (p.hi() > hi || (p.hi() == hi && !p.hi_open())) {
            hi = p.hi();
            hi_open = p.hi_open();
          }
          merged.back() = Interval(last.lo(), hi, last.lo_open(), hi_open);
          continue;
        }
      }
      merged.push_back(p);
    }
    pieces_ = std::move(merged);
  }

  std::vector<Interval> pieces_;
};

}  // namespace ofcr

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace colsynth {

/// Malformed explicit model (distribution, reward, index out of range).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ill-typed constraint or reference to an undeclared parameter.
class FormulaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The guards of a colored MDP do not select exactly one action per state.
class ColoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem file does not match the schema; the message names the field.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enumeration would exceed the configured cap.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Broken internal contract, e.g. a theory hook returning foreign literals.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Counters shared by every search procedure.
struct SearchStats {
  std::uint64_t decisions = 0;
  std::uint64_t conflicts = 0;
  std::uint64_t propagations = 0;
  std::uint64_t learned = 0;
  std::uint64_t theory_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t iterations = 0;  // robust loop refinements

  SearchStats& operator+=(const SearchStats& o) {
    decisions += o.decisions;
    conflicts += o.conflicts;
    propagations += o.propagations;
    learned += o.learned;
    theory_calls += o.theory_calls;
    cache_hits += o.cache_hits;
    iterations += o.iterations;
    return *this;
  }
};

class TimeoutError : public std::runtime_error {
 public:
  explicit TimeoutError(SearchStats partial = {})
      : std::runtime_error("time budget exhausted"), stats(partial) {}
  SearchStats stats;
};

/// Cooperative wall-clock budget. Checked between decisions and between
/// value-iteration sweeps.
class Budget {
 public:
  using Clock = std::chrono::steady_clock;

  Budget() = default;
  static Budget seconds(double s) {
    Budget b;
    b.deadline_ = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                     std::chrono::duration<double>(s));
    return b;
  }

  bool expired() const { return deadline_ && Clock::now() >= *deadline_; }
  void check() const {
    if (expired()) throw TimeoutError();
  }

 private:
  std::optional<Clock::time_point> deadline_;
};

}  // namespace colsynth

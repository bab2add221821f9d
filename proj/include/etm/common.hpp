#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace etm {

inline constexpr const char* kVersion = "0.1.0";

enum class ErrorKind {
  PreconditionViolated,
  Ambiguous,
  NotPostcriticallyFinite,
  BudgetExceeded,
  NumericFailure,
  BadInput,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

// Numeric tolerances. The underlying theory is exact; every value here is an
// artifact choice and can be overridden from the CLI config.
struct Tolerances {
  double root = 1e-10;      // chordal residual accepted for roots / periodic points
  double cluster = 1e-7;    // chordal radius for merging root clusters
  double gcd = 1e-9;        // num/den shared-root rejection threshold (chordal)
  double orbit = 1e-8;      // postcritical forward-closure slack (chordal)
  double curve = 1e-8;      // invariant-curve membership slack (chordal)
  double branch = 1e-6;     // minimal off-curve margin for pullback targets
  double dedupe = 1e-8;     // chordal radius identifying periodic points
  double pressure = 1e-7;   // |P(-s0 phi)| accepted by the s0 root finder
};

// Deterministic generator (seeded splitmix64 -> xorshift). Distribution code is
// hand-rolled so byte-identical output does not depend on the standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x9e3779b97f4a7c15ull) : state_(seed ? seed : 1) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int uniform_int(int n) { return static_cast<int>(next() % static_cast<std::uint64_t>(n)); }

 private:
  std::uint64_t state_;
};

int worker_count();                 // respects ORBIT_THREADS and serial mode
void set_serial_mode(bool serial);  // --verify: force single-threaded loops
bool serial_mode();

// Partitioned parallel loop. Bodies must write disjoint slots only; results are
// then independent of scheduling, so output stays byte-identical either way.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace etm

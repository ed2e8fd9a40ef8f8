#pragma once

#include <cstdint>
#include <vector>

namespace voltsim {

// Regularized incomplete beta function I_x(a,b), continued-fraction evaluation.
double ibeta(double a, double b, double x);

// Upper tail probability of an F statistic with (d1, d2) degrees of freedom.
double f_survival(double f, double d1, double d2);

// Solves the symmetric positive definite system A*x = b via Cholesky.
// a is n*n row-major and gets clobbered; the solution lands in b.
// Returns false if the matrix is not positive definite.
bool solve_spd(std::vector<double>& a, std::vector<double>& b, int n);

// Deterministic per-stream RNG (splitmix64). A stream is fully determined by
// (seed, stream), so independent cells of a campaign can each own one.
class Rng {
 public:
  explicit Rng(uint64_t seed, uint64_t stream = 0);
  uint64_t next();
  double uniform();             // [0, 1)
  double normal();              // standard normal, Box-Muller
  int binomial(int n, double p);

 private:
  uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace voltsim

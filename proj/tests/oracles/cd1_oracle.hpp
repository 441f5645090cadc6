#pragma once

#include <vector>

namespace airn::oracle {

// Straight-line CD-1 single step (mean-field), written with plain loops and
// no linear-algebra library so it stays independent of the implementation
// it checks. Matrices are row-major.
struct Cd1Fixture {
  int n_visible = 0;
  int n_hidden = 0;
  int batch = 0;
  double learning_rate = 0.0;
  std::vector<double> w;          // n_visible * n_hidden
  std::vector<double> b_visible;  // n_visible
  std::vector<double> b_hidden;   // n_hidden
  std::vector<double> v;          // batch * n_visible
};

struct Cd1Result {
  std::vector<double> w;
  std::vector<double> b_visible;
  std::vector<double> b_hidden;
  double recon_error = 0.0;  // mean ||v - v'||^2 over the batch
};

Cd1Result cd1_single_step(const Cd1Fixture& fixture);

/// The 3-visible / 2-hidden fixture shared by the unit and acceptance tests.
Cd1Fixture reference_fixture();

}  // namespace airn::oracle

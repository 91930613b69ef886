#include <doctest.h>

#include <cmath>

#include "mdmargin/data.hpp"
#include "mdmargin/errors.hpp"
#include "mdmargin/margin.hpp"
#include "mdmargin/optimize.hpp"
#include "mdmargin/rng.hpp"

using namespace mdmargin;

namespace {

Dataset unit_basis_data() {
  return Dataset(Matrix::Identity(3, 3), Vector::Ones(3));
}

Vector vec3(double a, double b, double c) {
  Vector v(3);
  v << a, b, c;
  return v;
}

Dataset random_separable(Pcg32& rng, int dim, int n) {
  Vector u(dim);
  for (int j = 0; j < dim; ++j) u[j] = rng.next_gaussian();
  u /= u.norm();
  Matrix x(n, dim);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    Vector xi(dim);
    for (int j = 0; j < dim; ++j) xi[j] = rng.next_gaussian();
    if (std::abs(u.dot(xi)) < 0.2) xi += (u.dot(xi) >= 0 ? 0.3 : -0.3) * u;
    x.row(i) = xi.transpose();
    y[i] = u.dot(xi) >= 0 ? 1.0 : -1.0;
  }
  return Dataset(std::move(x), std::move(y));
}

}  // namespace

TEST_CASE("hinge example reproduces both step sizes bit-exactly") {
  const Dataset data = unit_basis_data();
  for (auto [eta, w1e, w2e] : {std::tuple{2.0, vec3(1, 0, -1), vec3(1, 2, 1)},
                               std::tuple{3.0, vec3(2, 1, 0), vec3(2, 1, 3)}}) {
    RunConfig rc;
    rc.pot = Potential(2, 2);
    rc.spec = {LossKind::hinge, Reduction::sum};
    rc.eta = eta;
    OptimizerRun run = OptimizerRun::from_w0(rc, vec3(-1, -2, -3));
    md_step(run, data);
    CHECK(run.w == w1e);
    md_step(run, data);
    CHECK(run.w == w2e);
    CHECK(run.t == 2);
  }
}

TEST_CASE("euclidean potential reduces to plain gradient descent") {
  Pcg32 rng(11);
  const Dataset data = random_separable(rng, 3, 5);
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.eta = 0.05;
  Vector w0 = vec3(0.3, -0.4, 0.1);
  OptimizerRun run = OptimizerRun::from_w0(rc, w0);
  md_step(run, data);
  const Vector expected = w0 - rc.eta * loss_grad(w0, data, rc.spec);
  CHECK((run.w - expected).cwiseAbs().maxCoeff() <= 1e-15 * (1 + expected.cwiseAbs().maxCoeff()));
}

TEST_CASE("coordinate update rule, literal arithmetic") {
  // Dataset crafted so grad L (hinge, sum) at w = (2, -3) is exactly (1, 1):
  // one active point contributing (1, 0) and four contributing (0, 1/4).
  Matrix x(5, 2);
  x.row(0) << -1.0, 0.0;
  for (int i = 1; i < 5; ++i) x.row(i) << 0.0, -0.25;
  const Dataset data(x, Vector::Ones(5));
  Vector w0(2);
  w0 << 2.0, -3.0;
  REQUIRE(loss_grad(w0, data, {LossKind::hinge, Reduction::sum}) == (Vector(2) << 1, 1).finished());

  RunConfig rc;
  rc.pot = Potential::separable(3.0);
  rc.spec = {LossKind::hinge, Reduction::sum};
  rc.eta = 1.0;
  OptimizerRun run = OptimizerRun::from_w0(rc, w0);
  pgd_step(run, data);
  // mirror state (4, -9) minus (1, 1) is (3, -10)
  CHECK(run.w[0] == doctest::Approx(std::sqrt(3.0)).epsilon(1e-15));
  CHECK(run.w[1] == doctest::Approx(-std::sqrt(10.0)).epsilon(1e-15));
}

TEST_CASE("pgd_step and md_step agree whenever beta equals p") {
  Pcg32 rng(23);
  for (int t = 0; t < 100; ++t) {
    const int dim = 2 + static_cast<int>(rng.next_below(3));
    const Dataset data = random_separable(rng, dim, 4);
    RunConfig rc;
    rc.pot = Potential::separable(rng.next_uniform(1.1, 10.0));
    rc.spec = {LossKind::exponential, Reduction::mean};
    rc.eta = rng.next_uniform(1e-4, 1e-2);
    Vector w0(dim);
    for (int j = 0; j < dim; ++j) w0[j] = rng.next_gaussian();
    OptimizerRun a = OptimizerRun::from_w0(rc, w0);
    OptimizerRun b = OptimizerRun::from_w0(rc, w0);
    md_step(a, data);
    pgd_step(b, data);
    CHECK((a.w - b.w).cwiseAbs().maxCoeff() <= 1e-12 * (1 + b.w.cwiseAbs().maxCoeff()));
  }
  // pgd_step refuses beta != p
  RunConfig bad;
  bad.pot = Potential(2.0, 3.0);
  OptimizerRun run = OptimizerRun::from_w0(bad, (Vector(2) << 1, 1).finished());
  CHECK_THROWS_AS(pgd_step(run, gen_planar2d(1)), std::invalid_argument);
}

TEST_CASE("normalized step examples") {
  // lambda = 1, euclidean potential, L(w0) = 1: a plain gradient step of eta0.
  const Dataset data = unit_basis_data();
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.step_kind = StepKind::normalized;
  rc.eta = 0.25;
  rc.lambda = 1.0;
  OptimizerRun run = OptimizerRun::from_w0(rc, Vector::Zero(3));
  REQUIRE(loss_value(run.w, data, rc.spec) == 1.0);
  nmd_step(run, data);
  const Vector expected = -rc.eta * loss_grad(Vector::Zero(3), data, rc.spec);
  CHECK((run.w - expected).cwiseAbs().maxCoeff() <= 1e-15);

  // lambda = 0 degenerates to eta0 / L(w_t)
  rc.lambda = 0.0;
  Vector w0 = vec3(0.1, 0.2, -0.3);
  OptimizerRun run2 = OptimizerRun::from_w0(rc, w0);
  const double l0 = loss_value(w0, data, rc.spec);
  nmd_step(run2, data);
  const Vector expected2 = w0 - (rc.eta / l0) * loss_grad(w0, data, rc.spec);
  CHECK((run2.w - expected2).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("max_safe_eta closed forms and scaling") {
  const Dataset data = unit_basis_data();
  const LossSpec spec{LossKind::exponential, Reduction::mean};
  const double eta = max_safe_eta(data, Potential(2, 2), spec, Vector::Zero(3));
  CHECK(eta == doctest::Approx(0.5).epsilon(1e-12));

  // doubling the data quarters the bound
  const Dataset doubled(2.0 * Matrix::Identity(3, 3), Vector::Ones(3));
  const double eta2 = max_safe_eta(doubled, Potential(2, 2), spec, Vector::Zero(3));
  CHECK(eta2 == doctest::Approx(eta / 4.0).epsilon(1e-12));

  // non-euclidean: positive and finite on the planar set
  const Dataset planar = gen_planar2d(1);
  const double eta15 =
      max_safe_eta(planar, Potential::separable(1.5), spec, (Vector(2) << 0.4, 0.2).finished());
  CHECK(eta15 > 0.0);
  CHECK(std::isfinite(eta15));

  CHECK_THROWS_AS(max_safe_eta(data, Potential(2, 2), {LossKind::hinge, Reduction::sum},
                               Vector::Zero(3)),
                  std::invalid_argument);
}

TEST_CASE("square loss on a consistent system converges to an interpolator") {
  Matrix x(3, 2);
  x << 1, 0, 0, 1, 0.5, -0.5;
  Vector y(3);
  y << 1, -1, 1;  // consistent with w* = (1, -1)
  const Dataset data(x, y);
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::square, Reduction::mean};
  rc.eta = 0.1;
  rc.steps = 5000;
  rc.w0_scale = 0.0;
  rc.record_every = 500;
  const TrajectoryResult res = run_trajectory_full(rc, data);
  CHECK(res.trace.back().loss < 1e-10);
  CHECK(res.final_w[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(res.final_w[1] == doctest::Approx(-1.0).epsilon(1e-4));
}

TEST_CASE("trace recording layout") {
  const Dataset data = gen_planar2d(1);
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.eta = 1e-2;
  rc.steps = 1;
  rc.record_every = 100;
  const Trace tr = run_trajectory(rc, data);
  REQUIRE(tr.size() == 2);  // initial row plus the single step
  CHECK(tr[0].t == 0);
  CHECK(tr[1].t == 1);
  CHECK(tr[0].eta_effective == rc.eta);
  CHECK(!tr[0].bregman_gap.has_value());

  rc.steps = 250;
  rc.record_every = 100;
  const Trace tr2 = run_trajectory(rc, data);
  REQUIRE(tr2.size() == 4);  // t = 0, 100, 200, 250
  CHECK(tr2.back().t == 250);
}

TEST_CASE("trajectories are deterministic") {
  const Dataset data = gen_planar2d(2);
  RunConfig rc;
  rc.pot = Potential::separable(1.5);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.eta = 1e-3;
  rc.steps = 2000;
  rc.seed = 77;
  rc.record_every = 100;
  const Trace a = run_trajectory(rc, data);
  const Trace b = run_trajectory(rc, data);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].loss == b[i].loss);
    CHECK(a[i].psi_norm_w == b[i].psi_norm_w);
    CHECK(a[i].margin_w == b[i].margin_w);
    CHECK(a[i].eta_effective == b[i].eta_effective);
  }
}

TEST_CASE("monotonicity guard policies") {
  // Square loss with the identity design: GD diverges for eta > 1 under the
  // mean reduction (Hessian 2 X^T X / n = (2/3) I with three unit rows ...
  // use sum reduction so the Hessian is exactly 2I and eta = 1.2 diverges).
  const Dataset data = unit_basis_data();
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::square, Reduction::sum};
  rc.eta = 1.2;
  rc.steps = 50;
  rc.w0_scale = 0.0;
  rc.record_every = 10;
  CHECK_THROWS_AS(run_trajectory(rc, data), monotonicity_error);

  rc.monotonicity = MonotonicityPolicy::halve;
  const Trace tr = run_trajectory(rc, data);
  // The guard allows 1e-12 of absolute slack per step; recorded rows are 10
  // steps apart.
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(tr[i].loss <= tr[i - 1].loss + 10 * 1e-12);
  }
}

TEST_CASE("fixed-step loss is monotone within the safe step size") {
  const Dataset data = gen_planar2d(4);
  const LossSpec spec{LossKind::exponential, Reduction::mean};
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = spec;
  rc.seed = 3;
  rc.steps = 5000;
  rc.record_every = 50;
  OptimizerRun probe = OptimizerRun::init(rc, data.dim());
  rc.eta = 0.9 * max_safe_eta(data, rc.pot, spec, probe.w);
  const Trace tr = run_trajectory(rc, data);
  for (std::size_t i = 1; i < tr.size(); ++i) {
    CHECK(tr[i].loss <= tr[i - 1].loss + 1e-12);
  }
}

TEST_CASE("loss vanishes and norms diverge on separable data") {
  const Dataset data = gen_planar2d(1);
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.eta = 1e-3;
  rc.steps = 100000;
  rc.seed = 1;
  rc.w0_scale = 0.1;
  rc.record_every = 1000;
  const Trace tr = run_trajectory(rc, data);
  CHECK(tr.back().loss < tr.front().loss / 10.0);
  CHECK(tr.back().psi_norm_w > 10.0 * tr.front().psi_norm_w);
}

TEST_CASE("warm start reaches the small-loss threshold before t equals zero") {
  const Dataset data = gen_planar2d(1);
  RunConfig rc;
  rc.pot = Potential(2, 2);
  rc.spec = {LossKind::exponential, Reduction::mean};
  rc.step_kind = StepKind::normalized;
  rc.eta = 0.05;
  rc.lambda = 1.0;
  rc.steps = 10;
  rc.seed = 2;
  rc.record_every = 1;
  rc.warm_start_steps = 50000;
  const Trace tr = run_trajectory(rc, data);
  CHECK(tr.front().t == 0);
  CHECK(tr.front().loss <= 1.0 / (2.0 * static_cast<double>(data.n())));
}

TEST_CASE("zero start is rejected when the mirror map is singular there") {
  RunConfig rc;
  rc.pot = Potential(3.0, 2.0);  // beta < p
  CHECK_THROWS_AS(OptimizerRun::from_w0(rc, Vector::Zero(2)), std::invalid_argument);
  rc.w0_scale = 0.0;
  CHECK_THROWS_AS(OptimizerRun::init(rc, 2), std::invalid_argument);
}

TEST_CASE("config validation") {
  RunConfig rc;
  rc.eta = 0.0;
  CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
  rc = RunConfig{};
  rc.steps = 0;
  CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
  rc = RunConfig{};
  rc.loss_floor = 0.0;
  CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
  rc = RunConfig{};
  rc.record_every = 0;
  CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
}

TEST_CASE("mirror state stays consistent along a run") {
  Pcg32 rng(41);
  const Dataset data = random_separable(rng, 3, 5);
  RunConfig rc;
  rc.pot = Potential(1.7, 2.4);
  rc.spec = {LossKind::logistic, Reduction::mean};
  rc.eta = 1e-2;
  OptimizerRun run = OptimizerRun::from_w0(rc, vec3(0.4, -0.2, 0.9));
  for (int t = 0; t < 25; ++t) {
    md_step(run, data);
    const Vector expected = grad_psi(run.w, rc.pot);
    CHECK((run.mirror_state - expected).norm() <= 1e-10 * (1 + expected.norm()));
  }
}

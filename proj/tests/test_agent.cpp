#include <sstream>

#include "doctest.h"
#include "frls/agent.hpp"

using namespace frls;

TEST_SUITE("agent") {

TEST_CASE("reward combines throughput, drops and power") {
  RewardCoeffs eta;
  CHECK(compute_reward(0, 0, 0, eta) == 0.0);
  CHECK(compute_reward(50, 0.02, 20, eta) == doctest::Approx(4.78).epsilon(1e-14));
  CHECK(compute_reward(50, 0.1, 20, eta) < compute_reward(50, 0.02, 20, eta));
}

TEST_CASE("default network parameter count") {
  QNetwork<double> net;
  CHECK(net.parameter_count() == 13 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
  CHECK(net.parameter_count() == 5251);
  CHECK(net.flatten().size() == 5251);
}

TEST_CASE("zero weights give zero Q-values") {
  QNetwork<double> net;
  Eigen::VectorXd s = Eigen::VectorXd::Random(13);
  CHECK(net.forward_one(s).isZero(0));
}

TEST_CASE("hand-built network matches a pencil-and-paper forward pass") {
  // 2 inputs -> 1 hidden ReLU -> 3 outputs.
  QNetwork<double> net({2, 1, 3});
  net.weight(0) << 1.5, -2.0;
  net.bias(0) << 0.25;
  net.weight(1) << 1.0, -1.0, 2.0;
  net.bias(1) << 0.0, 0.5, -1.0;
  Eigen::VectorXd s(2);
  s << 1.0, 0.25;  // h = relu(1.5 - 0.5 + 0.25) = 1.25
  Eigen::VectorXd q = net.forward_one(s);
  CHECK(q[0] == 1.25);
  CHECK(q[1] == -0.75);
  CHECK(q[2] == 1.5);
  s << -1.0, 0.0;  // h = relu(-1.25) = 0
  q = net.forward_one(s);
  CHECK(q[0] == 0.0);
  CHECK(q[1] == 0.5);
  CHECK(q[2] == -1.0);
  CHECK(net.forward_one(s) == q);
}

TEST_CASE("flatten order is row-major weights then bias, layer by layer") {
  QNetwork<double> net({2, 2, 1});
  net.weight(0) << 1, 2, 3, 4;
  net.bias(0) << 5, 6;
  net.weight(1) << 7, 8;
  net.bias(1) << 9;
  Eigen::VectorXd expected(9);
  expected << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  CHECK(net.flatten() == expected);
  QNetwork<double> other({2, 2, 1});
  other.unflatten(expected);
  CHECK(other.weight(0) == net.weight(0));
  CHECK(other.bias(1) == net.bias(1));
  CHECK_THROWS(other.unflatten(Eigen::VectorXd::Zero(8)));
}

TEST_CASE("gradient matches central finite differences") {
  QNetwork<double> net({13, 8, 8, 3});
  Rng rng(17);
  net.init_random(rng);
  // Non-zero biases keep the check away from symmetric points.
  Eigen::VectorXd params = net.flatten();
  std::normal_distribution<double> noise(0.0, 0.1);
  for (Eigen::Index i = 0; i < params.size(); ++i) params[i] += noise(rng);
  net.unflatten(params);

  const int batch = 6;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd states(13, batch);
  for (Eigen::Index i = 0; i < states.size(); ++i) states.data()[i] = unit(rng);
  std::vector<int> actions{0, 1, 2, 2, 1, 0};
  Eigen::VectorXd targets(batch);
  for (int i = 0; i < batch; ++i) targets[i] = 3 * unit(rng) - 1;

  Eigen::VectorXd grad;
  net.td_loss(states, actions, targets, &grad);
  REQUIRE(params.size() >= 200);
  const double h = 1e-5;
  double worst = 0;
  for (Eigen::Index i = 0; i < params.size(); ++i) {
    Eigen::VectorXd p = params;
    p[i] += h;
    net.unflatten(p);
    const double up = net.td_loss(states, actions, targets, nullptr);
    p[i] -= 2 * h;
    net.unflatten(p);
    const double down = net.td_loss(states, actions, targets, nullptr);
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max({std::abs(numeric), std::abs(grad[i]), 1e-6});
    worst = std::max(worst, std::abs(numeric - grad[i]) / scale);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("one TD step on a scalar linear Q") {
  Hyperparams hp;
  hp.hidden = {};
  hp.discount = 0.0;
  hp.learning_rate = 0.1;
  hp.batch_size = 1;
  hp.buffer_capacity = 1;
  DqnAgent agent(hp);
  agent.import_params(ModelParams::Zero(agent.online().parameter_count()));
  Experience e;
  e.state[0] = 1.0;
  e.action = 0;
  e.reward = 2.0;
  agent.train_step({e});
  CHECK(agent.online().weight(0)(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(agent.online().weight(0).row(1).isZero(0));
}

TEST_CASE("zero TD error leaves parameters unchanged") {
  Hyperparams hp;
  DqnAgent agent(hp);
  Rng rng(1);
  agent.init_random(rng);
  const ModelParams before = agent.export_params();
  std::vector<Experience> batch(4);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& e : batch) {
    for (int i = 0; i < kObservationDim; ++i) e.state[i] = unit(rng);
    e.next_state = e.state;
    e.action = 1;
    const Eigen::VectorXd q = agent.q_values(e.state);
    e.reward = q[1] - hp.discount * q.maxCoeff();
  }
  agent.train_step(batch);
  CHECK((agent.export_params() - before).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("gradient clipping bounds the step size") {
  Hyperparams hp;
  hp.max_grad_norm = 1.0;
  DqnAgent agent(hp);
  Rng rng(2);
  agent.init_random(rng);
  const ModelParams before = agent.export_params();
  Experience e;
  e.state.setConstant(1.0);
  e.reward = 1e6;
  agent.train_step({e});
  CHECK((agent.export_params() - before).norm() <= hp.learning_rate * 1.0 + 1e-12);
}

TEST_CASE("greedy selection and tie-break") {
  Eigen::Vector3d q(1, 5, 2);
  Rng rng(0);
  CHECK(select_action(q, 0.0, rng) == 1);
  CHECK(select_action(Eigen::Vector3d(3, 3, 1), 0.0, rng) == 0);
}

TEST_CASE("full exploration is uniform") {
  Rng rng(99);
  const int draws = 10000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < draws; ++i) ++counts[select_action(Eigen::Vector3d(0, 9, 0), 1.0, rng)];
  const double expected = draws / 3.0;
  const double sigma = std::sqrt(draws * (1.0 / 3) * (2.0 / 3));
  double chi2 = 0;
  for (int c : counts) {
    CHECK(std::abs(c - expected) < 3 * sigma);
    chi2 += (c - expected) * (c - expected) / expected;
  }
  CHECK(chi2 < 13.82);  // 99.9% point of chi-square with 2 degrees of freedom
}

TEST_CASE("epsilon schedule") {
  Hyperparams hp;
  CHECK(hp.epsilon(0, 60) == 1.0);
  CHECK(hp.epsilon(15, 60) == doctest::Approx(0.525));
  CHECK(hp.epsilon(30, 60) == 0.05);
  CHECK(hp.epsilon(59, 60) == 0.05);
}

TEST_CASE("replay buffer is a FIFO") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 5; ++i) {
    Experience e;
    e.reward = i;
    buf.push(e);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.insertions() == 5);
  CHECK(buf.at(0).reward == 2);
  CHECK(buf.at(1).reward == 3);
  CHECK(buf.at(2).reward == 4);
  CHECK_THROWS_AS(buf.at(3), std::out_of_range);
  Rng rng(1);
  for (const auto& e : buf.sample(50, rng)) CHECK((e.reward >= 2 && e.reward <= 4));
  CHECK_THROWS(ReplayBuffer(0));
  CHECK_THROWS(ReplayBuffer(2).sample(1, rng));
}

TEST_CASE("observation encoding") {
  Observation o;
  o.mode_indicator = 1;
  o.sbs_load = {0, 50, 100, 200, 400};
  o.mbs_load = {10, 20, 30, 40, 50};
  o.delay_steps = 1;
  o.throughput_mbps = 250;
  const Features f = o.encode(ObservationScales{});
  CHECK(f[0] == 1.0);
  CHECK(f[2] == 0.25);
  CHECK(f[5] == 1.0);  // clipped
  CHECK(f[6] == 0.05);
  CHECK(f[11] == 0.5);
  CHECK(f[12] == 1.0);
}

TEST_CASE("export and import round-trip") {
  DqnAgent a(Hyperparams{}), b(Hyperparams{});
  Rng rng(5);
  a.init_random(rng);
  const ModelParams v = a.export_params();
  b.import_params(v);
  CHECK(b.export_params() == v);
  Features s = Features::Constant(0.3);
  CHECK(a.q_values(s) == b.q_values(s));
  QNetwork<double> direct(network_layout(Hyperparams{}));
  direct.unflatten(v);
  CHECK(direct.forward_one(s) == b.q_values(s));
  CHECK(b.target().flatten() == v);
}

TEST_CASE("snapshot golden bytes") {
  ModelParams p(2);
  p << 1.0, -2.5;
  std::ostringstream out;
  write_snapshot(out, p);
  const std::string bytes = out.str();
  const unsigned char expected[] = {'F', 'R', 'L', 'S', 0x01, 0x00, 0x02, 0x00, 0x00, 0x00,
                                    0x00, 0x00, 0x80, 0x3f, 0x00, 0x00, 0x20, 0xc0};
  REQUIRE(bytes.size() == sizeof(expected));
  for (std::size_t i = 0; i < sizeof(expected); ++i)
    CHECK(static_cast<unsigned char>(bytes[i]) == expected[i]);
  std::istringstream in(bytes);
  CHECK(read_snapshot(in) == p);

  std::istringstream bad_magic("FRLX" + bytes.substr(4));
  CHECK_THROWS(read_snapshot(bad_magic));
  std::istringstream truncated(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS(read_snapshot(truncated));
}

TEST_CASE("snapshot stores float32") {
  DqnAgent a(Hyperparams{});
  Rng rng(8);
  a.init_random(rng);
  std::stringstream buf;
  write_snapshot(buf, a.export_params());
  const ModelParams back = read_snapshot(buf);
  CHECK(back.size() == 5251);
  CHECK(back.cast<float>() == a.export_params().cast<float>());
}

TEST_CASE("hyperparameter validation") {
  Hyperparams hp;
  hp.discount = 1.0;
  CHECK_THROWS_AS(hp.validate(), ConfigError);
  hp = Hyperparams{};
  hp.buffer_capacity = 8;
  CHECK_THROWS_WITH_AS(hp.validate(), doctest::Contains("agent.buffer_capacity"), ConfigError);
}

}  // TEST_SUITE

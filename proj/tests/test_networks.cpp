#include <doctest.h>

#include "analogy/networks.hpp"
#include "support/locality.hpp"

using namespace analogy;
using analogy::testing::gradient_locality;
using analogy::testing::impulse_locality;

namespace {

Network random_net(const NetSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  Network net = Network::create(spec, rng, false);
  // Larger weights than the training init so every path carries signal.
  for (auto& e : net.params().entries()) {
    auto v = const_cast<ad::Tensor&>(e.value).mutable_values();
    for (double& x : v) x += 0.3 * rng.normal();
  }
  return net;
}

ad::Tensor random_input(int h, int w, std::uint64_t seed) {
  Rng rng(seed);
  return rng.normal_tensor({3, h, w}, 0.5);
}

}  // namespace

TEST_CASE("receptive field of the default architecture is 11") {
  CHECK(NetSpec::generator().receptive_field() == 11);
  CHECK(NetSpec::discriminator().receptive_field() == 11);
}

TEST_CASE("make_scale_nets is deterministic in its seed") {
  const auto a = make_scale_nets(NetSpec::generator(8), 2, 17);
  const auto b = make_scale_nets(NetSpec::generator(8), 2, 17);
  const auto c = make_scale_nets(NetSpec::generator(8), 2, 18);
  CHECK(a.fingerprint() == b.fingerprint());
  CHECK(a.g_a.params() == b.g_a.params());
  CHECK(a.d_b.params() == b.d_b.params());
  CHECK(a.fingerprint() != c.fingerprint());
}

TEST_CASE("zero-initialized generator maps zeros to zeros") {
  const auto nets = make_scale_nets(NetSpec::generator(8), 0, 1);
  const Image out = generator_forward(nets.g_a, Image({13, 15}, 0.0));
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("shapes are preserved and generator outputs stay inside (-1, 1)") {
  const Network g = random_net(NetSpec::generator(8), 3);
  const Network d = random_net(NetSpec::discriminator(8), 4);
  for (auto [h, w] : {std::pair{11, 11}, std::pair{17, 23}, std::pair{32, 12}}) {
    Rng rng(h * 100 + w);
    Image x({h, w});
    for (double& v : x.data()) v = 3.0 * rng.normal();
    const Image y = generator_forward(g, x);
    CHECK(y.size() == x.size());
    for (double v : y.data()) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
    const ad::Tensor s = discriminator_forward(d, x);
    CHECK(s.shape() == ad::Shape{1, h, w});
  }
}

TEST_CASE("gradient and impulse locality: exactly the 11x11 window") {
  const Network g = random_net(NetSpec::generator(6), 5);
  const Network d = random_net(NetSpec::discriminator(6), 6);
  const ad::Tensor x = random_input(24, 21, 7);
  for (auto [i, j] : {std::pair{12, 10}, std::pair{0, 0}, std::pair{23, 3}, std::pair{6, 20}}) {
    CAPTURE(i);
    CAPTURE(j);
    CHECK(gradient_locality(g, x, i, j).exact);
    CHECK(gradient_locality(d, x, i, j).exact);
    CHECK(impulse_locality(g, x, i, j).exact);
    CHECK(impulse_locality(d, x, i, j).exact);
  }
}

TEST_CASE("constant input gives a spatially constant score map away from borders") {
  const Network d = random_net(NetSpec::discriminator(6), 8);
  const Image c({20, 22}, 0.4);
  const ad::Tensor s = discriminator_forward(d, c);
  const double ref = s.values()[10 * 22 + 11];
  for (int i = 5; i < 15; ++i)
    for (int j = 5; j < 17; ++j) CHECK(s.values()[i * 22 + j] == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("init_from_previous deep copies and isolates") {
  const NetSpec spec = NetSpec::generator(8);
  auto prev = make_scale_nets(spec, 0, 9, {.separate_conditional = true});
  auto next = init_from_previous(prev, 1, spec);
  CHECK(next.scale == 1);
  CHECK(next.fingerprint() == prev.fingerprint());
  CHECK(next.gc_b.params() == prev.gc_b.params());

  const Image x({12, 12}, 0.25);
  CHECK(generator_forward(next.g_b, x) == generator_forward(prev.g_b, x));

  const auto before = prev.fingerprint();
  next.d_a.params().at("block0.conv.weight").mutable_values()[0] += 1.0;
  CHECK(prev.fingerprint() == before);
  CHECK(next.fingerprint() != before);

  CHECK_THROWS_AS(init_from_previous(prev, 1, NetSpec::generator(16)), std::invalid_argument);
}

TEST_CASE("single-domain layout has only the A networks") {
  const auto nets = make_scale_nets(NetSpec::generator(4), 0, 1, {.single_domain = true});
  CHECK(nets.named().size() == 2);
  CHECK_FALSE(nets.g_b.defined());
}

#include <doctest.h>

#include <cmath>
#include <fstream>

#include "geoprior/nn/models.hpp"
#include "support.hpp"

using namespace geoprior;
using namespace geoprior::nn;
namespace gt = geoprior::testing;

namespace {

SegmentorConfig small_segmentor() {
  SegmentorConfig c;
  c.nz = 2;
  c.ny = 8;
  c.nx = 8;
  c.block = {2, 3, 4};
  return c;
}

GaeConfig small_gae() {
  GaeConfig c;
  c.nz = 2;
  c.ny = 8;
  c.nx = 8;
  c.block = {1, 3, 4};
  c.features = 6;
  return c;
}

void check_softmax(const Tensor& p) {
  const Shape& s = p.shape();
  for (int n = 0; n < s.n; ++n)
    for (int z = 0; z < s.z; ++z)
      for (int y = 0; y < s.y; ++y)
        for (int x = 0; x < s.x; ++x) {
          double sum = 0.0;
          for (int c = 0; c < s.c; ++c) sum += p.at(n, c, z, y, x);
          CHECK(std::abs(sum - 1.0) < 1e-9);
        }
}

}  // namespace

TEST_CASE("dense block channel arithmetic") {
  static_assert(dense_block_channels(8, 4, 4) == 24);
  static_assert(dense_block_channels(16, 4, 16) == 80);
  for (auto [cin, L, k] : {std::array{8, 4, 4}, std::array{16, 4, 16}, std::array{3, 1, 1}, std::array{5, 3, 2}}) {
    ParameterStore store;
    Rng rng(1);
    DenseBlock block(store, "b", cin, DenseBlockConfig{L, k, 8}, 0.1, rng);
    CHECK(block.channels_out() == cin + L * k);
    const auto out = block(leaf(gt::random_tensor({1, cin, 1, 2, 2}, rng)), true);
    CHECK(out.all.shape().c == cin + L * k);
    CHECK(out.produced.shape().c == L * k);
    CHECK(out.all.shape().y == 2);
  }
  CHECK_THROWS(DenseBlockConfig{0, 4, 8}.validate());
  CHECK_THROWS(DenseBlockConfig{2, 0, 8}.validate());
}

TEST_CASE("gradient through a one-block network") {
  ParameterStore store;
  Rng rng(3);
  Conv3dLayer first(store, "first", 2, 3, 0.1, rng);
  DenseBlock block(store, "block", 3, DenseBlockConfig{2, 2, 3}, 0.1, rng);
  const Tensor x = gt::random_tensor({2, 2, 2, 4, 4}, rng);
  const Tensor r = gt::random_tensor({2, 7, 2, 4, 4}, rng);
  auto params = store.parameters();
  std::vector<Tensor> inputs{x};
  for (auto* p : params) inputs.push_back(p->var.value());
  const auto g = gt::check_gradients(
      [&](const std::vector<Var>& v) {
        // Rebind the parameter nodes to the probe values for this evaluation.
        for (std::size_t i = 0; i < params.size(); ++i) params[i]->var = v[i + 1];
        return gt::project(block(first(v[0]), true).all, r);
      },
      inputs);
  CHECK(g.max_rel_error < 1e-4);
}

TEST_CASE("segmentor shape contract at toy scale") {
  SegmentorConfig cfg;  // 32x32x8, B=2, k=4, L=2
  Segmentor model(cfg);
  Rng rng(5);
  const Var p = model.probabilities(leaf(gt::random_tensor({1, 1, 8, 32, 32}, rng)), false);
  CHECK(p.shape() == Shape{1, 4, 8, 32, 32});
  check_softmax(p.value());
}

TEST_CASE("segmentor stage bookkeeping") {
  const auto shapes = SegmentorConfig{}.stage_shapes();
  REQUIRE(shapes.size() == 6);
  CHECK(shapes[1].channels_out == 16);  // 8 + 2*4
  CHECK(shapes[2].channels_out == 24);
  CHECK(shapes[2].ny == 16);
  CHECK(shapes[3].ny == 16);
  CHECK(shapes.back().channels_out == 4);
  CHECK(shapes.back().nx == 32);
}

TEST_CASE("constant input gives finite loss and gradients") {
  Segmentor model(small_segmentor());
  const Var logits = model.forward(leaf(Tensor(Shape{2, 1, 2, 8, 8}, 0.5)), true);
  const Var loss = softmax_ce(logits, std::vector<std::uint8_t>(2 * 2 * 8 * 8, 1));
  CHECK(std::isfinite(loss.value()[0]));
  backward(loss);
  for (auto* p : model.parameters()) {
    REQUIRE(p->var.has_grad());
    for (double g : p->var.grad().values()) CHECK(std::isfinite(g));
  }
}

TEST_CASE("invalid architectures are rejected") {
  SegmentorConfig s;
  s.nx = 30;  // not divisible by 2^2
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SegmentorConfig{};
  s.blocks = 6;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  GaeConfig g;
  g.features = 0;
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}

TEST_CASE("gae shape contract") {
  GaeConfig cfg;
  Gae model(cfg);
  Rng rng(6);
  const Var maps = leaf(gt::random_tensor({2, 3, 8, 32, 32}, rng));
  const Var f = model.encode(maps, false);
  CHECK(f.shape() == Shape{2, 64, 1, 1, 1});
  const Var logits = model.decode(f, false);
  CHECK(logits.shape() == Shape{2, 4, 8, 32, 32});
  check_softmax(softmax_channels(logits).value());
  // The bottleneck length never depends on content.
  CHECK(model.encode(leaf(Tensor(Shape{1, 3, 8, 32, 32})), false).shape().c == 64);
}

TEST_CASE("frozen gae passes gradients to its input only") {
  Gae model(small_gae());
  model.freeze();
  CHECK(model.frozen());
  Rng rng(8);
  const Var x = leaf(gt::random_tensor({1, 3, 2, 8, 8}, rng), true);
  backward(mse(model.encode(x, false), leaf(Tensor(Shape{1, 6, 1, 1, 1}))));
  CHECK(x.has_grad());
  for (auto* p : model.parameters()) CHECK_FALSE(p->var.has_grad());
}

TEST_CASE("paper-scale configuration is constructible") {
  SegmentorConfig s;
  s.nz = 10;
  s.ny = 208;
  s.nx = 208;
  s.blocks = 4;
  s.block = {4, 16, 16};
  const auto shapes = s.stage_shapes();
  CHECK(shapes[1].channels_in == 16);
  CHECK(shapes[1].channels_out == 80);
  CHECK(shapes[4].ny == 26);
  CHECK(shapes.back().channels_out == 4);
  CHECK(shapes.back().ny == 208);

  GaeConfig g;
  g.nz = 10;
  g.ny = 208;
  g.nx = 208;
  g.blocks = 4;
  g.block = {4, 16, 16};
  CHECK_NOTHROW(g.stage_shapes());

  // Same depth and width on a small field: built and run end to end.
  s.nz = 2;
  s.ny = 16;
  s.nx = 16;
  Segmentor model(s);
  Rng rng(9);
  const Var p = model.probabilities(leaf(gt::random_tensor({1, 1, 2, 16, 16}, rng)), false);
  CHECK(p.shape() == Shape{1, 4, 2, 16, 16});
}

TEST_CASE("initialization is seeded") {
  Segmentor a(small_segmentor()), b(small_segmentor());
  CHECK(checksum(a.store()) == checksum(b.store()));
  SegmentorConfig c = small_segmentor();
  c.init_seed = 99;
  Segmentor d(c);
  CHECK(checksum(a.store()) != checksum(d.store()));
}

TEST_CASE("checkpoint round trip") {
  gt::TempDir dir("ckpt");
  Segmentor model(small_segmentor());
  Rng rng(10);
  // Move the batch-norm statistics away from their initial values.
  model.forward(leaf(gt::random_tensor({2, 1, 2, 8, 8}, rng)), true);
  save_checkpoint(dir / "seg", model, CheckpointInfo{42, "state"});
  CheckpointInfo info;
  auto back = load_segmentor(dir / "seg", &info);
  CHECK(info.step == 42);
  CHECK(info.rng_state == "state");
  CHECK(checksum(back->store()) == checksum(model.store()));
  const Tensor x = gt::random_tensor({1, 1, 2, 8, 8}, rng);
  CHECK(back->forward(leaf(x), false).value() == model.forward(leaf(x), false).value());

  Gae gae(small_gae());
  save_checkpoint(dir / "gae", gae);
  CHECK(checksum(load_gae(dir / "gae")->store()) == checksum(gae.store()));
  CHECK_THROWS(load_gae(dir / "seg"));
}

TEST_CASE("corrupt parameter payloads are rejected") {
  gt::TempDir dir("ckpt");
  Tensor a(Shape{2, 3, 1, 1, 1}, 1.5);
  write_tensors(dir / "p.bin", {{"a", &a}});
  Tensor wrong(Shape{3, 2, 1, 1, 1});
  CHECK_THROWS(read_tensors(dir / "p.bin", {{"a", &wrong}}));
  Tensor ok(Shape{2, 3, 1, 1, 1});
  CHECK_THROWS(read_tensors(dir / "p.bin", {{"b", &ok}}));
  read_tensors(dir / "p.bin", {{"a", &ok}});
  CHECK(ok == a);
  std::filesystem::resize_file(dir / "p.bin", std::filesystem::file_size(dir / "p.bin") - 3);
  CHECK_THROWS(read_tensors(dir / "p.bin", {{"a", &ok}}));
}

#include "doctest.h"

#include <fstream>

#include "fixtures.hpp"
#include "nhdp/checkpoint.hpp"
#include "nhdp/errors.hpp"
#include "temp_dir.hpp"

using namespace nhdp;

TEST_CASE("checkpoint round trip is bit exact") {
  TempDir dir;
  for (bool root : {false, true}) {
    Hyperparameters h;
    h.alpha = 3.25;
    h.gamma1 = 0.4;
    auto model = fixture::random_model(TruncatedTree(Truncation{{3, 2, 2}}, root), 17, 4, h);
    model.step_count = 42;
    const Checkpoint ck{model, 0xDEADBEEFCAFEull, 4200};
    save_checkpoint(ck, dir / "m.ckpt");
    const auto back = load_checkpoint(dir / "m.ckpt");
    CHECK(back.seed == ck.seed);
    CHECK(back.docs_seen == 4200);
    CHECK(back.model.step_count == 42);
    CHECK(back.model.hyper == h);
    CHECK(back.model.tree.truncation() == model.tree.truncation());
    CHECK(back.model.tree.include_root() == root);
    CHECK(back.model.vocab_size == 17);
    CHECK(back.model.lambda == model.lambda);
    CHECK(back.model.tau1 == model.tau1);
    CHECK(back.model.tau2 == model.tau2);
  }
  CHECK_FALSE(std::filesystem::exists(dir / "m.ckpt.tmp"));
}

TEST_CASE("corrupt checkpoints are rejected") {
  TempDir dir;
  auto model = fixture::random_model(TruncatedTree(Truncation{{2, 2}}), 5, 1);
  save_checkpoint({model, 1, 0}, dir / "ok.ckpt");
  {
    std::ofstream(dir / "junk.ckpt") << "definitely not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "junk.ckpt"), ParseError);
  CHECK_THROWS_AS(load_checkpoint(dir / "absent.ckpt"), IoError);
  const auto size = std::filesystem::file_size(dir / "ok.ckpt");
  std::filesystem::copy_file(dir / "ok.ckpt", dir / "short.ckpt");
  std::filesystem::resize_file(dir / "short.ckpt", size - 8);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), ParseError);
  // Bump the version field.
  std::filesystem::copy_file(dir / "ok.ckpt", dir / "v2.ckpt");
  {
    std::fstream f(dir / "v2.ckpt", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(8);
    const char v[4] = {2, 0, 0, 0};
    f.write(v, 4);
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "v2.ckpt"), CompatibilityError);
}

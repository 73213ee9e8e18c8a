#include <algorithm>
#include <fstream>
#include <set>

#include <doctest.h>

#include "bcdrive/errors.hpp"
#include "bcdrive/trainer.hpp"
#include "support.hpp"

using namespace bcdrive;
using bcdrive::testing::TempDir;

namespace {

CameraSpec small_camera() {
  CameraSpec c;
  c.resolution = 16;
  return c;
}

ArchitectureConfig small_arch() {
  ArchitectureConfig a;
  a.input_height = a.input_width = 16;
  a.conv_filters = 2;
  a.conv_kernel = 3;
  a.dense1_units = 8;
  a.dense2_units = 4;
  return a;
}

Manifest constant_dataset(const std::filesystem::path& dir, std::size_t n, SteerClass label) {
  RunRecorder rec = RunRecorder::create(dir);
  for (std::size_t i = 0; i < n; ++i) rec.append(Frame({1, 16, 16}, 0.25), label);
  return rec.manifest();
}

Manifest expert_dataset(const std::filesystem::path& dir, std::size_t steps) {
  CollectOptions opts;
  opts.camera = small_camera();
  opts.steps = steps;
  return collect_expert(make_default_track(), opts, dir);
}

}  // namespace

TEST_SUITE("make_batches") {
  TEST_CASE("remainder batch is kept") {
    const auto b = make_batches(10, 8, 1);
    REQUIRE(b.size() == 2);
    CHECK(b[0].size() == 8);
    CHECK(b[1].size() == 2);
  }

  TEST_CASE("every sample exactly once per epoch") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      const std::size_t n = 1 + seed * 7;
      std::multiset<std::size_t> seen;
      for (const auto& batch : make_batches(n, 8, seed)) seen.insert(batch.begin(), batch.end());
      std::multiset<std::size_t> want;
      for (std::size_t i = 0; i < n; ++i) want.insert(i);
      CHECK(seen == want);
    }
  }

  TEST_CASE("seeded order") {
    CHECK(make_batches(50, 8, 4) == make_batches(50, 8, 4));
    CHECK_FALSE(make_batches(50, 8, 4) == make_batches(50, 8, 5));
    const auto fixed = make_batches(5, 2, 99, false);
    CHECK(fixed == std::vector<std::vector<std::size_t>>{{0, 1}, {2, 3}, {4}});
  }

  TEST_CASE("manifest overload") {
    Manifest m;
    for (int i = 0; i < 10; ++i) m.samples.push_back({"dataset/" + std::to_string(i + 1) + ".pgm", SteerClass::Left});
    const auto b = make_batches(m, 8, 3);
    REQUIRE(b.size() == 2);
    std::set<std::string> names;
    for (const auto& batch : b)
      for (const Sample& s : batch) names.insert(s.image_path);
    CHECK(names.size() == 10);
    CHECK_THROWS_AS(make_batches(Manifest{}, 8, 3), ContractError);
  }
}

TEST_SUITE("evaluate") {
  TEST_CASE("ties resolve toward left") {
    CHECK(argmax_class(Tensor({3}, 1.0 / 3.0)) == SteerClass::Left);
    CHECK(argmax_class(Tensor({3}, std::vector<double>{0.2, 0.4, 0.4})) == SteerClass::Straight);
    CHECK(argmax_class(Tensor({3}, std::vector<double>{0.1, 0.2, 0.7})) == SteerClass::Right);
  }

  TEST_CASE("uniform model scores zero on an all-straight manifest") {
    TempDir dir("evalu");
    const Manifest m = constant_dataset(dir.path(), 6, SteerClass::Straight);
    NetworkParams zero;
    zero.arch = small_arch();
    zero.weights = Weights::zeros(zero.arch);
    const Evaluation e = evaluate(zero, m);
    CHECK(e.accuracy == 0.0);
    CHECK(e.total == 6);
    CHECK(e.confusion[1][0] == 6);
  }

  TEST_CASE("confusion rows sum to class counts") {
    TempDir dir("evalc");
    const Manifest m = expert_dataset(dir.path(), 60);
    const NetworkParams p = init_params(small_arch(), 3);
    const Evaluation e = evaluate(p, m);
    const auto counts = m.class_counts();
    std::size_t total = 0;
    for (std::size_t t = 0; t < 3; ++t) {
      std::size_t row = 0;
      for (std::size_t q = 0; q < 3; ++q) row += e.confusion[t][q];
      CHECK(row == counts[t]);
      total += row;
    }
    CHECK(total == m.samples.size());
  }

  TEST_CASE("mismatched image size is described") {
    TempDir dir("evals");
    const Manifest m = constant_dataset(dir.path(), 2, SteerClass::Left);
    try {
      evaluate(init_params(ArchitectureConfig{}, 1), m);
      FAIL("expected ContractError");
    } catch (const ContractError& e) {
      CHECK(std::string(e.what()).find("16x16") != std::string::npos);
      CHECK(std::string(e.what()).find("64x64") != std::string::npos);
    }
  }
}

TEST_SUITE("train") {
  TEST_CASE("constant dataset is memorized with non-increasing loss") {
    TempDir dir("trconst");
    const Manifest m = constant_dataset(dir.path(), 20, SteerClass::Straight);
    TrainConfig cfg;
    const TrainResult r = train(m, small_arch(), cfg, 5);
    REQUIRE(r.report.epoch_loss.size() == cfg.epochs);
    CHECK(predict_class(r.params, Frame({1, 16, 16}, 0.25)) == SteerClass::Straight);
    for (std::size_t e = 1; e + 1 < r.report.epoch_loss.size(); ++e) {
      CHECK(r.report.epoch_loss[e + 1] <= r.report.epoch_loss[e] + 1e-9);
    }
    CHECK(r.report.train_accuracy == 1.0);
    CHECK(r.report.test_accuracy == 1.0);
    CHECK(r.report.train_size == 16);
    CHECK(r.report.test_size == 4);
    CHECK(r.report.class_counts == std::array<std::size_t, 3>{0, 20, 0});
  }

  TEST_CASE("single memorized sample scores 1.0") {
    TempDir dir("trone");
    const Manifest m = constant_dataset(dir.path(), 2, SteerClass::Right);
    const TrainResult r = train(m, small_arch(), TrainConfig{}, 1);
    Manifest one = m;
    one.samples.resize(1);
    CHECK(evaluate(r.params, one).accuracy == 1.0);
  }

  TEST_CASE("same seed gives identical report and checkpoint bytes") {
    TempDir dir("trdet");
    const Manifest m = expert_dataset(dir.path(), 40);
    TrainConfig cfg;
    cfg.epochs = 3;
    const TrainResult a = train(m, small_arch(), cfg, 11);
    const TrainResult b = train(m, small_arch(), cfg, 11);
    CHECK(a.report == b.report);
    CHECK(encode_checkpoint(a.params) == encode_checkpoint(b.params));
    const TrainResult c = train(m, small_arch(), cfg, 12);
    CHECK_FALSE(encode_checkpoint(a.params) == encode_checkpoint(c.params));
  }

  TEST_CASE("returned params survive a checkpoint round trip unchanged") {
    TempDir dir("trrt");
    const Manifest m = expert_dataset(dir.path(), 30);
    TrainConfig cfg;
    cfg.epochs = 2;
    const TrainResult r = train(m, small_arch(), cfg, 2);
    save_checkpoint(r.params, dir / "m.bcw");
    const NetworkParams back = load_checkpoint(dir / "m.bcw");
    CHECK(back.weights == r.params.weights);
    CHECK(evaluate(back, m).accuracy == evaluate(r.params, m).accuracy);
  }

  TEST_CASE("test images never influence the weights") {
    TempDir dir("trleak");
    const Manifest m = expert_dataset(dir.path(), 40);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.split.shuffle_seed = 8;
    const auto before = encode_checkpoint(train(m, small_arch(), cfg, 8).params);
    const SplitResult parts = split(m, cfg.split);
    Rng rng(1);
    for (const Sample& s : parts.test.samples) {
      write_frame(bcdrive::testing::random_tensor({1, 16, 16}, rng, 0, 1), m.resolve(s));
    }
    CHECK(encode_checkpoint(train(m, small_arch(), cfg, 8).params) == before);
  }

  TEST_CASE("augmentation doubles the training set") {
    TempDir dir("traug");
    const Manifest m = expert_dataset(dir.path(), 20);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.augment = true;
    const TrainResult r = train(m, small_arch(), cfg, 1);
    CHECK(r.report.train_size == 16);
    CHECK(r.report.epoch_loss.size() == 1);
  }

  TEST_CASE("errors") {
    TempDir dir("trerr");
    CHECK_THROWS_AS(train(Manifest{}, small_arch(), TrainConfig{}, 1), ContractError);
    const Manifest m = constant_dataset(dir.path(), 4, SteerClass::Left);
    std::filesystem::remove(m.resolve(m.samples[0]));
    try {
      train(m, small_arch(), TrainConfig{}, 1);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("1.pgm") != std::string::npos);
    }
    TrainConfig bad;
    bad.epochs = 0;
    CHECK_THROWS_AS(bad.validate(), ContractError);
    bad = {};
    bad.batch_size = 0;
    CHECK_THROWS_AS(bad.validate(), ContractError);
  }

  TEST_CASE("report text") {
    TrainReport r;
    r.epoch_loss = {0.5, 0.25};
    r.train_accuracy = 0.75;
    r.test_accuracy = 0.5;
    CHECK(format_report(r) == "epoch,1,loss,0.5\nepoch,2,loss,0.25\ntrain_acc,0.75\ntest_acc,0.5\n");
  }
}

TEST_SUITE("collect_expert") {
  TEST_CASE("rows, determinism and overwrite guard") {
    TempDir a("cola"), b("colb");
    CollectOptions opts;
    opts.camera = small_camera();
    opts.steps = 20;
    const Manifest ma = collect_expert(make_random_track(7), opts, a.path());
    const Manifest mb = collect_expert(make_random_track(7), opts, b.path());
    CHECK(ma.samples.size() == 20);
    CHECK(bcdrive::testing::read_text(a / kManifestName) == bcdrive::testing::read_text(b / kManifestName));
    for (std::size_t i = 0; i < 20; ++i) {
      CHECK(bcdrive::testing::read_bytes(ma.resolve(ma.samples[i])) ==
            bcdrive::testing::read_bytes(mb.resolve(mb.samples[i])));
    }
    CHECK_THROWS_AS(collect_expert(make_random_track(7), opts, a.path()), IoError);
  }

  TEST_CASE("labels are the expert's at each recorded pose") {
    TempDir dir("colx");
    CollectOptions opts;
    opts.camera = small_camera();
    opts.steps = 30;
    opts.stride = 2;
    const Track t = make_default_track();
    const Manifest m = collect_expert(t, opts, dir.path());
    CarState s = start_state(t);
    for (std::size_t i = 0; i < 30; ++i) {
      CHECK(m.samples[i].label == expert_policy(t, s, opts.gains));
      const Frame want = decode_pgm(encode_pgm(render_camera(t, s, opts.camera)));
      CHECK(read_frame(m.resolve(m.samples[i])) == want);
      for (int k = 0; k < 2; ++k) s = car_step(s, expert_policy(t, s, opts.gains), opts.dt);
    }
  }
}

TEST_SUITE("dagger_round") {
  TEST_CASE("expert as learner reproduces the pure expert labels") {
    TempDir dir("dag1");
    const Track t = make_default_track();
    DaggerOptions opts;
    opts.camera = small_camera();
    opts.start = start_state(t, 0.2);
    opts.steps = 50;
    const DaggerResult r = dagger_round(
        [&](const Frame&, const CarState& s) { return expert_policy(t, s, opts.gains); }, t, opts,
        dir.path());
    CHECK(r.recorded == 50);
    CHECK_FALSE(r.truncated);
    CarState s = opts.start;
    for (std::size_t i = 0; i < 50; ++i) {
      const SteerClass e = expert_policy(t, s, opts.gains);
      CHECK(r.aggregated.samples[i].label == e);
      s = car_step(s, e, opts.dt);
    }
  }

  TEST_CASE("aggregation appends after the existing dataset") {
    TempDir dir("dag2");
    const Track t = make_default_track();
    const Manifest base = expert_dataset(dir.path(), 25);
    DaggerOptions opts;
    opts.camera = small_camera();
    opts.start = start_state(t, 0.3);
    opts.steps = 40;
    const NetworkParams p = init_params(small_arch(), 4);
    const DaggerResult r = dagger_round(p, t, opts, dir.path());
    CHECK(r.aggregated.samples.size() == base.samples.size() + r.recorded);
    CHECK(r.aggregated.samples[25].image_path == "dataset/26.pgm");
    CHECK(read_manifest(dir / kManifestName) == r.aggregated);
    CHECK_NOTHROW(validate_files(r.aggregated));
  }

  TEST_CASE("an off-center start adds corrective labels") {
    TempDir base_dir("dag3a"), dag_dir("dag3b");
    const Track t = make_default_track();
    const Manifest base = expert_dataset(base_dir.path(), 60);
    const auto nonzero = [](const Manifest& m) {
      const auto c = m.class_counts();
      return c[0] + c[2];
    };
    expert_dataset(dag_dir.path(), 60);
    DaggerOptions opts;
    opts.camera = small_camera();
    opts.start = start_state(t, 0.3);
    opts.steps = 60;
    const DaggerResult r = dagger_round(
        [&](const Frame&, const CarState& s) { return expert_policy(t, s, opts.gains); }, t, opts,
        dag_dir.path());
    CHECK(nonzero(r.aggregated) > nonzero(base));
  }

  TEST_CASE("leaving the track truncates and keeps partial data") {
    TempDir dir("dag4");
    const Track t = make_default_track();
    DaggerOptions opts;
    opts.camera = small_camera();
    opts.start = start_state(t);
    opts.steps = 400;
    const DaggerResult r =
        dagger_round([](const Frame&, const CarState&) { return SteerClass::Straight; },
                     make_random_track(3), opts, dir.path());
    CHECK(r.truncated);
    CHECK(r.recorded == r.truncated_at);
    CHECK(r.recorded < 400);
    CHECK(r.aggregated.samples.size() == r.recorded);
  }
}

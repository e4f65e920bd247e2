#include <functional>
#include <set>

#include "doctest.h"
#include "fiberlab/config.hpp"

using namespace fiberlab;

TEST_CASE("profiles") {
  const auto desk = profile_config("desk");
  CHECK(desk.system.n_spans == 4);
  CHECK(desk.system.symbol_rate == doctest::Approx(32e9));
  CHECK(desk.rx_mode == 1);
  CHECK(desk.equalizers.size() >= 4);
  CHECK_NOTHROW(desk.validate());

  const auto paper = profile_config("paper");
  CHECK(paper.system.n_spans == 14);
  CHECK(paper.system.span_length == doctest::Approx(80e3));
  CHECK(paper.system.symbol_rate == doctest::Approx(64e9));
  CHECK(paper.system.gamma == doctest::Approx(1.4e-3));
  CHECK(paper.system.noise_figure_db == doctest::Approx(5.0));
  CHECK(paper.system.linewidth == doctest::Approx(100e3));
  CHECK(paper.system.alpha == doctest::Approx(0.2 * std::log(10.0) / 10.0 / 1e3));
  CHECK(paper.system.steps_per_span == 80);
  CHECK_NOTHROW(paper.validate());

  CHECK_THROWS(profile_config("laptop"));
}

TEST_CASE("JSON overrides and canonical round trip") {
  const auto cfg = parse_config(R"({"profile": "desk", "powers_dbm": [1, 2], "seed": 9,
      "system": {"n_spans": 2, "noise_figure_db": 6.5},
      "training": {"epochs": 3, "lr": 0.002},
      "dsp": {"pilot_symbols": 64}})");
  CHECK(cfg.powers_dbm == std::vector<double>{1, 2});
  CHECK(cfg.seed == 9);
  CHECK(cfg.system.n_spans == 2);
  CHECK(cfg.system.noise_figure_db == 6.5);
  CHECK(cfg.training.schedule.epochs == 3);
  CHECK(cfg.training.schedule.adam.lr == 0.002);
  CHECK(cfg.dsp.pilot_symbols == 64);
  // Untouched fields keep the profile value.
  CHECK(cfg.system.symbol_rate == profile_config("desk").system.symbol_rate);

  const std::string once = config_to_json(cfg);
  const std::string twice = config_to_json(parse_config(once));
  CHECK(once == twice);
  for (const char* p : {"desk", "paper"}) {
    const std::string j = config_to_json(profile_config(p));
    CHECK(config_to_json(parse_config(j)) == j);
  }
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_WITH(parse_config(R"({"colour": 1})"), doctest::Contains("colour"));
  CHECK_THROWS_WITH(parse_config(R"({"system": {"span_km": 80}})"), doctest::Contains("span_km"));
  CHECK_THROWS_WITH(parse_config(R"({"training": {"momentum": 0.9}})"), doctest::Contains("momentum"));
  CHECK_THROWS_WITH(parse_config(R"({"dsp": {"taps": 9}})"), doctest::Contains("taps"));
  CHECK_THROWS(parse_config(R"({"system": {"ase": "yes"}})"));
  CHECK_THROWS(parse_config("{not json"));
}

TEST_CASE("validation") {
  auto bad = [](const std::function<void(ExperimentConfig&)>& f) {
    auto c = profile_config("desk");
    f(c);
    return c;
  };
  CHECK_THROWS(bad([](auto& c) { c.rx_mode = 3; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.powers_dbm.clear(); }).validate());
  CHECK_THROWS(bad([](auto& c) { c.equalizers = {"fancy"}; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.equalizers = {"dbp:0"}; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.n_train_symbols = 0; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.dsp.rde_taps = 24; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.dsp.pilot_symbols = 8; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.system.sps_rx = 4; }).validate());
  CHECK_THROWS(bad([](auto& c) { c.system.steps_per_span = 0; }).validate());
  CHECK_NOTHROW(bad([](auto& c) { c.dsp.pilot_symbols = 0; }).validate());
}

TEST_CASE("dataset key covers every system field") {
  const auto base = profile_config("desk");
  const auto k0 = dataset_key(base, 5.0, "train", 10, 1);
  std::vector<std::function<void(SystemParams&)>> edits = {
      [](auto& s) { s.alpha *= 1.01; },        [](auto& s) { s.beta2 *= 1.01; },
      [](auto& s) { s.gamma *= 1.01; },        [](auto& s) { s.pmd_coef *= 1.01; },
      [](auto& s) { s.span_length += 1.0; },   [](auto& s) { s.n_spans += 1; },
      [](auto& s) { s.symbol_rate *= 1.01; },  [](auto& s) { s.sps_forward *= 2; },
      [](auto& s) { s.steps_per_span += 1; },  [](auto& s) { s.linewidth += 1.0; },
      [](auto& s) { s.noise_figure_db += 0.1; }, [](auto& s) { s.rolloff = 0.2; },
      [](auto& s) { s.center_wavelength *= 1.001; }, [](auto& s) { s.ase_enabled = !s.ase_enabled; },
      [](auto& s) { s.pmd_enabled = !s.pmd_enabled; },
  };
  std::set<std::uint64_t> keys{k0};
  for (const auto& e : edits) {
    auto c = base;
    e(c.system);
    keys.insert(dataset_key(c, 5.0, "train", 10, 1));
  }
  CHECK(keys.size() == edits.size() + 1);
  CHECK(dataset_key(base, 5.0, "train", 10, 1) == k0);
  CHECK(dataset_key(base, 5.5, "train", 10, 1) != k0);
  CHECK(dataset_key(base, 5.0, "test", 10, 1) != k0);
  CHECK(dataset_key(base, 5.0, "train", 11, 1) != k0);
  CHECK(dataset_key(base, 5.0, "train", 10, 2) != k0);
  auto s = base;
  s.seed += 1;
  CHECK(dataset_key(s, 5.0, "train", 10, 1) != k0);
  auto d = base;
  d.dsp.cpe_window += 2;
  CHECK(dataset_key(d, 5.0, "train", 10, 1) != k0);
  // Training hyperparameters do not touch the data.
  auto t = base;
  t.training.schedule.epochs += 1;
  CHECK(dataset_key(t, 5.0, "train", 10, 1) == k0);
}

TEST_CASE("hashing helpers") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  std::set<std::uint64_t> seeds;
  for (std::uint64_t s : {1ULL, 2ULL, 12345ULL})
    for (std::uint64_t p = 1; p <= 7; ++p) seeds.insert(derive_seed(s, p));
  CHECK(seeds.size() == 21);
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}

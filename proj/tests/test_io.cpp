#include <doctest.h>

#include <sstream>

#include "corrdet/io.hpp"

using namespace corrdet;

TEST_CASE("config round trip") {
  json j = json::parse(R"({
    "diffusion_rate": 2.5, "stationary_variance": 1.0, "noise_variance": 0.1,
    "layout": {"kind": "periodic", "offsets": [0.0, 0.01, 0.02], "period_count": 4},
    "options": {"alpha": 0.1, "trials": 20000, "seed": 3, "n_values": [3, 6, 9]}
  })");
  ExperimentConfig cfg = experiment_config_from_json(j);
  CHECK(cfg.field.diffusion_rate == 2.5);
  REQUIRE(cfg.layout.has_value());
  const auto& p = std::get<PeriodicLayout>(*cfg.layout);
  CHECK(p.offsets.size() == 3);
  CHECK(p.period_count == 4);
  CHECK(cfg.options.alphas == std::vector<double>{0.1});
  CHECK(cfg.options.trials == 20000);
  CHECK(cfg.options.seed == 3u);

  json back = to_json(*cfg.layout);
  CHECK(back["kind"] == "periodic");
  SensorLayout again = layout_from_json(back);
  CHECK(std::get<PeriodicLayout>(again).offsets == p.offsets);

  json f = to_json(cfg.field);
  f.erase("snr");
  CHECK(field_params_from_json(f).noise_variance == 0.1);
}

TEST_CASE("config rejects unknown keys and bad values") {
  const json base = json::parse(R"({"diffusion_rate": 1, "stationary_variance": 1, "noise_variance": 1})");
  CHECK_NOTHROW(experiment_config_from_json(base));

  json extra = base;
  extra["snr"] = 3;
  CHECK_THROWS_AS(experiment_config_from_json(extra), ConfigError);

  json bad_layout = base;
  bad_layout["layout"] = {{"kind", "clustered"}, {"cluster_size", 2}, {"spacing", 1.0}, {"period", 1.0}};
  CHECK_THROWS_AS(experiment_config_from_json(bad_layout), ConfigError);

  json bad_kind = base;
  bad_kind["layout"] = {{"kind", "random"}};
  CHECK_THROWS_AS(experiment_config_from_json(bad_kind), ConfigError);

  json missing = base;
  missing.erase("noise_variance");
  CHECK_THROWS_AS(experiment_config_from_json(missing), ConfigError);

  json negative = base;
  negative["diffusion_rate"] = -1;
  CHECK_THROWS_AS(experiment_config_from_json(negative), ConfigError);

  json wrong_type = base;
  wrong_type["layout"] = {{"kind", "uniform"}, {"spacing", "1"}};
  CHECK_THROWS_AS(experiment_config_from_json(wrong_type), ConfigError);

  json bad_alpha = base;
  bad_alpha["options"] = {{"alpha", 1.5}};
  CHECK_THROWS_AS(experiment_config_from_json(bad_alpha), ConfigError);

  json bad_option = base;
  bad_option["options"] = {{"format", "csv"}};
  CHECK_THROWS_AS(experiment_config_from_json(bad_option), ConfigError);

  CHECK_THROWS_AS(load_experiment_config("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("exponent result serialization") {
  FieldParams p = make_field_params(1.0, 10.0, 1.0);
  json s = to_json(exponent(p, UniformLayout{0.5, 10}));
  CHECK(s["innovations"]["type"] == "scalar");
  CHECK(s["method"] == "scalar");
  json v = to_json(exponent(p, PeriodicLayout{{0.2, 0.3}, 1}));
  CHECK(v["innovations"]["type"] == "matrix");
  CHECK(v["innovations"]["p"].size() == 2);
  CHECK(v["layout"]["kind"] == "periodic");
}

TEST_CASE("sweep CSV flags the argmax row") {
  SweepResult s = correlation_sweep(make_field_params(1.0, 10.0, 1.0), {0.0, 0.5, 0.9});
  std::ostringstream os;
  write_csv(os, s);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "a,K_per_sensor,K_per_block,approx_miss_prob,is_argmax");
  std::getline(in, line);
  CHECK(line.substr(0, 2) == "0,");
  CHECK(line.back() == '1');
  std::getline(in, line);
  CHECK(line.back() == '0');
}

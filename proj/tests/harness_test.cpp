#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "wsnfuse/harness/commands.hpp"

using namespace wsnfuse;

namespace {

ExperimentConfig small_config(std::size_t trials = 400) {
  ExperimentConfig c;
  c.trials = trials;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("wsnfuse_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

// ------------------------------------------------------------ config

TEST(Config, MinimalConfigKeepsDefaults) {
  const auto c = parse_config("seed = 42\n");
  ExperimentConfig d;
  d.seed = 42;
  EXPECT_EQ(c, d);
  EXPECT_EQ(c.cluster_count(), 9u);
  EXPECT_DOUBLE_EQ(c.intensity, 2.0);
  EXPECT_DOUBLE_EQ(c.local_pfa, 0.01);
  EXPECT_DOUBLE_EQ(c.target_x, 4.0);
  EXPECT_DOUBLE_EQ(c.target_y, 5.0);
}

TEST(Config, UnknownKeyIsNamed) {
  try {
    parse_config("seed = 1\nregion.depth = 3\n");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("region.depth"), std::string::npos) << what;
    EXPECT_NE(what.find("line 2"), std::string::npos) << what;
  }
}

TEST(Config, MalformedValuesRejected) {
  EXPECT_THROW(parse_config("trials = ten\n"), ConfigError);
  EXPECT_THROW(parse_config("trials = 0\n"), ConfigError);
  EXPECT_THROW(parse_config("seed = 1\nseed = 2\n"), ConfigError);
  EXPECT_THROW(parse_config("rules = CR,GLRT\n"), ConfigError);
  EXPECT_THROW(parse_config("sensing.local_pfa = 1.5\n"), ConfigError);
  EXPECT_THROW(parse_config("channel.ch_power = 1,2\n"), ConfigError);
  EXPECT_THROW(parse_config("just text\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/wsnfuse.cfg"), ConfigError);
}

TEST(Config, CommentsAndWhitespace) {
  const auto c = parse_config("# header\n  trials=25   # inline\n\nrules = CR , LFR\n");
  EXPECT_EQ(c.trials, 25u);
  EXPECT_EQ(c.rules, (std::vector<Rule>{Rule::kCR, Rule::kLFR}));
}

TEST(Config, EmitLoadRoundTrip) {
  ExperimentConfig c;
  c.seed = 18446744073709551615ULL;
  c.intensity = 0.1 + 0.2;
  c.ch_power = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 1.0 / 3.0};
  c.snch_noise_var = {0.7};
  c.thresholds = {-1.5, 0.0, 2.25};
  c.rules = {Rule::kLFRaML, Rule::kCRNoisy};
  c.literal_saving = true;
  const auto text = format_config(c);
  const auto back = parse_config(text);
  EXPECT_EQ(back, c);
  EXPECT_EQ(format_config(back), text);
}

// ------------------------------------------------------------ trials

TEST(RunTrial, DeterministicForSeedAndIndex) {
  const auto model = build_model(small_config());
  for (std::size_t i : {0u, 5u, 399u}) {
    for (Hypothesis h : {Hypothesis::kH0, Hypothesis::kH1}) {
      EXPECT_EQ(run_trial(model, h, i), run_trial(model, h, i));
    }
  }
  EXPECT_NE(run_trial(model, Hypothesis::kH0, 1), run_trial(model, Hypothesis::kH0, 2));
}

TEST(RunTrial, NoSensorsGivesZeroOrPureNoise) {
  auto cfg = small_config();
  cfg.intensity = 0.0;
  cfg.rules = {Rule::kCR, Rule::kCRNoisy, Rule::kLFR};
  // lambda0 = 0 makes OCR/LLR undefined, so only these rules apply
  const auto model_draw = [&] {
    ExperimentModel m;
    m.config = cfg;
    m.region = cfg.region();
    m.sensing = cfg.sensing();
    m.target = cfg.target();
    m.intensities = {0.0, std::vector<double>(9, 0.0)};
    m.channel = cfg.channel();
    const auto ch = derive(m.channel);
    m.context = {m.intensities, ch, std::vector<double>(9, 0.0), lfr_weights(m.intensities, ch)};
    return m;
  }();
  const auto draw = draw_trial(model_draw, Hypothesis::kH0, 3);
  for (std::size_t m = 0; m < 9; ++m) EXPECT_EQ(draw.counts(0, m), 0);
  const auto s = evaluate_rules(model_draw, draw);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_NE(s[1], 0.0);  // channel noise only
  EXPECT_EQ(s[2], 0.0);  // zero weights
}

TEST(RunTrial, PairedHypothesesShareNoise) {
  auto cfg = small_config();
  cfg.target_power = 0.0;
  cfg.rules = {Rule::kCR, Rule::kOCR, Rule::kLFR, Rule::kCRNoisy, Rule::kLFRaML};
  const auto model = build_model(cfg);
  for (std::size_t i = 0; i < 20; ++i) {
    EXPECT_EQ(run_trial(model, Hypothesis::kH0, i), run_trial(model, Hypothesis::kH1, i));
  }
}

TEST(RunTrial, ZeroPowerTargetIndistinguishableUnpaired) {
  auto cfg = small_config(10000);
  cfg.target_power = 0.0;
  cfg.paired = false;
  cfg.rules = {Rule::kCR, Rule::kOCR, Rule::kLFR, Rule::kCRNoisy};
  const auto batch = run_trials(build_model(cfg), 1);
  for (std::size_t r = 0; r < cfg.rules.size(); ++r) {
    const double d = oracle::ks_two_sample(batch.h0[r], batch.h1[r]);
    EXPECT_GT(oracle::ks_two_sample_pvalue(d, cfg.trials, cfg.trials), 0.01)
        << rule_name(cfg.rules[r]);
  }
}

TEST(RunTrial, MultiSampleShapes) {
  auto cfg = small_config(50);
  cfg.sample_count = 4;
  const auto model = build_model(cfg);
  const auto draw = draw_trial(model, Hypothesis::kH1, 7);
  EXPECT_EQ(draw.counts.rows(), 4u);
  EXPECT_EQ(draw.counts.cols(), 9u);
  const auto stats = evaluate_rules(model, draw);
  EXPECT_EQ(stats.size(), cfg.rules.size());
  for (double v : stats) EXPECT_TRUE(std::isfinite(v));
}

TEST(RunTrials, ThreadCountDoesNotChangeResults) {
  const auto model = build_model(small_config(300));
  const auto a = run_trials(model, 1);
  const auto b = run_trials(model, 3);
  EXPECT_EQ(a.h0, b.h0);
  EXPECT_EQ(a.h1, b.h1);
}

TEST(ParallelFor, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(100, 4,
                            [](std::size_t i) {
                              if (i == 57) throw NumericError("boom");
                            }),
               NumericError);
}

// ------------------------------------------------------------ ROC

TEST(Roc, EndpointsAndMonotonicity) {
  auto cfg = small_config(500);
  cfg.rules = {Rule::kCR, Rule::kLFR, Rule::kLLR};
  const auto result = estimate_roc(cfg);
  for (const auto& c : result.curves) {
    ASSERT_EQ(c.points.size(), 200u);
    EXPECT_EQ(c.points.front().pfa, 1.0);
    EXPECT_EQ(c.points.front().pd, 1.0);
    EXPECT_EQ(c.points.back().pfa, 0.0);
    EXPECT_EQ(c.points.back().pd, 0.0);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_GT(c.points[i].gamma, c.points[i - 1].gamma);
      EXPECT_LE(c.points[i].pfa, c.points[i - 1].pfa);
      EXPECT_LE(c.points[i].pd, c.points[i - 1].pd);
    }
  }
}

TEST(Roc, ExplicitThresholdsAndFullSweep) {
  const std::vector<double> h0{1, 2, 3, 4};
  const std::vector<double> h1{3, 4, 5, 6};
  const auto c = build_roc("X", h0, h1, std::vector<double>{2.5});
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_DOUBLE_EQ(c.points[0].pfa, 0.5);
  EXPECT_DOUBLE_EQ(c.points[0].pd, 1.0);
  EXPECT_DOUBLE_EQ(c.points[0].pfa_se, 0.25);
  const auto full = build_roc("X", h0, h1, std::size_t{0});
  EXPECT_EQ(full.points.size(), 7u);  // 6 distinct values + one below
  EXPECT_EQ(full.points.front().pfa, 1.0);
  EXPECT_EQ(full.points.back().pd, 0.0);
}

TEST(PdAtPfa, Examples) {
  RocCurve exact{"X", {{0, 1, 1, 0, 0}, {1, 0.1, 0.8, 0, 0}, {2, 0, 0, 0, 0}}};
  EXPECT_DOUBLE_EQ(pd_at_pfa(exact, 0.1), 0.8);
  RocCurve ends{"X", {{0, 1, 1, 0, 0}, {1, 0, 0, 0, 0}}};
  EXPECT_DOUBLE_EQ(pd_at_pfa(ends, 0.1), 0.1);
  RocCurve partial{"X", {{0, 0.5, 0.9, 0, 0}, {1, 0.2, 0.6, 0, 0}}};
  EXPECT_THROW(pd_at_pfa(partial, 0.1), std::out_of_range);
  EXPECT_THROW(pd_at_pfa(RocCurve{}, 0.1), std::invalid_argument);
  // tied P_FA: best P_D wins
  RocCurve tied{"X", {{0, 1, 1, 0, 0}, {1, 0.1, 0.7, 0, 0}, {2, 0.1, 0.5, 0, 0}, {3, 0, 0, 0, 0}}};
  EXPECT_DOUBLE_EQ(pd_at_pfa(tied, 0.1), 0.7);
}

TEST(PdAtPfa, MonotoneOnSimulatedCurve) {
  auto cfg = small_config(2000);
  cfg.threshold_points = 0;
  cfg.rules = {Rule::kLFR};
  const auto c = estimate_roc(cfg).curves[0];
  EXPECT_GE(pd_at_pfa(c, 0.2), pd_at_pfa(c, 0.1));
}

TEST(Roc, CsvRoundTrip) {
  auto cfg = small_config(200);
  cfg.rules = {Rule::kCR, Rule::kLFRaML};
  const auto curves = estimate_roc(cfg).curves;
  std::stringstream s;
  write_roc_csv(s, curves);
  EXPECT_EQ(read_roc_csv(s), curves);
  std::stringstream bad("rule,gamma\n");
  EXPECT_THROW(read_roc_csv(bad), ConfigError);
}

TEST(Roc, PairedAndIndependentBatchesAgree) {
  auto cfg = small_config(4000);
  cfg.rules = {Rule::kCR, Rule::kLFR};
  cfg.threshold_points = 0;
  const auto paired = estimate_roc(cfg).curves;
  cfg.paired = false;
  const auto indep = estimate_roc(cfg).curves;
  for (std::size_t r = 0; r < 2; ++r) {
    for (double pfa : {0.05, 0.1, 0.3}) {
      const double a = pd_at_pfa(paired[r], pfa);
      const double b = pd_at_pfa(indep[r], pfa);
      const double se = std::sqrt(binomial_se(a, 4000) * binomial_se(a, 4000) +
                                  binomial_se(b, 4000) * binomial_se(b, 4000));
      EXPECT_NEAR(a, b, 3.0 * se) << paired[r].rule << " at " << pfa;
    }
  }
}

// ------------------------------------------------------------ bounds / power experiments

TEST(TailBoundExperiment, BoundDominatesAtDeskScale) {
  auto cfg = small_config(20000);
  const auto result = tail_bound_experiment(cfg);
  ASSERT_EQ(result.rows.size(), 2 * cfg.bound_points);
  for (const auto& r : result.rows) {
    EXPECT_GT(r.z, result.params.mean_of(r.hypothesis));
    EXPECT_LE(r.empirical_tail - 3.0 * binomial_se(r.empirical_tail, r.trials), r.bound)
        << "z=" << r.z;
  }
}

TEST(PowerSweep, ReferenceAndFeasibility) {
  auto cfg = small_config();
  cfg.sn_power = 5.0;
  cfg.ch_power = {2.0};
  cfg.d1_sweep = {1.0, 5.5, 1e6};
  const auto r = power_sweep(cfg);
  EXPECT_DOUBLE_EQ(r.reference_total, 18.0);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.rows[0].allocation.has_value());
  EXPECT_NEAR(r.rows[1].allocation->achieved_md, 5.5 * 5.0, 1e-9);
  EXPECT_FALSE(r.rows[2].allocation.has_value());
  EXPECT_FALSE(r.all_feasible());
  EXPECT_GT(r.rows[0].saving_pct, r.rows[1].saving_pct);
}

// ------------------------------------------------------------ estimation loop

// Without a target the estimate tends to the deployment's own false-alarm
// mean N_m * P_fa, clipped at lambda0, as L grows.
TEST(AmlLoop, NoTargetEstimateConvergesToFalseAlarmMean) {
  auto cfg = small_config();
  cfg.aml_target_present = false;
  cfg.aml_rounds = 2;
  cfg.sample_count = 6400;
  const double l0 = lambda0(cfg.intensity, cfg.local_pfa, cfg.region().cluster_area());
  auto rng = make_stream(cfg.seed, 0, Lane::kDeployment);
  const auto nodes = sample_ppp(cfg.intensity, cfg.region(), rng).cluster_counts();
  for (const auto& round : run_lfr_aml_loop(cfg).rounds) {
    for (std::size_t m = 0; m < nodes.size(); ++m) {
      const double expected = std::max(l0, static_cast<double>(nodes[m]) * cfg.local_pfa);
      EXPECT_GE(round.lambda1_hat[m], l0);
      EXPECT_NEAR(round.lambda1_hat[m], expected, 0.15) << "cluster " << m;
    }
  }
}

TEST(AmlLoop, DeterministicAndInitialisedEqually) {
  const auto cfg = small_config();
  const auto a = run_lfr_aml_loop(cfg);
  const auto b = run_lfr_aml_loop(cfg);
  ASSERT_EQ(a.rounds.size(), cfg.aml_rounds);
  EXPECT_EQ(a.rounds[0].powers_used, std::vector<double>(9, 1.0));
  EXPECT_DOUBLE_EQ(a.reference_total, 9.0);
  for (std::size_t i = 0; i < a.rounds.size(); ++i) {
    EXPECT_EQ(a.rounds[i].lambda1_hat, b.rounds[i].lambda1_hat);
    EXPECT_EQ(a.rounds[i].statistic, b.rounds[i].statistic);
    if (i > 0) EXPECT_EQ(a.rounds[i].powers_used, a.rounds[i - 1].powers_next);
  }
}

TEST(AmlLoop, FallsBackWhenAllocationInfeasible) {
  auto cfg = small_config();
  cfg.md_floor = 1e9;
  cfg.aml_rounds = 2;
  const auto r = run_lfr_aml_loop(cfg);
  for (const auto& round : r.rounds) {
    EXPECT_TRUE(round.fallback);
    EXPECT_EQ(round.powers_next, std::vector<double>(9, 1.0));
  }
}

TEST(AmlLoop, PowerConcentratesOnTargetCluster) {
  auto cfg = small_config();
  cfg.sample_count = 10;
  int hits = 0;
  int rounds = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    cfg.seed = seed;
    for (const auto& round : run_lfr_aml_loop(cfg).rounds) {
      const auto& p = round.powers_next;
      hits += std::max_element(p.begin(), p.end()) == p.begin() ? 1 : 0;
      ++rounds;
    }
  }
  EXPECT_GE(hits, 0.8 * rounds) << hits << " of " << rounds;
}

// ------------------------------------------------------------ commands

TEST(Commands, WriteCsvWithHeaderAndMeta) {
  const auto dir = scratch("cmd");
  CommandOptions o;
  o.trials = 100;
  o.out_dir = dir.string();
  std::ostringstream log;
  EXPECT_EQ(cmd_roc(o, log), kExitOk);
  EXPECT_EQ(cmd_bounds(o, log), kExitOk);
  EXPECT_EQ(cmd_aml_loop(o, log), kExitOk);
  EXPECT_EQ(slurp(dir / "roc.csv").rfind("rule,gamma,pfa,pd,pfa_se,pd_se\n", 0), 0u);
  EXPECT_EQ(slurp(dir / "bounds.csv").rfind("hypothesis,z,empirical_tail,bound\n", 0), 0u);
  EXPECT_EQ(slurp(dir / "aml.csv").rfind("round,cluster,lambda1_hat,p_m,statistic,decision\n", 0), 0u);
  const auto meta = slurp(dir / "roc.csv.meta");
  EXPECT_NE(meta.find("snr convention"), std::string::npos);
  EXPECT_NE(meta.find("CR-Z"), std::string::npos);
  EXPECT_NE(meta.find("trials = 100"), std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST(Commands, ExitCodes) {
  const auto dir = scratch("exit");
  std::filesystem::create_directories(dir);
  std::ostringstream log;
  CommandOptions o;
  o.out_dir = dir.string();

  o.config_path = (dir / "missing.cfg").string();
  EXPECT_EQ(guarded([&] { return cmd_roc(o, log); }, log), kExitConfig);

  std::ofstream(dir / "bad.cfg") << "colour = blue\n";
  o.config_path = (dir / "bad.cfg").string();
  EXPECT_EQ(guarded([&] { return cmd_power(o, log); }, log), kExitConfig);

  std::ofstream(dir / "inf.cfg") << "power.d1_sweep = 1e9\n";
  o.config_path = (dir / "inf.cfg").string();
  EXPECT_EQ(guarded([&] { return cmd_power(o, log); }, log), kExitInfeasible);

  std::ofstream(dir / "pa.cfg") << "power.md_floor = 1e9\nrules = LFR-PA\ntrials = 10\n";
  o.config_path = (dir / "pa.cfg").string();
  EXPECT_EQ(guarded([&] { return cmd_roc(o, log); }, log), kExitInfeasible);

  std::ofstream(dir / "num.cfg") << "llr.tolerance = 0\nrules = LLR\ntrials = 2\n";
  o.config_path = (dir / "num.cfg").string();
  EXPECT_EQ(guarded([&] { return cmd_roc(o, log); }, log), kExitNumeric);

  o.config_path.clear();
  o.rules = "CR,NOPE";
  EXPECT_EQ(guarded([&] { return cmd_roc(o, log); }, log), kExitConfig);
  std::filesystem::remove_all(dir);
}

TEST(Commands, ValidatePasses) {
  std::ostringstream log;
  EXPECT_EQ(cmd_validate(CommandOptions{}, log), kExitOk) << log.str();
  EXPECT_EQ(log.str().find("FAIL"), std::string::npos);
}

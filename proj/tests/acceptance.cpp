// Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when any
// criterion fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "oracles.hpp"
#include "wsnfuse/harness/commands.hpp"

using namespace wsnfuse;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

ExperimentConfig at_snr(double db) {
  ExperimentConfig c;
  c.snr_c_db = {db};
  c.snr_f_db = {db};
  return c;
}

Outcome ml_closed_form() {
  auto rng = make_stream(101, 0, Lane::kDecisions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double l0 = 0.1 + 20.0 * u(rng);
    std::vector<double> means(1 + static_cast<std::size_t>(20.0 * u(rng)));
    for (auto& v : means) v = 30.0 * u(rng);
    // the objective sum(v log lam - lam) is concave; bisect its derivative
    auto slope = [&](double lam) {
      double g = 0.0;
      for (double v : means) g += v / lam - 1.0;
      return g;
    };
    double ref = l0;
    if (slope(l0) > 0.0) {
      double lo = l0;
      double hi = *std::max_element(means.begin(), means.end()) + 1.0;
      for (int it = 0; it < 200; ++it) (slope(0.5 * (lo + hi)) > 0.0 ? lo : hi) = 0.5 * (lo + hi);
      ref = 0.5 * (lo + hi);
    }
    worst = std::max(worst, std::abs(estimate_lambda1(means, l0).lambda1_hat - ref));
  }
  return {worst <= 1e-6, "max |closed form - bisection| = " + fmt(worst)};
}

Outcome lower_bound_dominance() {
  auto rng = make_stream(102, 0, Lane::kDecisions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = INFINITY;
  for (int i = 0; i < 1000; ++i) {
    const double lam = 0.05 + 40.0 * u(rng);
    const double s = 0.01 + 20.0 * u(rng);
    const double zt = -5.0 + (lam + 15.0) * u(rng);
    const double exact = static_cast<double>(oracle::log_likelihood(zt, lam, s));
    worst = std::min(worst, exact - loglik_lower_bound(zt, lam, s));
  }
  return {worst >= -1e-10, "min slack = " + fmt(worst)};
}

Outcome tail_bound_dominance() {
  auto cfg = at_snr(5.0);
  cfg.trials = 100000;
  cfg.bound_points = 50;
  const auto result = tail_bound_experiment(cfg, worker_count());
  std::size_t violations = 0;
  double worst = INFINITY;
  for (const auto& r : result.rows) {
    const double slack = r.bound - (r.empirical_tail - 3.0 * binomial_se(r.empirical_tail, r.trials));
    worst = std::min(worst, slack);
    if (slack < 0.0) ++violations;
  }
  return {violations == 0 && result.rows.size() == 100,
          std::to_string(violations) + " of " + std::to_string(result.rows.size()) +
              " points violated, min slack " + fmt(worst)};
}

Outcome allocation_certificate() {
  auto rng = make_stream(104, 0, Lane::kDecisions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int solved = 0;
  int failures = 0;
  double worst_rel = 0.0;
  while (solved < 100) {
    AllocationProblem p;
    const std::size_t M = 1 + static_cast<std::size_t>(9.0 * u(rng)) % 9;
    for (std::size_t m = 0; m < M; ++m) {
      p.lambda_d.push_back(u(rng) < 0.15 ? 0.0 : 0.05 + 6.0 * u(rng));
      p.snch_noise_vars.push_back(0.05 + 3.0 * u(rng));
      p.chfc_noise_vars.push_back(0.05 + 3.0 * u(rng));
    }
    p.sn_power = 0.2 + 5.0 * u(rng);
    const double sup = p.md_supremum();
    if (!(sup > 0.0)) continue;
    p.md_floor = (0.02 + 0.95 * u(rng)) * sup;
    ++solved;
    const auto a = allocate(p);
    bool ok = stationarity_residual(a, p) < 1e-8 && a.nu > 0.0 &&
              std::abs(a.achieved_md - p.md_floor) <= 1e-6 * p.md_floor;
    const double sqrt_nu = std::sqrt(a.nu);
    for (std::size_t m = 0; m < M; ++m) {
      ok = ok && a.powers[m] >= 0.0 &&
           (a.powers[m] > 0.0) == (unclamped_power(p, m, sqrt_nu) > 0.0);
    }
    const oracle::PowerOracle o{p.lambda_d, p.snch_noise_vars, p.chfc_noise_vars, p.sn_power,
                                p.md_floor};
    const double ref = o.total();
    const double rel = std::abs(a.total() - ref) / ref;
    worst_rel = std::max(worst_rel, rel);
    ok = ok && rel <= 1e-4;
    failures += ok ? 0 : 1;
  }
  return {failures == 0, std::to_string(failures) + " of 100 failed, max relative gap to oracle " +
                             fmt(worst_rel)};
}

struct PdEstimate {
  double pd = 0.0;
  double se = 0.0;
};

std::vector<PdEstimate> pd_at_01(ExperimentConfig cfg) {
  cfg.trials = 10000;
  cfg.threshold_points = 0;
  const auto curves = estimate_roc(cfg, worker_count()).curves;
  std::vector<PdEstimate> out;
  for (const auto& c : curves) {
    const double pd = pd_at_pfa(c, 0.1);
    out.push_back({pd, binomial_se(pd, cfg.trials)});
  }
  return out;
}

double joint_se(const PdEstimate& a, const PdEstimate& b) {
  return std::sqrt(a.se * a.se + b.se * b.se);
}

Outcome roc_ordering_high_snr() {
  auto cfg = at_snr(5.0);
  cfg.rules = {Rule::kOCR, Rule::kLLR, Rule::kLFR, Rule::kCR};
  const auto r = pd_at_01(cfg);
  const auto& ocr = r[0];
  const auto& llr = r[1];
  const auto& lfr = r[2];
  const auto& cr = r[3];
  const bool ordered = ocr.pd >= llr.pd - 2.0 * joint_se(ocr, llr) &&
                       llr.pd >= lfr.pd - 2.0 * joint_se(llr, lfr) &&
                       lfr.pd >= cr.pd - 2.0 * joint_se(lfr, cr);
  const bool close = std::abs(lfr.pd - ocr.pd) <= 0.03;
  return {ordered && close, "P_D at P_FA=0.1: OCR " + fmt(ocr.pd) + ", LLR " + fmt(llr.pd) +
                                ", LFR " + fmt(lfr.pd) + ", CR " + fmt(cr.pd) + " (SE ~" +
                                fmt(lfr.se) + ")"};
}

Outcome roc_low_snr_degradation() {
  auto cfg = at_snr(-5.0);
  cfg.rules = {Rule::kLFR, Rule::kCR};
  const auto r = pd_at_01(cfg);
  const double margin = r[1].pd - r[0].pd;
  const double se = joint_se(r[0], r[1]);
  return {margin > 2.0 * se, "P_D at P_FA=0.1: LFR " + fmt(r[0].pd) + ", CR " + fmt(r[1].pd) +
                                 ", CR - LFR = " + fmt(margin) + " vs 2 SE = " + fmt(2.0 * se)};
}

Outcome poisson_thinning() {
  const ExperimentConfig base;
  const auto region = base.region();
  const auto sensing = base.sensing();
  const std::vector<Point> positions{{4, 5}, {25, 25}, {10, 40}, {45, 12}, {30, 3}};
  double min_p = 1.0;
  int rejected = 0;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const TargetParams target{base.target_power, positions[i]};
    const auto in = cluster_intensities(base.intensity, target, region, sensing);
    const std::size_t m = cluster_of(positions[i], region);
    std::vector<long long> counts;
    counts.reserve(10000);
    for (std::size_t t = 0; t < 10000; ++t) {
      auto d = make_stream(107 + i, t, Lane::kDeployment);
      auto s = make_stream(107 + i, t, Lane::kDecisions);
      counts.push_back(simulate_decisions(sample_ppp(base.intensity, region, d), target, sensing, s)[m]);
    }
    const double p = oracle::poisson_gof_pvalue(counts, in.lambda1[m]);
    min_p = std::min(min_p, p);
    rejected += p < 0.01 ? 1 : 0;
  }
  return {rejected == 0, std::to_string(rejected) + " of 5 rejected at 0.01, min p = " + fmt(min_p)};
}

Outcome affine_identity() {
  auto rng = make_stream(108, 0, Lane::kDecisions);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> n(0.0, 20.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const std::size_t M = 1 + static_cast<std::size_t>(12.0 * u(rng));
    const double l0 = 0.1 + 10.0 * u(rng);
    ClusterIntensities in{l0, {}};
    ChannelDerived ch;
    for (std::size_t m = 0; m < M; ++m) {
      in.lambda1.push_back(l0 + 15.0 * u(rng));
      ch.p_tilde.push_back(0.01 + 10.0 * u(rng));
      ch.sigma_tilde_sq.push_back(0.01 + 5.0 * u(rng));
      ch.snr.push_back(ch.p_tilde.back() / ch.sigma_tilde_sq.back());
    }
    const auto ctx = make_fusion_context(in, ch);
    std::vector<double> z(M);
    for (auto& v : z) v = n(rng);
    const double lhs = approx_llr(z, ctx) - approx_llr_offset(ctx);
    const double rhs = -lfr_statistic(z, ctx.weights_lfr);
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  return {worst <= 1e-9, "max error " + fmt(worst)};
}

Outcome power_saving_reproduction() {
  struct Case {
    double snr_c, snr_f, lo, hi;
  };
  const std::vector<Case> cases{{2, 5, 74, 94}, {5, 5, 57, 77}, {2, 2, 57, 77}};
  bool ok = true;
  std::string detail;
  for (const auto& c : cases) {
    ExperimentConfig cfg;
    cfg.sn_power = 5.0;
    cfg.ch_power = {2.0};
    cfg.snr_c_db = {c.snr_c};
    cfg.snr_f_db = {c.snr_f};
    cfg.d1_sweep = {5.5};
    const auto row = power_sweep(cfg).rows.at(0);
    std::string value = row.allocation ? fmt(row.saving_pct) + "%" : "infeasible";
    const bool in = row.allocation && row.saving_pct >= c.lo && row.saving_pct <= c.hi;
    ok = ok && in;
    detail += (detail.empty() ? "" : "; ") + std::string("snr_c ") + fmt(c.snr_c) + " / snr_f " +
              fmt(c.snr_f) + " dB: " + value + " (want " + fmt(c.lo) + "-" + fmt(c.hi) + ")";
  }
  return {ok, detail};
}

Outcome thread_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "wsnfuse_acceptance";
  std::filesystem::remove_all(root);
  std::ostringstream log;
  using Cmd = int (*)(const CommandOptions&, std::ostream&);
  const std::vector<Cmd> commands{cmd_roc, cmd_bounds, cmd_power, cmd_aml_loop};
  for (std::size_t threads : {std::size_t{1}, std::size_t{4}}) {
    CommandOptions o;
    o.seed = 2024;
    o.trials = 3000;
    o.threads = threads;
    o.rules = "CR,CR-Z,OCR,LLR,LFR,LFR-aML,LFR-PA";
    o.out_dir = (root / std::to_string(threads)).string();
    for (auto cmd : commands) {
      const int rc = guarded([&] { return cmd(o, log); }, log);
      if (rc != kExitOk) return {false, "command exited with " + std::to_string(rc)};
    }
  }
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
  };
  std::size_t files = 0;
  std::string differing;
  for (const auto& e : std::filesystem::directory_iterator(root / "1")) {
    ++files;
    const auto other = root / "4" / e.path().filename();
    if (!std::filesystem::exists(other) || slurp(e.path()) != slurp(other)) {
      differing += " " + e.path().filename().string();
    }
  }
  std::filesystem::remove_all(root);
  return {differing.empty() && files == 8,
          std::to_string(files) + " files compared across 1 and 4 threads" +
              (differing.empty() ? "" : "; differing:" + differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"constrained ML closed form vs numeric maximiser", ml_closed_form},
      {"likelihood lower bound dominance", lower_bound_dominance},
      {"tail bound dominates empirical LFR tail", tail_bound_dominance},
      {"power allocation KKT certificate and oracle", allocation_certificate},
      {"ROC ordering at 5 dB", roc_ordering_high_snr},
      {"LFR below CR at -5 dB", roc_low_snr_degradation},
      {"Poisson thinning goodness of fit", poisson_thinning},
      {"approximate LLR affine in LFR", affine_identity},
      {"power saving reproduction", power_saving_reproduction},
      {"determinism across thread counts", thread_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << ' ' << i + 1 << ' ' << criteria[i].first << ": "
              << o.detail << " [" << fmt(secs) << " s]" << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << " of " << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}

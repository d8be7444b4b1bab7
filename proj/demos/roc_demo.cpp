// Small end-to-end run: default scenario at two channel qualities, printing
// P_D at P_FA = 0.1 for each rule.
#include <cstdio>

#include "wsnfuse/harness/experiments.hpp"

int main() {
  using namespace wsnfuse;
  for (double snr_db : {5.0, -5.0}) {
    ExperimentConfig cfg;
    cfg.trials = 2000;
    cfg.threshold_points = 0;
    cfg.snr_c_db = {snr_db};
    cfg.snr_f_db = {snr_db};
    cfg.rules = {Rule::kCR, Rule::kOCR, Rule::kLLR, Rule::kLFR, Rule::kCRNoisy};
    const auto result = estimate_roc(cfg, 2);
    std::printf("hop SNRs %+.0f dB\n", snr_db);
    for (const auto& curve : result.curves) {
      std::printf("  %-8s P_D = %.3f\n", curve.rule.c_str(), pd_at_pfa(curve, 0.1));
    }
  }
}

// Smallest useful program: clean the same creamed limb with both effectors
// and print the coverage each one achieves.

#include <iostream>

#include "capserv/config.hpp"
#include "capserv/sim.hpp"

using namespace capserv;

int main() {
    Config cfg;
    const LimbModel limb = cfg.build();

    for (EffectorKind kind : {EffectorKind::SkinGrip, EffectorKind::RigidTool}) {
        const SimResult res = run_trial(make_setup(cfg, kind, limb, cfg.seed));
        std::cout << effector_name(kind) << ": " << status_name(res.status);
        if (res.coverage_defined) {
            std::cout << ", total coverage " << res.coverage.total_pct << "% (top "
                      << res.coverage.view_pct[0] << " / side " << res.coverage.view_pct[1]
                      << " / bottom " << res.coverage.view_pct[2] << ")";
        }
        std::cout << ", " << res.over_pressure_events << " over-pressure events\n";
    }
    return 0;
}

#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "l0sparse/layers.hpp"

namespace l0sparse {

struct GradCheckBlock {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    bool finite = true;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    bool all_finite = true;
    bool pass = false;
    std::vector<GradCheckBlock> blocks;
};

// Central-difference check of analytic gradients. `f` must be deterministic
// (freeze any gate noise) and evaluate the scalar objective at the current
// parameter values; `blocks` expose the parameters and the analytic gradients
// computed beforehand. Parameters are restored after probing.
inline GradCheckReport gradient_check(const std::function<double()>& f,
                                      std::span<const ParamView> blocks, double h = 1e-5,
                                      double tol = 1e-4) {
    GradCheckReport report;
    for (const ParamView& block : blocks) {
        GradCheckBlock res;
        res.name = block.name;
        for (std::size_t i = 0; i < block.value.size(); ++i) {
            const double original = block.value[i];
            block.value[i] = original + h;
            const double fp = f();
            block.value[i] = original - h;
            const double fm = f();
            block.value[i] = original;
            if (!std::isfinite(fp) || !std::isfinite(fm)) {
                res.finite = false;
                report.all_finite = false;
                continue;
            }
            const double numeric = (fp - fm) / (2.0 * h);
            const double analytic = block.grad[i];
            const double rel =
                std::fabs(analytic - numeric) / std::max(std::fabs(analytic) + std::fabs(numeric), 1e-8);
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_index = i;
            }
        }
        report.max_rel_err = std::max(report.max_rel_err, res.max_rel_err);
        report.blocks.push_back(std::move(res));
    }
    report.pass = report.all_finite && report.max_rel_err < tol;
    return report;
}

}  // namespace l0sparse

#include "cvb/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cvb {

Trace run(ConditionalModel& model, const StoppingRule& rule) {
    if (model.slot_count() == 0)
        throw std::invalid_argument("run: model has an empty slot schedule");
    if (!(rule.epsilon >= 0.0))
        throw std::invalid_argument("run: epsilon must be nonnegative");

    Trace trace;
    double prev = model.initial_elbo();
    double sweep_peak = 0.0;
    for (std::size_t iter = 1; iter <= rule.max_iters; ++iter) {
        const std::size_t slot = (iter - 1) % model.slot_count();
        const double elbo = model.update_slot(slot);
        if (model.last_update_kept_stats()) ++trace.empty_events;
        double delta = elbo - prev;
        if (delta < -kElboSlack)
            throw std::logic_error("run: ELBO decreased by " + std::to_string(-delta) +
                                   " at iteration " + std::to_string(iter));
        if (delta < 0.0) delta = 0.0;  // rounding noise within the slack
        trace.points.push_back({iter, elbo, delta});
        prev = elbo;
        sweep_peak = std::max(sweep_peak, delta);
        // Convergence is declared at sweep boundaries, when no marginal
        // update in the last full pass gained more than epsilon.
        if (slot + 1 == model.slot_count()) {
            if (std::isfinite(sweep_peak) && sweep_peak <= rule.epsilon) {
                trace.converged = true;
                return trace;
            }
            sweep_peak = 0.0;
        }
    }
    trace.truncated = true;
    return trace;
}

bool elbo_gap_bound_check(const Trace& trace, double exact_log_evidence) {
    for (const TracePoint& p : trace.points)
        if (p.elbo > exact_log_evidence + kElboSlack) return false;
    return true;
}

}  // namespace cvb

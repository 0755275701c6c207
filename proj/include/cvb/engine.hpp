#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace cvb {

// A model exposing conditionally-variational marginal updates. The engine
// sweeps slots round-robin; each update must change only the designated
// marginal factor and return the exact ELBO (log normalizer, modulo the
// model's fixed additive constant) of the refreshed joint approximation.
class ConditionalModel {
public:
    virtual ~ConditionalModel() = default;

    virtual std::size_t slot_count() const = 0;
    virtual double update_slot(std::size_t slot) = 0;

    // ELBO of the initial state, when well defined; -infinity otherwise
    // (then the first iteration can never satisfy the stopping rule).
    virtual double initial_elbo() const {
        return -std::numeric_limits<double>::infinity();
    }

    // Whether the last update hit an empty cluster/transition and applied
    // a keep-previous convention.
    virtual bool last_update_kept_stats() const { return false; }
};

struct StoppingRule {
    double epsilon = 0.01;       // absolute, in nats; 0 = exact fixed point
    std::size_t max_iters = 500;
};

// Decreases beyond this are implementation bugs, not rounding noise.
inline constexpr double kElboSlack = 1e-9;

struct TracePoint {
    std::size_t iteration = 0;  // 1-based
    double elbo = 0.0;
    double delta = 0.0;         // elbo - previous elbo
};

struct Trace {
    std::vector<TracePoint> points;
    bool converged = false;
    bool truncated = false;   // max_iters reached before convergence
    std::size_t empty_events = 0;

    std::size_t iterations() const { return points.size(); }
    double final_elbo() const { return points.empty() ? 0.0 : points.back().elbo; }
    double final_delta() const { return points.empty() ? 0.0 : points.back().delta; }
};

// Runs one marginal update per iteration. Convergence is declared at the
// end of a sweep (one pass over all slots) when the sweep's total ELBO
// gain lies in [0, epsilon]; otherwise the loop truncates at max_iters.
// Throws std::logic_error if any single update decreases the ELBO by more
// than kElboSlack.
Trace run(ConditionalModel& model, const StoppingRule& rule);

// True iff every ELBO in the trace is <= exact_log_evidence + kElboSlack.
bool elbo_gap_bound_check(const Trace& trace, double exact_log_evidence);

}  // namespace cvb

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "cvb/divergence.hpp"
#include "cvb/engine.hpp"

namespace cvb {

// Zero-mean correlated bivariate Gaussian target.
struct BivarTrueModel {
    double sigma1 = 1.0;
    double sigma2 = 1.0;
    double rho = 0.0;

    // Conditional slope/scale of theta_2 given theta_1 (and the reverse);
    // always derived, never stored.
    double beta_2g1() const { return rho * sigma2 / sigma1; }
    double sigma_2g1() const { return sigma2 * std::sqrt(1.0 - rho * rho); }
    double beta_1g2() const { return rho * sigma1 / sigma2; }
    double sigma_1g2() const { return sigma1 * std::sqrt(1.0 - rho * rho); }

    BivariateGaussian as_gaussian() const { return {0.0, 0.0, sigma1, sigma2, rho}; }
};

// Approximation state: a zero-mean bivariate Gaussian with marginal scales
// and correlation; parity tracks which marginal the next CVA step frees.
struct CvbBivarState {
    double sigma1_t = 1.0;
    double sigma2_t = 1.0;
    double rho_t = 0.0;

    double beta_2g1() const { return rho_t * sigma2_t / sigma1_t; }
    double sigma_2g1() const { return sigma2_t * std::sqrt(1.0 - rho_t * rho_t); }
    double beta_1g2() const { return rho_t * sigma1_t / sigma2_t; }
    double sigma_1g2() const { return sigma1_t * std::sqrt(1.0 - rho_t * rho_t); }

    BivariateGaussian as_gaussian() const {
        return {0.0, 0.0, sigma1_t, sigma2_t, rho_t};
    }
};

struct CvaStepResult {
    double sigma_new = 0.0;
    double zeta = 0.0;  // step normalizer; KL at this step = -log(zeta)
};

// CVA update of the theta_1 marginal with the conditional f~(theta_2 |
// theta_1) held fixed. Returns the refreshed scale and the normalizer.
CvaStepResult cva_update_sigma1(const CvbBivarState& state, const BivarTrueModel& model);

// Re-solves (rho_t, sigma2_t) after a sigma1 update so the conditional
// factor f~(theta_2 | theta_1) is unchanged as a function. The sign of
// rho_t is carried from the previous state.
void reverse_update(CvbBivarState& state, double sigma1_old, double sigma1_new);

// Role-swapped variants acting on the theta_2 marginal.
CvaStepResult cva_update_sigma2(const CvbBivarState& state, const BivarTrueModel& model);
void reverse_update_after_sigma2(CvbBivarState& state, double sigma2_old, double sigma2_new);

// ConditionalModel wrapper. A sweep is four single-marginal updates:
// the CVA step on theta_1, the reverse reparameterization of theta_2's
// marginal, then the role-swapped pair. CVA steps report ELBO =
// log(zeta); reverse steps leave the joint (and the ELBO) unchanged.
class BivariateCvbModel : public ConditionalModel {
public:
    BivariateCvbModel(BivarTrueModel model, CvbBivarState init)
        : model_(model), state_(init), last_elbo_(initial_elbo()) {}

    std::size_t slot_count() const override { return 4; }
    double update_slot(std::size_t slot) override;
    double initial_elbo() const override;

    const CvbBivarState& state() const { return state_; }

private:
    BivarTrueModel model_;
    CvbBivarState state_;
    double last_elbo_;
    double pending_sigma_old_ = 0.0;
    double pending_sigma_new_ = 0.0;
};

struct BivariateRunResult {
    Trace trace;
    CvbBivarState final_state;
    double kl_init = 0.0;
    double kl_final = 0.0;
};

BivariateRunResult run_bivariate(const BivarTrueModel& model, const CvbBivarState& init,
                                 const StoppingRule& rule);

// One CSV row of the rho-grid sweep.
struct BivariateSweepRow {
    double rho_init = 0.0;
    double kl_init = 0.0;
    double kl_final = 0.0;
    std::size_t iters = 0;
    bool converged = false;
};

// Runs the model from (sigma1_t=sigma2_t=1, rho_t=rho_init) for every
// rho_init in the grid.
std::vector<BivariateSweepRow> bivariate_grid_sweep(const BivarTrueModel& model,
                                                    const std::vector<double>& rho_grid,
                                                    const StoppingRule& rule);

// 39-point grid (-0.95 .. 0.95, step 0.05).
std::vector<double> default_rho_grid();

}  // namespace cvb

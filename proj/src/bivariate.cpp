#include "cvb/bivariate.hpp"

#include <cmath>
#include <stdexcept>

namespace cvb {

namespace {

double copy_sign_nonzero(double magnitude, double sign_source) {
    return sign_source < 0.0 ? -magnitude : magnitude;
}

}  // namespace

CvaStepResult cva_update_sigma1(const CvbBivarState& state, const BivarTrueModel& model) {
    const double beta_t = state.beta_2g1();
    const double scond_t = state.sigma_2g1();
    const double beta = model.beta_2g1();
    const double scond = model.sigma_2g1();
    const double d = beta_t - beta;
    CvaStepResult r;
    r.sigma_new = 1.0 / std::sqrt(1.0 / (model.sigma1 * model.sigma1) +
                                  d * d / (scond * scond));
    r.zeta = (r.sigma_new / model.sigma1) * (scond_t / scond) *
             std::exp((scond * scond - scond_t * scond_t) / (2.0 * scond * scond));
    return r;
}

void reverse_update(CvbBivarState& state, double sigma1_old, double sigma1_new) {
    const double r0sq = state.rho_t * state.rho_t;
    const double shrink = sigma1_old / sigma1_new;
    const double grow = sigma1_new / sigma1_old;
    const double rho_sq = r0sq / (r0sq + shrink * shrink * (1.0 - r0sq));
    state.sigma2_t = state.sigma2_t * std::sqrt(r0sq * grow * grow + (1.0 - r0sq));
    state.rho_t = copy_sign_nonzero(std::sqrt(rho_sq), state.rho_t);
    state.sigma1_t = sigma1_new;
}

CvaStepResult cva_update_sigma2(const CvbBivarState& state, const BivarTrueModel& model) {
    const double beta_t = state.beta_1g2();
    const double scond_t = state.sigma_1g2();
    const double beta = model.beta_1g2();
    const double scond = model.sigma_1g2();
    const double d = beta_t - beta;
    CvaStepResult r;
    r.sigma_new = 1.0 / std::sqrt(1.0 / (model.sigma2 * model.sigma2) +
                                  d * d / (scond * scond));
    r.zeta = (r.sigma_new / model.sigma2) * (scond_t / scond) *
             std::exp((scond * scond - scond_t * scond_t) / (2.0 * scond * scond));
    return r;
}

void reverse_update_after_sigma2(CvbBivarState& state, double sigma2_old, double sigma2_new) {
    const double r0sq = state.rho_t * state.rho_t;
    const double shrink = sigma2_old / sigma2_new;
    const double grow = sigma2_new / sigma2_old;
    const double rho_sq = r0sq / (r0sq + shrink * shrink * (1.0 - r0sq));
    state.sigma1_t = state.sigma1_t * std::sqrt(r0sq * grow * grow + (1.0 - r0sq));
    state.rho_t = copy_sign_nonzero(std::sqrt(rho_sq), state.rho_t);
    state.sigma2_t = sigma2_new;
}

double BivariateCvbModel::update_slot(std::size_t slot) {
    switch (slot) {
        case 0: {  // CVA on theta_1's marginal
            pending_sigma_old_ = state_.sigma1_t;
            const CvaStepResult r = cva_update_sigma1(state_, model_);
            pending_sigma_new_ = r.sigma_new;
            state_.sigma1_t = r.sigma_new;
            last_elbo_ = std::log(r.zeta);
            return last_elbo_;
        }
        case 1: {  // reverse: theta_2's marginal reparameterized
            reverse_update(state_, pending_sigma_old_, pending_sigma_new_);
            return last_elbo_;
        }
        case 2: {  // CVA on theta_2's marginal
            pending_sigma_old_ = state_.sigma2_t;
            const CvaStepResult r = cva_update_sigma2(state_, model_);
            pending_sigma_new_ = r.sigma_new;
            state_.sigma2_t = r.sigma_new;
            last_elbo_ = std::log(r.zeta);
            return last_elbo_;
        }
        default: {  // reverse: theta_1's marginal reparameterized
            reverse_update_after_sigma2(state_, pending_sigma_old_, pending_sigma_new_);
            return last_elbo_;
        }
    }
}

double BivariateCvbModel::initial_elbo() const {
    return -kl_gauss(state_.as_gaussian(), model_.as_gaussian());
}

BivariateRunResult run_bivariate(const BivarTrueModel& model, const CvbBivarState& init,
                                 const StoppingRule& rule) {
    if (!(std::abs(init.rho_t) < 1.0) || init.sigma1_t <= 0.0 || init.sigma2_t <= 0.0)
        throw std::invalid_argument("run_bivariate: invalid initial state");
    BivariateCvbModel m(model, init);
    BivariateRunResult out;
    out.kl_init = -m.initial_elbo();
    out.trace = run(m, rule);
    out.final_state = m.state();
    out.kl_final = -out.trace.final_elbo();
    return out;
}

std::vector<double> default_rho_grid() {
    std::vector<double> grid;
    for (int i = -19; i <= 19; ++i) grid.push_back(i * 0.05);
    return grid;
}

std::vector<BivariateSweepRow> bivariate_grid_sweep(const BivarTrueModel& model,
                                                    const std::vector<double>& rho_grid,
                                                    const StoppingRule& rule) {
    std::vector<BivariateSweepRow> rows;
    rows.reserve(rho_grid.size());
    for (double rho0 : rho_grid) {
        const BivariateRunResult res =
            run_bivariate(model, CvbBivarState{1.0, 1.0, rho0}, rule);
        rows.push_back({rho0, res.kl_init, res.kl_final, res.trace.iterations(),
                        res.trace.converged});
    }
    return rows;
}

}  // namespace cvb

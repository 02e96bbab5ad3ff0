#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "uasflow/grid.hpp"
#include "uasflow/pgf.hpp"
#include "uasflow/solver.hpp"

namespace uasflow {

struct ZoneInputs {
    Pgf A;    // nodal arrivals
    Pgf A_I;  // inward non-nodal arrivals
    Pgf A_O;  // outward non-nodal arrivals (descents into Z_UP)
    Pgf B;    // descend distribution of the inward neighbor
    Pgf E0;   // exogenous arrivals
    int L = 5;
    int S = 11;
    int M = 2;
    double eta = 0.5;
    int exo_service = 0;  // slots an exogenous UAS spends in Z_UP: S in-plane, 1 out-of-plane, 0 none

    // No-fly handling (Rule 7).
    bool up_no_fly = false;        // Z_UP no-fly: always congested
    bool outward_closed = false;   // Z_ON no-fly or missing: never congested
    bool descend_blocked = false;  // Z_IN or Z_ID no-fly: nodal arrivals never descend
};

struct ZoneModelOutputs {
    double theta0 = 0.0;
    double theta0_star = 0.0;
    double theta00 = 0.0;
    double theta10 = 0.0;
    double w1_0 = 1.0;
    double w1_0_star = 1.0;
    double pi = 0.0;
    double pi_e = 0.0;
    double sigma = 1.0;
    double phi = 0.0;
    double omega = 0.0;
    double c0 = 1.0;
    double rho = 0.0;
    double mean_in_service = 0.0;  // U'(1), managed plus exogenous
    double mean_managed_in_service = 0.0;
    double mean_in_queue = 0.0;
    Pgf departures;
    FixedPointResult solve;
    std::string override_rule;  // empty, "up-no-fly", "outward-closed" or "zone-no-fly"
};

// Stream{0} LCFS queue with deadline L.
std::vector<Pgf> stream0_queue_recursion(const Pgf& A, double theta0, int L);

// (sigma, pi)
std::pair<double, double> availability0(const Pgf& A, const Pgf& A_O, const Pgf& V_L);

// P[u >= M] for U(z) = W1(z)^(S-1) E0(z)^exo_service.
double forward_congestion(double w1_0, double e0_0, int S, int M, int exo_service);
inline double forward_congestion(double w1_0, double e0_0, int S, int M) {
    return forward_congestion(w1_0, e0_0, S, M, S);
}

double feedback0(double theta0, double pi);
double feedbackX(double omega, double theta0, double pi);

struct MmrpResult {
    double theta00 = 0.0;
    double theta10 = 0.0;
    double theta0_star = 0.0;
    double theta1_star = 1.0;
};
MmrpResult mmrp_modulate(double theta0, double pi_e, int S, int M);
double mmbp_modulate(const MmrpResult& m, double pi);

double correction_factor(double x, int M, double eta, int S);

struct Overflow0 {
    double phi = 0.0;
    Pgf A_I_left;   // toward stream -1
    Pgf A_I_right;  // toward stream +1
};
Overflow0 overflow0(const Pgf& A, const std::vector<Pgf>& V, double theta0_star, double w1_0_star,
                    double eta, int M, int S);

struct ConflictEstimate {
    Pgf C;
    double omega = 0.0;
};
ConflictEstimate conflict_arrival_estimate(const Pgf& A, const Pgf& A_I, double theta0, int L, int M,
                                           int S, double eta);

std::vector<Pgf> streamX_beta_recursion(const Pgf& A_I, double theta0, double omega, int L);

std::vector<double> gamma_branch_weights(double omega, double b0, double rho);
std::vector<Pgf> streamX_gamma_recursion(const Pgf& A, const Pgf& C, const Pgf& B, double theta0,
                                         double omega, double rho, int L);

std::pair<double, double> availabilityX(const Pgf& A, const Pgf& A_I, const Pgf& A_O, const Pgf& C,
                                        const Pgf& B, const Pgf& betaV_Lm1, const Pgf& gammaV_L);

struct OverflowX {
    double gamma_phi = 0.0;
    Pgf A_I_out;
};
OverflowX overflowX(const Pgf& A, const Pgf& A_I, const Pgf& B, const std::vector<Pgf>& gammaV,
                    double theta0_star, double w1_0_star, const Pgf& C, double eta, int M, int S);

Pgf departures(double w1_0_star);

// (mean_in_service, mean_in_queue)
std::pair<double, double> expected_counts(const Pgf& U, const std::vector<Pgf>& queue_pgfs);

ZoneModelOutputs solve_stream0(const ZoneInputs& in, const FixedPointOptions& opt = {});
ZoneModelOutputs solve_streamX(const ZoneInputs& in, const FixedPointOptions& opt = {});

enum class ExoMode { InPlane, OutOfPlane };

struct AnalyticScenario {
    const Grid* grid = nullptr;
    double lambda = 0.2;
    double lambda_e = 0.0;
    int exo_level = 0;  // level of the zones crossed by the exogenous stream; 0 = none
    ExoMode exo_mode = ExoMode::InPlane;
    std::vector<int> m_by_level;  // M judged at Z_UP level l is m_by_level[l-1]; empty = grid M
};

struct LevelSpread {
    int level = 1;
    int x_min = 0;
    int x_max = 0;
};

struct SpreadResult {
    std::vector<LevelSpread> spread;
    std::map<ZoneId, ZoneModelOutputs> zones;
    bool flagged = false;
};

SpreadResult expected_spread(const AnalyticScenario& sc, const FixedPointOptions& opt = {});

}  // namespace uasflow

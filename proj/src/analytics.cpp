#include "uasflow/analytics.hpp"

#include <algorithm>
#include <cmath>

#include "uasflow/error.hpp"

namespace uasflow {

namespace {

double binom(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// V_j(0) with the convention V_0 = 1 (empty queue).
double at0_or_one(const std::vector<Pgf>& V, int j) {
    if (j <= 0) return 1.0;
    return V[static_cast<std::size_t>(j - 1)].at0();
}

Pgf pow_pgf(const Pgf& p, int n) {
    Pgf r;
    for (int i = 0; i < n; ++i) r = r * p;
    return r;
}

// PGF of (q - 1)^+: what is left of a batch q after one service. [1] for Bernoulli q.
Pgf served(const Pgf& q) { return Pgf{q.at0()} + pgf_shift_div(q); }

// Shared LCFS step: busy share f queues every arrival, the rest serves the youngest.
std::vector<Pgf> lcfs_recursion(const Pgf& A, double busy, int deadline) {
    std::vector<Pgf> V;
    if (deadline <= 0) return V;
    busy = clamp01(busy);
    const Pgf left = served(A);
    V.push_back((A * busy + left * (1.0 - busy)).normalized());
    for (int j = 1; j < deadline; ++j) {
        const Pgf& v = V.back();
        Pgf next = (A * v) * busy + (left * v.at0() + pgf_shift_div(v) * A) * (1.0 - busy);
        V.push_back(next.normalized());
    }
    return V;
}

// Allocation-free twins of the recursions above, used inside the fixed-point scan.
constexpr int kFastCap = 96;

struct Buf {
    double c[kFastCap];
    int n = 1;  // number of coefficients
};

bool fits(const Pgf& p, int steps) { return static_cast<int>(p.coeffs().size()) * (steps + 1) < kFastCap; }

void set_normalized(Buf& b) {
    double s = 0.0;
    for (int i = 0; i < b.n; ++i) {
        if (b.c[i] < 0.0) b.c[i] = 0.0;
        s += b.c[i];
    }
    if (s <= 0.0) {
        b.n = 1;
        b.c[0] = 1.0;
        return;
    }
    for (int i = 0; i < b.n; ++i) b.c[i] /= s;
}

// out = sum_k w_k * (v * P_k) + sum_k u_k * (v(0) * served(Q_k) + shift(v) * Q_k)
using Terms = std::initializer_list<std::pair<double, const Pgf*>>;

void mix_step(const Buf& v, Terms keep, Terms serve, Buf& out) {
    int n = 1;
    for (const auto& [w, p] : keep) n = std::max(n, v.n + static_cast<int>(p->coeffs().size()) - 1);
    for (const auto& [w, p] : serve) n = std::max(n, v.n - 1 + static_cast<int>(p->coeffs().size()) - 1);
    out.n = std::max(n, 1);
    std::fill(out.c, out.c + out.n, 0.0);
    for (const auto& [w, p] : keep) {
        if (w == 0.0) continue;
        const auto& q = p->coeffs();
        for (int i = 0; i < v.n; ++i)
            for (std::size_t j = 0; j < q.size(); ++j) out.c[i + static_cast<int>(j)] += w * v.c[i] * q[j];
    }
    for (const auto& [w, p] : serve) {
        if (w == 0.0) continue;
        const auto& q = p->coeffs();
        out.c[0] += w * v.c[0] * q[0];
        for (std::size_t j = 1; j < q.size(); ++j) out.c[j - 1] += w * v.c[0] * q[j];
        for (int i = 1; i < v.n; ++i)
            for (std::size_t j = 0; j < q.size(); ++j) out.c[i - 1 + static_cast<int>(j)] += w * v.c[i] * q[j];
    }
    set_normalized(out);
}

// (V_{deadline-1}(0), V_deadline(0)) of lcfs_recursion.
std::pair<double, double> lcfs_tail0(const Pgf& A, double busy, int deadline) {
    if (deadline <= 0) return {1.0, 1.0};
    busy = clamp01(busy);
    Buf a, b;
    const auto& ac = A.coeffs();
    a.n = static_cast<int>(ac.size());
    for (int i = 0; i < a.n; ++i) a.c[i] = busy * ac[static_cast<std::size_t>(i)];
    for (int i = 0; i < a.n; ++i) a.c[i > 0 ? i - 1 : 0] += (1.0 - busy) * ac[static_cast<std::size_t>(i)];
    set_normalized(a);
    double prev = 1.0;
    Buf* v = &a;
    Buf* w = &b;
    for (int j = 1; j < deadline; ++j) {
        prev = v->c[0];
        mix_step(*v, {{busy, &A}}, {{1.0 - busy, &A}}, *w);
        std::swap(v, w);
    }
    return {prev, v->c[0]};
}

double gamma_last0(const Pgf& A, const Pgf& C, const Pgf& AC, const std::vector<double>& w, int L) {
    const Pgf one = Pgf::unit();
    Buf a, b;
    Pgf first = (Pgf{w[0]} + A * w[1] + C * w[2] + AC * w[3] + served(C) * w[4] + served(AC) * w[5]).normalized();
    const auto& fc = first.coeffs();
    a.n = static_cast<int>(fc.size());
    for (int i = 0; i < a.n; ++i) a.c[i] = fc[static_cast<std::size_t>(i)];
    Buf* v = &a;
    Buf* x = &b;
    for (int j = 1; j < L; ++j) {
        mix_step(*v, {{w[0], &one}, {w[1], &A}, {w[2], &C}, {w[3], &AC}}, {{w[4], &C}, {w[5], &AC}}, *x);
        std::swap(v, x);
    }
    return v->c[0];
}

double queue_overflow_prob(double v_prev0, double v_last0) {
    if (v_prev0 <= 0.0) return 0.0;
    return clamp01((v_prev0 - v_last0) / v_prev0);
}

}  // namespace

std::vector<Pgf> stream0_queue_recursion(const Pgf& A, double theta0, int L) {
    return lcfs_recursion(A, theta0, L);
}

std::pair<double, double> availability0(const Pgf& A, const Pgf& A_O, const Pgf& V_L) {
    double sigma = clamp01(A.at0() * V_L.at0());
    double pi = clamp01((1.0 - sigma) + sigma * (1.0 - A_O.at0()));
    return {sigma, pi};
}

double forward_congestion(double w1_0, double e0_0, int S, int M, int exo_service) {
    // Full expansion of U(z); without exogenous traffic it equals the three-term form.
    // Only P[u < M] is needed, so the convolution is truncated at M terms.
    std::vector<double> u(static_cast<std::size_t>(std::max(M, 1)), 0.0);
    u[0] = 1.0;
    auto fold = [&](double p, int times) {
        for (int t = 0; t < times; ++t)
            for (std::size_t n = u.size(); n-- > 0;) u[n] = u[n] * (1.0 - p) + (n ? u[n - 1] * p : 0.0);
    };
    fold(clamp01(1.0 - w1_0), S - 1);
    fold(clamp01(1.0 - e0_0), exo_service);
    double below = 0.0;
    for (int n = 0; n < M; ++n) below += u[static_cast<std::size_t>(n)];
    return clamp01(1.0 - below);
}

double feedback0(double theta0, double pi) { return clamp01(1.0 - (1.0 - theta0) * pi); }

double feedbackX(double omega, double theta0, double pi) {
    return clamp01(1.0 - (omega + (1.0 - omega) * (1.0 - theta0) * pi));
}

MmrpResult mmrp_modulate(double theta0, double pi_e, int S, int M) {
    MmrpResult r;
    r.theta00 = clamp01(static_cast<double>(S - M - 1) / static_cast<double>(S - 1));
    // Common factor (1-p)^(S-M) cancelled so that p = 1 stays finite.
    double p = clamp01(pi_e), q = 1.0 - p;
    double den = 0.0;
    for (int n = 0; n <= M - 1; ++n) den += binom(S - 1, n) * std::pow(p, n) * std::pow(q, M - 1 - n);
    r.theta10 = den > 0.0 ? clamp01(binom(S - 2, M - 1) * std::pow(p, M) / den) : 0.0;
    r.theta0_star = clamp01(r.theta00 * theta0 + r.theta10 * (1.0 - theta0));
    r.theta1_star = clamp01((1.0 - r.theta00) * theta0 + (1.0 - r.theta10) * (1.0 - theta0));
    return r;
}

double mmbp_modulate(const MmrpResult& m, double pi) {
    double theta01 = 1.0 - m.theta00, theta11 = 1.0 - m.theta10;
    return clamp01(1.0 - (theta11 * m.theta1_star + theta01 * m.theta0_star) * pi);
}

double correction_factor(double x, int M, double eta, int S) {
    double zeta = eta <= 0.5 ? 2.0 * eta : 2.0 * (1.0 - eta);
    double denom = M - 1 + zeta;
    if (denom <= 0.0) return 0.0;
    double r = x / denom;
    return 0.15 * r * std::exp(-S * r * r * r);
}

Overflow0 overflow0(const Pgf& A, const std::vector<Pgf>& V, double theta0_star, double w1_0_star,
                    double eta, int M, int S) {
    int L = static_cast<int>(V.size());
    double a0 = A.at0();
    double v_prev = at0_or_one(V, L - 1), v_last = at0_or_one(V, L);
    double pq = queue_overflow_prob(v_prev, v_last);
    double phi = (1.0 - theta0_star) * (1.0 - a0 * v_prev) * pq +
                 theta0_star * (1.0 - a0) * (1.0 - v_last) * w1_0_star +
                 correction_factor(1.0 - a0, M, eta, S);
    Overflow0 out;
    out.phi = clamp01(phi);
    // Rule 8 sends a UAS right with probability eta.
    out.A_I_right = Pgf::bernoulli(eta * out.phi);
    out.A_I_left = Pgf::bernoulli((1.0 - eta) * out.phi);
    return out;
}

namespace {

// Overflow probability of the inward arrivals' Stream{0}-shaped surrogate.
double conflict_overflow(double ai0, double b_prev, double b_last, double theta0, int M, int S, double eta) {
    double pq = queue_overflow_prob(b_prev, b_last);
    double sigma = ai0 * b_last;
    double w1 = feedback0(theta0, 1.0 - sigma);
    return clamp01((1.0 - theta0) * (1.0 - ai0 * b_prev) * pq + theta0 * (1.0 - ai0) * (1.0 - b_last) * w1 +
                   correction_factor(1.0 - ai0, M, eta, S));
}

}  // namespace

ConflictEstimate conflict_arrival_estimate(const Pgf& A, const Pgf& A_I, double theta0, int L, int M,
                                           int S, double eta) {
    // Inward arrivals treated as a Stream{0}-shaped system with no conflicts and deadline L-1.
    auto bV = lcfs_recursion(A_I, theta0, L - 1);
    double pc = conflict_overflow(A_I.at0(), at0_or_one(bV, L - 2), at0_or_one(bV, L - 1), theta0, M, S, eta);
    ConflictEstimate out;
    out.C = Pgf::bernoulli(pc);
    out.omega = clamp01((1.0 - out.C.at0()) * (1.0 - A.at0()));
    return out;
}

std::vector<Pgf> streamX_beta_recursion(const Pgf& A_I, double theta0, double omega, int L) {
    return lcfs_recursion(A_I, theta0 + omega - theta0 * omega, L - 1);
}

std::vector<double> gamma_branch_weights(double omega, double b0, double rho) {
    return {omega * (1.0 - b0),
            omega * b0,
            rho * (1.0 - b0) * (1.0 - omega),
            rho * b0 * (1.0 - omega),
            (1.0 - rho) * (1.0 - b0) * (1.0 - omega),
            (1.0 - rho) * b0 * (1.0 - omega)};
}

std::vector<Pgf> streamX_gamma_recursion(const Pgf& A, const Pgf& C, const Pgf& B, double theta0,
                                         double omega, double rho, int L) {
    (void)theta0;  // enters through rho
    auto w = gamma_branch_weights(clamp01(omega), B.at0(), clamp01(rho));
    double total = 0.0;
    for (double x : w) total += x;
    if (std::fabs(total - 1.0) > 1e-12) throw Error("branch-weights-not-normalized", std::to_string(total));

    const Pgf AC = A * C;
    std::vector<Pgf> G;
    if (L <= 0) return G;
    // Idle branches keep (v + arrivals - 1)^+ exact at v = 0 when both a and c arrive.
    const Pgf left_c = served(C), left_ac = served(AC);
    G.push_back((Pgf{w[0]} + A * w[1] + C * w[2] + AC * w[3] + left_c * w[4] + left_ac * w[5]).normalized());
    for (int j = 1; j < L; ++j) {
        const Pgf& v = G.back();
        Pgf s = pgf_shift_div(v);
        const double v0 = v.at0();
        Pgf next = v * w[0] + (A * v) * w[1] + (v * C) * w[2] + (v * AC) * w[3] + (left_c * v0 + s * C) * w[4] +
                   (left_ac * v0 + s * AC) * w[5];
        G.push_back(next.normalized());
    }
    return G;
}

std::pair<double, double> availabilityX(const Pgf& A, const Pgf& A_I, const Pgf& A_O, const Pgf& C,
                                        const Pgf& B, const Pgf& betaV_Lm1, const Pgf& gammaV_L) {
    double sigma = A_I.at0() * betaV_Lm1.at0() * C.at0() * (1.0 - B.at0() * (1.0 - A.at0())) * gammaV_L.at0();
    sigma = clamp01(sigma);
    double pi = clamp01((1.0 - sigma) + sigma * (1.0 - A_O.at0()));
    return {sigma, pi};
}

OverflowX overflowX(const Pgf& A, const Pgf& A_I, const Pgf& B, const std::vector<Pgf>& gammaV,
                    double theta0_star, double w1_0_star, const Pgf& C, double eta, int M, int S) {
    int L = static_cast<int>(gammaV.size());
    double g_prev = at0_or_one(gammaV, L - 1), g_last = at0_or_one(gammaV, L);
    double pq = queue_overflow_prob(g_prev, g_last);
    double phi = (1.0 - theta0_star) * (1.0 - w1_0_star) * pq +
                 theta0_star * (1.0 - A_I.at0() + (1.0 - A.at0()) * B.at0()) * (1.0 - g_last) * w1_0_star +
                 correction_factor(1.0 - C.at0(), M, eta, S);
    OverflowX out;
    out.gamma_phi = clamp01(phi);
    out.A_I_out = Pgf::bernoulli(out.gamma_phi);
    return out;
}

Pgf departures(double w1_0_star) { return Pgf::bernoulli(1.0 - clamp01(w1_0_star)); }

std::pair<double, double> expected_counts(const Pgf& U, const std::vector<Pgf>& queue_pgfs) {
    double q = 0.0;
    for (const auto& p : queue_pgfs) q += p.mean();
    return {U.mean(), q};
}

namespace {

Pgf service_pgf(const ZoneInputs& in, double w1s) {
    return pow_pgf(Pgf::bernoulli(1.0 - w1s), in.S - 1) * pow_pgf(in.E0, in.exo_service);
}

void finish_means(const ZoneInputs& in, ZoneModelOutputs& out, const std::vector<Pgf>& queues) {
    auto [ms, mq] = expected_counts(service_pgf(in, out.w1_0_star), queues);
    out.mean_in_service = ms;
    out.mean_managed_in_service = (in.S - 1) * (1.0 - out.w1_0_star);
    out.mean_in_queue = mq;
    out.departures = departures(out.w1_0_star);
}

}  // namespace

ZoneModelOutputs solve_stream0(const ZoneInputs& in, const FixedPointOptions& opt) {
    const double e0 = in.E0.at0(), lambda_e = 1.0 - e0;
    auto parts = [&](double th) {
        auto V = stream0_queue_recursion(in.A, th, in.L);
        auto [sigma, pi] = availability0(in.A, in.A_O, V.back());
        return std::make_tuple(V, sigma, pi);
    };
    const bool fast = fits(in.A, in.L);
    auto h = [&](double th) {
        double pi = 0.0;
        if (fast) {
            double sigma = clamp01(in.A.at0() * lcfs_tail0(in.A, th, in.L).second);
            pi = clamp01((1.0 - sigma) + sigma * (1.0 - in.A_O.at0()));
        } else {
            pi = std::get<2>(parts(th));
        }
        return forward_congestion(feedback0(th, pi), e0, in.S, in.M, in.exo_service);
    };

    ZoneModelOutputs out;
    if (in.up_no_fly || in.outward_closed) {
        double th = in.up_no_fly ? 1.0 : 0.0;
        auto [V, sigma, pi] = parts(th);
        out.override_rule = in.up_no_fly ? "up-no-fly" : "outward-closed";
        out.theta0 = out.theta0_star = th;
        out.sigma = sigma;
        out.pi = pi;
        out.pi_e = clamp01(pi + lambda_e - pi * lambda_e);
        out.w1_0 = out.w1_0_star = in.up_no_fly ? 1.0 : feedback0(0.0, pi);
        out.phi = in.up_no_fly ? clamp01(1.0 - in.A.at0()) : 0.0;
        finish_means(in, out, {V.back()});
        return out;
    }

    out.solve = solve_fixed_point(h, opt);
    double th = out.solve.root;
    auto [V, sigma, pi] = parts(th);
    out.theta0 = th;
    out.sigma = sigma;
    out.pi = pi;
    out.w1_0 = feedback0(th, pi);
    out.pi_e = clamp01(pi + lambda_e - pi * lambda_e);
    auto m = mmrp_modulate(th, out.pi_e, in.S, in.M);
    out.theta00 = m.theta00;
    out.theta10 = m.theta10;
    out.theta0_star = m.theta0_star;
    out.w1_0_star = mmbp_modulate(m, pi);
    out.phi = overflow0(in.A, V, out.theta0_star, out.w1_0_star, in.eta, in.M, in.S).phi;
    auto Vs = stream0_queue_recursion(in.A, out.theta0_star, in.L);
    finish_means(in, out, {Vs.back()});
    return out;
}

namespace {

struct XParts {
    ConflictEstimate ce;
    std::vector<Pgf> beta;
    std::vector<Pgf> gamma;
    double rho = 0.0;
    double sigma = 0.0;
    double pi = 0.0;
};

XParts streamX_parts(const ZoneInputs& in, const Pgf& B, double th) {
    XParts p;
    p.ce = conflict_arrival_estimate(in.A, in.A_I, th, in.L, in.M, in.S, in.eta);
    p.beta = streamX_beta_recursion(in.A_I, th, p.ce.omega, in.L);
    double b_last = at0_or_one(p.beta, in.L - 1);
    p.rho = clamp01(1.0 - (1.0 - th) * in.A_I.at0() * b_last);
    p.gamma = streamX_gamma_recursion(in.A, p.ce.C, B, th, p.ce.omega, p.rho, in.L);
    Pgf beta_last = p.beta.empty() ? Pgf::unit() : p.beta.back();
    std::tie(p.sigma, p.pi) = availabilityX(in.A, in.A_I, in.A_O, p.ce.C, B, beta_last, p.gamma.back());
    return p;
}

std::vector<Pgf> x_queues(const XParts& p) {
    std::vector<Pgf> q;
    if (!p.beta.empty()) q.push_back(p.beta.back());
    q.push_back(p.gamma.back());
    return q;
}

}  // namespace

ZoneModelOutputs solve_streamX(const ZoneInputs& in, const FixedPointOptions& opt) {
    const double e0 = in.E0.at0(), lambda_e = 1.0 - e0;
    const Pgf B = in.descend_blocked ? Pgf::unit() : in.B;
    const bool fast = fits(in.A_I, in.L) && fits(in.A * Pgf::bernoulli(0.5), 2 * in.L);
    auto h = [&](double th) {
        if (!fast) {
            auto p = streamX_parts(in, B, th);
            return forward_congestion(feedbackX(p.ce.omega, th, p.pi), e0, in.S, in.M, in.exo_service);
        }
        const double ai0 = in.A_I.at0(), a0 = in.A.at0(), b0 = B.at0();
        auto [cp, cl] = lcfs_tail0(in.A_I, th, in.L - 1);
        double pc = conflict_overflow(ai0, cp, cl, th, in.M, in.S, in.eta);
        Pgf C = Pgf::bernoulli(pc);
        double omega = clamp01((1.0 - C.at0()) * (1.0 - a0));
        double b_last = lcfs_tail0(in.A_I, th + omega - th * omega, in.L - 1).second;
        double rho = clamp01(1.0 - (1.0 - th) * ai0 * b_last);
        auto w = gamma_branch_weights(omega, b0, rho);
        double g_last = in.L > 0 ? gamma_last0(in.A, C, in.A * C, w, in.L) : 1.0;
        double sigma = clamp01(ai0 * b_last * C.at0() * (1.0 - b0 * (1.0 - a0)) * g_last);
        double pi = clamp01((1.0 - sigma) + sigma * (1.0 - in.A_O.at0()));
        return forward_congestion(feedbackX(omega, th, pi), e0, in.S, in.M, in.exo_service);
    };

    ZoneModelOutputs out;
    auto fill = [&](const XParts& p, double th) {
        out.theta0 = th;
        out.sigma = p.sigma;
        out.pi = p.pi;
        out.omega = p.ce.omega;
        out.c0 = p.ce.C.at0();
        out.rho = p.rho;
        out.w1_0 = feedbackX(p.ce.omega, th, p.pi);
        out.pi_e = clamp01(p.pi + lambda_e - p.pi * lambda_e);
    };

    if (in.up_no_fly || in.outward_closed) {
        double th = in.up_no_fly ? 1.0 : 0.0;
        auto p = streamX_parts(in, B, th);
        fill(p, th);
        out.override_rule = in.up_no_fly ? "up-no-fly" : "outward-closed";
        out.theta0_star = th;
        out.w1_0_star = in.up_no_fly ? 1.0 : out.w1_0;
        out.phi = in.up_no_fly ? clamp01(1.0 - in.A_I.at0() + (1.0 - in.A.at0()) * B.at0()) : 0.0;
        finish_means(in, out, x_queues(p));
        return out;
    }

    out.solve = solve_fixed_point(h, opt);
    double th = out.solve.root;
    auto p = streamX_parts(in, B, th);
    fill(p, th);
    auto m = mmrp_modulate(th, out.pi_e, in.S, in.M);
    out.theta00 = m.theta00;
    out.theta10 = m.theta10;
    out.theta0_star = m.theta0_star;
    out.w1_0_star = mmbp_modulate(m, p.pi);
    out.phi = overflowX(in.A, in.A_I, B, p.gamma, out.theta0_star, out.w1_0_star, p.ce.C, in.eta, in.M, in.S)
                  .gamma_phi;
    auto ps = streamX_parts(in, B, out.theta0_star);
    finish_means(in, out, x_queues(ps));
    return out;
}

SpreadResult expected_spread(const AnalyticScenario& sc, const FixedPointOptions& opt) {
    if (!sc.grid) throw Error("missing-grid", "analytic scenario has no grid");
    const Grid& g = *sc.grid;
    const auto& P = g.params();
    const int Xe = g.X_e(), Ye = g.Y_e(), S = g.S();

    std::map<ZoneId, Pgf> A, AI, AO;
    auto get = [](std::map<ZoneId, Pgf>& m, ZoneId z) -> Pgf& { return m.try_emplace(z, Pgf::unit()).first->second; };
    get(A, {0, 1}) = Pgf::bernoulli(sc.lambda);

    auto m_for = [&](int up_level) {
        if (sc.m_by_level.empty()) return P.M;
        std::size_t i = static_cast<std::size_t>(std::clamp(up_level, 1, static_cast<int>(sc.m_by_level.size())) - 1);
        return sc.m_by_level[i];
    };

    SpreadResult res;
    for (int Y = 1; Y <= Ye; ++Y) {
        std::map<int, double> sigma_of;
        auto make_inputs = [&](ZoneId z) {
            ZoneInputs in;
            in.A = get(A, z);
            in.A_I = get(AI, z);
            in.A_O = get(AO, z);
            in.L = P.L;
            in.S = S;
            in.M = m_for(Y + 1);
            in.eta = P.eta;
            if (sc.lambda_e > 0.0 && sc.exo_level == Y + 1) {
                in.E0 = Pgf::bernoulli(sc.lambda_e);
                in.exo_service = sc.exo_mode == ExoMode::InPlane ? S : 1;
            }
            in.up_no_fly = g.no_fly({z.stream, Y + 1});
            int o = outward_sign(z);
            if (o == 0) {
                in.outward_closed = g.no_fly({1, Y}) && g.no_fly({-1, Y});
            } else {
                in.outward_closed = g.no_fly({z.stream + o, Y});
                in.descend_blocked = g.no_fly({z.stream - o, Y}) || g.no_fly({z.stream - o, Y + 1});
            }
            return in;
        };
        auto record = [&](ZoneId z, ZoneModelOutputs out) {
            if (out.solve.flagged) res.flagged = true;
            sigma_of[z.stream] = out.sigma;
            get(A, {z.stream, Y + 1}) = out.departures;
            res.zones[z] = std::move(out);
        };
        auto empty_zone = [&]() {
            ZoneModelOutputs out;
            out.override_rule = "zone-no-fly";
            out.sigma = 0.0;
            out.departures = Pgf::unit();
            return out;
        };

        ZoneId z0{0, Y};
        if (g.no_fly(z0)) {
            record(z0, empty_zone());
        } else {
            auto in = make_inputs(z0);
            auto out = solve_stream0(in, opt);
            double right = out.phi * P.eta, left = out.phi * (1.0 - P.eta);
            if (g.no_fly({1, Y})) right = 0.0, left = out.phi;
            if (g.no_fly({-1, Y})) left = 0.0, right = g.no_fly({1, Y}) ? 0.0 : out.phi;
            get(AI, {1, Y}) = Pgf::bernoulli(right);
            get(AI, {-1, Y}) = Pgf::bernoulli(left);
            record(z0, std::move(out));
        }

        for (int sgn : {1, -1}) {
            for (int ax = 1; ax <= Xe; ++ax) {
                ZoneId z{sgn * ax, Y};
                if (g.no_fly(z)) {
                    record(z, empty_zone());
                    continue;
                }
                auto in = make_inputs(z);
                in.B = Pgf::bernoulli(sigma_of[z.stream - sgn]);
                auto out = solve_streamX(in, opt);
                if (ax < Xe) get(AI, {z.stream + sgn, Y}) = Pgf::bernoulli(out.phi);
                record(z, std::move(out));
            }
        }

        // Descents into Z_UP at the next level come from the outward neighbor's nodal arrivals.
        if (Y < Ye) {
            for (int X = -Xe; X <= Xe; ++X) {
                ZoneId up{X, Y + 1};
                if (X == 0) {
                    double none = get(A, {1, Y + 1}).at0() * get(A, {-1, Y + 1}).at0();
                    get(AO, up) = Pgf::bernoulli(1.0 - none);
                } else if (std::abs(X) < Xe) {
                    get(AO, up) = get(A, {X + outward_sign(up), Y + 1});
                }
            }
        }

        LevelSpread ls{Y, 0, 0};
        for (int X = -Xe; X <= Xe; ++X) {
            const auto& out = res.zones[{X, Y}];
            if (out.mean_managed_in_service >= 1.0) {
                ls.x_min = std::min(ls.x_min, X);
                ls.x_max = std::max(ls.x_max, X);
            }
        }
        res.spread.push_back(ls);
    }
    return res;
}

}  // namespace uasflow

#include "sccontrol/retire.hpp"

#include "sccontrol/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/IterativeLinearSolvers>
#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

namespace scc {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

// Controls below this count as "not invested".
constexpr double kZeroHolding = 1e-9;

struct Model {
    double r, mu, sig, gam, B, beta, muI, sigI, dD, sz, alpha, zbar, theta, Kbar;
    bool ez = false;
    double phi = 0.0;   // 1 / psi
    double Kez = 0.0;
};

Model model_of(const ValidRetireParams& vp, bool ez)
{
    const RetireParams& p = vp.get();
    Model m{p.r, p.mu_stock, p.sigma_stock, p.gamma, p.B, p.beta, p.mu_income, p.sigma_income,
            p.jump_intensity, p.sigma_z, p.mean_reversion, p.z_bar, vp.theta(), vp.K_bar()};
    if (ez) {
        if (!p.eis_psi) fail(ErrorCode::InvalidParameter, "recursive utility needs eis_psi");
        if (std::abs(*p.eis_psi - 1.0) < 1e-12)
            fail(ErrorCode::InvalidParameter, "eis_psi = 1 (log aggregator) is not supported");
        m.ez = true;
        m.phi = 1.0 / *p.eis_psi;
        m.Kez = merton_constants(vp).K_ez;
    }
    return m;
}

// Coefficients of the generator acting on v~ = e^((1-gamma)u)/(1-gamma) for
// fixed (y, c), written in terms of the shock loadings of log(w + I/r) (aN),
// log xi (d = aI - aN) and z (aZ). Discounting and the flow are added by the
// caller; c0 already carries -delta_D from the jump.
struct Coef {
    double Dxx, Dxz, Dzz, bx, bz, c0;
};

Coef coefficients(const Model& m, double xi, double z, double y, double c)
{
    const double mI = m.muI - m.alpha * (z - m.zbar);
    const double aN1 = y * m.sig + xi * (m.sig - m.sz), aN2 = xi * m.sigI;
    const double d1 = (1.0 - xi) * (m.sig - m.sz) - y * m.sig, d2 = (1.0 - xi) * m.sigI;
    const double aZ1 = -m.sz, aZ2 = m.sigI;
    const double muN = m.r - c + y * m.sig * m.theta + xi * mI;
    Coef k;
    k.Dxx = xi * xi * (d1 * d1 + d2 * d2);
    k.Dxz = xi * (d1 * aZ1 + d2 * aZ2);
    k.Dzz = aZ1 * aZ1 + aZ2 * aZ2;
    k.bx = xi * (mI - muN - m.gam * (aN1 * d1 + aN2 * d2));
    k.bz = -m.alpha * (z - m.zbar) + (1.0 - m.gam) * (aN1 * aZ1 + aN2 * aZ2);
    k.c0 = (1.0 - m.gam) * muN - 0.5 * m.gam * (1.0 - m.gam) * (aN1 * aN1 + aN2 * aN2) - m.dD;
    return k;
}

struct Derivs {
    double v, vx, vxx, vz, vzz, vxz;
};

double generator(const Coef& k, const Derivs& d)
{
    return 0.5 * k.Dxx * d.vxx + k.Dxz * d.vxz + 0.5 * k.Dzz * d.vzz + k.bx * d.vx + k.bz * d.vz + k.c0 * d.v;
}

// The generator is quadratic in y; maximize it on [0, 1 - xi].
double best_y(const Model& m, double xi, double z, const Derivs& d, bool& degenerate)
{
    degenerate = false;
    const double ymax = 1.0 - xi;
    if (ymax <= 0.0) return 0.0;
    auto g = [&](double y) { return generator(coefficients(m, xi, z, y, 0.0), d); };
    const double g0 = g(0.0), g1 = g(1.0), gm = g(-1.0);
    const double A = 0.5 * (g1 + gm) - g0, Bl = 0.5 * (g1 - gm);
    if (A < 0.0) return std::clamp(-Bl / (2.0 * A), 0.0, ymax);
    degenerate = true;
    return A * ymax * ymax + Bl * ymax > 0.0 ? ymax : 0.0;
}

// Consumption terms in the generator are -c q with q = (1-gamma) v~ - xi v~_xi.
double best_c(const Model& m, double xi, const Derivs& d)
{
    const double v = (1.0 - m.gam) * d.v;
    const double q = std::max(v - xi * d.vx, 1e-12 * v);
    double c;
    if (!m.ez) {
        c = m.Kbar * std::pow(q, -1.0 / m.gam);
    } else {
        const double W = std::pow(v, (m.phi - m.gam) / (1.0 - m.gam));
        c = m.Kez * std::pow(W / q, 1.0 / m.phi);
    }
    if (xi >= 1.0) c = std::min(c, m.r);
    return c;
}

double obstacle_tilde(const Model& m, double xi)
{
    return std::pow(m.B * (1.0 - xi), 1.0 - m.gam) / (1.0 - m.gam);
}

double u_of_tilde(const Model& m, double vt) { return std::log((1.0 - m.gam) * vt) / (1.0 - m.gam); }
double tilde_of_u(const Model& m, double u) { return std::exp((1.0 - m.gam) * u) / (1.0 - m.gam); }

std::vector<double> gauss_legendre_unit(int n, std::vector<double>& w)
{
    // nodes and weights on [0,1]
    const auto zeros = boost::math::legendre_p_zeros<double>(n);
    std::vector<double> x;
    w.clear();
    for (double r : zeros) {
        const double dp = boost::math::legendre_p_prime(n, r);
        const double wt = 2.0 / ((1.0 - r * r) * dp * dp);
        x.push_back(0.5 * (1.0 + r));
        w.push_back(0.5 * wt);
        if (r != 0.0) {
            x.push_back(0.5 * (1.0 - r));
            w.push_back(0.5 * wt);
        }
    }
    return x;
}

struct JumpTarget {
    int il;       // left node of the mapped point
    double wr;    // weight of node il + 1
    double s;     // (1 + (kappa-1) xi)^(1-gamma)
    double weight;
};

// Locates x in a uniform grid on [0,1].
void locate(const std::vector<double>& xi, double x, int& il, double& wr)
{
    const int n = static_cast<int>(xi.size());
    const double h = xi[1] - xi[0];
    il = std::clamp(static_cast<int>(std::floor((x - xi[0]) / h)), 0, n - 2);
    wr = std::clamp((x - xi[il]) / h, 0.0, 1.0);
}

class Solver {
public:
    Solver(const ValidRetireParams& p, const GridSpec& g, bool ez)
        : m_(model_of(p, ez)), jumps_(IncomeJumpSpec::from(p))
    {
        validate_grid(g);
        if (g.x.stretch != Stretch::Uniform || g.y.stretch != Stretch::Uniform)
            fail(ErrorCode::InvalidParameter, "retirement grid must be uniform");
        if (g.x.lo != 0.0 || g.x.hi != 1.0) fail(ErrorCode::InvalidParameter, "xi axis must be [0,1]");
        if (m_.gam > 1.0 && jumps_.mode == IncomeJumpSpec::Mode::Fixed && p->recovery == 0.0 &&
            m_.dD > 0.0)
            fail(ErrorCode::InvalidParameter, "zero recovery with gamma > 1 makes the value at w = 0 infinite");
        xi_ = g.x.nodes();
        z_ = g.y.nodes();
        nx_ = static_cast<int>(xi_.size());
        nz_ = static_cast<int>(z_.size());
        h_ = xi_[1] - xi_[0];
        k_ = z_[1] - z_[0];
        grid_ = g;
        obs_.resize(nx_);
        for (int i = 0; i < nx_; ++i) obs_[i] = obstacle_tilde(m_, xi_[i]);
        implicit_jump_ = jumps_.mode == IncomeJumpSpec::Mode::Fixed;
        targets_.resize(static_cast<std::size_t>(nx_) * jumps_.kappa.size());
        for (int i = 0; i < nx_; ++i)
            for (std::size_t q = 0; q < jumps_.kappa.size(); ++q) {
                const double kap = jumps_.kappa[q];
                const double base = 1.0 + (kap - 1.0) * xi_[i];
                JumpTarget t{0, 0.0, 0.0, jumps_.weight[q]};
                if (base > 0.0) {
                    locate(xi_, kap * xi_[i] / base, t.il, t.wr);
                    t.s = std::pow(base, 1.0 - m_.gam);
                } else {
                    // xi = 1 and kappa = 0: income and wealth both vanish
                    t.il = 0;
                    t.s = m_.gam < 1.0 ? 0.0 : 1e300;
                }
                targets_[i * jumps_.kappa.size() + q] = t;
            }
        const std::size_t N = static_cast<std::size_t>(nx_) * nz_;
        vt_.resize(N);
        y_.assign(N, 0.0);
        c_.assign(N, 0.0);
        degenerate_.assign(N, 0);
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const double uo = std::isfinite(obs_[i]) ? u_of_tilde(m_, obs_[i]) : -kInf;
                vt_[id(i, j)] = tilde_of_u(m_, std::max(uo, 0.0));
            }
    }

    std::size_t id(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    // Terminal data for the finite-horizon march: forced retirement. The w = 0
    // row has no finite retirement value for gamma > 1; half a cell inside is used.
    void set_terminal()
    {
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i)
                vt_[id(i, j)] = i < nx_ - 1 ? obs_[i] : obstacle_tilde(m_, 1.0 - 0.5 * h_);
    }

    Derivs derivs(int i, int j) const
    {
        const double* v = vt_.data();
        Derivs d{};
        d.v = v[id(i, j)];
        if (i == 0)
            d.vx = (v[id(1, j)] - v[id(0, j)]) / h_;
        else if (i == nx_ - 1)
            d.vx = (v[id(i, j)] - v[id(i - 1, j)]) / h_;
        else {
            d.vx = (v[id(i + 1, j)] - v[id(i - 1, j)]) / (2.0 * h_);
            d.vxx = (v[id(i + 1, j)] - 2.0 * v[id(i, j)] + v[id(i - 1, j)]) / (h_ * h_);
        }
        if (j == 0)
            d.vzz = 2.0 * (v[id(i, 1)] - v[id(i, 0)]) / (k_ * k_);
        else if (j == nz_ - 1)
            d.vzz = 2.0 * (v[id(i, j - 1)] - v[id(i, j)]) / (k_ * k_);
        else {
            d.vz = (v[id(i, j + 1)] - v[id(i, j - 1)]) / (2.0 * k_);
            d.vzz = (v[id(i, j + 1)] - 2.0 * v[id(i, j)] + v[id(i, j - 1)]) / (k_ * k_);
            if (i > 0 && i < nx_ - 1)
                d.vxz = (v[id(i + 1, j + 1)] - v[id(i + 1, j - 1)] - v[id(i - 1, j + 1)] + v[id(i - 1, j - 1)]) /
                        (4.0 * h_ * k_);
        }
        return d;
    }

    // Row of the discretized generator at (i, j) for controls (y, c): L
    // entries off the diagonal, the diagonal, and the flow term. The jump,
    // penalty and time-step parts are added by assemble().
    struct Stencil {
        int n = 0;
        std::array<std::size_t, 10> col{};
        std::array<double, 10> val{};
        double diag = 0.0;
        double src = 0.0;
        void add(std::size_t c, double v)
        {
            if (v == 0.0) return;
            col[n] = c;
            val[n++] = v;
        }
    };

    void stencil(int i, int j, double y, double c, Stencil& st) const
    {
        st.n = 0;
        const std::size_t row = id(i, j);
        const Coef k = coefficients(m_, xi_[i], z_[j], y, c);
        double diag = k.c0;
        if (i > 0 && i < nx_ - 1) {
            const double a = 0.5 * k.Dxx / (h_ * h_);
            if (a >= std::abs(k.bx) / (2.0 * h_)) {
                st.add(id(i - 1, j), a - k.bx / (2.0 * h_));
                st.add(id(i + 1, j), a + k.bx / (2.0 * h_));
                diag -= 2.0 * a;
            } else {
                st.add(id(i - 1, j), a + std::max(-k.bx, 0.0) / h_);
                st.add(id(i + 1, j), a + std::max(k.bx, 0.0) / h_);
                diag -= 2.0 * a + std::abs(k.bx) / h_;
            }
        } else if (i == nx_ - 1) {
            const double b = std::min(k.bx, 0.0);
            st.add(id(i - 1, j), -b / h_);
            diag += b / h_;
        }
        // z direction, reflecting ends
        if (j == 0 || j == nz_ - 1) {
            st.add(id(i, j == 0 ? 1 : nz_ - 2), k.Dzz / (k_ * k_));
            diag -= k.Dzz / (k_ * k_);
        } else {
            const double a = 0.5 * k.Dzz / (k_ * k_);
            if (a >= std::abs(k.bz) / (2.0 * k_)) {
                st.add(id(i, j - 1), a - k.bz / (2.0 * k_));
                st.add(id(i, j + 1), a + k.bz / (2.0 * k_));
                diag -= 2.0 * a;
            } else {
                st.add(id(i, j - 1), a + std::max(-k.bz, 0.0) / k_);
                st.add(id(i, j + 1), a + std::max(k.bz, 0.0) / k_);
                diag -= 2.0 * a + std::abs(k.bz) / k_;
            }
            // seven-point cross stencil, diagonal orientation by sign
            if (i > 0 && i < nx_ - 1 && k.Dxz != 0.0) {
                const double cc = std::abs(k.Dxz) / (2.0 * h_ * k_);
                diag += 2.0 * cc;
                if (k.Dxz > 0.0) {
                    st.add(id(i + 1, j + 1), cc);
                    st.add(id(i - 1, j - 1), cc);
                } else {
                    st.add(id(i + 1, j - 1), cc);
                    st.add(id(i - 1, j + 1), cc);
                }
                // the axis neighbours are shared with the second differences
                for (int q = 0; q < st.n; ++q) {
                    const std::size_t cq = st.col[q];
                    if (cq == id(i + 1, j) || cq == id(i - 1, j) || cq == id(i, j + 1) || cq == id(i, j - 1))
                        st.val[q] -= cc;
                }
            }
        }
        // flow and discounting
        if (!m_.ez) {
            diag -= m_.beta;
            st.src = std::pow(m_.Kbar, m_.gam) * std::pow(c, 1.0 - m_.gam) / (1.0 - m_.gam);
        } else {
            const double v0t = vt_[row];
            const double v0 = (1.0 - m_.gam) * v0t;
            const double p = (m_.phi - m_.gam) / (1.0 - m_.gam);
            const double a = std::pow(m_.Kez, m_.phi) * std::pow(c, 1.0 - m_.phi);
            const double g = (a * std::pow(v0, p) - m_.beta * v0) / (1.0 - m_.phi);
            const double dg = (1.0 - m_.gam) / (1.0 - m_.phi) * (p * a * std::pow(v0, p - 1.0) - m_.beta);
            if (dg <= 0.0) {
                diag += dg;
                st.src = g - dg * v0t;
            } else {
                st.src = g;
            }
        }
        st.diag = diag;
    }

    double row_value(int i, int j, double y, double c, Stencil& st) const
    {
        stencil(i, j, y, c, st);
        double v = st.diag * vt_[id(i, j)] + st.src;
        for (int q = 0; q < st.n; ++q) v += st.val[q] * vt_[st.col[q]];
        return v;
    }

    // Policy improvement on the discrete rows. The first-order conditions give
    // the main candidates; the previous controls and the constraint ends are
    // kept as alternatives so the update never worsens a row.
    void update_controls()
    {
        Stencil st;
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const std::size_t n = id(i, j);
                const Derivs d = derivs(i, j);
                bool deg = false;
                const double yf = i == nx_ - 1 ? 0.0 : best_y(m_, xi_[i], z_[j], d, deg);
                const double cf = best_c(m_, xi_[i], d);
                degenerate_[n] = deg;
                if (!have_controls_) {
                    y_[n] = yf;
                    c_[n] = cf;
                    continue;
                }
                const double ymax = std::max(1.0 - xi_[i], 0.0);
                double by = y_[n], bc = c_[n];
                double best = row_value(i, j, by, bc, st);
                const double scale = std::abs(best) + std::abs((1.0 - m_.gam) * vt_[n]) * 1e-3;
                for (double yc : {yf, 0.0, ymax, y_[n]})
                    for (double cc : {cf, c_[n]}) {
                        const double v = row_value(i, j, yc, cc, st);
                        if (v > best + 1e-13 * scale) {
                            best = v;
                            by = yc;
                            bc = cc;
                        }
                    }
                y_[n] = by;
                c_[n] = bc;
            }
        have_controls_ = true;
    }

    double lagged_jump(int i, int j) const
    {
        double e = 0.0;
        const std::size_t nq = jumps_.kappa.size();
        for (std::size_t q = 0; q < nq; ++q) {
            const JumpTarget& t = targets_[i * nq + q];
            const double vl = vt_[id(t.il, j)];
            const double vr = t.il + 1 < nx_ ? vt_[id(t.il + 1, j)] : vl;
            e += t.weight * t.s * ((1.0 - t.wr) * vl + t.wr * vr);
        }
        return m_.dD * e;
    }

    // Assembles (-L + rho chi + 1/dt) and the right-hand side for the current
    // controls, active set and linearization point. dt <= 0 means stationary.
    void assemble(double rho, double dt, const std::vector<double>* prev, const std::vector<unsigned char>& active,
                  Eigen::SparseMatrix<double>& M, Eigen::VectorXd& rhs) const
    {
        const std::size_t N = vt_.size();
        std::vector<Eigen::Triplet<double>> tr;
        tr.reserve(N * 12);
        rhs.resize(static_cast<Eigen::Index>(N));
        Stencil st;
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const std::size_t row = id(i, j);
                stencil(i, j, y_[row], c_[row], st);
                double diag = st.diag;
                double src = st.src;
                const auto r = static_cast<int>(row);
                for (int q = 0; q < st.n; ++q) tr.emplace_back(r, static_cast<int>(st.col[q]), -st.val[q]);
                if (m_.dD > 0.0) {
                    if (implicit_jump_) {
                        const JumpTarget& t = targets_[i];
                        const double w = m_.dD * t.s;
                        const double wl = w * (1.0 - t.wr), wr = w * t.wr;
                        if (t.il == i)
                            diag += wl;
                        else if (wl != 0.0)
                            tr.emplace_back(r, static_cast<int>(id(t.il, j)), -wl);
                        if (wr != 0.0) {
                            if (t.il + 1 == i)
                                diag += wr;
                            else
                                tr.emplace_back(r, static_cast<int>(id(t.il + 1, j)), -wr);
                        }
                    } else {
                        src += lagged_jump(i, j);
                    }
                }
                double mdiag = -diag;
                if (active[row]) {
                    mdiag += rho;
                    src += rho * obs_[i];
                }
                if (dt > 0.0) {
                    mdiag += 1.0 / dt;
                    src += (*prev)[row] / dt;
                }
                tr.emplace_back(r, r, mdiag);
                rhs(static_cast<Eigen::Index>(row)) = src;
            }
        M.resize(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
        M.setFromTriplets(tr.begin(), tr.end());
    }

    std::vector<unsigned char> active_set() const
    {
        std::vector<unsigned char> a(vt_.size(), 0);
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i) a[id(i, j)] = vt_[id(i, j)] < obs_[i];
        return a;
    }

    // Warm-started BiCGSTAB is an order of magnitude faster than a fresh LU
    // per step on the full mesh; LU stays as the fallback.
    Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& M, const Eigen::VectorXd& rhs)
    {
        const Eigen::SparseMatrix<double, Eigen::RowMajor> Mr = M;
        Eigen::BiCGSTAB<Eigen::SparseMatrix<double, Eigen::RowMajor>, Eigen::IncompleteLUT<double>> it;
        it.preconditioner().setDroptol(1e-4);
        it.preconditioner().setFillfactor(10);
        it.setTolerance(1e-13);
        it.setMaxIterations(500);
        it.compute(Mr);
        if (it.info() == Eigen::Success) {
            Eigen::VectorXd x0(rhs.size());
            for (std::size_t n = 0; n < vt_.size(); ++n) x0(static_cast<Eigen::Index>(n)) = vt_[n];
            Eigen::VectorXd x = it.solveWithGuess(rhs, x0);
            if (it.info() == Eigen::Success) return x;
        }
        lu_.analyzePattern(M);
        lu_.factorize(M);
        if (lu_.info() != Eigen::Success) fail(ErrorCode::NoConvergence, "sparse factorization failed");
        return lu_.solve(rhs);
    }

    // One linear solve with the controls and active set of the current
    // iterate. Returns the largest change in u units.
    double step(double rho, double dt, const std::vector<double>* prev)
    {
        update_controls();
        last_active_ = active_set();
        Eigen::SparseMatrix<double> M;
        Eigen::VectorXd rhs;
        assemble(rho, dt, prev, last_active_, M, rhs);
        const Eigen::VectorXd x = solve(M, rhs);
        double change = 0.0;
        for (std::size_t n = 0; n < vt_.size(); ++n) {
            const double xn = x(static_cast<Eigen::Index>(n));
            if (!((1.0 - m_.gam) * xn > 0.0) || !std::isfinite(xn))
                fail(ErrorCode::NoConvergence, "transformed value left its domain");
            change = std::max(change, std::abs(std::log(xn / vt_[n])) / std::abs(1.0 - m_.gam));
            vt_[n] = xn;
        }
        return change;
    }

    // Penalized policy iteration at fixed rho (and fixed dt for a time level).
    // Returns the number of linear solves; throws NoConvergence.
    int iterate(double rho, double dt, const std::vector<double>* prev, double tol, int max_iter)
    {
        for (int it = 1; it <= max_iter; ++it) {
            last_change_ = step(rho, dt, prev);
            if (last_change_ < tol && last_active_ == active_set()) return it;
        }
        fail(ErrorCode::NoConvergence, "policy iteration did not converge (last change " +
                                           std::to_string(last_change_) + ", residual " +
                                           std::to_string(residual()) + ")");
    }

    // Pseudo-time march toward the stationary solution with a growing step,
    // starting from forced retirement. Policies met on the way always have a
    // finite value, which a cold start of policy iteration does not guarantee.
    int relax(double rho, double dt0, double dt_max, double tol)
    {
        int n = 0;
        double dt = dt0;
        for (;;) {
            const std::vector<double> prev = vt_;
            const double change = step(rho, dt, &prev);
            ++n;
            if (dt >= dt_max && change < tol) return n;
            dt = std::min(dt * 1.5, dt_max);
            if (n > 400) fail(ErrorCode::NoConvergence, "pseudo-time relaxation stalled");
        }
    }

    // max over nodes of |max(L1 u, obstacle - u)| in u units, without penalty.
    double residual()
    {
        update_controls();
        const std::vector<unsigned char> none(vt_.size(), 0);
        Eigen::SparseMatrix<double> M;
        Eigen::VectorXd rhs;
        assemble(0.0, 0.0, nullptr, none, M, rhs);
        Eigen::VectorXd v(static_cast<Eigen::Index>(vt_.size()));
        for (std::size_t n = 0; n < vt_.size(); ++n) v(static_cast<Eigen::Index>(n)) = vt_[n];
        const Eigen::VectorXd Lv = rhs - M * v;
        double res = 0.0;
        for (int j = 0; j < nz_; ++j)
            for (int i = 0; i < nx_; ++i) {
                const std::size_t n = id(i, j);
                const double scale = (1.0 - m_.gam) * vt_[n];
                const double gen = Lv(static_cast<Eigen::Index>(n)) / scale;
                const double gap = std::isfinite(obs_[i]) ? u_of_tilde(m_, obs_[i]) - u_of_tilde(m_, vt_[n]) : -kInf;
                res = std::max(res, std::abs(std::max(gen, gap)));
            }
        return res;
    }

    RetireSolution snapshot(const ValidRetireParams& p, double rho) const;

    const Model& model() const { return m_; }
    int nz() const { return nz_; }
    const std::vector<double>& z() const { return z_; }
    std::vector<double>& values() { return vt_; }

private:
    Model m_;
    IncomeJumpSpec jumps_;
    GridSpec grid_;
    std::vector<double> xi_, z_, obs_;
    int nx_ = 0, nz_ = 0;
    double h_ = 0.0, k_ = 0.0;
    bool implicit_jump_ = true;
    std::vector<JumpTarget> targets_;
    std::vector<double> vt_, y_, c_;
    std::vector<unsigned char> degenerate_;
    double last_change_ = 0.0;
    bool have_controls_ = false;
    std::vector<unsigned char> last_active_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

void extract_boundaries(RetireSolution& s)
{
    const std::size_t nx = s.nxi(), nz = s.nz();
    const double r = s.params.r;
    s.xi_star.assign(nz, 0.0);
    s.threshold.assign(nz, kInf);
    s.target.assign(nz, kNaN);
    for (std::size_t j = 0; j < nz; ++j) {
        int ist = -1;
        for (std::size_t i = 0; i < nx && s.retired[s.idx(i, j)]; ++i) ist = static_cast<int>(i);
        double xs = 0.0;
        if (ist >= 0) {
            xs = s.xi[ist];
            // the gap u - obstacle grows quadratically past the boundary
            if (ist + 2 < static_cast<int>(nx)) {
                const auto gap = [&](int i) {
                    return std::sqrt(std::max(s.u[s.idx(i, j)] - s.obstacle(s.xi[i]), 0.0));
                };
                const double g1 = gap(ist + 1), g2 = gap(ist + 2);
                const double x1 = s.xi[ist + 1], x2 = s.xi[ist + 2];
                if (g2 > g1) xs = std::clamp(x1 - g1 * (x2 - x1) / (g2 - g1), s.xi[ist], x1);
            }
        }
        s.xi_star[j] = xs;
        s.threshold[j] = w_over_I_of(xs, r);

        // non-participation target: y = 0 from some xi up to w = 0
        const int first_work = ist + 1;
        const int last = static_cast<int>(nx) - 2;
        if (last <= first_work || s.y[s.idx(last, j)] > kZeroHolding) continue;
        int i0 = last;
        while (i0 - 1 >= first_work && s.y[s.idx(i0 - 1, j)] <= kZeroHolding) --i0;
        if (i0 == first_work) continue;
        double x0 = 0.5 * (s.xi[i0 - 1] + s.xi[i0]);
        if (i0 - 2 >= first_work) {
            const double y1 = s.y[s.idx(i0 - 1, j)], y2 = s.y[s.idx(i0 - 2, j)];
            const double slope = (y1 - y2) / (s.xi[i0 - 1] - s.xi[i0 - 2]);
            if (slope < 0.0) x0 = std::clamp(s.xi[i0 - 1] - y1 / slope, s.xi[i0 - 1], s.xi[i0]);
        }
        s.target[j] = w_over_I_of(x0, r);
    }
}

RetireSolution Solver::snapshot(const ValidRetireParams& p, double rho) const
{
    RetireSolution s;
    s.params = p.get();
    s.recursive = m_.ez;
    s.xi = xi_;
    s.z = z_;
    s.penalty = rho;
    const std::size_t N = vt_.size();
    s.u.resize(N);
    s.retired.resize(N);
    s.y = y_;
    s.c = c_;
    for (int j = 0; j < nz_; ++j)
        for (int i = 0; i < nx_; ++i) {
            const std::size_t n = id(i, j);
            const bool act = vt_[n] < obs_[i];
            s.retired[n] = act;
            // the penalized value sits O(1/rho) below the obstacle where active
            s.u[n] = act ? u_of_tilde(m_, obs_[i]) : u_of_tilde(m_, vt_[n]);
            s.degenerate_nodes += degenerate_[n];
        }
    extract_boundaries(s);
    return s;
}

RetireSolution stationary_solve(const ValidRetireParams& p, const GridSpec& grid, bool ez)
{
    Solver sv(p, grid, ez);
    sv.set_terminal();
    int iters = sv.relax(grid.penalty_schedule.front(), 0.25, 1e4, 1e-4);
    for (double rho : grid.penalty_schedule) iters += sv.iterate(rho, 0.0, nullptr, grid.tol, grid.max_iter);
    const double res = sv.residual();
    RetireSolution s = sv.snapshot(p, grid.penalty_schedule.back());
    s.iterations = iters;
    s.residual = res;
    return s;
}

}  // namespace

MertonConstants merton_constants(const ValidRetireParams& p)
{
    MertonConstants m;
    m.theta = p.theta();
    m.K_bar = p.K_bar();
    const double g = p->gamma;
    m.G_coef = std::pow(p->B, 1.0 - g) * std::pow(m.K_bar, -g) / (1.0 - g);
    m.K_ez = m.K_bar;
    if (p->eis_psi) {
        const double psi = *p->eis_psi;
        m.K_ez = psi * p->beta + (1.0 - psi) * (p->r + m.theta * m.theta / (2.0 * g));
        if (!(m.K_ez > 0.0))
            fail(ErrorCode::NegativeMertonConstant, "recursive-utility consumption rate is not positive");
    }
    return m;
}

IncomeJumpSpec IncomeJumpSpec::from(const ValidRetireParams& p, int n_nodes)
{
    IncomeJumpSpec s;
    if (!p->power_nu) {
        s.mode = Mode::Fixed;
        s.kappa = {p->recovery};
        s.weight = {1.0};
        return s;
    }
    s.mode = Mode::Power;
    s.nu = *p->power_nu;
    const auto t = gauss_legendre_unit(n_nodes, s.weight);
    if (s.nu < 1.0 || s.nu > n_nodes) {
        // kappa = t^(1/nu) with t uniform; the smoother variable outside [1, n]
        for (double ti : t) s.kappa.push_back(std::pow(ti, 1.0 / s.nu));
        return s;
    }
    // density nu kappa^(nu-1) is a low-degree polynomial in kappa
    double total = 0.0;
    for (std::size_t q = 0; q < t.size(); ++q) {
        s.kappa.push_back(t[q]);
        s.weight[q] *= s.nu * std::pow(t[q], s.nu - 1.0);
        total += s.weight[q];
    }
    for (double& w : s.weight) w /= total;
    return s;
}

RetireControls optimal_controls(double u, double u_xi, double u_xixi, double u_z, double u_xiz, double xi, double z,
                                const ValidRetireParams& p)
{
    (void)z;
    const double s = p->sigma_stock, sz = p->sigma_z, g = p->gamma, mu = p->mu_stock, r = p->r;
    const double K = p.K_bar();
    RetireControls out;
    if (xi >= 1.0) {
        out.y = 0.0;
        out.c = std::min(K * std::exp((1.0 - 1.0 / g) * u) * std::pow(1.0 - u_xi, -1.0 / g), r);
        return out;
    }
    const double Uxx = u_xixi + (1.0 - g) * u_xi * u_xi;
    const double Uxz = u_xiz + (1.0 - g) * u_xi * u_z;
    const double num = mu - r - g * s * (s - sz) * xi + (g * s * (s - sz) * (2.0 * xi - 1.0) + r - mu) * xi * u_xi -
                       (1.0 - g) * s * sz * u_z + s * sz * xi * Uxz - s * (s - sz) * xi * xi * (1.0 - xi) * Uxx;
    const double den = s * s * xi * xi * Uxx + 2.0 * g * s * s * xi * u_xi - g * s * s;
    const double ymax = 1.0 - xi;
    if (den < 0.0) {
        out.y = std::clamp(-num / den, 0.0, ymax);
    } else {
        // not concave in y: the better endpoint of the quadratic num y + den y^2 / 2
        out.degenerate = true;
        out.y = num * ymax + 0.5 * den * ymax * ymax > 0.0 ? ymax : 0.0;
    }
    out.c = K * std::exp((1.0 - 1.0 / g) * u) * std::pow(1.0 - xi * u_xi, -1.0 / g);
    return out;
}

GridSpec default_retire_grid(const RetireParams& p)
{
    GridSpec g;
    const double half = 8.0 * (p.sigma_z > 0.0 ? p.sigma_z : std::max(p.sigma_income, 0.01));
    g.x = Axis{0.0, 1.0, 201, Stretch::Uniform, 1.0};
    g.y = Axis{p.z_bar - half, p.z_bar + half, 161, Stretch::Uniform, 1.0};
    g.penalty_schedule = {1e3, 1e4, 1e5};
    g.tol = 1e-8;
    g.max_iter = 200;
    return g;
}

double RetireSolution::obstacle(double x) const { return std::log(params.B) + std::log(1.0 - x); }

namespace {

void bracket(const std::vector<double>& a, double x, std::size_t& i, double& w)
{
    if (x <= a.front()) {
        i = 0;
        w = 0.0;
        return;
    }
    if (x >= a.back()) {
        i = a.size() - 2;
        w = 1.0;
        return;
    }
    i = static_cast<std::size_t>(std::upper_bound(a.begin(), a.end(), x) - a.begin()) - 1;
    i = std::min(i, a.size() - 2);
    w = (x - a[i]) / (a[i + 1] - a[i]);
}

double bilinear(const RetireSolution& s, const std::vector<double>& f, double x, double zz)
{
    std::size_t i, j;
    double wx, wz;
    bracket(s.xi, x, i, wx);
    bracket(s.z, zz, j, wz);
    return (1.0 - wz) * ((1.0 - wx) * f[s.idx(i, j)] + wx * f[s.idx(i + 1, j)]) +
           wz * ((1.0 - wx) * f[s.idx(i, j + 1)] + wx * f[s.idx(i + 1, j + 1)]);
}

}  // namespace

double RetireSolution::u_at(double x, double zz) const { return bilinear(*this, u, x, zz); }

RetireControls RetireSolution::controls_at(double x, double zz) const
{
    RetireControls c;
    c.y = bilinear(*this, y, x, zz);
    c.c = bilinear(*this, this->c, x, zz);
    return c;
}

double RetireSolution::xi_star_at(double zz) const
{
    std::size_t j;
    double w;
    bracket(z, zz, j, w);
    return (1.0 - w) * xi_star[j] + w * xi_star[j + 1];
}

int RetireSolution::z_index(double zz) const
{
    int best = 0;
    for (std::size_t j = 1; j < z.size(); ++j)
        if (std::abs(z[j] - zz) < std::abs(z[best] - zz)) best = static_cast<int>(j);
    return best;
}

RetireSolution penalty_solve_retire(const ValidRetireParams& p, const GridSpec& grid)
{
    return stationary_solve(p, grid, false);
}

RetireSolution penalty_solve_retire(const ValidRetireParams& p)
{
    return penalty_solve_retire(p, default_retire_grid(p.get()));
}

RetireSolution epstein_zin_solve(const ValidRetireParams& p, const GridSpec& grid)
{
    return stationary_solve(p, grid, true);
}

RetireSolution epstein_zin_solve(const ValidRetireParams& p)
{
    return epstein_zin_solve(p, default_retire_grid(p.get()));
}

double FiniteHorizonSolution::threshold_at(std::size_t level, double zz) const
{
    std::size_t j;
    double w;
    bracket(z, zz, j, w);
    const double a = threshold[level * z.size() + j], b = threshold[level * z.size() + j + 1];
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    return (1.0 - w) * a + w * b;
}

FiniteHorizonSolution finite_horizon_solve(const ValidRetireParams& p, const GridSpec& grid,
                                           const FiniteHorizonConfig& cfg)
{
    if (!p->horizon_T) fail(ErrorCode::InvalidParameter, "finite-horizon solve needs horizon_T");
    if (!(cfg.dt > 0.0)) fail(ErrorCode::InvalidParameter, "time step must be positive");
    const double T = *p->horizon_T;
    const int steps = std::max(1, static_cast<int>(std::ceil(T / cfg.dt - 1e-9)));
    const double dt = T / steps;
    const int every = std::max(1, static_cast<int>(std::lround(cfg.snapshot_every / dt)));
    const double rho = grid.penalty_schedule.back();

    Solver sv(p, grid, p->eis_psi.has_value());
    sv.set_terminal();
    const std::size_t nz = static_cast<std::size_t>(sv.nz());

    FiniteHorizonSolution out;
    out.T = T;
    out.z = sv.z();
    out.ages.resize(steps + 1);
    out.threshold.assign((steps + 1) * nz, 0.0);
    out.target.assign((steps + 1) * nz, kNaN);
    std::vector<RetireSolution> snaps;

    // age T: forced retirement
    out.ages[steps] = T;
    for (int n = 1; n <= steps; ++n) {
        const std::vector<double> prev = sv.values();
        const int used = [&] {
            try {
                return sv.iterate(rho, dt, &prev, grid.tol, cfg.max_policy_iter);
            } catch (const Error& e) {
                fail(ErrorCode::NoConvergence, "time step " + std::to_string(n) + " failed: " + e.what());
            }
        }();
        (void)used;
        const int level = steps - n;
        out.ages[level] = T - n * dt;
        RetireSolution s = sv.snapshot(p, rho);
        s.age = out.ages[level];
        for (std::size_t j = 0; j < nz; ++j) {
            out.threshold[level * nz + j] = s.threshold[j];
            out.target[level * nz + j] = s.target[j];
        }
        if (n % every == 0 || n == steps) snaps.push_back(std::move(s));
    }
    out.ages[0] = 0.0;
    std::reverse(snaps.begin(), snaps.end());
    out.snapshots = std::move(snaps);
    return out;
}

double jump_expectation(const RetireSolution& sol, double xi, double z, const IncomeJumpSpec& spec)
{
    const double g = sol.params.gamma;
    const double u0 = sol.u_at(xi, z);
    double e = 0.0;
    for (std::size_t q = 0; q < spec.kappa.size(); ++q) {
        const double k = spec.kappa[q];
        const double base = 1.0 + (k - 1.0) * xi;
        const double mapped = base > 0.0 ? k * xi / base : 0.0;
        e += spec.weight[q] * std::pow(base, 1.0 - g) / (1.0 - g) *
             std::exp((1.0 - g) * (sol.u_at(mapped, z) - u0));
    }
    return e;
}

double xi_of(double w_over_I, double r)
{
    const double h = 1.0 / r;
    return h / (w_over_I + h);
}

double w_over_I_of(double xi, double r)
{
    if (xi <= 0.0) return kInf;
    return (1.0 - xi) / (r * xi);
}

double implicit_human_capital(const RetireSolution& sol, double w, double income, double z)
{
    if (!(income > 0.0) || w < 0.0) fail(ErrorCode::InvalidInput, "need w >= 0 and positive income");
    const double r = sol.params.r;
    const double x = (income / r) / (w + income / r);
    if (x <= sol.xi_star_at(z)) fail(ErrorCode::OutsideWorkRegion, "point lies in the retirement region");
    const double h = sol.xi[1] - sol.xi[0];
    const double lo = std::max(x - h, 0.0), hi = std::min(x + h, 1.0);
    const double ux = (sol.u_at(hi, z) - sol.u_at(lo, z)) / (hi - lo);
    return (1.0 + (1.0 - x) * ux) / (r * (1.0 - x * ux));
}

MpcCurve mpc_curve(const RetireSolution& sol, double zz)
{
    const std::size_t j = static_cast<std::size_t>(sol.z_index(zz));
    const double r = sol.params.r;
    MpcCurve m;
    double pw = 0.0, pc = 0.0;
    bool have = false;
    // w = 0 is xi = 1; wealth grows as xi falls
    for (std::size_t i = sol.nxi() - 1; i > 0; --i) {
        if (sol.retired[sol.idx(i, j)]) break;
        const double x = sol.xi[i];
        const double w = w_over_I_of(x, r);
        const double c = sol.c[sol.idx(i, j)] / (r * x);
        if (have) {
            m.w.push_back(0.5 * (w + pw));
            m.mpc.push_back((c - pc) / (w - pw));
        }
        pw = w;
        pc = c;
        have = true;
    }
    return m;
}

}  // namespace scc

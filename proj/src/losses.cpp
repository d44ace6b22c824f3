#include "intenreg/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "intenreg/warp.hpp"

namespace intenreg {

namespace {

constexpr double kNccEps = 1e-8;
constexpr double kSigmaFloor = 1e-12;

std::atomic<std::uint64_t> g_ssim_evals{0};

// Inclusive-exclusive prefix sums, (H+1) x (W+1).
struct Prefix {
    int width;
    std::vector<double> s;
    Prefix(const Image2D& a, const Image2D& b, int mode) : width(a.width + 1) {
        const int h = a.height, w = a.width;
        s.assign(std::size_t(h + 1) * (w + 1), 0.0);
        for (int r = 0; r < h; ++r) {
            double row = 0.0;
            for (int c = 0; c < w; ++c) {
                const double v = mode == 0   ? a.at(r, c)
                                 : mode == 1 ? a.at(r, c) * a.at(r, c)
                                              : a.at(r, c) * b.at(r, c);
                row += v;
                s[std::size_t(r + 1) * width + (c + 1)] =
                    s[std::size_t(r) * width + (c + 1)] + row;
            }
        }
    }
    // Sum over rows [r0, r1) x cols [c0, c1).
    double box(int r0, int c0, int r1, int c1) const {
        return s[std::size_t(r1) * width + c1] - s[std::size_t(r0) * width + c1] -
               s[std::size_t(r1) * width + c0] + s[std::size_t(r0) * width + c0];
    }
};

void require_window(const Image2D& img, int window, const char* op) {
    if (window < 3 || window % 2 == 0)
        throw ValidationError(std::string(op) + ": window must be odd and >= 3, got " +
                              std::to_string(window));
    if (img.height < window || img.width < window)
        throw DimensionError(std::string(op) + ": image " + std::to_string(img.height) +
                             "x" + std::to_string(img.width) + " smaller than window " +
                             std::to_string(window));
}

struct SsimTerms {
    double b, c, st;
    double db_dmu_s;
    double dc_dsig_s;
    double dst_dsig_s;
    double dst_dcov;
};

inline SsimTerms ssim_window_terms(double mu_t, double mu_s, double sig_t, double sig_s,
                                   double cov, const LossConfig& cfg) {
    SsimTerms o;
    const double bd = mu_t * mu_t + mu_s * mu_s + cfg.c1;
    o.b = (2.0 * mu_t * mu_s + cfg.c1) / bd;
    o.db_dmu_s = (2.0 * mu_t * bd - (2.0 * mu_t * mu_s + cfg.c1) * 2.0 * mu_s) / (bd * bd);

    const double cd = sig_t * sig_t + sig_s * sig_s + cfg.c2;
    o.c = (2.0 * sig_t * sig_s + cfg.c2) / cd;
    o.dc_dsig_s = (2.0 * sig_t * cd - (2.0 * sig_t * sig_s + cfg.c2) * 2.0 * sig_s) / (cd * cd);

    const double sd = sig_t * sig_s + cfg.c3;
    o.st = (cov + cfg.c3) / sd;
    o.dst_dsig_s = -(cov + cfg.c3) * sig_t / (sd * sd);
    o.dst_dcov = 1.0 / sd;
    return o;
}

}  // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ValidationError("LossConfig: alpha must be in [0,1], got " + std::to_string(alpha));
    if (!(beta >= 0.0) || !std::isfinite(beta))
        throw ValidationError("LossConfig: beta must be >= 0");
    if (window < 3 || window % 2 == 0)
        throw ValidationError("LossConfig: window must be odd and >= 3, got " +
                              std::to_string(window));
    if (!(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0))
        throw ValidationError("LossConfig: stabilizing constants must be > 0");
}

double mse(const Image2D& target, const Image2D& warped, Image2D* grad) {
    require_same_shape(target, warped, "mse");
    const std::size_t n = target.size();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = target.data[i] - warped.data[i];
        acc += d * d;
    }
    if (grad) {
        *grad = Image2D(target.height, target.width);
        for (std::size_t i = 0; i < n; ++i)
            grad->data[i] = 2.0 * (warped.data[i] - target.data[i]) / double(n);
    }
    return acc / double(n);
}

double ncc_loss(const Image2D& target, const Image2D& warped, Image2D* grad) {
    require_same_shape(target, warped, "ncc_loss");
    const std::size_t n = target.size();
    double mean_t = 0.0, mean_w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_t += target.data[i];
        mean_w += warped.data[i];
    }
    mean_t /= double(n);
    mean_w /= double(n);

    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double a = target.data[i] - mean_t;
        const double b = warped.data[i] - mean_w;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    const double denom_a = std::sqrt(saa + kNccEps);
    const double denom_b = std::sqrt(sbb + kNccEps);
    const double loss = -sab / (denom_a * denom_b);

    if (grad) {
        *grad = Image2D(target.height, target.width);
        // dLoss/db_i, then project through b_i = w_i - mean(w).
        double gsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double a = target.data[i] - mean_t;
            const double b = warped.data[i] - mean_w;
            const double g = -a / (denom_a * denom_b) +
                             sab * b / (denom_a * denom_b * denom_b * denom_b);
            grad->data[i] = g;
            gsum += g;
        }
        const double gmean = gsum / double(n);
        for (std::size_t i = 0; i < n; ++i) grad->data[i] -= gmean;
    }
    return loss;
}

WindowStats window_stats(const Image2D& target, const Image2D& warped, int window) {
    require_same_shape(target, warped, "window_stats");
    require_window(target, window, "window_stats");
    const int ph = target.height - window + 1;
    const int pw = target.width - window + 1;
    const double n = double(window) * window;

    const Prefix st(target, target, 0);
    const Prefix sw(warped, warped, 0);
    const Prefix stt(target, target, 1);
    const Prefix sww(warped, warped, 1);
    const Prefix stw(target, warped, 2);

    WindowStats ws;
    ws.height = ph;
    ws.width = pw;
    ws.mu_t.resize(ws.size());
    ws.mu_s.resize(ws.size());
    ws.sigma_t.resize(ws.size());
    ws.sigma_s.resize(ws.size());
    ws.cov.resize(ws.size());
    for (int r = 0; r < ph; ++r) {
        for (int c = 0; c < pw; ++c) {
            const std::size_t i = std::size_t(r) * pw + c;
            const int r1 = r + window, c1 = c + window;
            const double mt = st.box(r, c, r1, c1) / n;
            const double mw = sw.box(r, c, r1, c1) / n;
            const double vt = std::max(stt.box(r, c, r1, c1) / n - mt * mt, 0.0);
            const double vw = std::max(sww.box(r, c, r1, c1) / n - mw * mw, 0.0);
            ws.mu_t[i] = mt;
            ws.mu_s[i] = mw;
            ws.sigma_t[i] = std::sqrt(vt);
            ws.sigma_s[i] = std::sqrt(vw);
            ws.cov[i] = stw.box(r, c, r1, c1) / n - mt * mw;
        }
    }
    return ws;
}

WindowStats window_stats_naive(const Image2D& target, const Image2D& warped, int window) {
    require_same_shape(target, warped, "window_stats_naive");
    require_window(target, window, "window_stats_naive");
    const int ph = target.height - window + 1;
    const int pw = target.width - window + 1;
    const double n = double(window) * window;

    WindowStats ws;
    ws.height = ph;
    ws.width = pw;
    ws.mu_t.resize(ws.size());
    ws.mu_s.resize(ws.size());
    ws.sigma_t.resize(ws.size());
    ws.sigma_s.resize(ws.size());
    ws.cov.resize(ws.size());
    for (int r = 0; r < ph; ++r) {
        for (int c = 0; c < pw; ++c) {
            double mt = 0.0, mw = 0.0;
            for (int dr = 0; dr < window; ++dr)
                for (int dc = 0; dc < window; ++dc) {
                    mt += target.at(r + dr, c + dc);
                    mw += warped.at(r + dr, c + dc);
                }
            mt /= n;
            mw /= n;
            double vt = 0.0, vw = 0.0, cv = 0.0;
            for (int dr = 0; dr < window; ++dr)
                for (int dc = 0; dc < window; ++dc) {
                    const double a = target.at(r + dr, c + dc) - mt;
                    const double b = warped.at(r + dr, c + dc) - mw;
                    vt += a * a;
                    vw += b * b;
                    cv += a * b;
                }
            const std::size_t i = std::size_t(r) * pw + c;
            ws.mu_t[i] = mt;
            ws.mu_s[i] = mw;
            ws.sigma_t[i] = std::sqrt(vt / n);
            ws.sigma_s[i] = std::sqrt(vw / n);
            ws.cov[i] = cv / n;
        }
    }
    return ws;
}

double ssim(const Image2D& target, const Image2D& warped, const LossConfig& cfg,
            Image2D* grad) {
    require_same_shape(target, warped, "ssim");
    require_window(target, cfg.window, "ssim");
    g_ssim_evals.fetch_add(1, std::memory_order_relaxed);

    const int k = cfg.window;
    const WindowStats ws = window_stats(target, warped, k);
    const int ph = ws.height, pw = ws.width;
    const double P = double(ws.size());
    const double n = double(k) * k;

    double acc = 0.0;
    // Per-window upstream coefficients for the pixel scatter:
    //   d(mean SSIM)/dw_i = 1/(P*n) * sum over windows p containing i of
    //     [ A(p) + w_i * B(p) + t_i * C(p) ]
    std::vector<double> amap, bmap, cmap;
    if (grad) {
        amap.resize(ws.size());
        bmap.resize(ws.size());
        cmap.resize(ws.size());
    }

    for (std::size_t i = 0; i < ws.size(); ++i) {
        const double mu_t = ws.mu_t[i], mu_s = ws.mu_s[i];
        const double sig_t = ws.sigma_t[i], sig_s = ws.sigma_s[i];
        const double cov = ws.cov[i];
        const SsimTerms t = ssim_window_terms(mu_t, mu_s, sig_t, sig_s, cov, cfg);
        acc += t.b * t.c * t.st;
        if (grad) {
            const double g_mu = t.db_dmu_s * t.c * t.st;
            const double g_sig = t.b * (t.dc_dsig_s * t.st + t.c * t.dst_dsig_s);
            const double g_cov = t.b * t.c * t.dst_dcov;
            // d(sigma_s)/dw_i = (w_i - mu_s)/(n*sigma_s); at an exactly
            // constant window the subgradient 0 is used.
            const double inv_sig = sig_s > kSigmaFloor ? 1.0 / sig_s : 0.0;
            amap[i] = g_mu - g_sig * mu_s * inv_sig - g_cov * mu_t;
            bmap[i] = g_sig * inv_sig;
            cmap[i] = g_cov;
        }
    }

    if (grad) {
        // Box transpose: pixel (r,c) belongs to window positions
        // [r-k+1, r] x [c-k+1, c] clipped to the valid-position grid.
        auto prefix_of = [&](const std::vector<double>& m) {
            std::vector<double> s(std::size_t(ph + 1) * (pw + 1), 0.0);
            for (int r = 0; r < ph; ++r) {
                double row = 0.0;
                for (int c = 0; c < pw; ++c) {
                    row += m[std::size_t(r) * pw + c];
                    s[std::size_t(r + 1) * (pw + 1) + (c + 1)] =
                        s[std::size_t(r) * (pw + 1) + (c + 1)] + row;
                }
            }
            return s;
        };
        const auto pa = prefix_of(amap);
        const auto pb = prefix_of(bmap);
        const auto pc = prefix_of(cmap);
        auto box = [&](const std::vector<double>& s, int r0, int c0, int r1, int c1) {
            return s[std::size_t(r1) * (pw + 1) + c1] - s[std::size_t(r0) * (pw + 1) + c1] -
                   s[std::size_t(r1) * (pw + 1) + c0] + s[std::size_t(r0) * (pw + 1) + c0];
        };

        *grad = Image2D(target.height, target.width);
        const double scale = 1.0 / (P * n);
        for (int r = 0; r < target.height; ++r) {
            const int r0 = std::max(0, r - k + 1), r1 = std::min(r, ph - 1) + 1;
            if (r0 >= r1) continue;
            for (int c = 0; c < target.width; ++c) {
                const int c0 = std::max(0, c - k + 1), c1 = std::min(c, pw - 1) + 1;
                if (c0 >= c1) continue;
                grad->at(r, c) = scale * (box(pa, r0, c0, r1, c1) +
                                          warped.at(r, c) * box(pb, r0, c0, r1, c1) +
                                          target.at(r, c) * box(pc, r0, c0, r1, c1));
            }
        }
    }
    return acc / P;
}

double field_regularizer(const DisplacementField& field, DisplacementField* grad) {
    if (field.height < 2 || field.width < 2)
        throw DimensionError("field_regularizer: field must be at least 2x2");
    const int h = field.height, w = field.width;
    const double n_row = double(h - 1) * w;
    const double n_col = double(h) * (w - 1);

    if (grad) *grad = DisplacementField(h, w);

    double acc_row = 0.0, acc_col = 0.0;
    for (int r = 0; r + 1 < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const double dr_ur = field.row_at(r + 1, c) - field.row_at(r, c);
            const double dr_uc = field.col_at(r + 1, c) - field.col_at(r, c);
            acc_row += dr_ur * dr_ur + dr_uc * dr_uc;
            if (grad) {
                grad->row_at(r + 1, c) += 2.0 * dr_ur / n_row;
                grad->row_at(r, c) -= 2.0 * dr_ur / n_row;
                grad->col_at(r + 1, c) += 2.0 * dr_uc / n_row;
                grad->col_at(r, c) -= 2.0 * dr_uc / n_row;
            }
        }
    }
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c + 1 < w; ++c) {
            const double dc_ur = field.row_at(r, c + 1) - field.row_at(r, c);
            const double dc_uc = field.col_at(r, c + 1) - field.col_at(r, c);
            acc_col += dc_ur * dc_ur + dc_uc * dc_uc;
            if (grad) {
                grad->row_at(r, c + 1) += 2.0 * dc_ur / n_col;
                grad->row_at(r, c) -= 2.0 * dc_ur / n_col;
                grad->col_at(r, c + 1) += 2.0 * dc_uc / n_col;
                grad->col_at(r, c) -= 2.0 * dc_uc / n_col;
            }
        }
    }
    return acc_row / n_row + acc_col / n_col;
}

LossValue composite_loss(const Image2D& target, const Image2D& source,
                         const DisplacementField& field, const LossConfig& cfg,
                         DisplacementField* grad) {
    cfg.validate();
    require_same_shape(target, source, "composite_loss");
    require_same_shape(source, field, "composite_loss");

    const Image2D warped = warp(source, field);

    double sim = 0.0;
    Image2D upstream;
    const bool want_grad = grad != nullptr;
    if (want_grad) upstream = Image2D(target.height, target.width);

    if (cfg.alpha > 0.0) {
        Image2D ssim_grad;
        const double s = ssim(target, warped, cfg, want_grad ? &ssim_grad : nullptr);
        sim += cfg.alpha * (1.0 - s);
        if (want_grad)
            for (std::size_t i = 0; i < upstream.size(); ++i)
                upstream.data[i] -= cfg.alpha * ssim_grad.data[i];
    }
    if (cfg.alpha < 1.0) {
        Image2D base_grad;
        const double b = cfg.base == LossConfig::Base::MSE
                             ? mse(target, warped, want_grad ? &base_grad : nullptr)
                             : ncc_loss(target, warped, want_grad ? &base_grad : nullptr);
        sim += (1.0 - cfg.alpha) * b;
        if (want_grad)
            for (std::size_t i = 0; i < upstream.size(); ++i)
                upstream.data[i] += (1.0 - cfg.alpha) * base_grad.data[i];
    }

    DisplacementField reg_grad;
    const double r = field_regularizer(field, want_grad ? &reg_grad : nullptr);

    LossValue lv;
    lv.similarity_term = sim;
    lv.regularizer_term = cfg.beta * r;
    lv.total = lv.similarity_term + lv.regularizer_term;

    if (want_grad) {
        *grad = warp_backward(source, field, upstream);
        for (std::size_t i = 0; i < grad->u_row.size(); ++i) {
            grad->u_row[i] += cfg.beta * reg_grad.u_row[i];
            grad->u_col[i] += cfg.beta * reg_grad.u_col[i];
        }
    }
    return lv;
}

std::uint64_t ssim_eval_count() { return g_ssim_evals.load(std::memory_order_relaxed); }
void reset_ssim_eval_count() { g_ssim_evals.store(0, std::memory_order_relaxed); }

}  // namespace intenreg

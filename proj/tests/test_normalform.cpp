#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ssea/core/stats.hpp"
#include "ssea/normalform.hpp"

using namespace ssea;

TEST(NormalForm, LinearCase) {
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(1.0), 0);
    ASSERT_EQ(nf.series.coeffs.size(), 1u);
    EXPECT_NEAR(nf.series.coeffs[0], std::exp(1.0), 1e-12);
    auto q = normal_apply(nf.series, Vec2<double>{0.1, 0.2});
    EXPECT_NEAR(q.x, 0.1 * std::exp(1.0), 1e-15);
}

TEST(NormalForm, DeltaAtZeroIsLambda) {
    for (double h : {0.4, 1.0, 1.4}) {
        auto nf = birkhoff_normalize(RescaledParams<double>::from_h(h), 4);
        EXPECT_NEAR(delta_eval(nf.series, 0.0).value, std::exp(h), 1e-12);
        EXPECT_NEAR(delta_deriv(nf.series, 0.0, 1).value, nf.series.coeffs[1], 0);
    }
}

TEST(NormalForm, ResidualOrder) {
    for (double h : {1.0, 0.6}) {
        auto nf = birkhoff_normalize(RescaledParams<double>::from_h(h), 3);
        std::vector<double> lr, le;
        for (double r : {0.1, 0.05, 0.025}) {
            lr.push_back(std::log(r));
            le.push_back(std::log(conjugacy_residual(nf, r)));
        }
        auto f = fit_line(lr, le);
        EXPECT_NEAR(f.slope, 8.0, 0.5) << "h=" << h;
    }
}

TEST(NormalForm, DiagonalFactorsAreReciprocal) {
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(0.8), 5);
    const auto& a = nf.series.coeffs;
    const auto& b = nf.series.beta;
    for (int k = 0; k <= 5; ++k) {
        double s = 0;
        for (int i = 0; i <= k; ++i) s += a[i] * b[k - i];
        EXPECT_NEAR(s, k == 0 ? 1.0 : 0.0, 1e-10) << "k=" << k;
    }
}

TEST(NormalForm, NonResonantTermsVanish) {
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(1.0), 4);
    const auto& C = nf.change.C;
    auto conj = compose(C, compose(nf.Fhat, nf.change.Cinv));
    const int D = C.degree();
    for (int m = 1; m <= D; ++m)
        for (int j = 0; j <= m; ++j) {
            int i = m - j;
            if (i - j != 1) EXPECT_NEAR(conj.x(i, j), 0, 1e-10) << i << "," << j;
            if (i - j != -1) EXPECT_NEAR(conj.y(i, j), 0, 1e-10) << i << "," << j;
        }
}

TEST(NormalForm, ChangeRoundTripAndConsistency) {
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(1.0), 5);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> U(-0.05, 0.05);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
        Vec2<double> z{U(rng), U(rng)};
        if (norm(z) > 0.05) continue;
        auto back = nf.from_normal(nf.to_normal(z));
        EXPECT_LT(norm(back - z), 1e-14);
        auto via = nf.from_normal(normal_apply(nf.series, nf.to_normal(z)));
        worst = std::max(worst, norm(via - nf.map(z)));
    }
    // Degree-12 residual at radius 0.05 with O(1) coefficients.
    EXPECT_LT(worst, 1e-10);
}

TEST(NormalApply, AxesAndFirstIntegral) {
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(1.0), 4);
    auto s = normal_apply(nf.series, Vec2<double>{0, 0.3});
    EXPECT_EQ(s.x, 0);
    EXPECT_NEAR(s.y, std::exp(-1.0) * 0.3, 1e-15);
    auto u = normal_apply(nf.series, Vec2<double>{0.3, 0});
    EXPECT_NEAR(u.x, std::exp(1.0) * 0.3, 1e-15);
    EXPECT_EQ(u.y, 0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> U(-0.2, 0.2);
    for (int i = 0; i < 100; ++i) {
        Vec2<double> p{U(rng), U(rng)};
        auto q = normal_apply(nf.series, p);
        EXPECT_LE(std::abs(q.x * q.y - p.x * p.y), 1e-12 * std::abs(p.x * p.y));
    }
}

TEST(DeltaEstimates, SmallHSweep) {
    std::vector<double> lh, ld;
    for (double h : {0.4, 0.2, 0.1}) {
        auto nf = birkhoff_normalize(RescaledParams<double>::from_h(h), 4);
        double mx = 0;
        for (int i = 0; i <= 100; ++i) {
            double s = nf.series.s0 * i / 100;
            mx = std::max(mx, std::abs(delta_deriv(nf.series, s, 1).value));
            EXPECT_GE(std::log(delta_eval(nf.series, s).value), h / 2);
            EXPECT_FALSE(delta_eval(nf.series, s).extrapolated);
        }
        lh.push_back(std::log(h));
        ld.push_back(std::log(mx));
    }
    EXPECT_GE(fit_line(lh, ld).slope, 0.8);
    auto nf = birkhoff_normalize(RescaledParams<double>::from_h(0.4), 2);
    EXPECT_TRUE(delta_eval(nf.series, 0.06).extrapolated);
}

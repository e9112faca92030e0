#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lltrack/dcf.hpp"
#include "lltrack/scale.hpp"
#include "lltrack/spectral.hpp"
#include "lltrack/synthetic.hpp"
#include "test_support.hpp"

using namespace lltrack;
using namespace lltrack::scale;

namespace {

ScaleModel trained_on(const ImageBuffer& img, const BoundingBox& bb, ScaleParams params = {}) {
    ScaleModel m(params, bb.w, bb.h);
    m.train(build_scale_pyramid(img, bb, m));
    return m;
}

}  // namespace

TEST(PatchSide, ExponentsRoundingAndFloor) {
    EXPECT_EQ(std::lround(ScaleModel::patch_side(100.0, 1.02, 8)), 117);
    EXPECT_DOUBLE_EQ(ScaleModel::patch_side(100.0, 1.02, 0), 100.0);
    EXPECT_NEAR(ScaleModel::patch_side(100.0, 1.02, -8), 100.0 / std::pow(1.02, 8), 1e-12);
    EXPECT_DOUBLE_EQ(ScaleModel::patch_side(5.0, 1.02, 0), 8.0);
}

TEST(ScaleModel, ExponentRangeIsSymmetric) {
    const ScaleModel m({}, 40, 30);
    EXPECT_EQ(m.exponent_of(0), -8);
    EXPECT_EQ(m.exponent_of(8), 0);
    EXPECT_EQ(m.exponent_of(16), 8);
    EXPECT_DOUBLE_EQ(m.current_scale(), 1.0);
    ScaleParams even;
    even.n_scales = 16;
    EXPECT_THROW(ScaleModel(even, 40, 30), std::invalid_argument);
}

TEST(Pyramid, SeventeenColumns) {
    std::mt19937 rng(41);
    const ImageBuffer img = testutil::random_image(rng, 120, 160);
    const ScaleModel m({}, 40, 32);
    const FeatureMap p = build_scale_pyramid(img, {60, 40, 40, 32}, m);
    EXPECT_EQ(p.rows, 1);
    EXPECT_EQ(p.cols, 17);
    EXPECT_EQ(p.channels, (m.template_width() / 4) * (m.template_height() / 4) * 31);
}

TEST(Interpolation, ExactAtOriginalShiftsAnd33Long) {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> s(17);
    for (double& v : s) v = u(rng);
    const auto out = interpolate_scores(s, 33);
    const auto grid = interpolation_grid(17, 33);
    ASSERT_EQ(out.size(), 33u);
    for (int i = 0; i < 33; i += 2) {
        const int shift = static_cast<int>(std::lround(grid[i]));
        EXPECT_NEAR(out[i], s[(shift + 17) % 17], 1e-9);
    }
}

TEST(Interpolation, ReproducesBandLimitedCosine) {
    std::vector<double> s(17);
    for (int j = 0; j < 17; ++j) s[j] = std::cos(2.0 * std::numbers::pi * 3.0 * spectral::wrap_offset(j, 17) / 17.0);
    const auto out = interpolate_scores(s, 33);
    const auto grid = interpolation_grid(17, 33);
    for (int i = 0; i < 33; ++i) EXPECT_NEAR(out[i], std::cos(2.0 * std::numbers::pi * 3.0 * grid[i] / 17.0), 1e-12);
}

TEST(Estimate, SameFrameKeepsScale) {
    const synthetic::Sequence seq(synthetic::Kind::kScale);
    const ImageBuffer f0 = seq.frame(0);
    const BoundingBox bb = seq.truth(0);
    ScaleModel m = trained_on(f0, bb);
    const ScaleEstimate e = estimate_scale(m, build_scale_pyramid(f0, bb, m));
    EXPECT_EQ(e.exponent, 0.0);
    EXPECT_DOUBLE_EQ(e.multiplier, 1.0);
    EXPECT_EQ(e.interpolated.size(), 33u);
    EXPECT_DOUBLE_EQ(m.current_scale(), 1.0);
}

TEST(Estimate, TargetGrownByThreeStepsFindsExponentThree) {
    const synthetic::Sequence seq(synthetic::Kind::kScale);
    const BoundingBox bb = seq.truth(0);
    ScaleModel m = trained_on(seq.frame(0), bb);
    const ScaleEstimate e = m.estimate(build_scale_pyramid(seq.frame(3), bb, m));
    EXPECT_NEAR(e.exponent, 3.0, 0.5);
}

TEST(Estimate, ConsecutiveOneStepGrowthCompounds) {
    const synthetic::Sequence seq(synthetic::Kind::kScale);
    const BoundingBox b0 = seq.truth(0);
    ScaleModel m = trained_on(seq.frame(0), b0);
    for (int k = 1; k <= 6; ++k) {
        const BoundingBox cur =
            BoundingBox::from_center(b0.cx(), b0.cy(), b0.w * m.current_scale(), b0.h * m.current_scale());
        estimate_scale(m, build_scale_pyramid(seq.frame(k), cur, m));
    }
    EXPECT_NEAR(m.current_scale(), std::pow(1.02, 6), 0.01 * std::pow(1.02, 6));
}

TEST(Estimate, ApplyCompoundsAndClamps) {
    ScaleModel m({}, 40, 40);
    for (int k = 0; k < 5; ++k) m.apply(1.02);
    EXPECT_NEAR(m.current_scale(), std::pow(1.02, 5), 1e-12);
    m.apply(100.0);
    EXPECT_DOUBLE_EQ(m.current_scale(), 5.0);
    m.apply(1e-6);
    EXPECT_DOUBLE_EQ(m.current_scale(), 0.2);
}

TEST(Estimate, ScoresInvariantToPhotometricOffset) {
    std::mt19937 rng(43);
    ImageBuffer img = testutil::random_image(rng, 100, 120);
    for (double& v : img.data) v = 0.1 + 0.6 * v;
    ImageBuffer brighter = img;
    for (double& v : brighter.data) v += 0.2;
    const BoundingBox bb{40, 30, 36, 28};
    const ScaleModel m = trained_on(img, bb);
    const auto a = scale_scores(m, build_scale_pyramid(img, bb, m)).data;
    const auto b = scale_scores(m, build_scale_pyramid(brighter, bb, m)).data;
    EXPECT_LT(testutil::max_abs_diff(a, b), 1e-9);
}

TEST(Estimate, UntrainedModelThrows) {
    std::mt19937 rng(44);
    const ImageBuffer img = testutil::random_image(rng, 64, 64);
    const ScaleModel m({}, 20, 20);
    EXPECT_THROW(m.estimate(build_scale_pyramid(img, {20, 20, 20, 20}, m)), std::invalid_argument);
}

TEST(Update, EtaZeroKeepsAndEtaOneRetrains) {
    std::mt19937 rng(45);
    const ImageBuffer a = testutil::random_image(rng, 80, 80);
    const ImageBuffer b = testutil::random_image(rng, 80, 80);
    const BoundingBox bb{25, 25, 30, 30};

    ScaleParams frozen;
    frozen.eta = 0.0;
    ScaleModel m0 = trained_on(a, bb, frozen);
    const auto before = scale_scores(m0, build_scale_pyramid(b, bb, m0)).data;
    update_scale(m0, build_scale_pyramid(b, bb, m0));
    EXPECT_EQ(m0.filter().model().denominator.data, trained_on(a, bb, frozen).filter().model().denominator.data);
    EXPECT_LT(testutil::max_abs_diff(scale_scores(m0, build_scale_pyramid(b, bb, m0)).data, before), 1e-8);

    ScaleParams full;
    full.eta = 1.0;
    ScaleModel m1 = trained_on(a, bb, full);
    update_scale(m1, build_scale_pyramid(b, bb, m1));
    const ScaleModel fresh = trained_on(b, bb, full);
    const FeatureMap probe = build_scale_pyramid(a, bb, fresh);
    EXPECT_LT(testutil::max_abs_diff(scale_scores(m1, probe).data, scale_scores(fresh, probe).data), 1e-8);
}

TEST(Update, OneDimensionalDenominatorConvergesGeometrically) {
    std::mt19937 rng(46);
    const ImageBuffer a = testutil::random_image(rng, 80, 80);
    const ImageBuffer b = testutil::random_image(rng, 80, 80);
    const BoundingBox bb{25, 25, 30, 30};
    const ScaleModel geometry({}, bb.w, bb.h);
    const FeatureMap pa = build_scale_pyramid(a, bb, geometry);
    const FeatureMap pb = build_scale_pyramid(b, bb, geometry);
    dcf::LinearFilterModel m = dcf::train_initial(pa, geometry.label(), 0.01, 0.1);
    const RealField target = spectral::power_sum(spectral::dft(pb));
    double prev = 1e300;
    for (int k = 1; k <= 20; ++k) {
        m = dcf::update_model(m, pb);
        double gap = 0.0;
        for (std::size_t i = 0; i < target.data.size(); ++i) gap += std::abs(m.denominator.data[i] - target.data[i]);
        EXPECT_LT(gap, prev);
        prev = gap;
    }
}
